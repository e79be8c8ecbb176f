#include "dfpsim/routing.hpp"

#include <algorithm>
#include <sstream>

namespace dfp {

namespace {

// Remaining router-to-router hops on the committed-minimal continuation.
constexpr int kHopsLeafMinimal = 3;      // up, global, down
constexpr int kHopsLeafNonMinimal = 4;   // best case via intermediate spine
constexpr int kHopsSpineMinimal = 2;     // global, down
constexpr int kHopsSpineDivert = 3;      // global, global, down
constexpr int kHopsSpineDescend = 4;     // down, up, global, down
constexpr int kHopsIntraUp = 2;          // up, down

bool has_global_link(const Topology& topo, RouterId a, RouterId b) {
  for (int port : topo.spine_ports_to_group(a, topo.group_of_router(b))) {
    if (topo.global_ports(a)[port - topo.params().leaves_per_group].peer == b) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<RouteCandidate> enumerate_candidates(const Topology& topo,
                                                 RouterId at,
                                                 const ChunkRouteView& view,
                                                 const RoutingConfig& cfg) {
  const RouterId dst_leaf = topo.leaf_of_terminal(view.dst);
  const GroupId dst_group = topo.group_of_terminal(view.dst);
  const GroupId src_group = topo.group_of_terminal(view.src);
  const GroupId here = topo.group_of_router(at);
  std::vector<RouteCandidate> out;

  if (topo.role(at) == RouterRole::leaf) {
    if (at == dst_leaf) {
      out.push_back({topo.leaf_terminal_port(topo.terminal_port(view.dst)),
                     view.path_class, 0, 0.0, view.vl, true});
      return out;
    }
    if (here == src_group) {
      // Source leaf. Spines owning a direct link to the destination group
      // are the minimal class, the rest reach it through an intermediate
      // group. Intra-group traffic is minimal through any spine.
      if (view.vl != Vl::vl0 || view.prev_router != -1) {
        throw RoutingError("unreachable state at source leaf " +
                           std::to_string(at));
      }
      const bool intra = dst_group == here;
      for (int k = 0; k < topo.params().spines_per_group; ++k) {
        const RouterId spine = topo.spine_id(here, k);
        if (intra) {
          out.push_back({topo.leaf_up_port(k), PathClass::minimal,
                         kHopsIntraUp, 0.0, Vl::vl0, true});
        } else if (topo.spine_has_link_to_group(spine, dst_group)) {
          out.push_back({topo.leaf_up_port(k), PathClass::minimal,
                         kHopsLeafMinimal, 0.0, Vl::vl0, true});
        } else if (cfg.mode == RoutingMode::fpar) {
          out.push_back({topo.leaf_up_port(k), PathClass::intermediate_spine,
                         kHopsLeafNonMinimal, 0.0, Vl::vl0, false});
        }
      }
    } else {
      // Intermediate leaf: commit minimally through any spine of this group
      // that reaches the destination group, never back through the spine we
      // descended from.
      const bool descended_here = view.vl == Vl::vl0 &&
                                  view.prev_router >= 0 &&
                                  topo.role(view.prev_router) ==
                                      RouterRole::spine &&
                                  topo.group_of_router(view.prev_router) ==
                                      here;
      if (!descended_here) {
        throw RoutingError("unreachable state at intermediate leaf " +
                           std::to_string(at));
      }
      for (int k : topo.group_spines_to_group(here, dst_group)) {
        const RouterId spine = topo.spine_id(here, k);
        if (spine == view.prev_router) continue;
        out.push_back({topo.leaf_up_port(k), PathClass::intermediate_leaf,
                       kHopsLeafMinimal, 0.0, Vl::vl1, true});
      }
    }
  } else {
    // Spine router.
    if (here == dst_group) {
      out.push_back({topo.spine_down_port(topo.leaf_index(dst_leaf)),
                     view.path_class, 1, 0.0, view.vl, true});
      return out;
    }
    const bool from_local_leaf =
        view.prev_router >= 0 &&
        topo.role(view.prev_router) == RouterRole::leaf &&
        topo.group_of_router(view.prev_router) == here;
    const bool from_global =
        view.prev_router >= 0 &&
        topo.role(view.prev_router) == RouterRole::spine &&
        topo.group_of_router(view.prev_router) != here;
    if (view.vl == Vl::vl1) {
      // A VL1 message outside its destination group can only have climbed
      // from an intermediate leaf below; it is forwarded minimally, nothing
      // else.
      if (here == src_group || !from_local_leaf) {
        throw RoutingError("unreachable VL1 state at spine " +
                           std::to_string(at));
      }
      for (int port : topo.spine_ports_to_group(at, dst_group)) {
        out.push_back({port, view.path_class, kHopsSpineMinimal, 0.0, Vl::vl1,
                       true});
      }
    } else if (here == src_group) {
      if (!from_local_leaf) {
        throw RoutingError("unreachable state at source-group spine " +
                           std::to_string(at));
      }
      for (int port : topo.spine_ports_to_group(at, dst_group)) {
        out.push_back({port, PathClass::minimal, kHopsSpineMinimal, 0.0,
                       Vl::vl0, true});
      }
      const bool may_divert =
          cfg.mode == RoutingMode::fpar &&
          (cfg.allow_spine_divert || out.empty());
      if (may_divert) {
        const auto& ports = topo.global_ports(at);
        for (std::size_t i = 0; i < ports.size(); ++i) {
          const GroupId target = topo.group_of_router(ports[i].peer);
          if (target == dst_group || target == src_group) continue;
          out.push_back({topo.params().leaves_per_group + int(i),
                         PathClass::intermediate_spine, kHopsSpineDivert, 0.0,
                         Vl::vl0, false});
        }
      }
    } else {
      // Intermediate spine on VL0: either commit minimally (switch to VL1)
      // or descend to a leaf of this group and stay on VL0. Descending is
      // only offered when some other spine of the group can still exit to
      // the destination group; otherwise the leaf would have to climb back
      // here and revisit.
      if (!from_global) {
        throw RoutingError("unreachable VL0 state at intermediate spine " +
                           std::to_string(at));
      }
      for (int port : topo.spine_ports_to_group(at, dst_group)) {
        out.push_back({port, PathClass::intermediate_spine, kHopsSpineMinimal,
                       0.0, Vl::vl1, true});
      }
      if (cfg.mode == RoutingMode::fpar) {
        const auto& exits = topo.group_spines_to_group(here, dst_group);
        const bool other_exit =
            std::any_of(exits.begin(), exits.end(), [&](int k) {
              return topo.spine_id(here, k) != at;
            });
        if (other_exit) {
          for (int l = 0; l < topo.params().leaves_per_group; ++l) {
            out.push_back({topo.spine_down_port(l),
                           PathClass::intermediate_leaf, kHopsSpineDescend,
                           0.0, Vl::vl0, false});
          }
        }
      }
    }
  }

  if (out.empty()) {
    throw RoutingError("no legal route candidate at router " +
                       std::to_string(at) + " for terminal " +
                       std::to_string(view.dst));
  }
  return out;
}

const RouteCandidate& choose_port(std::span<const RouteCandidate> candidates,
                                  const RoutingConfig& cfg) {
  if (candidates.empty()) throw RoutingError("choose_port: empty candidates");
  const auto better = [](const RouteCandidate* a, const RouteCandidate* b) {
    if (a == nullptr) return false;
    if (b == nullptr) return true;
    if (a->score != b->score) return a->score < b->score;
    return a->out_port < b->out_port;
  };
  const RouteCandidate* best_short = nullptr;
  const RouteCandidate* best_long = nullptr;
  for (const auto& c : candidates) {
    auto& slot = c.shorter ? best_short : best_long;
    if (better(&c, slot)) slot = &c;
  }
  const double t = cfg.threshold_t;
  if (best_short != nullptr) {
    if (best_short->score <= t) return *best_short;
    if (best_long != nullptr && best_long->score <= t) return *best_long;
    return *best_short;
  }
  return *best_long;  // no shorter option exists; threshold is moot
}

Vl vl_transition(Vl current, const RouteCandidate& chosen) {
  if (current == Vl::vl1 && chosen.vl_after == Vl::vl0) {
    throw SimulationError("VL1 -> VL0 transition attempted");
  }
  return chosen.vl_after;
}

std::string check_trace_legality(const Topology& topo, TerminalId src,
                                 TerminalId dst,
                                 std::span<const RouterId> trace) {
  std::ostringstream err;
  const RouterId src_leaf = topo.leaf_of_terminal(src);
  const RouterId dst_leaf = topo.leaf_of_terminal(dst);
  const GroupId src_group = topo.group_of_terminal(src);
  const GroupId dst_group = topo.group_of_terminal(dst);

  if (trace.empty()) return "empty trace";
  if (trace.front() != src_leaf) return "trace does not start at source leaf";
  if (trace.back() != dst_leaf) return "trace does not end at destination leaf";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    for (std::size_t j = i + 1; j < trace.size(); ++j) {
      if (trace[i] == trace[j]) {
        err << "router " << trace[i] << " revisited";
        return err.str();
      }
    }
  }

  const auto role_of = [&](std::size_t i) { return topo.role(trace[i]); };
  const auto group_of = [&](std::size_t i) {
    return topo.group_of_router(trace[i]);
  };
  const auto local_link_ok = [&](std::size_t i) {
    return group_of(i) == group_of(i + 1) && role_of(i) != role_of(i + 1);
  };
  const auto global_link_ok = [&](std::size_t i) {
    return role_of(i) == RouterRole::spine &&
           role_of(i + 1) == RouterRole::spine &&
           has_global_link(topo, trace[i], trace[i + 1]);
  };

  if (src_group == dst_group) {
    const bool same_leaf = trace.size() == 1 && src_leaf == dst_leaf;
    const bool via_spine =
        trace.size() == 3 && role_of(1) == RouterRole::spine &&
        group_of(1) == src_group && local_link_ok(0) && local_link_ok(1);
    if (!same_leaf && !via_spine) return "illegal intra-group shape";
    return "";
  }

  switch (trace.size()) {
    case 4:  // minimal: leaf, spine, spine, leaf
      if (role_of(1) != RouterRole::spine || role_of(2) != RouterRole::spine)
        return "minimal shape: middle routers must be spines";
      if (group_of(1) != src_group || group_of(2) != dst_group)
        return "minimal shape: wrong groups";
      if (!local_link_ok(0) || !global_link_ok(1) || !local_link_ok(2))
        return "minimal shape: missing link";
      return "";
    case 5: {  // intermediate spine
      const GroupId mid = group_of(2);
      if (mid == src_group || mid == dst_group)
        return "intermediate-spine shape: middle spine not in a third group";
      if (role_of(1) != RouterRole::spine || role_of(2) != RouterRole::spine ||
          role_of(3) != RouterRole::spine)
        return "intermediate-spine shape: bad roles";
      if (group_of(1) != src_group || group_of(3) != dst_group)
        return "intermediate-spine shape: wrong groups";
      if (!local_link_ok(0) || !global_link_ok(1) || !global_link_ok(2) ||
          !local_link_ok(3))
        return "intermediate-spine shape: missing link";
      return "";
    }
    case 7: {  // intermediate leaf: three routers inside one third group
      const GroupId mid = group_of(2);
      if (mid == src_group || mid == dst_group)
        return "intermediate-leaf shape: middle not in a third group";
      if (group_of(3) != mid || group_of(4) != mid)
        return "intermediate-leaf shape: middle routers span groups";
      if (role_of(1) != RouterRole::spine || role_of(2) != RouterRole::spine ||
          role_of(3) != RouterRole::leaf || role_of(4) != RouterRole::spine ||
          role_of(5) != RouterRole::spine)
        return "intermediate-leaf shape: bad roles";
      if (group_of(1) != src_group || group_of(5) != dst_group)
        return "intermediate-leaf shape: wrong groups";
      if (!local_link_ok(0) || !global_link_ok(1) || !local_link_ok(2) ||
          !local_link_ok(3) || !global_link_ok(4) || !local_link_ok(5))
        return "intermediate-leaf shape: missing link";
      return "";
    }
    default:
      err << "illegal trace length " << trace.size()
          << " for inter-group message";
      return err.str();
  }
}

}  // namespace dfp
