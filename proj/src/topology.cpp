#include "dfpsim/topology.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace dfp {

void TopologyParams::check() const {
  std::ostringstream err;
  if (num_groups < 2) err << "num_groups must be >= 2 (got " << num_groups << "); ";
  if (spines_per_group < 1) err << "spines_per_group must be >= 1; ";
  if (leaves_per_group < 1) err << "leaves_per_group must be >= 1; ";
  if (terminals_per_leaf < 1) err << "terminals_per_leaf must be >= 1; ";
  if (global_links_per_spine < 1) err << "global_links_per_spine must be >= 1; ";
  if (bw_global <= 0 || bw_local <= 0 || bw_terminal <= 0) {
    err << "bandwidths must be positive; ";
  }
  if (num_groups >= 2 && spines_per_group >= 1 && global_links_per_spine >= 1) {
    const long long endpoints =
        1LL * spines_per_group * global_links_per_spine;
    if (endpoints % (num_groups - 1) != 0) {
      err << "spines_per_group*global_links_per_spine (" << endpoints
          << ") must be divisible by num_groups-1 (" << (num_groups - 1)
          << ") for balanced wiring; ";
    }
  }
  const std::string msg = err.str();
  if (!msg.empty()) throw ConfigError("topology params: " + msg);
}

int TopologyParams::links_per_group_pair() const {
  return spines_per_group * global_links_per_spine / (num_groups - 1);
}

Topology::Topology(TopologyParams params, std::vector<LocalLink> local_links,
                   std::vector<GlobalLink> global_links)
    : params_(params),
      local_links_(std::move(local_links)),
      global_links_(std::move(global_links)) {
  build_index();
}

RouterId Topology::spine_id(GroupId g, int k) const {
  return g * params_.routers_per_group() + k;
}

RouterId Topology::leaf_id(GroupId g, int l) const {
  return g * params_.routers_per_group() + params_.spines_per_group + l;
}

RouterRole Topology::role(RouterId r) const {
  return r % params_.routers_per_group() < params_.spines_per_group
             ? RouterRole::spine
             : RouterRole::leaf;
}

GroupId Topology::group_of_router(RouterId r) const {
  return r / params_.routers_per_group();
}

int Topology::spine_index(RouterId r) const {
  return r % params_.routers_per_group();
}

int Topology::leaf_index(RouterId r) const {
  return r % params_.routers_per_group() - params_.spines_per_group;
}

TerminalId Topology::terminal_id(GroupId g, int leaf, int port) const {
  return (g * params_.leaves_per_group + leaf) * params_.terminals_per_leaf +
         port;
}

GroupId Topology::group_of_terminal(TerminalId t) const {
  return t / params_.terminals_per_group();
}

RouterId Topology::leaf_of_terminal(TerminalId t) const {
  const int leaf_global = t / params_.terminals_per_leaf;
  return leaf_id(leaf_global / params_.leaves_per_group,
                 leaf_global % params_.leaves_per_group);
}

int Topology::terminal_port(TerminalId t) const {
  return t % params_.terminals_per_leaf;
}

int Topology::local_node_id(TerminalId t) const {
  return t % params_.terminals_per_group();
}

TerminalId Topology::terminal_by_local_id(GroupId g, int local_id) const {
  return g * params_.terminals_per_group() + local_id;
}

int Topology::port_count(RouterId r) const {
  if (role(r) == RouterRole::leaf) {
    return params_.spines_per_group + params_.terminals_per_leaf;
  }
  return params_.leaves_per_group + params_.global_links_per_spine;
}

const std::vector<Topology::GlobalPortInfo>& Topology::global_ports(
    RouterId spine) const {
  const GroupId g = group_of_router(spine);
  return spine_global_ports_[g * params_.spines_per_group +
                             spine_index(spine)];
}

const std::vector<int>& Topology::spine_ports_to_group(RouterId spine,
                                                       GroupId target) const {
  const GroupId g = group_of_router(spine);
  return spine_ports_by_group_[g * params_.spines_per_group +
                               spine_index(spine)][target];
}

bool Topology::spine_has_link_to_group(RouterId spine, GroupId target) const {
  return !spine_ports_to_group(spine, target).empty();
}

const std::vector<int>& Topology::group_spines_to_group(GroupId g,
                                                        GroupId target) const {
  return group_spines_by_group_[g][target];
}

int Topology::count_links_between_groups(GroupId a, GroupId b) const {
  int n = 0;
  for (const auto& gl : global_links_) {
    const GroupId ga = group_of_router(gl.spine_a);
    const GroupId gb = group_of_router(gl.spine_b);
    if ((ga == a && gb == b) || (ga == b && gb == a)) ++n;
  }
  return n;
}

void Topology::build_index() {
  const int S = params_.spines_per_group;
  const int G = params_.num_groups;
  const int L = params_.leaves_per_group;
  const int H = params_.global_links_per_spine;

  spine_global_ports_.assign(static_cast<std::size_t>(G) * S, {});
  spine_ports_by_group_.assign(static_cast<std::size_t>(G) * S,
                               std::vector<std::vector<int>>(G));
  group_spines_by_group_.assign(G, std::vector<std::vector<int>>(G));

  // Global ports are laid out in slot-layer order; the layer is recovered
  // from how many links of this spine were already placed.
  std::vector<int> next_layer(static_cast<std::size_t>(G) * S, 0);
  struct End {
    int dense_spine;
    int port;
  };
  std::vector<std::pair<End, End>> ends(global_links_.size());
  for (std::size_t i = 0; i < global_links_.size(); ++i) {
    const auto& gl = global_links_[i];
    for (RouterId r : {gl.spine_a, gl.spine_b}) {
      if (role(r) != RouterRole::spine) continue;  // tampered topology
      const int dense = group_of_router(r) * S + spine_index(r);
      const int layer = next_layer[dense]++;
      const int port = L + layer;
      (r == gl.spine_a ? ends[i].first : ends[i].second) = {dense, port};
    }
  }
  for (std::size_t i = 0; i < global_links_.size(); ++i) {
    const auto& gl = global_links_[i];
    if (role(gl.spine_a) != RouterRole::spine ||
        role(gl.spine_b) != RouterRole::spine) {
      continue;
    }
    const auto& [ea, eb] = ends[i];
    const GroupId ga = group_of_router(gl.spine_a);
    const GroupId gb = group_of_router(gl.spine_b);
    auto& ports_a = spine_global_ports_[ea.dense_spine];
    auto& ports_b = spine_global_ports_[eb.dense_spine];
    ports_a.resize(std::max<std::size_t>(ports_a.size(), ea.port - L + 1));
    ports_b.resize(std::max<std::size_t>(ports_b.size(), eb.port - L + 1));
    ports_a[ea.port - L] = {gl.spine_b, eb.port, static_cast<int>(i)};
    ports_b[eb.port - L] = {gl.spine_a, ea.port, static_cast<int>(i)};
    if (gb >= 0 && gb < params_.num_groups) {
      spine_ports_by_group_[ea.dense_spine][gb].push_back(ea.port);
    }
    if (ga >= 0 && ga < params_.num_groups) {
      spine_ports_by_group_[eb.dense_spine][ga].push_back(eb.port);
    }
  }
  for (GroupId g = 0; g < G; ++g) {
    for (int k = 0; k < S; ++k) {
      const auto& by_group = spine_ports_by_group_[g * S + k];
      for (GroupId t = 0; t < G; ++t) {
        if (!by_group[t].empty()) group_spines_by_group_[g][t].push_back(k);
      }
    }
  }
  (void)H;
}

int global_link_peer(int k, int l, int num_spine) {
  if (num_spine < 1) throw ArgumentError("global_link_peer: num_spine < 1");
  if (k < 0 || k >= num_spine) {
    throw ArgumentError("global_link_peer: spine index " + std::to_string(k) +
                        " out of range [0," + std::to_string(num_spine) + ")");
  }
  if (l < 0) throw ArgumentError("global_link_peer: negative link slot");
  return (k + l) % num_spine;
}

Topology build_topology(const TopologyParams& params) {
  params.check();
  const int G = params.num_groups;
  const int S = params.spines_per_group;
  const int L = params.leaves_per_group;
  const int m = params.links_per_group_pair();

  std::vector<LocalLink> local;
  local.reserve(static_cast<std::size_t>(G) * S * L);
  // Temporary ids; real RouterIds need the finished Topology's arithmetic,
  // which only depends on params, so compute directly.
  const auto spine_of = [&](GroupId g, int k) {
    return RouterId(g * (S + L) + k);
  };
  const auto leaf_of = [&](GroupId g, int l) {
    return RouterId(g * (S + L) + S + l);
  };
  for (GroupId g = 0; g < G; ++g) {
    for (int l = 0; l < L; ++l) {
      for (int k = 0; k < S; ++k) {
        local.push_back({leaf_of(g, l), spine_of(g, k)});
      }
    }
  }

  // Each group owns S*H endpoint slots, slot q belonging to spine q mod S.
  // Targets (in ascending group order) get m consecutive slots each. For the
  // pair (i, j), link o pairs i's slot d_i*m+o with a layer-rotated slot of
  // j's range: the rotation realizes peer = (k + layer) mod S and keeps the
  // consumed slot set an exact permutation, so every spine ends with exactly
  // global_links_per_spine endpoints.
  std::vector<GlobalLink> global;
  global.reserve(static_cast<std::size_t>(G) * (G - 1) / 2 * m);
  const auto target_rank = [&](GroupId from, GroupId to) {
    return to < from ? to : to - 1;
  };
  int link_index = 0;
  for (GroupId i = 0; i < G; ++i) {
    for (GroupId j = i + 1; j < G; ++j) {
      const int di = target_rank(i, j);
      const int dj = target_rank(j, i);
      for (int o = 0; o < m; ++o) {
        const int layer = o / S;
        const int idx = o % S;
        const int layer_size = std::min(S, m - layer * S);
        const int src_slot = di * m + o;
        const int dst_slot =
            dj * m + layer * S + (idx + layer) % layer_size;
        global.push_back({spine_of(i, src_slot % S), spine_of(j, dst_slot % S),
                          link_index++});
      }
    }
  }
  return Topology(params, std::move(local), std::move(global));
}

std::int64_t max_system_size_dfp(int radix) {
  if (radix < 2 || radix % 2 != 0) {
    throw ArgumentError("max_system_size_dfp: radix must be even and >= 2");
  }
  const std::int64_t half = radix / 2;
  const std::int64_t groups_minus = half * half;
  return groups_minus * (groups_minus + 1);
}

std::int64_t max_system_size_1d(int radix) {
  if (radix < 4 || radix % 4 != 0) {
    throw ArgumentError(
        "max_system_size_1d: radix must be divisible by 4 and >= 4");
  }
  const std::int64_t per_group =
      static_cast<std::int64_t>(radix / 4) * (radix / 2 + 1);
  return per_group * (per_group + 1);
}

std::vector<std::string> validate(const Topology& topo) {
  std::vector<std::string> report;
  const auto& p = topo.params();
  const int G = p.num_groups;
  const int S = p.spines_per_group;
  const int L = p.leaves_per_group;
  std::ostringstream msg;
  const auto flush = [&]() {
    report.push_back(msg.str());
    msg.str("");
  };

  // Intra-group wiring must be exactly the complete bipartite graph.
  std::map<std::pair<RouterId, RouterId>, int> local_count;
  for (const auto& ll : topo.local_links()) {
    const bool shapes_ok = topo.role(ll.leaf) == RouterRole::leaf &&
                           topo.role(ll.spine) == RouterRole::spine;
    if (!shapes_ok) {
      msg << "non-bipartite intra-group wiring: local link (" << ll.leaf
          << ", " << ll.spine << ") does not join a leaf to a spine";
      flush();
      continue;
    }
    if (topo.group_of_router(ll.leaf) != topo.group_of_router(ll.spine)) {
      msg << "local link (" << ll.leaf << ", " << ll.spine
          << ") crosses groups";
      flush();
      continue;
    }
    ++local_count[{ll.leaf, ll.spine}];
  }
  for (GroupId g = 0; g < G; ++g) {
    for (int l = 0; l < L; ++l) {
      for (int k = 0; k < S; ++k) {
        const auto key =
            std::make_pair(topo.leaf_id(g, l), topo.spine_id(g, k));
        const auto it = local_count.find(key);
        const int n = it == local_count.end() ? 0 : it->second;
        if (n != 1) {
          msg << "group " << g << ": leaf " << key.first << " / spine "
              << key.second << " joined by " << n << " local links, want 1";
          flush();
        }
      }
    }
  }

  // Global wiring: spine endpoints, distinct groups, equal pair counts,
  // per-spine radix.
  const int want_pair = p.links_per_group_pair();
  std::vector<int> pair_count(static_cast<std::size_t>(G) * G, 0);
  std::vector<int> spine_degree(static_cast<std::size_t>(G) * S, 0);
  for (const auto& gl : topo.global_links()) {
    if (topo.role(gl.spine_a) != RouterRole::spine ||
        topo.role(gl.spine_b) != RouterRole::spine) {
      msg << "global link " << gl.index << " endpoint is not a spine";
      flush();
      continue;
    }
    const GroupId ga = topo.group_of_router(gl.spine_a);
    const GroupId gb = topo.group_of_router(gl.spine_b);
    if (ga == gb) {
      msg << "global link " << gl.index << " stays inside group " << ga;
      flush();
      continue;
    }
    ++pair_count[std::min(ga, gb) * G + std::max(ga, gb)];
    ++spine_degree[ga * S + topo.spine_index(gl.spine_a)];
    ++spine_degree[gb * S + topo.spine_index(gl.spine_b)];
  }
  for (GroupId a = 0; a < G; ++a) {
    for (GroupId b = a + 1; b < G; ++b) {
      const int n = pair_count[a * G + b];
      if (n != want_pair) {
        msg << "groups (" << a << ", " << b << ") joined by " << n
            << " global links, want " << want_pair;
        flush();
      }
    }
  }
  for (GroupId g = 0; g < G; ++g) {
    for (int k = 0; k < S; ++k) {
      const int d = spine_degree[g * S + k];
      if (d != p.global_links_per_spine) {
        msg << "spine " << topo.spine_id(g, k) << " has " << d
            << " global endpoints, want " << p.global_links_per_spine;
        flush();
      }
    }
  }
  return report;
}

}  // namespace dfp
