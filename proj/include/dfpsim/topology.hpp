#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfpsim/types.hpp"

namespace dfp {

struct TopologyParams {
  int num_groups = 0;
  int spines_per_group = 0;
  int leaves_per_group = 0;
  int terminals_per_leaf = 0;
  int global_links_per_spine = 0;
  double bw_global = 0;    // bytes/sec
  double bw_local = 0;     // bytes/sec
  double bw_terminal = 0;  // bytes/sec

  void check() const;  // throws ConfigError on violated invariants

  // Links joining every unordered group pair: S*H / (G-1).
  int links_per_group_pair() const;

  int routers_per_group() const { return spines_per_group + leaves_per_group; }
  int terminals_per_group() const {
    return leaves_per_group * terminals_per_leaf;
  }
  int terminal_count() const { return num_groups * terminals_per_group(); }
  int router_count() const { return num_groups * routers_per_group(); }
};

struct LocalLink {
  RouterId leaf;
  RouterId spine;
};

struct GlobalLink {
  RouterId spine_a;  // lower group
  RouterId spine_b;  // higher group
  int index;         // distinct per link
};

// Immutable after construction; safe to share read-only across threads.
// Link vectors stay public data so diagnostics (validate) can audit them and
// tests can corrupt copies; the routing index is derived from them.
class Topology {
 public:
  Topology(TopologyParams params, std::vector<LocalLink> local_links,
           std::vector<GlobalLink> global_links);

  const TopologyParams& params() const { return params_; }
  const std::vector<LocalLink>& local_links() const { return local_links_; }
  const std::vector<GlobalLink>& global_links() const { return global_links_; }

  // --- id scheme -----------------------------------------------------------
  // Routers: group-major; within a group spines come first, then leaves.
  // Terminals: group-major, then leaf-major, then port order.
  RouterId spine_id(GroupId g, int k) const;
  RouterId leaf_id(GroupId g, int l) const;
  RouterRole role(RouterId r) const;
  GroupId group_of_router(RouterId r) const;
  int spine_index(RouterId r) const;  // position among the group's spines
  int leaf_index(RouterId r) const;

  TerminalId terminal_id(GroupId g, int leaf, int port) const;
  GroupId group_of_terminal(TerminalId t) const;
  RouterId leaf_of_terminal(TerminalId t) const;
  int terminal_port(TerminalId t) const;  // attach slot on its leaf
  // Position of a terminal inside its group (leaf-major). The background
  // pattern pairs nodes by this id.
  int local_node_id(TerminalId t) const;
  TerminalId terminal_by_local_id(GroupId g, int local_id) const;

  // --- port scheme ---------------------------------------------------------
  // Leaf: ports [0, S) go up to spine k; ports [S, S+P) host terminals.
  // Spine: ports [0, L) go down to leaf l; ports [L, L+H) are global slots.
  int leaf_up_port(int spine_index) const { return spine_index; }
  int leaf_terminal_port(int terminal_slot) const {
    return params_.spines_per_group + terminal_slot;
  }
  int spine_down_port(int leaf_index) const { return leaf_index; }
  int port_count(RouterId r) const;

  struct GlobalPortInfo {
    RouterId peer;     // spine at the far end
    int peer_port;     // global port index on the peer
    int link_index;    // entry in global_links()
  };
  // Global adjacency of a spine, indexed by port - L (slot layer order).
  const std::vector<GlobalPortInfo>& global_ports(RouterId spine) const;
  // Global port indices on `spine` whose links reach `target` group.
  const std::vector<int>& spine_ports_to_group(RouterId spine,
                                               GroupId target) const;
  bool spine_has_link_to_group(RouterId spine, GroupId target) const;
  // Spine indices in `g` owning at least one link to `target`.
  const std::vector<int>& group_spines_to_group(GroupId g,
                                                GroupId target) const;

  int count_links_between_groups(GroupId a, GroupId b) const;

 private:
  void build_index();

  TopologyParams params_;
  std::vector<LocalLink> local_links_;
  std::vector<GlobalLink> global_links_;

  // derived, by dense spine index (group * S + k)
  std::vector<std::vector<GlobalPortInfo>> spine_global_ports_;
  std::vector<std::vector<std::vector<int>>> spine_ports_by_group_;
  std::vector<std::vector<std::vector<int>>> group_spines_by_group_;
};

// Balanced all-to-all wiring (the linear-assignment layout). Reduces to
// peer spine k' = (k + l) mod S for configs where every spine holds l links
// per destination group, and keeps every spine at exactly
// global_links_per_spine endpoints for any admissible parameter set.
Topology build_topology(const TopologyParams& params);

// Peer spine for source spine k using link slot l.
int global_link_peer(int k, int l, int num_spine);

// Closed-form maximum terminal counts by router radix.
std::int64_t max_system_size_dfp(int radix);
std::int64_t max_system_size_1d(int radix);

// One message per violated invariant; empty result means valid.
std::vector<std::string> validate(const Topology& topo);

}  // namespace dfp
