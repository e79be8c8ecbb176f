#pragma once

#include <span>
#include <string>
#include <vector>

#include "dfpsim/config.hpp"
#include "dfpsim/topology.hpp"
#include "dfpsim/types.hpp"

namespace dfp {

// One legal next-hop queue for a chunk, as seen from the router that will
// forward it. `shorter` marks the minimal partition of the selection rule;
// `path_class` / `vl_after` are adopted by the chunk if this candidate wins.
struct RouteCandidate {
  int out_port = -1;
  PathClass path_class = PathClass::minimal;
  int hops_remaining = 0;  // router-to-router links still ahead
  double score = 0.0;      // filled from port occupancy before choose_port
  Vl vl_after = Vl::vl0;
  bool shorter = true;
};

// What routing needs to know about a chunk.
struct ChunkRouteView {
  TerminalId src = -1;
  TerminalId dst = -1;
  Vl vl = Vl::vl0;
  RouterId prev_router = -1;  // router the chunk is departing, -1 at injection
  PathClass path_class = PathClass::minimal;
};

// Legal candidates at `at` for the chunk. Pure in (topology, view, config).
// Throws RoutingError if the chunk has no legal continuation.
std::vector<RouteCandidate> enumerate_candidates(const Topology& topo,
                                                 RouterId at,
                                                 const ChunkRouteView& view,
                                                 const RoutingConfig& cfg);

// Threshold selection. A longer path with score <= T wins only when every
// shorter path scores above T; with everything above T the smallest-score
// shorter path wins. Ties break to the lowest port index. Candidates must
// be scored and nonempty.
const RouteCandidate& choose_port(std::span<const RouteCandidate> candidates,
                                  const RoutingConfig& cfg);

// Lane after taking `chosen`. VL1 never reverts; a downgrade is a model bug.
Vl vl_transition(Vl current, const RouteCandidate& chosen);

// Shape check for a delivered chunk's router trace: minimal (<= 4 routers,
// or <= 3 intra-group), intermediate-spine (5), or intermediate-leaf (7,
// i.e. three routers inside one intermediate group). Empty return = legal.
std::string check_trace_legality(const Topology& topo, TerminalId src,
                                 TerminalId dst,
                                 std::span<const RouterId> trace);

}  // namespace dfp
