#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "dfpsim/topology.hpp"
#include "dfpsim/types.hpp"

namespace dfp {

struct JobSpec;  // workload.hpp

// rank -> terminal map of one job. One process per node: loaders must keep
// allocations of concurrent jobs disjoint.
struct Allocation {
  JobId job_id = 0;
  std::vector<TerminalId> rank_to_terminal;

  TerminalId terminal(int rank) const { return rank_to_terminal[rank]; }
  int nprocs() const { return int(rank_to_terminal.size()); }
};

// Ranks fill terminals in ascending global id from the first terminal of
// start_group.
Allocation contiguous_alloc(JobId job, int nprocs, const Topology& topo,
                            GroupId start_group);

// Uniform injective map over non-excluded terminals: seeded shuffle of the
// eligible list, first nprocs taken.
Allocation random_alloc(JobId job, int nprocs, const Topology& topo,
                        std::uint64_t seed,
                        const std::set<TerminalId>& excluded = {});

// Background layout: per group in spec.bg_groups, procs spread round-robin
// over leaves (proc i of a group sits on leaf i mod L, attach slot i / L),
// group-major rank order. Twin local ids across groups by construction.
Allocation background_alloc(const JobSpec& spec, const Topology& topo);

enum class RootConstraint { in_bg_groups, outside_bg_groups };

// Lowest rank whose terminal satisfies the constraint.
int place_broadcast_root(const Allocation& alloc, const Topology& topo,
                         RootConstraint constraint,
                         const std::vector<GroupId>& bg_groups);

// Allocation file: one line per job, `job_id t0 t1 ...` in rank order.
std::vector<Allocation> parse_allocation_file(const std::string& path);
std::vector<Allocation> parse_allocation_text(const std::string& text,
                                              const std::string& origin);
std::string render_allocation(const Allocation& alloc);

// Verifies every terminal exists and no terminal is assigned twice across
// jobs; throws AllocationError.
void check_allocations(const std::vector<Allocation>& allocs,
                       const Topology& topo);

}  // namespace dfp
