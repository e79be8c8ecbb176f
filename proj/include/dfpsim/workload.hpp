#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dfpsim/topology.hpp"
#include "dfpsim/types.hpp"

namespace dfp {

enum class Pattern {
  uniform_random,
  stencil3d,
  tornado,
  broadcast,
  background,
};

Pattern parse_pattern(const std::string& s);
const char* to_string(Pattern p);

struct Allocation;  // placement.hpp

// One synthetic job: pattern, size, message schedule, pattern arguments.
// msg_count counts communication iterations per rank.
struct JobSpec {
  JobId job_id = 0;
  Pattern pattern = Pattern::uniform_random;
  int nprocs = 0;
  std::int64_t msg_size = 0;
  Ns interval = 0;
  std::int64_t msg_count = 0;
  std::uint64_t seed = 0;

  std::array<int, 3> stencil_dims = {0, 0, 0};
  std::int64_t tornado_offset = 0;
  int broadcast_root = 0;
  std::vector<GroupId> bg_groups;

  void check() const;  // throws ConfigError on violated invariants
  // Wraparound collapses below 3 ranks per dimension (self or duplicate
  // neighbors); such jobs run but are flagged.
  bool degenerate_stencil() const;

  // Workload-file line:
  //   job_id pattern nprocs msg_size_bytes interval_ns msg_count seed [args]
  static JobSpec parse_line(const std::string& line, int lineno,
                            const std::string& origin);
  std::string render() const;
};

std::vector<JobSpec> parse_workload_file(const std::string& path);
std::vector<JobSpec> parse_workload_text(const std::string& text,
                                         const std::string& origin);

// Theoretical Global Link Load: offered rate over global link bandwidth.
double tgll(std::int64_t msg_size, Ns interval, double bw_global);
// Message size realizing `target` TGLL at the given interval.
std::int64_t msg_size_for_tgll(double target, Ns interval, double bw_global);

// Pattern destination rules. All are pure given (spec, rank, iteration);
// uniform-random draws from a per-rank stream derived from (seed, rank).
int ur_dest(int rank, int nprocs, Rng& rng);
std::array<int, 6> stencil_neighbors(int rank, const std::array<int, 3>& dims);
int tornado_dest(int rank, std::int64_t offset, int nprocs);
std::vector<int> broadcast_targets(int root, int nprocs);
// Terminals holding the same local node id in the other background groups.
std::vector<TerminalId> background_peers(int node_local_id, GroupId my_group,
                                         const std::vector<GroupId>& bg_groups,
                                         const Topology& topo);

struct PlanEntry {
  Ns issue_time;
  int dst_rank;
};

// Open-loop injection schedule: per-rank entries ordered by issue time.
// Broadcast is closed loop and driven by the engine instead.
struct TrafficEventPlan {
  std::vector<std::vector<PlanEntry>> per_rank;
};

TrafficEventPlan make_plan(const JobSpec& spec, const Topology& topo,
                           const Allocation& alloc);

}  // namespace dfp
