#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dfpsim/config.hpp"
#include "dfpsim/engine.hpp"
#include "dfpsim/placement.hpp"
#include "dfpsim/workload.hpp"

namespace dfp {

// `contiguous@G`, `random@SEED`, or `random` (seed from DFPSIM_SEED).
// Broadcast sweeps add `random-root-out@SEED` / `random-root-in@SEED`.
struct PlacementDirective {
  enum class Kind { contiguous, random, random_root_out, random_root_in };
  Kind kind = Kind::contiguous;
  GroupId start_group = 0;
  std::optional<std::uint64_t> seed;
};

PlacementDirective parse_placement_directive(const std::string& s);

struct ExperimentSpec {
  std::string network_path;
  std::string workload_path;
  std::string alloc_path;  // optional
  std::map<JobId, PlacementDirective> placements;
  std::optional<RoutingMode> routing_override;
  std::optional<double> threshold_override;
  Ns until = -1;  // <0: run to quiescence
  std::string out_dir = "out";
  std::string label = "run";
  std::optional<std::uint64_t> default_seed;  // DFPSIM_SEED
};

// Everything a run needs, with files read and placements drawn. A manifest
// is this structure serialized; replaying it reproduces the run bit for bit.
struct ResolvedExperiment {
  SimConfig config;
  std::vector<JobSpec> jobs;
  std::vector<Allocation> allocs;  // index-aligned with jobs
  Ns until = -1;
  std::string label = "run";
};

ResolvedExperiment resolve_experiment(const ExperimentSpec& spec);

std::string render_manifest(const ResolvedExperiment& rx);
ResolvedExperiment parse_manifest_text(const std::string& text,
                                       const std::string& origin);
ResolvedExperiment parse_manifest_file(const std::string& path);

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 3 undelivered at limit, 4 invariant violation
  SimReport report;
  std::string error;
};

// Simulates and writes records.csv, summary.csv, arrival_rates.csv and
// manifest.txt into out_dir.
RunOutcome run_resolved(const ResolvedExperiment& rx,
                        const std::string& out_dir);

int run_experiment(const ExperimentSpec& spec);
int replay_manifest(const std::string& manifest_path,
                    const std::string& out_dir);

// --- sweep -----------------------------------------------------------------

struct SweepCell {
  std::string label;
  std::vector<JobSpec> jobs;
  std::vector<PlacementDirective> placements;  // aligned with jobs
  bool root_from_placement = false;            // broadcast root recomputed
};

struct SweepSpec {
  Pattern pattern = Pattern::uniform_random;
  int nprocs = 0;
  std::int64_t msg_count = 0;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> sizes;
  std::map<std::int64_t, std::vector<Ns>> intervals_by_size;
  std::vector<int> bg_loads_percent;
  std::vector<GroupId> bg_groups;
  Ns bg_interval = 1000;
  std::int64_t bg_msg_count = 0;
  std::vector<std::string> placements;
  std::array<int, 3> stencil_dims = {0, 0, 0};
  std::int64_t tornado_offset = 0;
  Ns until = -1;

  static SweepSpec parse_file(const std::string& path, const SimConfig& cfg);
  static SweepSpec parse_text(const std::string& text,
                              const std::string& origin, const SimConfig& cfg);
};

// Background job offering `load` (fraction of global link bandwidth) on
// every group pair: one twin stream per pair link, processes spread evenly
// over each group's leaves. Loads past the overloaded point stack
// load/130% streams per link, each running the 130% schedule.
JobSpec make_background_job(const SimConfig& cfg, double load, Ns interval,
                            std::int64_t msg_count,
                            const std::vector<GroupId>& groups, JobId job_id,
                            std::uint64_t seed);

// Grid enumeration is separate from execution so it can be checked cheaply.
std::vector<SweepCell> enumerate_sweep_cells(const SweepSpec& sweep,
                                             const SimConfig& cfg);

int run_sweep(const std::string& sweep_path, const ExperimentSpec& base);

}  // namespace dfp
