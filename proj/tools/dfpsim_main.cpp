#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "dfpsim/experiment.hpp"
#include "dfpsim/topology.hpp"

using namespace dfp;

namespace {

// --place 0=contiguous@3 --place 1=random@777
void apply_place_flags(ExperimentSpec& spec,
                       const std::vector<std::string>& flags) {
  for (const auto& f : flags) {
    const auto eq = f.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--place expects job_id=directive, got `" + f + "`");
    }
    JobId job;
    try {
      job = std::stoi(f.substr(0, eq));
    } catch (const std::exception&) {
      throw ConfigError("--place expects a numeric job id in `" + f + "`");
    }
    spec.placements[job] = parse_placement_directive(f.substr(eq + 1));
  }
}

int cmd_validate(const std::string& network_path) {
  const SimConfig cfg = SimConfig::from_file(network_path);
  const Topology topo = build_topology(cfg.topology_params());
  const auto report = validate(topo);
  std::cout << "terminals: " << topo.params().terminal_count() << "\n"
            << "routers: " << topo.params().router_count() << "\n"
            << "global links: " << topo.global_links().size() << "\n"
            << "links per group pair: " << topo.params().links_per_group_pair()
            << "\n";
  for (const auto& r : report) std::cout << "violation: " << r << "\n";
  return report.empty() ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dfpsim: Dragonfly+ interconnect simulator"};
  app.require_subcommand(0, 1);

  ExperimentSpec spec;
  std::vector<std::string> place_flags;
  std::string routing_flag, sweep_path;
  double threshold = -1;

  app.add_option("--network", spec.network_path, "network config file");
  app.add_option("--workload", spec.workload_path, "workload file");
  app.add_option("--alloc", spec.alloc_path, "allocation file");
  app.add_option("--place", place_flags,
                 "job placement, e.g. 0=contiguous@3 or 1=random@777");
  app.add_option("--routing", routing_flag, "fpar|minimal");
  app.add_option("--threshold", threshold, "FPAR threshold T in (0,1)");
  app.add_option("--until", spec.until, "stop after this many ns");
  app.add_option("--out", spec.out_dir, "output directory");
  app.add_option("--label", spec.label, "run label");
  app.add_option("--sweep", sweep_path, "sweep grid file (runs one cell per "
                                        "grid point)");

  auto* replay = app.add_subcommand("replay", "re-run from a manifest.txt");
  std::string manifest_path, replay_out = "replay_out";
  replay->add_option("manifest", manifest_path, "manifest file")->required();
  replay->add_option("--out", replay_out, "output directory");

  auto* validate_cmd =
      app.add_subcommand("validate", "build and validate the topology");
  std::string validate_network;
  validate_cmd->add_option("--network", validate_network, "network config")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*replay) {
      return replay_manifest(manifest_path, replay_out);
    }
    if (*validate_cmd) {
      return cmd_validate(validate_network);
    }
    if (const char* env = std::getenv("DFPSIM_SEED")) {
      spec.default_seed = std::stoull(env);
    }
    if (!routing_flag.empty()) {
      spec.routing_override = parse_routing_mode(routing_flag);
    }
    if (threshold >= 0) spec.threshold_override = threshold;
    apply_place_flags(spec, place_flags);
    if (spec.network_path.empty()) {
      std::cerr << "dfpsim: --network is required\n";
      return 2;
    }
    if (!sweep_path.empty()) {
      return run_sweep(sweep_path, spec);
    }
    if (spec.workload_path.empty()) {
      std::cerr << "dfpsim: --workload is required\n";
      return 2;
    }
    return run_experiment(spec);
  } catch (const ConfigError& e) {
    std::cerr << "dfpsim: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "dfpsim: " << e.what() << "\n";
    return 4;
  }
}
