#include "dfpsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "dfpsim/metrics.hpp"

namespace fs = std::filesystem;

namespace dfp {

PlacementDirective parse_placement_directive(const std::string& s) {
  PlacementDirective d;
  std::string kind = s;
  std::string arg;
  const auto at = s.find('@');
  if (at != std::string::npos) {
    kind = s.substr(0, at);
    arg = s.substr(at + 1);
  }
  try {
    if (kind == "contiguous") {
      d.kind = PlacementDirective::Kind::contiguous;
      d.start_group = arg.empty() ? 0 : std::stoi(arg);
    } else if (kind == "random" || kind == "random-root-out" ||
               kind == "random-root-in") {
      d.kind = kind == "random" ? PlacementDirective::Kind::random
               : kind == "random-root-out"
                   ? PlacementDirective::Kind::random_root_out
                   : PlacementDirective::Kind::random_root_in;
      if (!arg.empty()) d.seed = std::stoull(arg);
    } else {
      throw ConfigError("unknown placement `" + s + "`");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("malformed placement directive `" + s + "`");
  }
  return d;
}

namespace {

std::vector<GroupId> collect_bg_groups(const std::vector<JobSpec>& jobs) {
  std::set<GroupId> groups;
  for (const auto& j : jobs) {
    if (j.pattern == Pattern::background) {
      groups.insert(j.bg_groups.begin(), j.bg_groups.end());
    }
  }
  return {groups.begin(), groups.end()};
}

Allocation resolve_placement(const PlacementDirective& d, JobSpec& job,
                             const Topology& topo,
                             const std::set<TerminalId>& taken,
                             const std::vector<GroupId>& bg_groups,
                             std::optional<std::uint64_t> default_seed) {
  switch (d.kind) {
    case PlacementDirective::Kind::contiguous:
      return contiguous_alloc(job.job_id, job.nprocs, topo, d.start_group);
    case PlacementDirective::Kind::random:
    case PlacementDirective::Kind::random_root_out:
    case PlacementDirective::Kind::random_root_in: {
      std::uint64_t seed;
      if (d.seed) {
        seed = *d.seed;
      } else if (default_seed) {
        seed = *default_seed;
      } else {
        throw ConfigError("job " + std::to_string(job.job_id) +
                          ": random placement needs a seed (use random@SEED "
                          "or set DFPSIM_SEED)");
      }
      Allocation a = random_alloc(job.job_id, job.nprocs, topo, seed, taken);
      if (d.kind != PlacementDirective::Kind::random) {
        if (job.pattern != Pattern::broadcast) {
          throw ConfigError("root-constrained placement on a job without a "
                            "broadcast root");
        }
        job.broadcast_root = place_broadcast_root(
            a, topo,
            d.kind == PlacementDirective::Kind::random_root_out
                ? RootConstraint::outside_bg_groups
                : RootConstraint::in_bg_groups,
            bg_groups);
      }
      return a;
    }
  }
  throw ConfigError("unhandled placement directive");
}

}  // namespace

ResolvedExperiment resolve_experiment(const ExperimentSpec& spec) {
  ResolvedExperiment rx;
  rx.config = SimConfig::from_file(spec.network_path);
  if (spec.routing_override) rx.config.routing.mode = *spec.routing_override;
  if (spec.threshold_override) {
    rx.config.routing.threshold_t = *spec.threshold_override;
  }
  rx.config.routing.check();
  rx.until = spec.until;
  rx.label = spec.label;
  rx.jobs = parse_workload_file(spec.workload_path);

  std::map<JobId, Allocation> from_file;
  if (!spec.alloc_path.empty()) {
    for (auto& a : parse_allocation_file(spec.alloc_path)) {
      from_file[a.job_id] = std::move(a);
    }
  }

  const Topology topo = build_topology(rx.config.topology_params());
  const std::vector<GroupId> bg_groups = collect_bg_groups(rx.jobs);
  rx.allocs.resize(rx.jobs.size());
  std::vector<bool> placed(rx.jobs.size(), false);
  std::set<TerminalId> taken;
  const auto commit = [&](std::size_t i, Allocation a) {
    if (int(a.rank_to_terminal.size()) != rx.jobs[i].nprocs) {
      throw ConfigError("job " + std::to_string(rx.jobs[i].job_id) +
                        ": allocation covers " +
                        std::to_string(a.rank_to_terminal.size()) +
                        " ranks, spec wants " +
                        std::to_string(rx.jobs[i].nprocs));
    }
    taken.insert(a.rank_to_terminal.begin(), a.rank_to_terminal.end());
    rx.allocs[i] = std::move(a);
    placed[i] = true;
  };

  // Fixed layouts first so random draws exclude them, whatever the file
  // order: explicit allocation rows, background layouts, contiguous blocks.
  for (std::size_t i = 0; i < rx.jobs.size(); ++i) {
    JobSpec& job = rx.jobs[i];
    const auto file_it = from_file.find(job.job_id);
    const auto dir_it = spec.placements.find(job.job_id);
    if (file_it != from_file.end()) {
      if (dir_it != spec.placements.end()) {
        throw ConfigError("job " + std::to_string(job.job_id) +
                          ": both an allocation row and a placement "
                          "directive given");
      }
      commit(i, file_it->second);
    } else if (dir_it != spec.placements.end()) {
      if (dir_it->second.kind == PlacementDirective::Kind::contiguous) {
        commit(i, resolve_placement(dir_it->second, job, topo, taken,
                                    bg_groups, spec.default_seed));
      }
    } else if (job.pattern == Pattern::background) {
      commit(i, background_alloc(job, topo));
    } else {
      throw ConfigError("job " + std::to_string(job.job_id) +
                        ": no allocation row or placement directive");
    }
  }
  for (std::size_t i = 0; i < rx.jobs.size(); ++i) {
    if (placed[i]) continue;
    commit(i, resolve_placement(spec.placements.at(rx.jobs[i].job_id),
                                rx.jobs[i], topo, taken, bg_groups,
                                spec.default_seed));
  }
  check_allocations(rx.allocs, topo);
  return rx;
}

std::string render_manifest(const ResolvedExperiment& rx) {
  std::ostringstream out;
  out << "# dfpsim run manifest; replay with: dfpsim replay <this file>\n";
  out << "label = " << rx.label << "\n";
  out << "until_ns = " << rx.until << "\n";
  out << "[network]\n" << rx.config.render();
  out << "[workload]\n";
  for (const auto& j : rx.jobs) out << j.render() << "\n";
  out << "[allocation]\n";
  for (const auto& a : rx.allocs) out << render_allocation(a) << "\n";
  return out.str();
}

ResolvedExperiment parse_manifest_text(const std::string& text,
                                       const std::string& origin) {
  ResolvedExperiment rx;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::string network_text, workload_text, alloc_text;
  int lineno = 0;
  std::vector<std::pair<int, std::string>> workload_lines;
  while (std::getline(in, line)) {
    ++lineno;
    if (line == "[network]" || line == "[workload]" ||
        line == "[allocation]") {
      section = line;
      continue;
    }
    if (section.empty()) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected `key = value` before sections");
      }
      const std::string key = line.substr(0, line.find_last_not_of(
          " \t", eq - 1) + 1);
      std::string value = line.substr(eq + 1);
      const auto b = value.find_first_not_of(" \t");
      value = b == std::string::npos ? "" : value.substr(b);
      if (key == "label") {
        rx.label = value;
      } else if (key == "until_ns") {
        rx.until = std::stoll(value);
      } else {
        throw ConfigError(origin + ": unknown manifest key `" + key + "`");
      }
    } else if (section == "[network]") {
      network_text += line + "\n";
    } else if (section == "[workload]") {
      workload_text += line + "\n";
    } else {
      alloc_text += line + "\n";
    }
  }
  rx.config = SimConfig::from_kv(
      KeyValueFile::parse_text(network_text, origin + "/network"));
  rx.jobs = parse_workload_text(workload_text, origin + "/workload");
  auto allocs = parse_allocation_text(alloc_text, origin + "/allocation");
  if (allocs.size() != rx.jobs.size()) {
    throw ConfigError(origin + ": " + std::to_string(rx.jobs.size()) +
                      " jobs but " + std::to_string(allocs.size()) +
                      " allocation rows");
  }
  for (std::size_t i = 0; i < allocs.size(); ++i) {
    if (allocs[i].job_id != rx.jobs[i].job_id) {
      throw ConfigError(origin + ": allocation order differs from workload "
                                 "order");
    }
  }
  rx.allocs = std::move(allocs);
  return rx;
}

ResolvedExperiment parse_manifest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest_text(buf.str(), path);
}

RunOutcome run_resolved(const ResolvedExperiment& rx,
                        const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream mf(fs::path(out_dir) / "manifest.txt");
    if (!mf) throw ConfigError(out_dir + ": cannot write manifest");
    mf << render_manifest(rx);
  }
  const Topology topo = build_topology(rx.config.topology_params());
  check_allocations(rx.allocs, topo);
  MetricsCollector metrics(rx.config.engine.sample_interval_ns,
                           rx.config.num_groups);
  Simulation sim(topo, rx.config.engine, rx.config.routing, &metrics);
  RunOutcome outcome;
  try {
    for (std::size_t i = 0; i < rx.jobs.size(); ++i) {
      sim.add_job(rx.jobs[i], rx.allocs[i]);
    }
    outcome.report = sim.run(rx.until);
  } catch (const std::exception& e) {
    outcome.exit_code = 4;
    outcome.error = e.what();
    return outcome;
  }
  metrics.write_records_csv((fs::path(out_dir) / "records.csv").string());
  metrics.write_summary_csv((fs::path(out_dir) / "summary.csv").string());
  metrics.write_arrival_csv(
      (fs::path(out_dir) / "arrival_rates.csv").string());
  if (!outcome.report.quiescent || outcome.report.undelivered() != 0) {
    outcome.exit_code = 3;
    outcome.error = std::to_string(outcome.report.undelivered()) +
                    " undelivered messages at the time limit";
  }
  return outcome;
}

int run_experiment(const ExperimentSpec& spec) {
  try {
    const ResolvedExperiment rx = resolve_experiment(spec);
    const RunOutcome outcome = run_resolved(rx, spec.out_dir);
    if (!outcome.error.empty()) {
      std::cerr << "dfpsim: " << outcome.error << "\n";
    }
    return outcome.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "dfpsim: " << e.what() << "\n";
    return 2;
  } catch (const AllocationError& e) {
    std::cerr << "dfpsim: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "dfpsim: " << e.what() << "\n";
    return 4;
  }
}

int replay_manifest(const std::string& manifest_path,
                    const std::string& out_dir) {
  try {
    const ResolvedExperiment rx = parse_manifest_file(manifest_path);
    const RunOutcome outcome = run_resolved(rx, out_dir);
    if (!outcome.error.empty()) {
      std::cerr << "dfpsim: " << outcome.error << "\n";
    }
    return outcome.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "dfpsim: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "dfpsim: " << e.what() << "\n";
    return 4;
  }
}

// --- sweep -------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::int64_t> split_ints(const std::string& s) {
  std::vector<std::int64_t> out;
  for (const auto& item : split_csv(s)) out.push_back(std::stoll(item));
  return out;
}

std::string placement_label(const std::string& directive) {
  std::string out;
  for (char c : directive) {
    if (c == '@') continue;
    out += c == '-' ? '_' : c;
  }
  return out;
}

}  // namespace

SweepSpec SweepSpec::parse_text(const std::string& text,
                                const std::string& origin,
                                const SimConfig& cfg) {
  (void)cfg;
  const KeyValueFile kv = KeyValueFile::parse_text(text, origin);
  SweepSpec s;
  s.pattern = parse_pattern(kv.get("pattern"));
  s.nprocs = int(kv.get_int("nprocs"));
  s.msg_count = kv.get_int("msg_count");
  s.seed = std::uint64_t(kv.get_int_or("seed", 1));
  if (kv.has("sizes")) s.sizes = split_ints(kv.get("sizes"));
  for (std::int64_t size : s.sizes) {
    const std::string key = "intervals_" + std::to_string(size);
    if (kv.has(key)) {
      for (std::int64_t v : split_ints(kv.get(key))) {
        s.intervals_by_size[size].push_back(v);
      }
    } else if (s.pattern == Pattern::broadcast) {
      s.intervals_by_size[size] = {0};  // closed loop paces itself
    } else {
      throw ConfigError(origin + ": missing `" + key + "`");
    }
  }
  if (kv.has("bg_loads")) {
    for (std::int64_t v : split_ints(kv.get("bg_loads"))) {
      s.bg_loads_percent.push_back(int(v));
    }
  }
  s.bg_groups = {0, 1, 2};
  if (kv.has("bg_groups")) {
    s.bg_groups.clear();
    for (std::int64_t v : split_ints(kv.get("bg_groups"))) {
      s.bg_groups.push_back(GroupId(v));
    }
  }
  s.bg_interval = kv.get_int_or("bg_interval_ns", 1000);
  s.bg_msg_count = kv.get_int_or("bg_msg_count", 0);
  if (kv.has("placements")) s.placements = split_csv(kv.get("placements"));
  if (kv.has("stencil_dims")) {
    const auto dims = split_ints(kv.get("stencil_dims"));
    if (dims.size() != 3) throw ConfigError(origin + ": stencil_dims needs 3");
    s.stencil_dims = {int(dims[0]), int(dims[1]), int(dims[2])};
  }
  s.tornado_offset = kv.get_int_or("tornado_offset", 0);
  s.until = kv.get_int_or("until_ns", -1);
  return s;
}

SweepSpec SweepSpec::parse_file(const std::string& path,
                                const SimConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path, cfg);
}

JobSpec make_background_job(const SimConfig& cfg, double load, Ns interval,
                            std::int64_t msg_count,
                            const std::vector<GroupId>& groups, JobId job_id,
                            std::uint64_t seed) {
  if (load <= 0) throw ConfigError("background load must be positive");
  const TopologyParams p = cfg.topology_params();
  const int mult = load > 1.3 ? int(std::lround(load / 1.3)) : 1;
  if (mult > 1 && std::abs(mult * 1.3 - load) > 1e-9) {
    throw ConfigError("extended background loads must be multiples of 130%");
  }
  const int streams = p.links_per_group_pair() * mult;
  const int leaves = p.leaves_per_group;
  const int per_group = (streams + leaves - 1) / leaves * leaves;
  JobSpec bg;
  bg.job_id = job_id;
  bg.pattern = Pattern::background;
  bg.bg_groups = groups;
  bg.nprocs = per_group * int(groups.size());
  bg.msg_size = msg_size_for_tgll(
      load * p.links_per_group_pair() / per_group, interval, cfg.bw_global);
  bg.interval = interval;
  bg.msg_count = msg_count;
  bg.seed = seed;
  bg.check();
  return bg;
}

std::vector<SweepCell> enumerate_sweep_cells(const SweepSpec& sweep,
                                             const SimConfig& cfg) {
  std::vector<SweepCell> cells;
  const std::vector<int> loads =
      sweep.bg_loads_percent.empty() ? std::vector<int>{0}
                                     : sweep.bg_loads_percent;
  for (std::int64_t size : sweep.sizes) {
    for (Ns interval : sweep.intervals_by_size.at(size)) {
      for (int load : loads) {
        for (const std::string& pdesc : sweep.placements) {
          SweepCell cell;
          std::ostringstream label;
          label << to_string(sweep.pattern) << "_s" << size << "_i" << interval
                << "_bg" << load << "_" << placement_label(pdesc);
          cell.label = label.str();

          JobSpec target;
          target.job_id = 0;
          target.pattern = sweep.pattern;
          target.nprocs = sweep.nprocs;
          target.msg_size = size;
          target.interval = interval;
          target.msg_count = sweep.msg_count;
          target.seed = sweep.seed;
          target.stencil_dims = sweep.stencil_dims;
          target.tornado_offset = sweep.tornado_offset;
          target.broadcast_root = 0;
          target.check();
          const PlacementDirective dir = parse_placement_directive(pdesc);
          cell.root_from_placement =
              dir.kind == PlacementDirective::Kind::random_root_in ||
              dir.kind == PlacementDirective::Kind::random_root_out;
          cell.jobs.push_back(target);
          cell.placements.push_back(dir);

          if (load > 0) {
            if (sweep.bg_msg_count <= 0) {
              throw ConfigError("bg_msg_count must be set when bg_loads has "
                                "nonzero entries");
            }
            cell.jobs.push_back(make_background_job(
                cfg, double(load) / 100.0, sweep.bg_interval,
                sweep.bg_msg_count, sweep.bg_groups, 1,
                derive_seed(sweep.seed, 1)));
            cell.placements.push_back(PlacementDirective{});  // auto layout
          }
          cells.push_back(std::move(cell));
        }
      }
    }
  }
  return cells;
}

int run_sweep(const std::string& sweep_path, const ExperimentSpec& base) {
  SimConfig cfg;
  std::vector<SweepCell> cells;
  SweepSpec sweep;
  try {
    cfg = SimConfig::from_file(base.network_path);
    if (base.routing_override) cfg.routing.mode = *base.routing_override;
    if (base.threshold_override) {
      cfg.routing.threshold_t = *base.threshold_override;
    }
    cfg.routing.check();
    sweep = SweepSpec::parse_file(sweep_path, cfg);
    cells = enumerate_sweep_cells(sweep, cfg);
  } catch (const std::exception& e) {
    std::cerr << "dfpsim: " << e.what() << "\n";
    return 2;
  }
  if (cells.empty()) return 0;

  const Topology topo = build_topology(cfg.topology_params());
  int failures = 0;
  std::ostringstream summary;
  summary << "label," << MetricsCollector::summary_header() << "\n";
  for (auto& cell : cells) {
    try {
      ResolvedExperiment rx;
      rx.config = cfg;
      rx.jobs = cell.jobs;
      rx.until = sweep.until >= 0 ? sweep.until : base.until;
      rx.label = cell.label;
      rx.allocs.resize(rx.jobs.size());
      // Baseline cells carry no background job; root constraints still refer
      // to the grid's configured background groups.
      std::vector<GroupId> bg_groups = collect_bg_groups(rx.jobs);
      if (bg_groups.empty()) bg_groups = sweep.bg_groups;
      std::set<TerminalId> taken;
      // background layouts first, then the target draw excludes them
      for (std::size_t i = 0; i < rx.jobs.size(); ++i) {
        if (rx.jobs[i].pattern == Pattern::background) {
          rx.allocs[i] = background_alloc(rx.jobs[i], topo);
          taken.insert(rx.allocs[i].rank_to_terminal.begin(),
                       rx.allocs[i].rank_to_terminal.end());
        }
      }
      for (std::size_t i = 0; i < rx.jobs.size(); ++i) {
        if (rx.jobs[i].pattern == Pattern::background) continue;
        rx.allocs[i] =
            resolve_placement(cell.placements[i], rx.jobs[i], topo, taken,
                              bg_groups, base.default_seed);
        taken.insert(rx.allocs[i].rank_to_terminal.begin(),
                     rx.allocs[i].rank_to_terminal.end());
      }
      check_allocations(rx.allocs, topo);
      const std::string cell_dir =
          (fs::path(base.out_dir) / cell.label).string();
      const RunOutcome outcome = run_resolved(rx, cell_dir);
      if (outcome.exit_code != 0) {
        ++failures;
        std::cerr << "dfpsim: cell " << cell.label << " failed ("
                  << outcome.error << ")\n";
        continue;
      }
      // Summaries come from the cell's own summary.csv to keep this file a
      // pure concatenation.
      std::ifstream cs(fs::path(cell_dir) / "summary.csv");
      std::string line;
      std::getline(cs, line);  // header
      while (std::getline(cs, line)) {
        if (!line.empty()) summary << cell.label << ',' << line << "\n";
      }
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << "dfpsim: cell " << cell.label << " failed: " << e.what()
                << "\n";
    }
  }
  fs::create_directories(base.out_dir);
  std::ofstream out(fs::path(base.out_dir) / "sweep_summary.csv");
  out << summary.str();
  return failures == 0 ? 0 : 1;
}

}  // namespace dfp
