#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dfpsim/experiment.hpp"

using namespace dfp;
namespace fs = std::filesystem;

namespace {

const char* kMiniNet =
    "num_groups = 9\n"
    "spines_per_group = 4\n"
    "leaves_per_group = 4\n"
    "terminals_per_leaf = 4\n"
    "global_links_per_spine = 2\n"
    "bw_global_GiBps = 4.37\n"
    "bw_local_GiBps = 5.25\n"
    "bw_terminal_GiBps = 16\n";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) {
    const fs::path p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
  std::string sub(const std::string& name) const {
    return (path / name).string();
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("single-job run writes the four outputs with one summary row") {
  TempDir dir("dfpsim_x1");
  ExperimentSpec spec;
  spec.network_path = dir.file("net", kMiniNet);
  spec.workload_path = dir.file("wl", "0 uniform-random 96 4096 3000 5 42\n");
  spec.placements[0] = parse_placement_directive("contiguous@3");
  spec.out_dir = dir.sub("out");
  CHECK(run_experiment(spec) == 0);
  for (const char* f :
       {"records.csv", "summary.csv", "arrival_rates.csv", "manifest.txt"}) {
    CHECK(fs::exists(fs::path(spec.out_dir) / f));
  }
  const std::string summary = slurp(fs::path(spec.out_dir) / "summary.csv");
  CHECK(count_lines(summary) == 2);  // header + one job
  const std::string records = slurp(fs::path(spec.out_dir) / "records.csv");
  CHECK(count_lines(records) == 1 + 96 * 5);
}

TEST_CASE("target plus background run keeps terminal sets disjoint") {
  TempDir dir("dfpsim_x2");
  ExperimentSpec spec;
  spec.network_path = dir.file("net", kMiniNet);
  spec.workload_path =
      dir.file("wl",
               "0 uniform-random 96 4096 3000 5 42\n"
               "1 background 3 6100 1000 50 7 0,1,2\n");
  spec.placements[0] = parse_placement_directive("random@777");
  spec.out_dir = dir.sub("out");
  CHECK(run_experiment(spec) == 0);
  const std::string summary = slurp(fs::path(spec.out_dir) / "summary.csv");
  CHECK(count_lines(summary) == 3);  // header + two jobs

  const ResolvedExperiment rx =
      parse_manifest_file((fs::path(spec.out_dir) / "manifest.txt").string());
  REQUIRE(rx.allocs.size() == 2);
  std::set<TerminalId> target(rx.allocs[0].rank_to_terminal.begin(),
                              rx.allocs[0].rank_to_terminal.end());
  for (TerminalId t : rx.allocs[1].rank_to_terminal) {
    CHECK(target.count(t) == 0);
  }
}

TEST_CASE("malformed workload lines fail with the line number") {
  TempDir dir("dfpsim_x3");
  ExperimentSpec spec;
  spec.network_path = dir.file("net", kMiniNet);
  spec.workload_path =
      dir.file("wl", "0 uniform-random 96 4096 3000 5 42\nbogus\n");
  spec.placements[0] = parse_placement_directive("contiguous@3");
  spec.out_dir = dir.sub("out");
  try {
    resolve_experiment(spec);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  CHECK(run_experiment(spec) == 2);
}

TEST_CASE("an allocation row and a placement directive are exclusive") {
  TempDir dir("dfpsim_x3b");
  ExperimentSpec spec;
  spec.network_path = dir.file("net", kMiniNet);
  spec.workload_path = dir.file("wl", "0 uniform-random 2 4096 3000 1 42\n");
  spec.alloc_path = dir.file("alloc", "0 0 1\n");
  spec.placements[0] = parse_placement_directive("contiguous@0");
  spec.out_dir = dir.sub("out");
  CHECK_THROWS_AS(resolve_experiment(spec), ConfigError);
  spec.placements.clear();
  CHECK(run_experiment(spec) == 0);
}

TEST_CASE("a too-small time limit exits 3") {
  TempDir dir("dfpsim_x4");
  ExperimentSpec spec;
  spec.network_path = dir.file("net", kMiniNet);
  spec.workload_path = dir.file("wl", "0 uniform-random 96 4096 3000 5 42\n");
  spec.placements[0] = parse_placement_directive("contiguous@3");
  spec.out_dir = dir.sub("out");
  spec.until = 5000;
  CHECK(run_experiment(spec) == 3);
}

TEST_CASE("replay from the manifest is byte-identical") {
  TempDir dir("dfpsim_x5");
  ExperimentSpec spec;
  spec.network_path = dir.file("net", kMiniNet);
  spec.workload_path =
      dir.file("wl",
               "0 tornado 96 6100 1000 10 42 16\n"
               "1 background 3 6100 1000 60 7 0,1,2\n");
  spec.placements[0] = parse_placement_directive("random@901");
  spec.out_dir = dir.sub("a");
  REQUIRE(run_experiment(spec) == 0);
  REQUIRE(replay_manifest((fs::path(spec.out_dir) / "manifest.txt").string(),
                          dir.sub("b")) == 0);
  for (const char* f : {"records.csv", "summary.csv", "arrival_rates.csv",
                        "manifest.txt"}) {
    CHECK(slurp(fs::path(dir.sub("a")) / f) ==
          slurp(fs::path(dir.sub("b")) / f));
  }
}

TEST_CASE("placement directives parse") {
  const PlacementDirective c = parse_placement_directive("contiguous@3");
  CHECK(c.kind == PlacementDirective::Kind::contiguous);
  CHECK(c.start_group == 3);
  const PlacementDirective r = parse_placement_directive("random@777");
  CHECK(r.kind == PlacementDirective::Kind::random);
  CHECK(r.seed == 777);
  const PlacementDirective ro = parse_placement_directive("random-root-out@5");
  CHECK(ro.kind == PlacementDirective::Kind::random_root_out);
  CHECK_THROWS_AS(parse_placement_directive("sideways@1"), ConfigError);
  const PlacementDirective bare = parse_placement_directive("random");
  CHECK(!bare.seed.has_value());
}

TEST_CASE("the full target grid enumerates 72 cells") {
  const SimConfig cfg = SimConfig::from_kv(
      KeyValueFile::parse_text(kMiniNet, "net"));
  const char* grid =
      "pattern = uniform-random\n"
      "nprocs = 96\n"
      "msg_count = 10\n"
      "seed = 42\n"
      "sizes = 4096,524288,4194304\n"
      "intervals_4096 = 3000,1000,500\n"
      "intervals_524288 = 450000,150000,100000\n"
      "intervals_4194304 = 4000000,1000000,700000\n"
      "bg_loads = 0,50,90,130\n"
      "bg_msg_count = 100\n"
      "placements = contiguous@3,random@777\n";
  const SweepSpec sweep = SweepSpec::parse_text(grid, "grid", cfg);
  const auto cells = enumerate_sweep_cells(sweep, cfg);
  CHECK(cells.size() == 72);  // 3 sizes x 3 intervals x 4 loads x 2 placements
  int with_bg = 0;
  std::set<std::string> labels;
  for (const auto& c : cells) {
    labels.insert(c.label);
    if (c.jobs.size() == 2) ++with_bg;
  }
  CHECK(labels.size() == 72);  // all distinct
  CHECK(with_bg == 54);        // loads 50/90/130 carry a background job
}

TEST_CASE("the broadcast grid enumerates placements x loads") {
  const SimConfig cfg =
      SimConfig::from_kv(KeyValueFile::parse_text(kMiniNet, "net"));
  const char* grid =
      "pattern = broadcast\n"
      "nprocs = 96\n"
      "msg_count = 5\n"
      "seed = 42\n"
      "sizes = 4096\n"
      "bg_loads = 0,130,260,390,520\n"
      "bg_msg_count = 100\n"
      "placements = contiguous@3,random-root-out@777,random-root-in@777\n";
  const SweepSpec sweep = SweepSpec::parse_text(grid, "grid", cfg);
  const auto cells = enumerate_sweep_cells(sweep, cfg);
  CHECK(cells.size() == 15);
  // Stacked background realizes the extended loads: 520% = 4 procs per twin
  // slot running the 130% schedule.
  for (const auto& c : cells) {
    if (c.label.find("bg520") == std::string::npos) continue;
    REQUIRE(c.jobs.size() == 2);
    CHECK(c.jobs[1].nprocs == 4 * 1 * 3);  // mult x links_per_pair x groups
  }
}

TEST_CASE("background jobs realize the named pair-link load") {
  const SimConfig mini =
      SimConfig::from_kv(KeyValueFile::parse_text(kMiniNet, "net"));
  SimConfig full = mini;
  full.spines_per_group = 24;
  full.leaves_per_group = 24;
  full.terminals_per_leaf = 16;
  full.global_links_per_spine = 16;

  // Full system, 130%: 48 procs per group (2 per leaf) at the table's
  // per-process size.
  const JobSpec p130 = make_background_job(full, 1.3, 1000, 10, {0, 1, 2},
                                           1, 9);
  CHECK(p130.nprocs == 48 * 3);
  CHECK(std::abs(double(p130.msg_size - 6084)) / 6084.0 < 0.01);
  // 520%: four 130% streams per link, 8 procs per leaf.
  const JobSpec p520 = make_background_job(full, 5.2, 1000, 10, {0, 1, 2},
                                           1, 9);
  CHECK(p520.nprocs == 192 * 3);
  CHECK(p520.msg_size == p130.msg_size);

  // Mini profile: one link per pair spread over 4 leaves.
  const JobSpec m130 = make_background_job(mini, 1.3, 1000, 10, {0, 1, 2},
                                           1, 9);
  CHECK(m130.nprocs == 4 * 3);
  // Aggregate pair-link TGLL still 130%: 4 procs x per-proc load.
  const double per_proc = tgll(m130.msg_size, 1000, mini.bw_global);
  CHECK(4 * per_proc == doctest::Approx(1.3).epsilon(0.01));
}

TEST_CASE("an empty grid runs nothing and exits 0") {
  TempDir dir("dfpsim_x6");
  ExperimentSpec spec;
  spec.network_path = dir.file("net", kMiniNet);
  spec.out_dir = dir.sub("out");
  const std::string sweep = dir.file("sweep",
                                     "pattern = uniform-random\n"
                                     "nprocs = 96\n"
                                     "msg_count = 1\n"
                                     "sizes = 4096\n"
                                     "intervals_4096 = 1000\n"
                                     "placements =\n");
  CHECK(run_sweep(sweep, spec) == 0);
  CHECK(!fs::exists(fs::path(spec.out_dir) / "sweep_summary.csv"));
}

TEST_CASE("a small sweep executes cells into labeled directories") {
  TempDir dir("dfpsim_x7");
  ExperimentSpec spec;
  spec.network_path = dir.file("net", kMiniNet);
  spec.out_dir = dir.sub("out");
  const std::string sweep = dir.file(
      "sweep",
      "pattern = tornado\n"
      "nprocs = 96\n"
      "msg_count = 3\n"
      "seed = 42\n"
      "sizes = 4096\n"
      "intervals_4096 = 3000\n"
      "tornado_offset = 16\n"
      "placements = contiguous@3,random@777\n");
  CHECK(run_sweep(sweep, spec) == 0);
  CHECK(fs::exists(fs::path(spec.out_dir) /
                   "tornado_s4096_i3000_bg0_contiguous3" / "summary.csv"));
  CHECK(fs::exists(fs::path(spec.out_dir) /
                   "tornado_s4096_i3000_bg0_random777" / "summary.csv"));
  const std::string summary =
      slurp(fs::path(spec.out_dir) / "sweep_summary.csv");
  CHECK(count_lines(summary) == 3);  // header + 2 cells x 1 job
  CHECK(summary.find("tornado_s4096_i3000_bg0_contiguous3,0,") !=
        std::string::npos);
}

TEST_CASE("DFPSIM_SEED fills bare random placements") {
  TempDir dir("dfpsim_x8");
  ExperimentSpec spec;
  spec.network_path = dir.file("net", kMiniNet);
  spec.workload_path = dir.file("wl", "0 uniform-random 8 4096 3000 2 42\n");
  spec.placements[0] = parse_placement_directive("random");
  spec.out_dir = dir.sub("out");
  CHECK_THROWS_AS(resolve_experiment(spec), ConfigError);
  spec.default_seed = 12345;
  const ResolvedExperiment a = resolve_experiment(spec);
  const ResolvedExperiment b = resolve_experiment(spec);
  CHECK(a.allocs[0].rank_to_terminal == b.allocs[0].rank_to_terminal);
}
