// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line each. Exit status is the failure count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dfpsim/engine.hpp"
#include "dfpsim/experiment.hpp"
#include "dfpsim/metrics.hpp"
#include "dfpsim/placement.hpp"
#include "dfpsim/routing.hpp"
#include "dfpsim/topology.hpp"
#include "dfpsim/workload.hpp"

using namespace dfp;
namespace fs = std::filesystem;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw CheckFailure(what);
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

SimConfig mini_config() {
  SimConfig c;
  c.num_groups = 9;
  c.spines_per_group = 4;
  c.leaves_per_group = 4;
  c.terminals_per_leaf = 4;
  c.global_links_per_spine = 2;
  c.bw_global = 4.37 * kGiB;
  c.bw_local = 5.25 * kGiB;
  c.bw_terminal = 16.0 * kGiB;
  return c;
}

TopologyParams full_system_params() {
  SimConfig c = mini_config();
  c.spines_per_group = 24;
  c.leaves_per_group = 24;
  c.terminals_per_leaf = 16;
  c.global_links_per_spine = 16;
  return c.topology_params();
}

struct RunResult {
  SimReport report;
  MetricsCollector metrics;
};

RunResult run_jobs(const SimConfig& cfg,
                   const std::vector<std::pair<JobSpec, Allocation>>& jobs,
                   Ns until = -1) {
  const Topology topo = build_topology(cfg.topology_params());
  RunResult result{SimReport{},
                   MetricsCollector(cfg.engine.sample_interval_ns,
                                    cfg.num_groups)};
  Simulation sim(topo, cfg.engine, cfg.routing, &result.metrics);
  for (const auto& [spec, alloc] : jobs) sim.add_job(spec, alloc);
  result.report = sim.run(until);
  return result;
}

JobSpec ur_job(int nprocs, std::int64_t size, Ns interval,
               std::int64_t count, std::uint64_t seed) {
  JobSpec j;
  j.job_id = 0;
  j.pattern = Pattern::uniform_random;
  j.nprocs = nprocs;
  j.msg_size = size;
  j.interval = interval;
  j.msg_count = count;
  j.seed = seed;
  return j;
}

JobSpec background_job(const SimConfig& cfg, double load, Ns interval,
                       std::int64_t count) {
  return make_background_job(cfg, load, interval, count, {0, 1, 2}, 1, 99);
}

// The mini profile keeps the full-system intervals and rescales message sizes
// by the profile's 2:1 terminal-to-global-link oversubscription, so each
// table cell lands in the same intensity class it has on the full system.
constexpr std::int64_t kMini4K = 2048;
constexpr std::int64_t kMini512K = 262144;

double job_mean(const MetricsCollector& m, JobId job) {
  return m.summarize_job(job).mean;
}

int run_criteria() {
  int failures = 0;
  const auto criterion = [&](int n, const std::string& name,
                             const std::function<std::string()>& body) {
    try {
      const std::string detail = body();
      std::printf("[PASS] criterion %2d: %s (%s)\n", n, name.c_str(),
                  detail.c_str());
    } catch (const std::exception& e) {
      ++failures;
      std::printf("[FAIL] criterion %2d: %s: %s\n", n, name.c_str(), e.what());
    }
    std::fflush(stdout);
  };

  criterion(1, "full-system topology builds, counts, validates under 1 s", [] {
    const double t0 = now_seconds();
    const Topology topo = build_topology(full_system_params());
    expect(topo.params().terminal_count() == 3456, "terminal count != 3456");
    for (GroupId a = 0; a < 9; ++a) {
      for (GroupId b = a + 1; b < 9; ++b) {
        expect(topo.count_links_between_groups(a, b) == 48,
               "group pair without exactly 48 links");
      }
    }
    expect(validate(topo).empty(), "validation report not empty");
    const double dt = now_seconds() - t0;
    expect(dt < 1.0, "took " + std::to_string(dt) + " s");
    std::ostringstream d;
    d << "3456 terminals, 48 links on all 36 pairs, "
      << int(dt * 1000) << " ms";
    return d.str();
  });

  criterion(2, "size formulas exact, ratio rises toward 4", [] {
    expect(max_system_size_dfp(48) == 332352, "dfp(48) != 332352");
    expect(max_system_size_1d(48) == 90300, "1d(48) != 90300");
    double prev = 0;
    for (int r : {8, 16, 32, 48, 64, 128, 256}) {
      const double ratio =
          double(max_system_size_dfp(r)) / double(max_system_size_1d(r));
      expect(ratio < 4.0, "ratio >= 4 at r=" + std::to_string(r));
      expect(ratio > prev, "ratio not increasing at r=" + std::to_string(r));
      prev = ratio;
    }
    std::ostringstream d;
    d << "332352 / 90300, ratio(256) = " << prev;
    return d.str();
  });

  criterion(3, "regenerated message-size table matches within 1%", [] {
    const double bw = 4.37 * kGiB;
    const Ns intervals[3] = {1000, 10000, 100000};
    const double loads[3] = {0.5, 0.9, 1.3};
    const std::int64_t table[3][3] = {{2340, 4212, 6084},
                                      {23400, 42120, 60840},
                                      {234000, 421200, 608400}};
    double worst = 0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const std::int64_t got = msg_size_for_tgll(loads[j], intervals[i], bw);
        const double rel =
            std::abs(double(got - table[i][j])) / double(table[i][j]);
        worst = std::max(worst, rel);
        expect(rel < 0.01, "cell off by " + std::to_string(rel * 100) + "%");
      }
    }
    std::ostringstream d;
    d << "9/9 cells, worst deviation " << worst * 100 << "%";
    return d.str();
  });

  criterion(4, "choose_port matches the quoted-rule oracle on 10k sets", [] {
    RoutingConfig cfg;
    cfg.threshold_t = 0.5;
    Rng rng(161);
    int agree = 0;
    for (int iter = 0; iter < 10000; ++iter) {
      const int n = 1 + int(rng.below(8));
      std::vector<RouteCandidate> cands;
      for (int i = 0; i < n; ++i) {
        RouteCandidate c;
        c.shorter = rng.below(2) == 0;
        c.hops_remaining = c.shorter ? 2 : 4;
        c.score = rng.below(2) == 0 ? double(rng.below(1000)) / 999.0
                                    : double(rng.below(11)) / 10.0;
        c.out_port = int(rng.below(16));
        cands.push_back(c);
      }
      // Reference: longer wins iff <= T and every shorter is above T;
      // all above T -> smallest-score shorter; ties to the lowest port.
      const auto smaller = [](const RouteCandidate* a,
                              const RouteCandidate* b) {
        return b == nullptr || a->score < b->score ||
               (a->score == b->score && a->out_port < b->out_port);
      };
      const RouteCandidate* bs = nullptr;
      const RouteCandidate* bl = nullptr;
      for (const auto& c : cands) {
        auto& slot = c.shorter ? bs : bl;
        if (smaller(&c, slot)) slot = &c;
      }
      const RouteCandidate* want;
      if (bs != nullptr && bs->score <= cfg.threshold_t) {
        want = bs;
      } else if (bl != nullptr && bl->score <= cfg.threshold_t) {
        want = bl;
      } else {
        want = bs != nullptr ? bs : bl;
      }
      if (&choose_port(cands, cfg) == want) ++agree;
    }
    expect(agree == 10000,
           std::to_string(10000 - agree) + " disagreements");
    return std::string("10000/10000 agreement");
  });

  criterion(5, "path legality and quiescence under overload, 10^4 msgs", [] {
    const double t0 = now_seconds();
    const SimConfig cfg = mini_config();
    const std::int64_t size = msg_size_for_tgll(1.3, 1000, cfg.bw_global);
    const Topology topo = build_topology(cfg.topology_params());

    std::int64_t checked = 0;
    const auto verify_run = [&](const RunResult& rr, const char* what) {
      expect(rr.report.quiescent, std::string(what) + ": not quiescent");
      expect(rr.report.undelivered() == 0,
             std::string(what) + ": undelivered messages");
      for (const auto& rec : rr.metrics.records()) {
        const bool inter = topo.group_of_terminal(rec.src_terminal) !=
                           topo.group_of_terminal(rec.dst_terminal);
        switch (rec.path_class) {
          case PathClass::minimal:
            expect(rec.vl == Vl::vl0, "minimal record on VL1");
            expect(inter ? rec.hops == 4 : rec.hops <= 3,
                   "minimal record with wrong hop count");
            break;
          case PathClass::intermediate_spine:
            expect(rec.hops == 5, "intermediate-spine record != 5 routers");
            expect(rec.vl == Vl::vl1, "non-minimal delivery not on VL1");
            break;
          case PathClass::intermediate_leaf:
            expect(rec.hops == 7, "intermediate-leaf record != 7 routers");
            expect(rec.vl == Vl::vl1, "non-minimal delivery not on VL1");
            break;
        }
        ++checked;
      }
    };

    JobSpec ur = ur_job(96, size, 1000, 105, 42);  // 10080 messages
    Allocation ur_alloc = random_alloc(0, 96, build_topology(cfg.topology_params()), 777);
    verify_run(run_jobs(cfg, {{ur, ur_alloc}}), "UR");

    JobSpec tor;
    tor.job_id = 0;
    tor.pattern = Pattern::tornado;
    tor.nprocs = 96;
    tor.msg_size = size;
    tor.interval = 1000;
    tor.msg_count = 105;
    tor.tornado_offset = 16;
    tor.seed = 42;
    Allocation tor_alloc = contiguous_alloc(0, 96, topo, 3);
    verify_run(run_jobs(cfg, {{tor, tor_alloc}}), "tornado");

    const double dt = now_seconds() - t0;
    expect(dt < 60.0, "took " + std::to_string(dt) + " s");
    std::ostringstream d;
    d << checked << " hop traces legal, every chunk lane-monotone, "
      << int(dt * 1000) << " ms";
    return d.str();
  });

  criterion(6, "manifest replay reproduces byte-identical CSVs", [] {
    const fs::path dir = fs::temp_directory_path() / "dfpsim_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
      std::ofstream net(dir / "mini.net");
      net << mini_config().render();
      std::ofstream wl(dir / "wl.txt");
      wl << "0 uniform-random 96 6100 1000 30 42\n"
         << "1 background 3 6100 1000 200 7 0,1,2\n";
    }
    ExperimentSpec spec;
    spec.network_path = (dir / "mini.net").string();
    spec.workload_path = (dir / "wl.txt").string();
    spec.placements[0] = parse_placement_directive("random@901");
    spec.out_dir = (dir / "a").string();
    expect(run_experiment(spec) == 0, "run failed");
    expect(replay_manifest((dir / "a" / "manifest.txt").string(),
                           (dir / "b").string()) == 0,
           "replay failed");
    const auto slurp = [](const fs::path& p) {
      std::ifstream in(p);
      std::ostringstream buf;
      buf << in.rdbuf();
      return buf.str();
    };
    for (const char* f :
         {"records.csv", "summary.csv", "arrival_rates.csv", "manifest.txt"}) {
      expect(slurp(dir / "a" / f) == slurp(dir / "b" / f),
             std::string(f) + " differs after replay");
    }
    fs::remove_all(dir);
    return std::string("records, summary, arrival rates, manifest identical");
  });

  criterion(7, "intra-job interference grows with injection rate", [] {
    const SimConfig cfg = mini_config();
    const Topology topo = build_topology(cfg.topology_params());
    const Allocation alloc = contiguous_alloc(0, 96, topo, 3);
    double means[3];
    const Ns intervals[3] = {3000, 1000, 500};
    for (int i = 0; i < 3; ++i) {
      const RunResult rr =
          run_jobs(cfg, {{ur_job(96, kMini4K, intervals[i], 150, 42), alloc}});
      expect(rr.report.quiescent, "run not quiescent");
      means[i] = job_mean(rr.metrics, 0);
    }
    expect(means[1] >= 1.2 * means[0],
           "near-saturated / underutilized gap below 1.2x");
    expect(means[2] >= 1.2 * means[1],
           "overloaded / near-saturated gap below 1.2x");
    std::ostringstream d;
    d << "means " << means[0] / 1000 << " / " << means[1] / 1000 << " / "
      << means[2] / 1000 << " us";
    return d.str();
  });

  criterion(8, "isolation shrinks inter-job slowdown for underused UR", [] {
    const SimConfig cfg = mini_config();
    const Topology topo = build_topology(cfg.topology_params());
    const JobSpec target = ur_job(96, kMini512K, 450000, 24, 42);
    const JobSpec bg = background_job(cfg, 1.3, 1000, 12000);
    const Allocation bg_alloc = background_alloc(bg, topo);
    std::set<TerminalId> bg_terms(bg_alloc.rank_to_terminal.begin(),
                                  bg_alloc.rank_to_terminal.end());
    const Allocation contig = contiguous_alloc(0, 96, topo, 3);
    const Allocation random = random_alloc(0, 96, topo, 777, bg_terms);

    const double base_c =
        job_mean(run_jobs(cfg, {{target, contig}}).metrics, 0);
    const double base_r =
        job_mean(run_jobs(cfg, {{target, random}}).metrics, 0);
    const double bg_c = job_mean(
        run_jobs(cfg, {{target, contig}, {bg, bg_alloc}}).metrics, 0);
    const double bg_r = job_mean(
        run_jobs(cfg, {{target, random}, {bg, bg_alloc}}).metrics, 0);
    const double slow_c = bg_c / base_c;
    const double slow_r = bg_r / base_r;
    // Slowdown is the latency increase over baseline; contiguous must show
    // at most half the increase random does.
    expect(2.0 * (slow_c - 1.0) <= (slow_r - 1.0),
           "contiguous slowdown " + std::to_string(slow_c) +
               " not 2x smaller than random slowdown " +
               std::to_string(slow_r));
    std::ostringstream d;
    d << "slowdown contiguous " << slow_c << "x vs random " << slow_r << "x";
    return d.str();
  });

  criterion(9, "3D stencil prefers contiguous placement", [] {
    const SimConfig cfg = mini_config();
    const Topology topo = build_topology(cfg.topology_params());
    JobSpec st;
    st.job_id = 0;
    st.pattern = Pattern::stencil3d;
    st.nprocs = 96;
    st.msg_size = kMini4K;
    st.interval = 3000;
    st.msg_count = 150;
    st.stencil_dims = {4, 4, 6};
    st.seed = 42;
    const double contig = job_mean(
        run_jobs(cfg, {{st, contiguous_alloc(0, 96, topo, 3)}}).metrics, 0);
    const double random = job_mean(
        run_jobs(cfg, {{st, random_alloc(0, 96, topo, 777)}}).metrics, 0);
    expect(random >= 2.0 * contig,
           "random/contiguous = " + std::to_string(random / contig));
    std::ostringstream d;
    d << "random/contiguous = " << random / contig << "x";
    return d.str();
  });

  criterion(10, "tornado prefers random placement", [] {
    const SimConfig cfg = mini_config();
    const Topology topo = build_topology(cfg.topology_params());
    JobSpec tor;
    tor.job_id = 0;
    tor.pattern = Pattern::tornado;
    tor.nprocs = 96;
    tor.msg_size = kMini4K;
    tor.interval = 3000;
    tor.msg_count = 150;
    tor.tornado_offset = 16;
    tor.seed = 42;
    const double contig = job_mean(
        run_jobs(cfg, {{tor, contiguous_alloc(0, 96, topo, 3)}}).metrics, 0);
    const double random = job_mean(
        run_jobs(cfg, {{tor, random_alloc(0, 96, topo, 777)}}).metrics, 0);
    expect(contig >= 2.0 * random,
           "contiguous/random = " + std::to_string(contig / random));
    std::ostringstream d;
    d << "contiguous/random = " << contig / random << "x";
    return d.str();
  });

  criterion(11, "broadcast shrugs off contiguous background", [] {
    SimConfig cfg = mini_config();
    cfg.engine.sample_interval_ns = 100000;
    const Topology topo = build_topology(cfg.topology_params());
    JobSpec bc;
    bc.job_id = 0;
    bc.pattern = Pattern::broadcast;
    bc.nprocs = 96;
    bc.msg_size = 4096;
    bc.interval = 0;  // closed loop paces iterations
    bc.msg_count = 30;
    bc.broadcast_root = 0;
    bc.seed = 42;
    const Allocation alloc = contiguous_alloc(0, 96, topo, 3);
    const JobSpec bg = background_job(cfg, 1.3, 1000, 2000);
    const Allocation bg_alloc = background_alloc(bg, topo);

    const RunResult base = run_jobs(cfg, {{bc, alloc}});
    const RunResult loaded = run_jobs(cfg, {{bc, alloc}, {bg, bg_alloc}});
    expect(base.report.quiescent && loaded.report.quiescent,
           "broadcast run not quiescent");
    const double slowdown =
        job_mean(loaded.metrics, 0) / job_mean(base.metrics, 0);
    expect(slowdown <= 1.05,
           "slowdown " + std::to_string(slowdown) + " above 5%");

    const GroupId root_group = topo.group_of_terminal(alloc.terminal(0));
    double peak = 0;
    for (const RunResult* rr : {&base, &loaded}) {
      for (const auto& s : rr->metrics.arrival_rate_series(0, root_group)) {
        peak = std::max(peak, s.rate());
        expect(s.rate() <= cfg.bw_terminal,
               "root-group arrival rate " + std::to_string(s.rate()) +
                   " exceeds the terminal channel");
      }
    }
    std::ostringstream d;
    d << "slowdown " << slowdown << "x, peak root-group rate "
      << peak / kGiB << " GiB/s <= 16 GiB/s";
    return d.str();
  });

  criterion(12, "random placement puts ~1/3 of ranks in bg groups", [] {
    const Topology topo = build_topology(full_system_params());
    const Allocation alloc = random_alloc(0, 2304, topo, 20190529);
    int in_bg = 0;
    for (TerminalId t : alloc.rank_to_terminal) {
      if (topo.group_of_terminal(t) <= 2) ++in_bg;
    }
    const double frac = double(in_bg) / 2304.0;
    const double sigma = std::sqrt((1.0 / 3) * (2.0 / 3) / 2304.0);
    const double lo = 1.0 / 3 - 2.576 * sigma;
    const double hi = 1.0 / 3 + 2.576 * sigma;
    expect(frac > lo && frac < hi,
           "fraction " + std::to_string(frac) + " outside [" +
               std::to_string(lo) + ", " + std::to_string(hi) + "]");
    std::ostringstream d;
    d << "fraction " << frac << " in binomial 99% interval around 1/3";
    return d.str();
  });

  return failures;
}

}  // namespace

int main() {
  const int failures = run_criteria();
  if (failures == 0) {
    std::printf("acceptance: all criteria passed\n");
  } else {
    std::printf("acceptance: %d criteria FAILED\n", failures);
  }
  return failures;
}
