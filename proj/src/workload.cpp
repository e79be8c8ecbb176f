#include "dfpsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "dfpsim/placement.hpp"

namespace dfp {

Pattern parse_pattern(const std::string& s) {
  if (s == "uniform-random") return Pattern::uniform_random;
  if (s == "stencil3d") return Pattern::stencil3d;
  if (s == "tornado") return Pattern::tornado;
  if (s == "broadcast") return Pattern::broadcast;
  if (s == "background") return Pattern::background;
  throw ConfigError("unknown pattern `" + s + "`");
}

const char* to_string(Pattern p) {
  switch (p) {
    case Pattern::uniform_random: return "uniform-random";
    case Pattern::stencil3d: return "stencil3d";
    case Pattern::tornado: return "tornado";
    case Pattern::broadcast: return "broadcast";
    case Pattern::background: return "background";
  }
  return "?";
}

void JobSpec::check() const {
  std::ostringstream err;
  if (nprocs < 2) err << "nprocs must be >= 2; ";
  if (msg_size < 1) err << "msg_size must be >= 1; ";
  if (interval < 0) err << "interval must be >= 0; ";
  if (msg_count < 1) err << "msg_count must be >= 1; ";
  switch (pattern) {
    case Pattern::stencil3d: {
      const std::int64_t prod = std::int64_t(stencil_dims[0]) *
                                stencil_dims[1] * stencil_dims[2];
      if (stencil_dims[0] < 1 || stencil_dims[1] < 1 || stencil_dims[2] < 1 ||
          prod != nprocs) {
        err << "stencil dims " << stencil_dims[0] << "x" << stencil_dims[1]
            << "x" << stencil_dims[2] << " must multiply to nprocs ("
            << nprocs << "); ";
      }
      break;
    }
    case Pattern::tornado:
      if (tornado_offset < 1 || tornado_offset >= nprocs) {
        err << "tornado offset must be in 1..nprocs-1; ";
      }
      break;
    case Pattern::broadcast:
      if (broadcast_root < 0 || broadcast_root >= nprocs) {
        err << "broadcast root must be in 0..nprocs-1; ";
      }
      break;
    case Pattern::background:
      if (bg_groups.size() < 2) {
        err << "background needs at least two groups; ";
      } else if (nprocs % std::int64_t(bg_groups.size()) != 0) {
        err << "background nprocs must divide evenly over its groups; ";
      }
      break;
    case Pattern::uniform_random:
      break;
  }
  const std::string msg = err.str();
  if (!msg.empty()) {
    throw ConfigError("job " + std::to_string(job_id) + ": " + msg);
  }
}

bool JobSpec::degenerate_stencil() const {
  return pattern == Pattern::stencil3d &&
         (stencil_dims[0] < 3 || stencil_dims[1] < 3 || stencil_dims[2] < 3);
}

JobSpec JobSpec::parse_line(const std::string& line, int lineno,
                            const std::string& origin) {
  const std::string where = origin + ":" + std::to_string(lineno);
  std::istringstream in(line);
  std::vector<std::string> tok;
  std::string t;
  while (in >> t) tok.push_back(t);
  if (tok.size() < 7) {
    throw ConfigError(where + ": workload line needs at least 7 fields "
                              "(job_id pattern nprocs msg_size interval "
                              "msg_count seed), got " +
                      std::to_string(tok.size()));
  }
  JobSpec spec;
  try {
    spec.job_id = std::stoi(tok[0]);
    spec.pattern = parse_pattern(tok[1]);
    spec.nprocs = std::stoi(tok[2]);
    spec.msg_size = std::stoll(tok[3]);
    spec.interval = std::stoll(tok[4]);
    spec.msg_count = std::stoll(tok[5]);
    spec.seed = std::stoull(tok[6]);
    switch (spec.pattern) {
      case Pattern::stencil3d:
        if (tok.size() != 10) {
          throw ConfigError("stencil3d needs dims `x y z`");
        }
        spec.stencil_dims = {std::stoi(tok[7]), std::stoi(tok[8]),
                             std::stoi(tok[9])};
        break;
      case Pattern::tornado:
        if (tok.size() != 8) throw ConfigError("tornado needs `offset`");
        spec.tornado_offset = std::stoll(tok[7]);
        break;
      case Pattern::broadcast:
        if (tok.size() != 8) throw ConfigError("broadcast needs `root`");
        spec.broadcast_root = std::stoi(tok[7]);
        break;
      case Pattern::background: {
        if (tok.size() != 8) {
          throw ConfigError("background needs a comma-separated group list");
        }
        std::istringstream groups(tok[7]);
        std::string g;
        while (std::getline(groups, g, ',')) {
          spec.bg_groups.push_back(std::stoi(g));
        }
        break;
      }
      case Pattern::uniform_random:
        if (tok.size() != 7) {
          throw ConfigError("uniform-random takes no pattern args");
        }
        break;
    }
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const std::exception&) {
    throw ConfigError(where + ": malformed workload line `" + line + "`");
  }
  try {
    spec.check();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return spec;
}

std::string JobSpec::render() const {
  std::ostringstream out;
  out << job_id << ' ' << to_string(pattern) << ' ' << nprocs << ' '
      << msg_size << ' ' << interval << ' ' << msg_count << ' ' << seed;
  switch (pattern) {
    case Pattern::stencil3d:
      out << ' ' << stencil_dims[0] << ' ' << stencil_dims[1] << ' '
          << stencil_dims[2];
      break;
    case Pattern::tornado:
      out << ' ' << tornado_offset;
      break;
    case Pattern::broadcast:
      out << ' ' << broadcast_root;
      break;
    case Pattern::background:
      out << ' ';
      for (std::size_t i = 0; i < bg_groups.size(); ++i) {
        if (i) out << ',';
        out << bg_groups[i];
      }
      break;
    case Pattern::uniform_random:
      break;
  }
  return out.str();
}

std::vector<JobSpec> parse_workload_text(const std::string& text,
                                         const std::string& origin) {
  std::vector<JobSpec> jobs;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    jobs.push_back(JobSpec::parse_line(line, lineno, origin));
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    for (std::size_t j = i + 1; j < jobs.size(); ++j) {
      if (jobs[i].job_id == jobs[j].job_id) {
        throw ConfigError(origin + ": duplicate job_id " +
                          std::to_string(jobs[i].job_id));
      }
    }
  }
  return jobs;
}

std::vector<JobSpec> parse_workload_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_workload_text(buf.str(), path);
}

double tgll(std::int64_t msg_size, Ns interval, double bw_global) {
  if (interval <= 0) {
    throw ArgumentError("tgll: interval must be positive");
  }
  if (bw_global <= 0) {
    throw ArgumentError("tgll: bandwidth must be positive");
  }
  return double(msg_size) * 1e9 / double(interval) / bw_global;
}

std::int64_t msg_size_for_tgll(double target, Ns interval, double bw_global) {
  if (target <= 0) throw ArgumentError("msg_size_for_tgll: target must be > 0");
  if (interval <= 0) {
    throw ArgumentError("msg_size_for_tgll: interval must be positive");
  }
  return std::int64_t(std::llround(target * double(interval) * bw_global /
                                   1e9));
}

int ur_dest(int rank, int nprocs, Rng& rng) {
  if (nprocs < 2) throw ArgumentError("ur_dest: nprocs must be >= 2");
  const int draw = int(rng.below(std::uint64_t(nprocs) - 1));
  return draw >= rank ? draw + 1 : draw;
}

std::array<int, 6> stencil_neighbors(int rank,
                                     const std::array<int, 3>& dims) {
  const auto [x, y, z] = dims;
  if (x < 1 || y < 1 || z < 1 || rank < 0 || rank >= x * y * z) {
    throw ConfigError("stencil_neighbors: rank/dims mismatch");
  }
  const int i = rank % x;
  const int j = (rank / x) % y;
  const int k = rank / (x * y);
  const auto at = [&](int a, int b, int c) {
    return ((a + x) % x) + ((b + y) % y) * x + ((c + z) % z) * x * y;
  };
  return {at(i + 1, j, k), at(i - 1, j, k), at(i, j + 1, k),
          at(i, j - 1, k), at(i, j, k + 1), at(i, j, k - 1)};
}

int tornado_dest(int rank, std::int64_t offset, int nprocs) {
  if (offset < 1 || offset >= nprocs) {
    throw ConfigError("tornado_dest: offset must be in 1..nprocs-1");
  }
  return int((rank + offset) % nprocs);
}

std::vector<int> broadcast_targets(int root, int nprocs) {
  if (root < 0 || root >= nprocs) {
    throw ArgumentError("broadcast_targets: root out of range");
  }
  std::vector<int> out;
  out.reserve(nprocs - 1);
  for (int r = 0; r < nprocs; ++r) {
    if (r != root) out.push_back(r);
  }
  return out;
}

std::vector<TerminalId> background_peers(int node_local_id, GroupId my_group,
                                         const std::vector<GroupId>& bg_groups,
                                         const Topology& topo) {
  if (std::find(bg_groups.begin(), bg_groups.end(), my_group) ==
      bg_groups.end()) {
    throw ConfigError("background_peers: group " + std::to_string(my_group) +
                      " is not a background group");
  }
  if (node_local_id < 0 ||
      node_local_id >= topo.params().terminals_per_group()) {
    throw ConfigError("background_peers: local node id " +
                      std::to_string(node_local_id) +
                      " absent in peer groups");
  }
  std::vector<TerminalId> peers;
  for (GroupId g : bg_groups) {
    if (g == my_group) continue;
    if (g < 0 || g >= topo.params().num_groups) {
      throw ConfigError("background_peers: group " + std::to_string(g) +
                        " not in topology");
    }
    peers.push_back(topo.terminal_by_local_id(g, node_local_id));
  }
  return peers;
}

TrafficEventPlan make_plan(const JobSpec& spec, const Topology& topo,
                           const Allocation& alloc) {
  spec.check();
  if (alloc.nprocs() != spec.nprocs) {
    throw ConfigError("job " + std::to_string(spec.job_id) +
                      ": allocation covers " +
                      std::to_string(alloc.nprocs()) + " ranks, spec wants " +
                      std::to_string(spec.nprocs));
  }
  TrafficEventPlan plan;
  plan.per_rank.resize(spec.nprocs);
  if (spec.pattern == Pattern::broadcast) {
    return plan;  // closed loop, engine-driven
  }

  // terminal -> rank, for the background twin lookup
  std::map<TerminalId, int> rank_of;
  if (spec.pattern == Pattern::background) {
    for (int r = 0; r < spec.nprocs; ++r) {
      rank_of[alloc.terminal(r)] = r;
    }
  }

  for (int rank = 0; rank < spec.nprocs; ++rank) {
    auto& entries = plan.per_rank[rank];
    switch (spec.pattern) {
      case Pattern::uniform_random: {
        Rng rng(derive_seed(spec.seed, std::uint64_t(rank)));
        for (std::int64_t i = 0; i < spec.msg_count; ++i) {
          entries.push_back({i * spec.interval,
                             ur_dest(rank, spec.nprocs, rng)});
        }
        break;
      }
      case Pattern::stencil3d: {
        const auto nbrs = stencil_neighbors(rank, spec.stencil_dims);
        for (std::int64_t i = 0; i < spec.msg_count; ++i) {
          for (int dst : nbrs) entries.push_back({i * spec.interval, dst});
        }
        break;
      }
      case Pattern::tornado: {
        const int dst = tornado_dest(rank, spec.tornado_offset, spec.nprocs);
        for (std::int64_t i = 0; i < spec.msg_count; ++i) {
          entries.push_back({i * spec.interval, dst});
        }
        break;
      }
      case Pattern::background: {
        const TerminalId t = alloc.terminal(rank);
        const auto peers = background_peers(topo.local_node_id(t),
                                            topo.group_of_terminal(t),
                                            spec.bg_groups, topo);
        std::vector<int> dsts;
        for (TerminalId peer : peers) {
          const auto it = rank_of.find(peer);
          if (it == rank_of.end()) {
            throw ConfigError("job " + std::to_string(spec.job_id) +
                              ": no twin rank on terminal " +
                              std::to_string(peer) + " (local node id " +
                              std::to_string(topo.local_node_id(t)) + ")");
          }
          dsts.push_back(it->second);
        }
        for (std::int64_t i = 0; i < spec.msg_count; ++i) {
          for (int dst : dsts) entries.push_back({i * spec.interval, dst});
        }
        break;
      }
      case Pattern::broadcast:
        break;
    }
  }
  return plan;
}

}  // namespace dfp
