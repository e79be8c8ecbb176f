#include "dfpsim/placement.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dfpsim/workload.hpp"

namespace dfp {

Allocation contiguous_alloc(JobId job, int nprocs, const Topology& topo,
                            GroupId start_group) {
  const auto& p = topo.params();
  if (start_group < 0 || start_group >= p.num_groups) {
    throw AllocationError("contiguous_alloc: start group " +
                          std::to_string(start_group) + " out of range");
  }
  const TerminalId first = start_group * p.terminals_per_group();
  if (first + nprocs > p.terminal_count()) {
    throw AllocationError(
        "contiguous_alloc: " + std::to_string(nprocs) +
        " ranks from group " + std::to_string(start_group) + " exceed the " +
        std::to_string(p.terminal_count()) + " available terminals");
  }
  Allocation alloc;
  alloc.job_id = job;
  alloc.rank_to_terminal.resize(nprocs);
  for (int r = 0; r < nprocs; ++r) alloc.rank_to_terminal[r] = first + r;
  return alloc;
}

Allocation random_alloc(JobId job, int nprocs, const Topology& topo,
                        std::uint64_t seed,
                        const std::set<TerminalId>& excluded) {
  std::vector<TerminalId> eligible;
  eligible.reserve(topo.params().terminal_count());
  for (TerminalId t = 0; t < topo.params().terminal_count(); ++t) {
    if (!excluded.count(t)) eligible.push_back(t);
  }
  if (int(eligible.size()) < nprocs) {
    throw AllocationError("random_alloc: " + std::to_string(nprocs) +
                          " ranks but only " +
                          std::to_string(eligible.size()) +
                          " eligible terminals");
  }
  // Seeded Fisher-Yates; only the first nprocs entries are needed.
  Rng rng(seed);
  for (int i = 0; i < nprocs; ++i) {
    const std::size_t j = i + rng.below(eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
  }
  Allocation alloc;
  alloc.job_id = job;
  alloc.rank_to_terminal.assign(eligible.begin(), eligible.begin() + nprocs);
  return alloc;
}

Allocation background_alloc(const JobSpec& spec, const Topology& topo) {
  spec.check();
  if (spec.pattern != Pattern::background) {
    throw AllocationError("background_alloc: job " +
                          std::to_string(spec.job_id) +
                          " is not a background job");
  }
  const auto& p = topo.params();
  const int per_group = spec.nprocs / int(spec.bg_groups.size());
  Allocation alloc;
  alloc.job_id = spec.job_id;
  alloc.rank_to_terminal.reserve(spec.nprocs);
  for (GroupId g : spec.bg_groups) {
    if (g < 0 || g >= p.num_groups) {
      throw AllocationError("background_alloc: group " + std::to_string(g) +
                            " not in topology");
    }
    for (int i = 0; i < per_group; ++i) {
      const int leaf = i % p.leaves_per_group;
      const int slot = i / p.leaves_per_group;
      if (slot >= p.terminals_per_leaf) {
        throw AllocationError(
            "background_alloc: group " + std::to_string(g) + " cannot hold " +
            std::to_string(per_group) + " processes");
      }
      alloc.rank_to_terminal.push_back(topo.terminal_id(g, leaf, slot));
    }
  }
  return alloc;
}

int place_broadcast_root(const Allocation& alloc, const Topology& topo,
                         RootConstraint constraint,
                         const std::vector<GroupId>& bg_groups) {
  for (int rank = 0; rank < alloc.nprocs(); ++rank) {
    const GroupId g = topo.group_of_terminal(alloc.terminal(rank));
    const bool in_bg =
        std::find(bg_groups.begin(), bg_groups.end(), g) != bg_groups.end();
    if (constraint == RootConstraint::in_bg_groups ? in_bg : !in_bg) {
      return rank;
    }
  }
  throw AllocationError(
      "place_broadcast_root: no rank satisfies the constraint");
}

std::vector<Allocation> parse_allocation_text(const std::string& text,
                                              const std::string& origin) {
  std::vector<Allocation> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream row(line);
    Allocation alloc;
    if (!(row >> alloc.job_id)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": malformed allocation line");
    }
    TerminalId t;
    while (row >> t) alloc.rank_to_terminal.push_back(t);
    if (!row.eof()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": malformed allocation line");
    }
    if (alloc.rank_to_terminal.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": allocation line has no terminals");
    }
    out.push_back(std::move(alloc));
  }
  return out;
}

std::vector<Allocation> parse_allocation_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_allocation_text(buf.str(), path);
}

std::string render_allocation(const Allocation& alloc) {
  std::ostringstream out;
  out << alloc.job_id;
  for (TerminalId t : alloc.rank_to_terminal) out << ' ' << t;
  return out.str();
}

void check_allocations(const std::vector<Allocation>& allocs,
                       const Topology& topo) {
  std::set<TerminalId> used;
  for (const auto& alloc : allocs) {
    for (TerminalId t : alloc.rank_to_terminal) {
      if (t < 0 || t >= topo.params().terminal_count()) {
        throw AllocationError("job " + std::to_string(alloc.job_id) +
                              ": terminal " + std::to_string(t) +
                              " does not exist");
      }
      if (!used.insert(t).second) {
        throw AllocationError("terminal " + std::to_string(t) +
                              " assigned to more than one rank");
      }
    }
  }
}

}  // namespace dfp
