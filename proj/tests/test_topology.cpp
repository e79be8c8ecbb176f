#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "dfpsim/topology.hpp"
#include "test_util.hpp"

using namespace dfp;
using test::mini_params;
using test::full_system_params;

TEST_CASE("full-system config builds the 3456-node system") {
  const Topology topo = build_topology(full_system_params());
  CHECK(topo.params().terminal_count() == 3456);
  CHECK(topo.params().links_per_group_pair() == 48);
  for (GroupId a = 0; a < 9; ++a) {
    for (GroupId b = a + 1; b < 9; ++b) {
      CHECK(topo.count_links_between_groups(a, b) == 48);
    }
  }
  CHECK(validate(topo).empty());
}

TEST_CASE("minimal two-group topology") {
  TopologyParams p = full_system_params();
  p.num_groups = 2;
  p.spines_per_group = 1;
  p.leaves_per_group = 1;
  p.terminals_per_leaf = 1;
  p.global_links_per_spine = 1;
  const Topology topo = build_topology(p);
  CHECK(topo.params().terminal_count() == 2);
  CHECK(topo.global_links().size() == 1);
  CHECK(topo.local_links().size() == 2);
  CHECK(validate(topo).empty());
}

TEST_CASE("mini config wiring counts") {
  // Hand enumeration of the balanced rule for S=4, H=2, G=9: each group owns
  // 8 endpoint slots, one per target group, so every pair gets exactly one
  // link and every spine (owning 2 slots) exactly two endpoints.
  const Topology topo = build_topology(mini_params());
  CHECK(topo.params().terminal_count() == 144);
  for (GroupId a = 0; a < 9; ++a) {
    for (GroupId b = a + 1; b < 9; ++b) {
      CHECK(topo.count_links_between_groups(a, b) == 1);
    }
  }
  for (GroupId g = 0; g < 9; ++g) {
    for (int k = 0; k < 4; ++k) {
      CHECK(topo.global_ports(topo.spine_id(g, k)).size() == 2);
    }
  }
  CHECK(validate(topo).empty());
}

TEST_CASE("full-system config wiring follows the (k + l) mod S rule") {
  const Topology topo = build_topology(full_system_params());
  const int S = 24;
  for (GroupId i : {0, 3}) {
    for (GroupId j : {1, 8}) {
      if (j <= i) continue;
      // Expect exactly links {(k, (k+l) mod S) : k in 0..S, l in {0,1}}.
      std::multiset<std::pair<int, int>> want, got;
      for (int k = 0; k < S; ++k) {
        for (int l = 0; l < 2; ++l) {
          want.insert({k, global_link_peer(k, l, S)});
        }
      }
      for (const auto& gl : topo.global_links()) {
        if (topo.group_of_router(gl.spine_a) == i &&
            topo.group_of_router(gl.spine_b) == j) {
          got.insert({topo.spine_index(gl.spine_a),
                      topo.spine_index(gl.spine_b)});
        }
      }
      CHECK(want == got);
    }
  }
}

TEST_CASE("global_link_peer") {
  CHECK(global_link_peer(0, 0, 24) == 0);
  CHECK(global_link_peer(23, 1, 24) == 0);
  CHECK(global_link_peer(5, 1, 24) == 6);
  CHECK_THROWS_AS(global_link_peer(24, 0, 24), ArgumentError);
  CHECK_THROWS_AS(global_link_peer(-1, 0, 24), ArgumentError);
}

TEST_CASE("size formulas") {
  CHECK(max_system_size_dfp(48) == 332352);  // 576 * 577
  CHECK(max_system_size_dfp(2) == 2);
  CHECK(max_system_size_dfp(4) == 20);  // 4 * 5
  CHECK(max_system_size_1d(48) == 90300);  // 300 * 301
  CHECK_THROWS_AS(max_system_size_dfp(3), ArgumentError);
  CHECK_THROWS_AS(max_system_size_dfp(0), ArgumentError);
  CHECK_THROWS_AS(max_system_size_1d(6), ArgumentError);

  // Dragonfly+ holds up to ~4x the terminals of a 1D Dragonfly; the ratio
  // climbs toward 4 with radix.
  const double r48 = double(max_system_size_dfp(48)) / max_system_size_1d(48);
  CHECK(r48 == doctest::Approx(3.68).epsilon(0.01));
  double prev = 0.0;
  for (int r : {8, 16, 32, 48, 64, 128, 256}) {
    const double ratio =
        double(max_system_size_dfp(r)) / max_system_size_1d(r);
    CHECK(ratio < 4.0);
    CHECK(ratio > prev);
    prev = ratio;
  }
}

TEST_CASE("divisibility violation is a config error naming the counts") {
  TopologyParams p = full_system_params();
  p.num_groups = 3;
  p.spines_per_group = 3;
  p.global_links_per_spine = 1;  // 3 endpoints over 2 pairs
  try {
    build_topology(p);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("divisible") != std::string::npos);
    CHECK(msg.find('3') != std::string::npos);
    CHECK(msg.find('2') != std::string::npos);
  }
}

TEST_CASE("validate flags a removed global link") {
  const Topology good = build_topology(mini_params());
  auto links = good.global_links();
  links.pop_back();
  const Topology bad(good.params(), good.local_links(), links);
  const auto report = validate(bad);
  REQUIRE(!report.empty());
  const bool cites_pair = std::any_of(
      report.begin(), report.end(), [](const std::string& r) {
        return r.find("global links, want") != std::string::npos;
      });
  CHECK(cites_pair);
}

TEST_CASE("validate flags a spine-spine local link") {
  const Topology good = build_topology(mini_params());
  auto locals = good.local_links();
  locals.push_back({good.spine_id(0, 0), good.spine_id(0, 1)});
  const Topology bad(good.params(), locals, good.global_links());
  const auto report = validate(bad);
  REQUIRE(!report.empty());
  const bool cites_bipartite = std::any_of(
      report.begin(), report.end(), [](const std::string& r) {
        return r.find("non-bipartite") != std::string::npos;
      });
  CHECK(cites_bipartite);
}

TEST_CASE("build output is valid across a params family") {
  for (int groups : {2, 3, 5, 9}) {
    for (int spines : {1, 2, 4}) {
      for (int links : {1, 2, 4}) {
        if ((spines * links) % (groups - 1) != 0) continue;
        TopologyParams p = full_system_params();
        p.num_groups = groups;
        p.spines_per_group = spines;
        p.leaves_per_group = 3;
        p.terminals_per_leaf = 2;
        p.global_links_per_spine = links;
        const Topology topo = build_topology(p);
        CHECK(validate(topo).empty());
        // Balance: exhaustive pair count.
        for (GroupId a = 0; a < groups; ++a) {
          for (GroupId b = a + 1; b < groups; ++b) {
            CHECK(topo.count_links_between_groups(a, b) ==
                  p.links_per_group_pair());
          }
        }
      }
    }
  }
}

TEST_CASE("wiring symmetry: i->j pairings are the transpose of j->i") {
  const Topology topo = build_topology(mini_params());
  for (GroupId i = 0; i < 9; ++i) {
    for (GroupId j = 0; j < 9; ++j) {
      if (i == j) continue;
      std::multiset<std::pair<int, int>> forward, reverse_t;
      for (const auto& gl : topo.global_links()) {
        const GroupId ga = topo.group_of_router(gl.spine_a);
        const GroupId gb = topo.group_of_router(gl.spine_b);
        const int ka = topo.spine_index(gl.spine_a);
        const int kb = topo.spine_index(gl.spine_b);
        if (ga == i && gb == j) forward.insert({ka, kb});
        if (gb == i && ga == j) forward.insert({kb, ka});
        if (ga == j && gb == i) reverse_t.insert({kb, ka});
        if (gb == j && ga == i) reverse_t.insert({ka, kb});
      }
      CHECK(forward == reverse_t);
    }
  }
}

TEST_CASE("id scheme round-trips") {
  const Topology topo = build_topology(mini_params());
  const auto& p = topo.params();
  // Terminals are numbered group-major, then leaf-major, then port order.
  CHECK(topo.terminal_id(0, 0, 0) == 0);
  CHECK(topo.terminal_id(0, 1, 0) == 4);
  CHECK(topo.terminal_id(1, 0, 0) == 16);
  for (TerminalId t = 0; t < p.terminal_count(); ++t) {
    const GroupId g = topo.group_of_terminal(t);
    const RouterId leaf = topo.leaf_of_terminal(t);
    CHECK(topo.role(leaf) == RouterRole::leaf);
    CHECK(topo.group_of_router(leaf) == g);
    CHECK(topo.terminal_id(g, topo.leaf_index(leaf), topo.terminal_port(t)) ==
          t);
    CHECK(topo.terminal_by_local_id(g, topo.local_node_id(t)) == t);
  }
  for (GroupId g = 0; g < p.num_groups; ++g) {
    for (int k = 0; k < p.spines_per_group; ++k) {
      CHECK(topo.role(topo.spine_id(g, k)) == RouterRole::spine);
      CHECK(topo.spine_index(topo.spine_id(g, k)) == k);
    }
  }
}

TEST_CASE("global port tables are consistent") {
  const Topology topo = build_topology(full_system_params());
  const auto& p = topo.params();
  for (GroupId g = 0; g < p.num_groups; ++g) {
    for (int k = 0; k < p.spines_per_group; ++k) {
      const RouterId spine = topo.spine_id(g, k);
      const auto& ports = topo.global_ports(spine);
      REQUIRE(int(ports.size()) == p.global_links_per_spine);
      int listed = 0;
      for (GroupId t = 0; t < p.num_groups; ++t) {
        if (t == g) continue;
        const auto& to_t = topo.spine_ports_to_group(spine, t);
        // H/(G-1) = 2 links from every spine to every other group here.
        CHECK(to_t.size() == 2);
        listed += int(to_t.size());
        for (int port : to_t) {
          const auto& info = ports[port - p.leaves_per_group];
          CHECK(topo.group_of_router(info.peer) == t);
          // The far end's table points straight back.
          const auto& back =
              topo.global_ports(info.peer)[info.peer_port - p.leaves_per_group];
          CHECK(back.peer == spine);
          CHECK(back.link_index == info.link_index);
        }
      }
      CHECK(listed == p.global_links_per_spine);
    }
  }
}
