#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "consim/poset.hpp"
#include "consim/rng.hpp"

using namespace consim;

namespace {
// a=0 b=1 c=2 d=3: a<c, b<c, b<d
PartialOrder diamondish() { return PartialOrder::from_edges(4, {{0, 2}, {1, 2}, {1, 3}}); }
}  // namespace

TEST_CASE("thickness on canonical shapes") {
  // 5 disjoint chains of mixed lengths
  PartialOrder chains = PartialOrder::from_chains(
      9, {{0, 1, 2}, {3, 4}, {5}, {6, 7}, {8}});
  CHECK(thickness(chains) == 5);

  PartialOrder total = PartialOrder::from_chains(5, {{0, 1, 2, 3, 4}});
  CHECK(thickness(total) == 1);

  CHECK(thickness(diamondish()) == 2);  // brute force: max antichain {a,b}
  CHECK(max_antichain_bruteforce(diamondish()) == 2);
}

TEST_CASE("dilworth cover: disjoint, covering, totally ordered, minimal") {
  PartialOrder anti = PartialOrder::from_edges(4, {});
  CHECK(dilworth_cover(anti).size() == 4);  // antichain -> singletons

  auto cover = dilworth_cover(diamondish());
  CHECK(cover.size() == 2);
  std::set<Pid> seen;
  for (const auto& chain : cover) {
    for (std::size_t i = 0; i < chain.size(); ++i) {
      CHECK_FALSE(seen.count(chain[i]));
      seen.insert(chain[i]);
      if (i > 0) CHECK(diamondish().precedes(chain[i - 1], chain[i]));
    }
  }
  CHECK(seen.size() == 4);
}

TEST_CASE("cover size equals brute-force antichain on random small posets") {
  SeqRng rng(7177);
  for (int i = 0; i < 200; ++i) {
    int n = 2 + static_cast<int>(rng.next_below(6));  // up to 7 elements
    std::vector<std::pair<Pid, Pid>> edges;
    for (Pid u = 0; u < n; ++u)
      for (Pid v = u + 1; v < n; ++v)
        if (rng.next_u01() < 0.4) edges.emplace_back(u, v);
    PartialOrder p = PartialOrder::from_edges(n, edges);
    INFO("instance " << i << " n=" << n);
    CHECK(static_cast<int>(dilworth_cover(p).size()) == max_antichain_bruteforce(p));
  }
}

TEST_CASE("gen_k_chain_order produces k covering chains of thickness k") {
  PartialOrder singletons = gen_k_chain_order(6, 6, 11);
  CHECK(thickness(singletons) == 6);  // n == k: no comparabilities at all

  PartialOrder one = gen_k_chain_order(6, 1, 11);
  CHECK(thickness(one) == 1);

  PartialOrder p = gen_k_chain_order(24, 4, 123);
  const auto& chains = p.chain_decomposition();
  CHECK(chains.size() == 4);
  std::size_t total = 0;
  for (const auto& c : chains) {
    CHECK(!c.empty());
    total += c.size();
  }
  CHECK(total == 24);
  CHECK(thickness(p) == 4);
}

TEST_CASE("gen_thick_order stays acyclic with thickness at most k") {
  SeqRng rng(4242);
  for (int i = 0; i < 1000; ++i) {
    int n = 4 + static_cast<int>(rng.next_below(12));
    int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    // construction throws on cycles, so surviving construction is the check
    PartialOrder p = gen_thick_order(n, k, rng.next_u01() * 0.5, rng.next());
    CHECK(p.thickness() <= k);
    CHECK(p.thickness() >= 1);
  }
  CHECK(gen_thick_order(20, 5, 0.0, 99).thickness() == 5);  // no extra edges
}

TEST_CASE("dense cross edges can shrink thickness and must be reported") {
  // two chains of 3; every element of chain 1 precedes every element of chain 2
  std::vector<std::pair<Pid, Pid>> edges{{0, 1}, {1, 2}, {3, 4}, {4, 5}};
  for (Pid u : {0, 1, 2})
    for (Pid v : {3, 4, 5}) edges.emplace_back(u, v);
  PartialOrder p = PartialOrder::from_edges(6, edges);
  CHECK(thickness(p) == 1);  // collapses to a total order
}

TEST_CASE("chain_position reports 1-based position and length") {
  PartialOrder p = PartialOrder::from_chains(3, {{0, 1, 2}});
  auto cp = p.chain_position(1);
  CHECK(cp.position == 2);
  CHECK(cp.length == 3);

  PartialOrder single = PartialOrder::from_chains(1, {{0}});
  cp = single.chain_position(0);
  CHECK(cp.position == 1);
  CHECK(cp.length == 1);

  CHECK_THROWS_AS(p.chain_position(9), SimError);
}

TEST_CASE("uniform pid in a chain of length 9 has mean position 5 +- 0.05") {
  PartialOrder p = PartialOrder::from_chains(9, {{0, 1, 2, 3, 4, 5, 6, 7, 8}});
  SeqRng rng(555);
  double sum = 0;
  const int samples = 100000;
  for (int i = 0; i < samples; ++i) {
    Pid pid = static_cast<Pid>(rng.next_below(9));
    sum += p.chain_position(pid).position;
  }
  CHECK(std::abs(sum / samples - 5.0) < 0.05);
}

TEST_CASE("legal_crash_candidates returns the downward frontier") {
  PartialOrder chain = PartialOrder::from_chains(3, {{0, 1, 2}});
  CHECK(legal_crash_candidates(chain, {false, false, false}) == std::vector<Pid>{0});

  PartialOrder anti = PartialOrder::from_edges(3, {});
  CHECK(legal_crash_candidates(anti, {false, false, false}) == std::vector<Pid>({0, 1, 2}));

  // {a<c, b<c, b<d}, crashed = {b} -> {a, d}
  CHECK(legal_crash_candidates(diamondish(), {false, true, false, false}) ==
        std::vector<Pid>({0, 3}));

  // inconsistent crashed set: c down while a stands
  CHECK_THROWS_AS(legal_crash_candidates(diamondish(), {false, true, true, false}), SimError);
}

TEST_CASE("cycles are rejected") {
  CHECK_THROWS_AS(PartialOrder::from_edges(3, {{0, 1}, {1, 2}, {2, 0}}), SimError);
}

TEST_CASE("order serialization round-trips") {
  PartialOrder p = diamondish();
  PartialOrder q = PartialOrder::deserialize(p.serialize());
  CHECK(q.size() == p.size());
  CHECK(q.hasse_edges() == p.hasse_edges());
  CHECK(q.thickness() == p.thickness());
  CHECK_THROWS_AS(PartialOrder::deserialize("edge 0 1"), SimError);
}

TEST_CASE("downward_closure is the chain prefix on chain orders") {
  PartialOrder p = PartialOrder::from_chains(5, {{4, 2, 0}, {1, 3}});
  CHECK(p.downward_closure(0) == std::vector<Pid>({4, 2, 0}));
  CHECK(p.downward_closure(4) == std::vector<Pid>{4});
  CHECK(p.downward_closure(3) == std::vector<Pid>({1, 3}));
}
