#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <vector>

#include "consim/rng.hpp"

using namespace consim;

TEST_CASE("rng_stream is a pure function of (seed, pid, round)") {
  CHECK(rng_stream(42, 7, 13) == rng_stream(42, 7, 13));
  CHECK(rng_stream(42, 7, 13, 5) == rng_stream(42, 7, 13, 5));
  CHECK(rng_stream(42, 7, 13) != rng_stream(43, 7, 13));  // seed sensitivity
  CHECK(rng_stream(42, 7, 13) != rng_stream(42, 8, 13));
  CHECK(rng_stream(42, 7, 13) != rng_stream(42, 7, 14));
}

namespace {

// chi-square statistic over 256 buckets; df = 255, mean 255, sd ~ 22.6
double chi_square_256(std::uint64_t seed, Pid pid, int draws) {
  std::vector<int> buckets(256, 0);
  for (int r = 0; r < draws; ++r) ++buckets[rng_stream(seed, pid, r) & 0xff];
  double expect = draws / 256.0;
  double chi = 0;
  for (int b : buckets) chi += (b - expect) * (b - expect) / expect;
  return chi;
}

}  // namespace

TEST_CASE("per-pid streams pass a chi-square uniformity check on 1e5 draws") {
  for (Pid pid : {0, 1}) {
    double chi = chi_square_256(20240601, pid, 100000);
    INFO("pid " << pid << " chi-square " << chi);
    CHECK(chi > 160.0);
    CHECK(chi < 360.0);
  }
  // the two streams are distinct
  std::set<std::uint64_t> a, b;
  for (int r = 0; r < 64; ++r) {
    a.insert(rng_stream(20240601, 0, r));
    b.insert(rng_stream(20240601, 1, r));
  }
  std::set<std::uint64_t> inter;
  for (auto x : a)
    if (b.count(x)) inter.insert(x);
  CHECK(inter.empty());
}

TEST_CASE("coin_flip honors degenerate probabilities") {
  for (int r = 0; r < 200; ++r) {
    CHECK(coin_flip(99, 3, r, 1.0));
    CHECK_FALSE(coin_flip(99, 3, r, 0.0));
  }
}

TEST_CASE("derive_seed separates tagged streams") {
  CHECK(derive_seed(1, seedtag::kAdversary) != derive_seed(1, seedtag::kCrashProne));
  CHECK(derive_seed(1, seedtag::kTrial, 0) != derive_seed(1, seedtag::kTrial, 1));
}
