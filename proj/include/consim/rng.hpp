#pragma once

#include <cstdint>

// Counter-based randomness: every draw is a pure function of
// (seed, pid, round, counter). Distinct (pid, round) pairs get statistically
// independent streams, which is what makes traces replayable and lets
// independent Monte Carlo trials share nothing.

namespace consim {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// One 64-bit word from the (seed, pid, round) stream.
inline std::uint64_t rng_stream(std::uint64_t seed, std::int32_t pid,
                                std::int64_t round, std::uint64_t counter = 0) {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc908ULL);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(pid)) * 0xff51afd7ed558ccdULL));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(round) * 0xc4ceb9fe1a85ec53ULL));
  if (counter != 0) h = splitmix64(h ^ (counter * 0x2545f4914f6cdd1dULL));
  return h;
}

// Uniform double in [0, 1) from a raw word (53 mantissa bits).
inline double u01(std::uint64_t word) {
  return static_cast<double>(word >> 11) * 0x1.0p-53;
}

// Bernoulli(p) coin for one process in one round; p >= 1 always succeeds.
inline bool coin_flip(std::uint64_t seed, std::int32_t pid, std::int64_t round, double p) {
  return u01(rng_stream(seed, pid, round)) < p;
}

// Small sequential generator for scenario plumbing (shuffles, subset picks).
// Derives from a tagged seed so protocol coins and adversary randomness
// never share a stream.
class SeqRng {
public:
  explicit SeqRng(std::uint64_t seed) : state_(splitmix64(seed ^ 0xa0761d6478bd642fULL)) {}

  std::uint64_t next() {
    state_ = splitmix64(state_);
    return state_;
  }
  double next_u01() { return u01(next()); }
  // uniform in [0, bound)
  std::uint64_t next_below(std::uint64_t bound) { return bound ? next() % bound : 0; }

  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::uint64_t state_;
};

// Stream tags keeping independent concerns on independent seeds.
namespace seedtag {
inline constexpr std::uint64_t kAdversary = 0x41445653ULL;   // adversary choices
inline constexpr std::uint64_t kCrashProne = 0x43505253ULL;  // weak adversary set
inline constexpr std::uint64_t kOrderGen = 0x4f524447ULL;    // poset generators
inline constexpr std::uint64_t kSchedule = 0x53434844ULL;    // non-adaptive schedules
inline constexpr std::uint64_t kTrial = 0x5452494cULL;       // per-trial seeds
}  // namespace seedtag

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(base ^ tag) ^ index);
}

// FNV-1a, used for scenario-name default seeds.
inline std::uint64_t fnv1a(const char* s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (; *s; ++s) h = (h ^ static_cast<unsigned char>(*s)) * 1099511628211ULL;
  return h;
}

}  // namespace consim
