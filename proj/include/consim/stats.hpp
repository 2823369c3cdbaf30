#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "consim/core.hpp"
#include "consim/protocol.hpp"
#include "consim/rng.hpp"
#include "consim/trace.hpp"

// Per-run metric extraction and Monte Carlo aggregation. extract() recounts
// everything from the trace records alone (never from live kernel state),
// so metrics are reproducible from a stored trace. binomial_tail is the
// exact oracle behind the election-lemma checks.

namespace consim {

struct EpochStat {
  int leaders = 0;           // announced roster size L
  int committee_rounds = 0;  // committee rounds actually executed
  int deciders = 0;          // leaders decided by end of the committee phase, still alive then
};

struct RunMetrics {
  int rounds = 0;
  long long messages = 0;           // point-to-point messages transmitted (self excluded)
  long long rounds_charged = 0;     // equals rounds under broadcast; gossip cost model otherwise
  long long messages_charged = 0;   // ditto
  std::vector<long long> work;      // per-process non-idle steps
  int epochs = 0;                   // election iterations used
  std::vector<EpochStat> epoch_stats;
  std::int8_t decided_bit = -1;     // common decision, -1 if none recorded
  bool aborted = false;

  long long max_work() const {
    long long m = 0;
    for (long long w : work) m = std::max(m, w);
    return m;
  }
};

// Work increments, recounted from the trace:
//   election round: 1 per coin toss; count round: 1 per ping broadcast;
//   committee round: 1 per vote broadcast (a solo member's empty vote group
//   still marks participation); propagation: 1 per value broadcast;
//   decision adoption: 1 per process that heard at least one consensus
//   value this epoch, was alive at epoch end and undecided before the
//   propagation rounds. Idle listening costs nothing.
inline RunMetrics extract(const ExecutionTrace& trace) {
  const auto& cfg = trace.config;
  const auto& params = trace.params;
  const Pid n = cfg.n;
  RunMetrics m;
  m.rounds = static_cast<int>(trace.rounds.size());
  m.aborted = trace.outcome == RunOutcome::Aborted;
  m.work.assign(n, 0);

  const long long lg = n > 1 ? static_cast<long long>(std::ceil(std::log2(static_cast<double>(n)))) : 1;
  const bool gossip = params.comm == CommPrimitive::GossipCostModel;

  std::vector<bool> alive(n, true);
  std::vector<bool> decided(n, false);
  std::vector<bool> heard_pv(n, false);
  std::vector<bool> decided_before_prop(n, false);

  // epoch bookkeeping mirrors the machine's round arithmetic
  int epoch_start = 0;
  int committee_rounds = 0;
  double target_l = 0;
  bool committee_only = params.variant == Variant::CommitteeOnly;
  int count_rounds = params.variant == Variant::C ? 1 : 0;
  EpochStat cur;

  auto begin_epoch = [&]() {
    cur = EpochStat{};
    heard_pv.assign(n, false);
    if (params.variant == Variant::A) {
      committee_rounds = params.committee_budget_override > 0 ? params.committee_budget_override
                                                              : committee_budget_a(cfg.n, cfg.f);
      target_l = roster_bound(cfg.n, cfg.f);
    } else if (params.variant == Variant::C) {
      int alive_count = 0;
      for (Pid p = 0; p < n; ++p)
        if (alive[p]) ++alive_count;
      int d = drop_index(cfg.n, std::max(1, alive_count));
      target_l = std::max(1.0, static_cast<double>(params.k) / std::ldexp(1.0, d));
      committee_rounds = params.committee_budget_override > 0 ? params.committee_budget_override
                                                              : committee_budget_c(target_l);
    }
  };
  if (!committee_only) begin_epoch();

  std::vector<bool> is_leader(n, false);

  for (const auto& rec : trace.rounds) {
    Phase phase = Phase::Committee;
    int epoch_len = count_rounds + 1 + committee_rounds + 2;
    if (!committee_only) {
      if (rec.round == epoch_start + epoch_len) {
        epoch_start = rec.round;
        m.epoch_stats.push_back(cur);
        is_leader.assign(n, false);
        begin_epoch();
        epoch_len = count_rounds + 1 + committee_rounds + 2;
      }
      int off = rec.round - epoch_start;
      if (off < count_rounds)
        phase = Phase::Count;
      else if (off == count_rounds)
        phase = Phase::Election;
      else if (off < count_rounds + 1 + committee_rounds)
        phase = Phase::Committee;
      else
        phase = off == count_rounds + 1 + committee_rounds ? Phase::Propagation1
                                                           : Phase::Propagation2;
    }

    // messages and work
    for (std::size_t i = 0; i < rec.sent.size(); ++i)
      m.messages += rec.delivery[i].count(rec.sent[i], n);
    if (gossip) {
      if (!rec.sent.empty()) {
        int m_bound = phase == Phase::Committee ? static_cast<int>(std::ceil(std::max(1.0, target_l)))
                                                : n;
        auto charge = comm_send(CommPrimitive::GossipCostModel, n, 0, m_bound);
        m.rounds_charged += charge.rounds;
        m.messages_charged += charge.messages;
      } else {
        m.rounds_charged += 1;
      }
    }

    switch (phase) {
      case Phase::Count:
        for (const auto& g : rec.sent) m.work[g.sender] += 1;
        break;
      case Phase::Election:
        ++m.epochs;
        for (const auto& c : rec.coins) m.work[c.pid] += 1;
        for (const auto& g : rec.sent)
          if (g.payload.kind == PayloadKind::LeaderAnnounce) {
            ++cur.leaders;
            is_leader[g.sender] = true;
          }
        break;
      case Phase::Committee:
        if (!committee_only) ++cur.committee_rounds;
        for (const auto& g : rec.sent)
          if (g.payload.kind == PayloadKind::CommitteeVote) m.work[g.sender] += 1;
        break;
      case Phase::Propagation1:
      case Phase::Propagation2:
        for (std::size_t i = 0; i < rec.sent.size(); ++i) {
          const auto& g = rec.sent[i];
          if (g.payload.kind != PayloadKind::ConsensusValue) continue;
          m.work[g.sender] += 1;
          if (g.payload.rep == 1) ++cur.deciders;  // one group per sender per round
          if (rec.delivery[i].full) {
            for (Pid p = 0; p < n; ++p)
              if (p != g.sender && g.addresses(p)) heard_pv[p] = true;
          } else {
            for (Pid p : rec.delivery[i].subset) heard_pv[p] = true;
          }
        }
        break;
    }

    if (phase == Phase::Propagation1 && rec.round == epoch_start + epoch_len - 2)
      decided_before_prop = decided;

    for (const auto& c : rec.decision.crashes)
      if (c.pid >= 0 && c.pid < n) alive[c.pid] = false;
    for (const auto& t : rec.transitions)
      if (t.decided >= 0 && !decided[t.pid]) {
        decided[t.pid] = true;
        if (m.decided_bit < 0) m.decided_bit = t.decided;
      }

    if (phase == Phase::Propagation2 && rec.round == epoch_start + epoch_len - 1)
      for (Pid p = 0; p < n; ++p)
        if (alive[p] && heard_pv[p] && !decided_before_prop[p]) m.work[p] += 1;
  }
  if (!committee_only) m.epoch_stats.push_back(cur);
  if (committee_only) m.epochs = std::max(m.epochs, 1);

  if (!gossip) {
    m.rounds_charged = m.rounds;
    m.messages_charged = m.messages;
  }
  return m;
}

// Exact P[Bin(n, p) >= t] by stable log-space summation.
inline double binomial_tail(int n, double p, int t) {
  if (t <= 0) return 1.0;
  if (t > n) return 0.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  long double sum = 0.0L;
  long double lp = logl(static_cast<long double>(p));
  long double lq = logl(1.0L - static_cast<long double>(p));
  // smallest tail terms first
  for (int i = n; i >= t; --i) {
    long double lt = lgammal(n + 1.0L) - lgammal(i + 1.0L) - lgammal(n - i + 1.0L) + i * lp +
                     (n - i) * lq;
    sum += expl(lt);
  }
  return static_cast<double>(std::min(1.0L, sum));
}

struct Aggregate {
  double mean = 0;
  double stderr_ = 0;
  double min = 0;
  double max = 0;
  double p50 = 0;
  double p90 = 0;
  double p99 = 0;
  std::size_t count = 0;
  std::uint64_t seed_lo = 0;
  std::uint64_t seed_hi = 0;
};

inline Aggregate aggregate(std::vector<double> xs) {
  if (xs.empty()) throw SimError("aggregate: empty input");
  Aggregate a;
  a.count = xs.size();
  double sum = 0;
  for (double x : xs) sum += x;
  a.mean = sum / static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - a.mean) * (x - a.mean);
  a.stderr_ = xs.size() > 1 ? std::sqrt(ss / (static_cast<double>(xs.size() - 1))) /
                                  std::sqrt(static_cast<double>(xs.size()))
                            : 0.0;
  std::sort(xs.begin(), xs.end());
  a.min = xs.front();
  a.max = xs.back();
  auto q = [&](double quant) {
    std::size_t idx = static_cast<std::size_t>(quant * (static_cast<double>(xs.size()) - 1) + 0.5);
    return xs[std::min(idx, xs.size() - 1)];
  };
  a.p50 = q(0.50);
  a.p90 = q(0.90);
  a.p99 = q(0.99);
  return a;
}

// One election round in isolation: how many of the n processes toss heads
// at probability p. Shares the coin path with the protocol machine.
inline int sample_election_count(int n, double p, std::uint64_t seed, int round = 0) {
  int count = 0;
  for (Pid pid = 0; pid < n; ++pid)
    if (coin_flip(seed, pid, round, p)) ++count;
  return count;
}

struct Lemma2Result {
  double empirical = 0;
  double closed_form = 0;   // 1 - (1 - 1/(n-f))^(n-f)
  double floor = 0.6;
  bool pass = false;
};

// Fraction of election trials that produce at least one fault-resistant
// leader, against a fixed crash-prone set of size f.
inline Lemma2Result check_lemma2(int n, int f, int trials, std::uint64_t seed) {
  if (f >= n || f < 0) throw SimError("check_lemma2: need 0 <= f < n");
  Lemma2Result r;
  double p = 1.0 / (n - f);
  r.closed_form = 1.0 - std::pow(1.0 - p, n - f);
  // fault-resistant pids are the complement of a fixed sampled prone set;
  // by symmetry of iid coins, sampling the set once is enough
  std::vector<bool> prone(n, false);
  {
    SeqRng rng(derive_seed(seed, seedtag::kCrashProne));
    std::vector<Pid> pids(n);
    for (Pid i = 0; i < n; ++i) pids[i] = i;
    rng.shuffle(pids);
    for (int i = 0; i < f; ++i) prone[pids[i]] = true;
  }
  long long hits = 0;
  for (int t = 0; t < trials; ++t) {
    std::uint64_t s = derive_seed(seed, seedtag::kTrial, static_cast<std::uint64_t>(t));
    for (Pid pid = 0; pid < n; ++pid)
      if (!prone[pid] && coin_flip(s, pid, 0, p)) {
        ++hits;
        break;
      }
  }
  r.empirical = static_cast<double>(hits) / trials;
  r.pass = r.empirical >= r.floor && std::abs(r.empirical - r.closed_form) <= 0.01;
  return r;
}

}  // namespace consim
