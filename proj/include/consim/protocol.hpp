#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "consim/core.hpp"
#include "consim/rng.hpp"

// The consensus protocols. One ProtocolMachine instance drives all n
// processes in lockstep (per-process state lives inside), which keeps a
// whole execution a value: the exhaustive searcher snapshots and restores
// machines by plain copy.
//
// Epoch structure, fixed by round arithmetic so crashed announcements can
// never desynchronize phase boundaries:
//   variant A: election | committee x B | propagation x 2
//   variant C: count | election | committee x B(e) | propagation x 2
// Variant C recomputes B(e) each epoch from the number of processes alive
// at the epoch start (the global stand-in for the processes' local n*
// estimates, keeping boundaries common to all).

namespace consim {

enum class Variant : std::uint8_t { A, C, CommitteeOnly };
enum class CommPrimitive : std::uint8_t { Broadcast, GossipCostModel };
enum class Phase : std::uint8_t { Count, Election, Committee, Propagation1, Propagation2 };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::A: return "A";
    case Variant::C: return "C";
    case Variant::CommitteeOnly: return "committee";
  }
  return "?";
}

// ---- committee consensus rule -------------------------------------------

// Per-member scratch a committee rule may use; kept POD so machines stay
// trivially copyable for the searcher.
struct CommitteeScratch {
  std::int8_t streak_val = 0;
  std::int8_t streak_len = 0;
  std::int32_t aux0 = 0;
  std::int32_t aux1 = 0;
};

struct CommitteeVoteIn {
  std::int8_t value = 0;
  bool decided = false;
};

struct CommitteeUpdate {
  std::int8_t value = 0;
  bool decide = false;
};

// One member's update for one committee round. `votes` includes the
// member's own vote. `coin_word` gives randomized rules a private coin;
// the default rule ignores it.
using CommitteeRuleFn = CommitteeUpdate (*)(CommitteeScratch&, std::int8_t cur_value,
                                            const CommitteeVoteIn* votes, int nvotes,
                                            std::uint64_t coin_word);

// CommitteeSafe: deterministic small-group consensus.
//   1. any received vote already decided on w -> adopt and decide w
//   2. unanimous view for the 2nd consecutive round -> decide
//   3. otherwise adopt the strict majority; ties break to 1
inline CommitteeUpdate committee_safe_rule(CommitteeScratch& s, std::int8_t /*cur*/,
                                           const CommitteeVoteIn* votes, int nvotes,
                                           std::uint64_t /*coin*/) {
  for (int i = 0; i < nvotes; ++i)
    if (votes[i].decided) return {votes[i].value, true};
  int ones = 0;
  for (int i = 0; i < nvotes; ++i) ones += votes[i].value;
  if (ones == 0 || ones == nvotes) {
    std::int8_t u = ones == nvotes ? std::int8_t{1} : std::int8_t{0};
    if (s.streak_len >= 1 && s.streak_val == u) return {u, true};
    s.streak_val = u;
    s.streak_len = 1;
    return {u, false};
  }
  s.streak_len = 0;
  return {static_cast<std::int8_t>(2 * ones >= nvotes ? 1 : 0), false};
}

// ---- parameters ----------------------------------------------------------

struct ProtocolParams {
  Variant variant = Variant::A;
  int k = 1;  // chain parameter, variant C
  CommPrimitive comm = CommPrimitive::Broadcast;
  bool literal_gather_coin = false;  // pseudocode-literal coin in Gather-Leaders
  CommitteeRuleFn rule = &committee_safe_rule;
  int committee_budget_override = 0;  // 0 = formula

  void validate(const SystemConfig& cfg) const {
    if (variant == Variant::C && (k < 1 || k > cfg.n))
      throw SimError("ProtocolParams: need 1 <= k <= n for variant C");
  }
};

// ceil(6n/(n-f)), the whp roster size bound.
inline int roster_bound(int n, int f) { return (6 * n + (n - f) - 1) / (n - f); }

// Committee budget, variant A: three rounds per potential stall of each whp
// roster member, plus the trailing decide slack.
inline int committee_budget_a(int n, int f) { return 3 * roster_bound(n, f) + 3; }

// Largest d >= 0 with n_star * 2^d <= n, i.e. floor(log2(n / n_star)).
inline int drop_index(int n, int n_star) {
  int d = 0;
  while ((static_cast<long long>(n_star) << (d + 1)) <= n) ++d;
  return (static_cast<long long>(n_star) << d) <= n ? d : 0;
}

struct GatherCoin {
  int drop_index = 0;  // d
  double target = 1;   // l = k / 2^d, floored at 1
  double coin = 0;     // l / (2 n*), capped at 1
};

// Reconciled Gather-Leaders coin: expected roster l/2 exactly.
inline GatherCoin gather_leader_coin(int n, int k, int n_star) {
  GatherCoin g;
  g.drop_index = drop_index(n, n_star);
  g.target = std::max(1.0, static_cast<double>(k) / std::ldexp(1.0, g.drop_index));
  g.coin = std::min(1.0, g.target / (2.0 * n_star));
  return g;
}

// Pseudocode-literal coin: i = floor(n/n*), coin = k / (2^(i-1) n*).
inline double literal_gather_coin_value(int n, int k, int n_star) {
  int i = n / n_star;
  return std::min(1.0, static_cast<double>(k) / (std::ldexp(1.0, i - 1) * n_star));
}

// Committee budget, variant C, from the epoch's scheduling target l.
inline int committee_budget_c(double target_l) {
  return 3 * static_cast<int>(std::ceil(0.75 * target_l)) + 3;
}

// ---- communication primitives -------------------------------------------

struct CommCharge {
  long long rounds = 0;
  long long messages = 0;
};

// Cost of one communication invocation. Broadcast: one simulator round,
// n-1 point-to-point messages per sender. GossipCostModel: identical
// delivery semantics but charged at the deterministic-gossip rates,
// ceil(log2 n)^3 rounds and m * ceil(log2 n)^4 messages, m being the bound
// on participating processes. A cost model only; nothing gossips.
inline CommCharge comm_send(CommPrimitive primitive, int n, int senders, int m_bound) {
  if (n <= 1) return {1, 0};
  if (primitive == CommPrimitive::Broadcast)
    return {1, static_cast<long long>(senders) * (n - 1)};
  if (primitive == CommPrimitive::GossipCostModel) {
    long long lg = static_cast<long long>(std::ceil(std::log2(static_cast<double>(n))));
    return {lg * lg * lg, static_cast<long long>(m_bound) * lg * lg * lg * lg};
  }
  throw SimError("comm_send: unknown primitive");
}

// ---- the machine ---------------------------------------------------------

struct CoinRecord {
  Pid pid = -1;
  std::uint64_t word = 0;
  bool heads = false;
};

struct Transition {
  Pid pid = -1;
  std::int8_t value = 0;
  std::int8_t decided = -1;  // -1: still undecided
};

// Effective delivery of one SendGroup after the adversary's cut.
struct GroupDelivery {
  bool full = true;
  std::vector<Pid> subset;  // sorted; meaningful when !full

  bool delivers_to(const SendGroup& g, Pid p) const {
    if (!g.addresses(p)) return false;
    if (full) return true;
    return std::binary_search(subset.begin(), subset.end(), p);
  }
  long long count(const SendGroup& g, int n) const {
    return full ? g.addressed_count(n) : static_cast<long long>(subset.size());
  }
};

class ProtocolMachine {
public:
  struct PerProc {
    std::int8_t input = 0;
    std::int8_t value = 0;
    std::int8_t decided = -1;  // -1 unset; else the decided bit
    bool leader = false;
    std::int32_t n_star = 0;
    CommitteeScratch committee;
    std::vector<Pid> roster;  // announced leaders heard this epoch (sorted)
  };

  ProtocolMachine() = default;

  ProtocolMachine(const SystemConfig& cfg, const ProtocolParams& params,
                  std::vector<std::int8_t> inputs)
      : n_(cfg.n), f_(cfg.f), seed_(cfg.seed), params_(params) {
    cfg.validate();
    params.validate(cfg);
    if (static_cast<Pid>(inputs.size()) != n_)
      throw SimError("ProtocolMachine: inputs size != n");
    procs_.resize(n_);
    for (Pid p = 0; p < n_; ++p) {
      if (inputs[p] != 0 && inputs[p] != 1) throw SimError("ProtocolMachine: inputs must be bits");
      procs_[p].input = inputs[p];
      procs_[p].value = inputs[p];
    }
    heard_mask_.assign(static_cast<std::size_t>(n_) * n_, 0);
    heard_val_.assign(static_cast<std::size_t>(n_) * n_, 0);
    if (params_.variant == Variant::CommitteeOnly) {
      for (auto& pp : procs_) pp.leader = true;
      std::vector<Pid> all(n_);
      for (Pid p = 0; p < n_; ++p) all[p] = p;
      for (auto& pp : procs_) pp.roster = all;
    }
  }

  int n() const { return n_; }
  const ProtocolParams& params() const { return params_; }
  const PerProc& proc(Pid p) const { return procs_[p]; }
  int epoch_index() const { return epoch_; }
  int epoch_start() const { return epoch_start_; }
  int committee_rounds() const { return committee_rounds_; }
  double epoch_target_l() const { return sched_target_l_; }

  Phase phase_of(int round) const {
    if (params_.variant == Variant::CommitteeOnly) return Phase::Committee;
    int off = round - epoch_start_;
    int cnt = params_.variant == Variant::C ? 1 : 0;
    if (off < cnt) return Phase::Count;
    if (off == cnt) return Phase::Election;
    if (off < cnt + 1 + committee_rounds_) return Phase::Committee;
    return off == cnt + 1 + committee_rounds_ ? Phase::Propagation1 : Phase::Propagation2;
  }

  int epoch_length() const {
    if (params_.variant == Variant::CommitteeOnly) return 1 << 30;
    return (params_.variant == Variant::C ? 1 : 0) + 1 + committee_rounds_ + 2;
  }

  // Phase A: coins and local computation; queues outgoing traffic.
  // `alive` is liveness entering the round.
  void phase_a(int round, const std::vector<bool>& alive, std::vector<SendGroup>& out,
               std::vector<CoinRecord>& coins) {
    if (params_.variant != Variant::CommitteeOnly) {
      if (!epoch_begun_) {
        begin_epoch(alive);
      } else if (round == epoch_start_ + epoch_length()) {
        epoch_start_ = round;
        ++epoch_;
        begin_epoch(alive);
      }
    }
    switch (phase_of(round)) {
      case Phase::Count:
        for (Pid p = 0; p < n_; ++p)
          if (alive[p]) out.push_back({p, {PayloadKind::CountPing}, true, {}});
        break;
      case Phase::Election:
        for (Pid p = 0; p < n_; ++p) {
          if (!alive[p]) continue;
          double prob = election_probability(p);
          std::uint64_t word = rng_stream(seed_, p, round);
          bool heads = u01(word) < prob;
          coins.push_back({p, word, heads});
          procs_[p].leader = heads;
          // every live process reports in the election round: leaders
          // announce themselves, the rest send a liveness ping
          out.push_back({p,
                         {heads ? PayloadKind::LeaderAnnounce : PayloadKind::CountPing},
                         true,
                         {}});
        }
        break;
      case Phase::Committee:
        for (Pid p = 0; p < n_; ++p) {
          if (!alive[p] || !procs_[p].leader) continue;
          const auto& pp = procs_[p];
          Payload vote{PayloadKind::CommitteeVote, current_vote(p), 0, pp.decided >= 0};
          if (params_.variant == Variant::CommitteeOnly) {
            out.push_back({p, vote, true, {}});
          } else {
            std::vector<Pid> to;
            to.reserve(pp.roster.size());
            for (Pid r : pp.roster)
              if (r != p) to.push_back(r);
            // a solo member sends nothing on the wire but the empty group
            // still marks its participation in the trace
            out.push_back({p, vote, false, std::move(to)});
          }
        }
        break;
      case Phase::Propagation1:
      case Phase::Propagation2: {
        std::uint8_t rep = phase_of(round) == Phase::Propagation1 ? 1 : 2;
        for (Pid p = 0; p < n_; ++p)
          if (alive[p] && procs_[p].leader && procs_[p].decided >= 0)
            out.push_back({p, {PayloadKind::ConsensusValue, procs_[p].decided, rep, true}, true, {}});
        break;
      }
    }
  }

  // Phase B receipt processing for everyone alive at round end. A process
  // always hears its own broadcast payload; that self-delivery is handled
  // here, never on the wire.
  void receive(int round, const std::vector<SendGroup>& groups,
               const std::vector<GroupDelivery>& status, const std::vector<bool>& alive,
               std::vector<Transition>* log) {
    switch (phase_of(round)) {
      case Phase::Count: {
        int full = 0;
        for (std::size_t i = 0; i < groups.size(); ++i)
          if (status[i].full) ++full;
        for (Pid p = 0; p < n_; ++p) {
          if (!alive[p]) continue;
          int cnt = full;  // own full group stands in for hearing itself
          for (std::size_t i = 0; i < groups.size(); ++i)
            if (!status[i].full && status[i].delivers_to(groups[i], p)) ++cnt;
          procs_[p].n_star = std::max(1, cnt);
        }
        break;
      }
      case Phase::Election: {
        std::vector<Pid> full_leaders;
        for (std::size_t i = 0; i < groups.size(); ++i)
          if (groups[i].payload.kind == PayloadKind::LeaderAnnounce && status[i].full)
            full_leaders.push_back(groups[i].sender);
        std::sort(full_leaders.begin(), full_leaders.end());
        for (Pid p = 0; p < n_; ++p) {
          if (!alive[p]) continue;
          auto& roster = procs_[p].roster;
          roster = full_leaders;
          for (std::size_t i = 0; i < groups.size(); ++i)
            if (groups[i].payload.kind == PayloadKind::LeaderAnnounce && !status[i].full &&
                status[i].delivers_to(groups[i], p))
              roster.insert(std::upper_bound(roster.begin(), roster.end(), groups[i].sender),
                            groups[i].sender);
        }
        break;
      }
      case Phase::Committee: {
        std::vector<CommitteeVoteIn> votes;
        for (Pid p = 0; p < n_; ++p) {
          if (!alive[p] || !procs_[p].leader) continue;
          auto& pp = procs_[p];
          votes.clear();
          votes.push_back({current_vote(p), pp.decided >= 0});  // own vote
          for (std::size_t i = 0; i < groups.size(); ++i)
            if (groups[i].payload.kind == PayloadKind::CommitteeVote && groups[i].sender != p &&
                status[i].delivers_to(groups[i], p))
              votes.push_back({groups[i].payload.value, groups[i].payload.decided});
          if (pp.decided >= 0) continue;  // decided is final; keep echoing it
          CommitteeUpdate up = params_.rule(pp.committee, pp.value, votes.data(),
                                            static_cast<int>(votes.size()),
                                            rng_stream(seed_, p, round, 0xC0));
          apply_update(p, up.value, up.decide, log);
        }
        break;
      }
      case Phase::Propagation1:
      case Phase::Propagation2: {
        for (std::size_t i = 0; i < groups.size(); ++i) {
          const auto& g = groups[i];
          if (g.payload.kind != PayloadKind::ConsensusValue) continue;
          if (std::find(prop_senders_.begin(), prop_senders_.end(), g.sender) == prop_senders_.end())
            prop_senders_.push_back(g.sender);
          std::uint8_t bit = static_cast<std::uint8_t>(1u << (g.payload.rep - 1));
          auto mark = [&](Pid p) {
            heard_mask_[idx(p, g.sender)] |= bit;
            heard_val_[idx(p, g.sender)] = g.payload.value;
          };
          if (status[i].full) {
            for (Pid p = 0; p < n_; ++p)
              if (alive[p] && g.addresses(p)) mark(p);
          } else {
            for (Pid p : status[i].subset)
              if (alive[p]) mark(p);
          }
        }
        if (phase_of(round) == Phase::Propagation2) end_epoch(round, alive, log);
        break;
      }
    }
  }

  bool all_decided(const std::vector<bool>& alive) const {
    for (Pid p = 0; p < n_; ++p)
      if (alive[p] && procs_[p].decided < 0) return false;
    return true;
  }

  // Serialized protocol state; memo key material for the searcher.
  void state_key(std::string& out) const {
    auto put32 = [&](std::int32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); };
    put32(epoch_);
    put32(epoch_start_);
    put32(committee_rounds_);
    for (const auto& pp : procs_) {
      out.push_back(static_cast<char>(pp.input));
      out.push_back(static_cast<char>(pp.value));
      out.push_back(static_cast<char>(pp.decided));
      out.push_back(pp.leader ? 1 : 0);
      put32(pp.n_star);
      out.push_back(static_cast<char>(pp.committee.streak_val));
      out.push_back(static_cast<char>(pp.committee.streak_len));
      put32(static_cast<std::int32_t>(pp.roster.size()));
      for (Pid r : pp.roster) put32(r);
    }
    for (Pid w : prop_senders_)
      for (Pid p = 0; p < n_; ++p) {
        out.push_back(static_cast<char>(heard_mask_[idx(p, w)]));
        out.push_back(static_cast<char>(heard_val_[idx(p, w)]));
      }
  }

private:
  std::size_t idx(Pid p, Pid w) const { return static_cast<std::size_t>(p) * n_ + w; }

  std::int8_t current_vote(Pid p) const {
    return procs_[p].decided >= 0 ? procs_[p].decided : procs_[p].value;
  }

  double election_probability(Pid p) const {
    if (params_.variant == Variant::A) return 1.0 / (n_ - f_);
    if (params_.literal_gather_coin)
      return literal_gather_coin_value(n_, params_.k, procs_[p].n_star);
    return gather_leader_coin(n_, params_.k, procs_[p].n_star).coin;
  }

  void begin_epoch(const std::vector<bool>& alive) {
    if (params_.variant == Variant::CommitteeOnly) return;
    epoch_begun_ = true;
    if (params_.committee_budget_override > 0) {
      committee_rounds_ = params_.committee_budget_override;
      sched_target_l_ = params_.k;
    } else if (params_.variant == Variant::A) {
      committee_rounds_ = committee_budget_a(n_, f_);
      sched_target_l_ = 0;
    } else {
      int alive_count = 0;
      for (Pid p = 0; p < n_; ++p)
        if (alive[p]) ++alive_count;
      int d = drop_index(n_, std::max(1, alive_count));
      sched_target_l_ = std::max(1.0, static_cast<double>(params_.k) / std::ldexp(1.0, d));
      committee_rounds_ = committee_budget_c(sched_target_l_);
    }
  }

  void apply_update(Pid p, std::int8_t value, bool decide, std::vector<Transition>* log) {
    auto& pp = procs_[p];
    bool changed = pp.value != value || (decide && pp.decided < 0);
    pp.value = value;
    if (decide && pp.decided < 0) pp.decided = value;
    if (changed && log) log->push_back({p, pp.value, pp.decided});
  }

  void end_epoch(int /*round*/, const std::vector<bool>& alive, std::vector<Transition>* log) {
    for (Pid p = 0; p < n_; ++p) {
      if (!alive[p] || procs_[p].decided >= 0) continue;
      Pid heard_once = -1;
      Pid heard_twice = -1;
      for (Pid w = 0; w < n_; ++w) {
        std::uint8_t m = heard_mask_[idx(p, w)];
        if (m == 3 && heard_twice < 0) heard_twice = w;
        if (m != 0 && heard_once < 0) heard_once = w;
      }
      if (heard_twice >= 0)
        apply_update(p, heard_val_[idx(p, heard_twice)], true, log);
      else if (heard_once >= 0)
        apply_update(p, heard_val_[idx(p, heard_once)], false, log);
    }
    // clear per-epoch scratch
    for (Pid p = 0; p < n_; ++p) {
      procs_[p].leader = false;
      procs_[p].roster.clear();
      procs_[p].n_star = 0;
      procs_[p].committee = CommitteeScratch{};
    }
    for (Pid w : prop_senders_)
      for (Pid p = 0; p < n_; ++p) {
        heard_mask_[idx(p, w)] = 0;
        heard_val_[idx(p, w)] = 0;
      }
    prop_senders_.clear();
  }

  Pid n_ = 0;
  Pid f_ = 0;
  std::uint64_t seed_ = 0;
  ProtocolParams params_;
  std::vector<PerProc> procs_;
  std::vector<std::uint8_t> heard_mask_;  // [recipient][sender]: bit0 rep1, bit1 rep2
  std::vector<std::int8_t> heard_val_;
  std::vector<Pid> prop_senders_;  // consensus-value senders this epoch
  int epoch_ = 0;
  int epoch_start_ = 0;
  int committee_rounds_ = 0;
  double sched_target_l_ = 0;
  bool epoch_begun_ = false;
};

}  // namespace consim
