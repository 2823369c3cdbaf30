#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "consim/adversary.hpp"
#include "consim/kernel.hpp"
#include "consim/trace.hpp"

// Offline safety checking. check_trace consumes a trace (in memory or
// parsed back from its serialized form) plus the configs recorded in its
// header and re-derives every property from the records alone: agreement,
// validity, crash budget, per-kind legality and omission-only-at-crash.
// exhaustive_search model-checks small instances against every adaptive
// crash schedule, omission subsets included.

namespace consim {

enum class ViolationKind : std::uint8_t {
  Agreement,
  Validity,
  Budget,
  OrderLegality,
  KindLegality,
  Determinism,
  Abort,
};

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::Agreement: return "agreement";
    case ViolationKind::Validity: return "validity";
    case ViolationKind::Budget: return "budget";
    case ViolationKind::OrderLegality: return "orderLegality";
    case ViolationKind::KindLegality: return "kindLegality";
    case ViolationKind::Determinism: return "determinism";
    case ViolationKind::Abort: return "abort";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  int round = -1;
  std::vector<Pid> pids;
  std::string description;

  std::string to_string() const {
    std::ostringstream os;
    os << consim::to_string(kind) << " @round " << round << " pids[";
    for (std::size_t i = 0; i < pids.size(); ++i) os << (i ? "," : "") << pids[i];
    os << "]: " << description;
    return os.str();
  }
};

// Aborts are termination misses, not safety breaks; callers that only care
// about safety filter with this.
inline bool is_safety_violation(ViolationKind k) { return k != ViolationKind::Abort; }

inline std::vector<Violation> check_trace(const ExecutionTrace& trace,
                                          const SystemConfig& cfg,
                                          const AdversaryConfig& adv) {
  std::vector<Violation> out;
  const Pid n = cfg.n;
  std::vector<bool> alive(n, true);
  std::vector<int> crash_at(n, -1);
  int crashes = 0;

  // first decided value per pid, plus the decision round
  std::vector<std::int8_t> decided(n, -1);
  std::vector<int> decided_round(n, -1);

  std::vector<Pid> prone_sorted = adv.crash_prone;
  std::sort(prone_sorted.begin(), prone_sorted.end());

  for (const auto& rec : trace.rounds) {
    // -- crash legality
    std::vector<bool> pre_alive = alive;
    std::vector<bool> in_batch(n, false);
    for (const auto& c : rec.decision.crashes) {
      if (c.pid < 0 || c.pid >= n) {
        out.push_back({ViolationKind::Budget, rec.round, {c.pid}, "crash of unknown pid"});
        continue;
      }
      if (!alive[c.pid] || in_batch[c.pid])
        out.push_back({ViolationKind::Budget, rec.round, {c.pid},
                       "pid crashed twice (crash events must be unique)"});
      in_batch[c.pid] = true;
      ++crashes;
      if (crashes > cfg.f)
        out.push_back({ViolationKind::Budget, rec.round, {c.pid},
                       "cumulative crashes exceed budget f=" + std::to_string(cfg.f)});
      if (adv.kind == AdversaryKind::Weak &&
          !std::binary_search(prone_sorted.begin(), prone_sorted.end(), c.pid))
        out.push_back({ViolationKind::KindLegality, rec.round, {c.pid},
                       "weak adversary crashed a fault-resistant pid"});
    }
    if (adv.kind == AdversaryKind::KChain || adv.kind == AdversaryKind::KOrdered) {
      // listed order is the same-round linearization witness
      std::vector<bool> down(n, false);
      for (Pid p = 0; p < n; ++p) down[p] = !pre_alive[p];
      for (const auto& c : rec.decision.crashes) {
        if (c.pid < 0 || c.pid >= n) continue;
        for (Pid u : adv.order.predecessors(c.pid))
          if (!down[u])
            out.push_back({ViolationKind::OrderLegality, rec.round, {c.pid, u},
                           "crash precedes its predecessor in the declared order"});
        down[c.pid] = true;
      }
    }
    if (adv.kind == AdversaryKind::NonAdaptive) {
      std::vector<std::pair<Pid, std::vector<Pid>>> want, got;
      for (const auto& e : adv.schedule)
        if (e.round == rec.round) want.emplace_back(e.pid, e.deliver_to);
      for (const auto& c : rec.decision.crashes) got.emplace_back(c.pid, c.deliver_to);
      std::sort(want.begin(), want.end());
      std::sort(got.begin(), got.end());
      if (want != got)
        out.push_back({ViolationKind::KindLegality, rec.round, {},
                       "nonadaptive decisions deviate from the committed schedule"});
    }
    for (const auto& c : rec.decision.crashes)
      if (c.pid >= 0 && c.pid < n) {
        alive[c.pid] = false;
        if (crash_at[c.pid] < 0) crash_at[c.pid] = rec.round;
      }

    // -- omission only at crash
    if (rec.delivery.size() != rec.sent.size()) {
      out.push_back({ViolationKind::Determinism, rec.round, {},
                     "malformed round: delivery/sent length mismatch"});
      continue;
    }
    for (std::size_t i = 0; i < rec.sent.size(); ++i) {
      const auto& g = rec.sent[i];
      bool crashed_now = crash_at[g.sender] == rec.round;
      if (!crashed_now && !rec.delivery[i].full)
        out.push_back({ViolationKind::Determinism, rec.round, {g.sender},
                       "message from a live sender was not fully delivered"});
      if (crashed_now && !rec.delivery[i].full)
        for (Pid r : rec.delivery[i].subset)
          if (!g.addresses(r))
            out.push_back({ViolationKind::Determinism, rec.round, {g.sender, r},
                           "delivered subset not contained in the queued messages"});
      if (!pre_alive[g.sender])
        out.push_back({ViolationKind::Determinism, rec.round, {g.sender},
                       "dead sender emitted a message"});
    }

    // -- decisions
    for (const auto& t : rec.transitions) {
      if (t.decided < 0) continue;
      if (decided[t.pid] >= 0 && decided[t.pid] != t.decided)
        out.push_back({ViolationKind::Agreement, rec.round, {t.pid},
                       "decided value changed after deciding"});
      if (decided[t.pid] < 0) {
        decided[t.pid] = t.decided;
        decided_round[t.pid] = rec.round;
      }
    }
  }

  // -- agreement across all recorded decisions
  Pid first = -1;
  for (Pid p = 0; p < n; ++p) {
    if (decided[p] < 0) continue;
    if (first < 0) {
      first = p;
    } else if (decided[p] != decided[first]) {
      out.push_back({ViolationKind::Agreement, decided_round[p], {first, p},
                     "processes decided different values (" + std::to_string(decided[first]) +
                         " vs " + std::to_string(decided[p]) + ")"});
    }
  }
  // -- validity
  for (Pid p = 0; p < n; ++p) {
    if (decided[p] < 0) continue;
    bool found = false;
    for (std::int8_t in : trace.inputs)
      if (in == decided[p]) found = true;
    if (!found)
      out.push_back({ViolationKind::Validity, decided_round[p], {p},
                     "decided value " + std::to_string(decided[p]) + " is nobody's input"});
  }
  if (trace.outcome == RunOutcome::Aborted)
    out.push_back({ViolationKind::Abort, static_cast<int>(trace.rounds.size()), {},
                   "horizon reached before all live processes decided"});
  return out;
}

inline std::vector<Violation> check_trace(const ExecutionTrace& trace) {
  return check_trace(trace, trace.config, AdversaryConfig::from_meta(trace.adversary_meta));
}

// Runs the scenario twice and compares the serialized traces byte for byte.
inline bool replay_determinism(const SystemConfig& cfg, const ProtocolParams& params,
                               const std::vector<std::int8_t>& inputs,
                               const AdversaryConfig& adv_cfg) {
  ExecutionTrace a, b;
  run_execution(cfg, params, inputs, adv_cfg, a);
  run_execution(cfg, params, inputs, adv_cfg, b);
  return a.serialize() == b.serialize();
}

// ---- exhaustive adversary search ------------------------------------------

struct SearchReport {
  long long states = 0;           // distinct memoized states
  long long branches = 0;         // decision branches explored
  std::vector<Violation> violations;
  int max_rounds_to_decision = 0; // over schedules that reach a decision
  bool truncated = false;         // some schedule ran into the horizon
  bool guard_hit = false;         // state-explosion guard fired: search truncated
  std::string witness;            // decision path of the first violation
};

namespace detail {

struct SearchNode {
  int max_decided = -1;
  bool truncated = false;
};

class Searcher {
public:
  Searcher(const SystemConfig& cfg, const ProtocolParams& params,
           std::vector<std::int8_t> inputs, int horizon, long long state_guard)
      : cfg_(cfg), horizon_(horizon), guard_(state_guard),
        machine_(cfg, params, std::move(inputs)) {
    if (cfg.n > 4) throw SimError("exhaustive_search: n must be <= 4");
  }

  SearchReport run() {
    std::vector<bool> alive(cfg_.n, true);
    SearchNode root = explore(machine_, alive, 0, 0);
    report_.max_rounds_to_decision = std::max(root.max_decided, 0);
    report_.truncated = root.truncated || report_.guard_hit;
    report_.states = static_cast<long long>(memo_.size());
    return report_;
  }

private:
  SearchNode explore(const ProtocolMachine& machine, const std::vector<bool>& alive,
                     int crashes_used, int round) {
    check_safety(machine, round);
    if (machine.all_decided(alive)) return {round, false};
    if (round >= horizon_ || report_.guard_hit || !report_.violations.empty())
      return {-1, true};

    std::string key;
    key.reserve(64);
    key.push_back(static_cast<char>(round));
    key.push_back(static_cast<char>(round >> 8));
    key.push_back(static_cast<char>(crashes_used));
    for (Pid p = 0; p < cfg_.n; ++p) key.push_back(alive[p] ? 1 : 0);
    machine.state_key(key);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (static_cast<long long>(memo_.size()) >= guard_) {
      report_.guard_hit = true;
      return {-1, true};
    }

    ProtocolMachine staged = machine;
    std::vector<SendGroup> groups;
    std::vector<CoinRecord> coins;
    staged.phase_a(round, alive, groups, coins);

    SearchNode agg{-1, false};
    int budget = cfg_.f - crashes_used;
    std::vector<Pid> living;
    for (Pid p = 0; p < cfg_.n; ++p)
      if (alive[p]) living.push_back(p);

    // every crash subset within budget x every delivered subset per crasher
    const int m = static_cast<int>(living.size());
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      if (static_cast<int>(std::popcount(mask)) > budget) continue;
      std::vector<Pid> batch;
      for (int i = 0; i < m; ++i)
        if (mask >> i & 1) batch.push_back(living[i]);
      enumerate_deliveries(staged, alive, crashes_used, round, groups, batch, 0, {}, agg);
    }
    memo_.emplace(std::move(key), agg);
    return agg;
  }

  // Recursively assign each crasher a delivered subset over recipients that
  // survive the round (deliveries to same-round crashers change nothing).
  void enumerate_deliveries(const ProtocolMachine& staged, const std::vector<bool>& alive,
                            int crashes_used, int round, const std::vector<SendGroup>& groups,
                            const std::vector<Pid>& batch, std::size_t bi,
                            std::vector<CrashDirective> acc, SearchNode& agg) {
    if (!report_.violations.empty() || report_.guard_hit) return;
    if (bi == batch.size()) {
      apply_and_recurse(staged, alive, crashes_used, round, groups, acc, agg);
      return;
    }
    Pid s = batch[bi];
    std::vector<Pid> reach;
    for (const auto& g : groups) {
      if (g.sender != s) continue;
      for (Pid r = 0; r < cfg_.n; ++r)
        if (g.addresses(r) && alive[r] &&
            std::find(batch.begin(), batch.end(), r) == batch.end())
          reach.push_back(r);
    }
    std::sort(reach.begin(), reach.end());
    reach.erase(std::unique(reach.begin(), reach.end()), reach.end());
    const int k = static_cast<int>(reach.size());
    for (std::uint32_t sub = 0; sub < (1u << k); ++sub) {
      CrashDirective cd{s, {}};
      for (int i = 0; i < k; ++i)
        if (sub >> i & 1) cd.deliver_to.push_back(reach[i]);
      auto next = acc;
      next.push_back(std::move(cd));
      enumerate_deliveries(staged, alive, crashes_used, round, groups, batch, bi + 1,
                           std::move(next), agg);
    }
  }

  void apply_and_recurse(const ProtocolMachine& staged, const std::vector<bool>& alive,
                         int crashes_used, int round, const std::vector<SendGroup>& groups,
                         const std::vector<CrashDirective>& crashes, SearchNode& agg) {
    ++report_.branches;
    ProtocolMachine next = staged;
    std::vector<bool> alive2 = alive;
    std::vector<const CrashDirective*> directive(cfg_.n, nullptr);
    for (const auto& c : crashes) {
      alive2[c.pid] = false;
      directive[c.pid] = &c;
    }
    std::vector<GroupDelivery> delivery;
    delivery.reserve(groups.size());
    for (const auto& g : groups)
      delivery.push_back(consim::detail::effective_delivery(g, directive[g.sender], cfg_.n));
    next.receive(round, groups, delivery, alive2, nullptr);

    path_.push_back({round, crashes});
    SearchNode r = explore(next, alive2, crashes_used + static_cast<int>(crashes.size()),
                           round + 1);
    path_.pop_back();
    agg.max_decided = std::max(agg.max_decided, r.max_decided);
    agg.truncated = agg.truncated || r.truncated;
  }

  void check_safety(const ProtocolMachine& machine, int round) {
    if (!report_.violations.empty()) return;
    std::int8_t seen = -1;
    Pid seen_pid = -1;
    for (Pid p = 0; p < cfg_.n; ++p) {
      std::int8_t d = machine.proc(p).decided;
      if (d < 0) continue;
      bool valid = false;
      for (Pid q = 0; q < cfg_.n; ++q)
        if (machine.proc(q).input == d) valid = true;
      if (!valid) {
        report_.violations.push_back(
            {ViolationKind::Validity, round, {p}, "decided value is nobody's input"});
        report_.witness = witness_string();
        return;
      }
      if (seen >= 0 && d != seen) {
        report_.violations.push_back({ViolationKind::Agreement, round, {seen_pid, p},
                                      "conflicting decisions reachable"});
        report_.witness = witness_string();
        return;
      }
      seen = d;
      seen_pid = p;
    }
  }

  std::string witness_string() const {
    std::ostringstream os;
    for (const auto& [round, crashes] : path_) {
      if (crashes.empty()) continue;
      os << "r" << round << ":";
      for (const auto& c : crashes) {
        os << " crash " << c.pid << " deliver{";
        for (std::size_t i = 0; i < c.deliver_to.size(); ++i)
          os << (i ? "," : "") << c.deliver_to[i];
        os << "}";
      }
      os << "; ";
    }
    return os.str();
  }

  SystemConfig cfg_;
  int horizon_;
  long long guard_;
  ProtocolMachine machine_;
  std::unordered_map<std::string, SearchNode> memo_;
  std::vector<std::pair<int, std::vector<CrashDirective>>> path_;
  SearchReport report_;
};

}  // namespace detail

// Model-checks the protocol against every adaptive crash schedule, all
// omission subsets included, for n <= 4. Reports reachable agreement or
// validity violations (with a witness schedule), the maximum
// rounds-to-decision over deciding schedules, and explicit truncation when
// the horizon or the state guard cuts exploration short.
inline SearchReport exhaustive_search(const SystemConfig& cfg, const ProtocolParams& params,
                                      const std::vector<std::int8_t>& inputs, int horizon,
                                      long long state_guard = 20'000'000) {
  detail::Searcher s(cfg, params, inputs, horizon, state_guard);
  return s.run();
}

}  // namespace consim
