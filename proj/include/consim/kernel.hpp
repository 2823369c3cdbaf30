#pragma once

#include <algorithm>
#include <vector>

#include "consim/adversary.hpp"
#include "consim/core.hpp"
#include "consim/protocol.hpp"
#include "consim/trace.hpp"

// Lockstep synchronous execution engine. Per round: Phase A (coins + local
// computation + message queueing) for every live process, one adversary
// consultation over the full snapshot, crash application, delivery, then
// receipt processing for everyone still standing. A sender that stays alive
// delivers to every addressed recipient; a sender crashed this round
// delivers exactly the adversary-chosen subset. Identical inputs produce
// identical traces.

namespace consim {

struct RunResult {
  RunOutcome outcome = RunOutcome::Aborted;
  int rounds = 0;
};

namespace detail {

// Effective delivery for one queued group under the round's decision.
inline GroupDelivery effective_delivery(const SendGroup& g, const CrashDirective* directive,
                                        Pid n) {
  GroupDelivery gd;
  if (directive == nullptr) return gd;  // alive sender: full delivery
  gd.full = false;
  gd.subset.reserve(directive->deliver_to.size());
  for (Pid r : directive->deliver_to)
    if (r >= 0 && r < n && g.addresses(r)) gd.subset.push_back(r);
  std::sort(gd.subset.begin(), gd.subset.end());
  gd.subset.erase(std::unique(gd.subset.begin(), gd.subset.end()), gd.subset.end());
  return gd;
}

}  // namespace detail

// Runs one execution to decision or horizon. The trace is built in place;
// metrics are recounted from it afterwards (stats.hpp) rather than tallied
// here, so the trace stays the single source of truth.
inline RunResult run_execution(const SystemConfig& cfg, ProtocolMachine& machine,
                               Adversary& adversary, ExecutionTrace& trace) {
  cfg.validate();
  adversary.config().validate(cfg);
  trace.config = cfg;
  trace.params = machine.params();
  trace.inputs.resize(cfg.n);
  for (Pid p = 0; p < cfg.n; ++p) trace.inputs[p] = machine.proc(p).input;
  trace.adversary_meta = adversary.config().meta_json();
  trace.rounds.clear();

  std::vector<bool> alive(cfg.n, true);
  std::vector<int> crash_round(cfg.n, -1);
  int crashes_used = 0;
  const int horizon = cfg.effective_horizon();

  RunResult result;
  for (int round = 0; round < horizon; ++round) {
    RoundRecord rec;
    rec.round = round;
    machine.phase_a(round, alive, rec.sent, rec.coins);

    RoundView view{round, &cfg, &machine, &rec.sent, &rec.coins, &alive, &crash_round,
                   crashes_used};
    rec.decision = adversary.decide(view);
    validate_decision(adversary.config(), view, rec.decision);

    std::vector<const CrashDirective*> directive(cfg.n, nullptr);
    for (const auto& c : rec.decision.crashes) {
      directive[c.pid] = &c;
      alive[c.pid] = false;
      crash_round[c.pid] = round;
      ++crashes_used;
    }
    rec.delivery.reserve(rec.sent.size());
    for (const auto& g : rec.sent)
      rec.delivery.push_back(detail::effective_delivery(g, directive[g.sender], cfg.n));

    machine.receive(round, rec.sent, rec.delivery, alive, &rec.transitions);
    trace.rounds.push_back(std::move(rec));

    if (machine.all_decided(alive)) {
      result.outcome = RunOutcome::Decided;
      result.rounds = round + 1;
      trace.outcome = RunOutcome::Decided;
      return result;
    }
  }
  result.outcome = RunOutcome::Aborted;
  result.rounds = horizon;
  trace.outcome = RunOutcome::Aborted;
  return result;
}

// Convenience: build machine + adversary from configs and run.
inline RunResult run_execution(const SystemConfig& cfg, const ProtocolParams& params,
                               const std::vector<std::int8_t>& inputs,
                               const AdversaryConfig& adv_cfg, ExecutionTrace& trace) {
  ProtocolMachine machine(cfg, params, inputs);
  Adversary adversary(adv_cfg);
  return run_execution(cfg, machine, adversary, trace);
}

}  // namespace consim
