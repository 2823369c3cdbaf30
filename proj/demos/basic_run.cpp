// Minimal library usage: one seeded execution of the election-committee
// protocol against a weak leader-killing adversary, verified offline.

#include <iostream>

#include "consim/adversary.hpp"
#include "consim/kernel.hpp"
#include "consim/stats.hpp"
#include "consim/verify.hpp"

int main() {
  using namespace consim;

  SystemConfig cfg;
  cfg.n = 24;
  cfg.f = 12;
  cfg.seed = 2024;

  ProtocolParams params;  // variant A, broadcast, CommitteeSafe

  std::vector<std::int8_t> inputs(cfg.n);
  for (Pid p = 0; p < cfg.n; ++p) inputs[p] = p % 2;

  AdversaryConfig adv;
  adv.kind = AdversaryKind::Weak;
  adv.f = cfg.f;
  adv.strategy = StrategyKind::LeaderKiller;
  adv.crash_prone = sample_crash_prone(cfg.n, cfg.f, cfg.seed);

  ExecutionTrace trace;
  RunResult result = run_execution(cfg, params, inputs, adv, trace);
  RunMetrics metrics = extract(trace);

  std::cout << "outcome:  " << to_string(result.outcome) << "\n"
            << "rounds:   " << metrics.rounds << "\n"
            << "epochs:   " << metrics.epochs << "\n"
            << "messages: " << metrics.messages << "\n"
            << "decided:  " << static_cast<int>(metrics.decided_bit) << "\n";

  auto violations = check_trace(trace);
  std::cout << "verifier: " << violations.size() << " findings\n";
  for (const auto& v : violations) std::cout << "  " << v.to_string() << "\n";
  return violations.empty() ? 0 : 1;
}
