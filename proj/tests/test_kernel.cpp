#include <catch2/catch_amalgamated.hpp>

#include "consim/kernel.hpp"
#include "consim/stats.hpp"
#include "consim/verify.hpp"

using namespace consim;

namespace {

AdversaryConfig no_adversary(int f = 0) {
  AdversaryConfig a;
  a.f = f;
  return a;
}

}  // namespace

TEST_CASE("unanimous inputs, no crashes: both processes decide the input") {
  SystemConfig cfg{2, 0, 7, 0};
  ExecutionTrace trace;
  RunResult r = run_execution(cfg, ProtocolParams{}, {1, 1}, no_adversary(), trace);
  CHECK(r.outcome == RunOutcome::Decided);
  RunMetrics m = extract(trace);
  CHECK(m.decided_bit == 1);
  CHECK(check_trace(trace).empty());
}

TEST_CASE("same config and seed produce byte-identical traces") {
  SystemConfig cfg{5, 2, 99, 0};
  AdversaryConfig adv;
  adv.f = 2;
  adv.strategy = StrategyKind::RandomAdaptive;
  adv.seed = 1234;
  adv.random_subsets = true;
  ExecutionTrace a, b;
  run_execution(cfg, ProtocolParams{}, {1, 0, 1, 0, 1}, adv, a);
  run_execution(cfg, ProtocolParams{}, {1, 0, 1, 0, 1}, adv, b);
  CHECK(a.serialize() == b.serialize());
  CHECK(replay_determinism(cfg, ProtocolParams{}, {1, 0, 1, 0, 1}, adv));
}

TEST_CASE("different seeds differ in coin records") {
  SystemConfig a_cfg{4, 0, 1, 0}, b_cfg{4, 0, 2, 0};
  ExecutionTrace a, b;
  run_execution(a_cfg, ProtocolParams{}, {1, 0, 1, 0}, no_adversary(), a);
  run_execution(b_cfg, ProtocolParams{}, {1, 0, 1, 0}, no_adversary(), b);
  REQUIRE(!a.rounds.empty());
  REQUIRE(!b.rounds.empty());
  CHECK(a.rounds[0].coins[0].word != b.rounds[0].coins[0].word);
}

TEST_CASE("leader killer over 100 seeds: verifier finds nothing") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    SystemConfig cfg{8, 4, seed, 200 * 8};
    AdversaryConfig adv;
    adv.kind = AdversaryKind::Strong;
    adv.f = 4;
    adv.strategy = StrategyKind::LeaderKiller;
    std::vector<std::int8_t> inputs;
    for (Pid p = 0; p < 8; ++p) inputs.push_back(coin_flip(seed, p, -1, 0.5) ? 1 : 0);
    ExecutionTrace trace;
    RunResult r = run_execution(cfg, ProtocolParams{}, inputs, adv, trace);
    INFO("seed " << seed);
    CHECK(r.outcome == RunOutcome::Decided);
    auto violations = check_trace(trace);
    CHECK(violations.empty());
  }
}

TEST_CASE("horizon exhaustion is flagged as aborted, not decided") {
  SystemConfig cfg{6, 2, 5, 3};  // 3 rounds can never finish an epoch
  ExecutionTrace trace;
  RunResult r = run_execution(cfg, ProtocolParams{}, {1, 1, 1, 0, 0, 0}, no_adversary(2), trace);
  CHECK(r.outcome == RunOutcome::Aborted);
  CHECK(r.rounds == 3);
  auto violations = check_trace(trace);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].kind == ViolationKind::Abort);
  CHECK(is_safety_violation(violations[0].kind) == false);
}

namespace {

// an adversary object that ignores its declared kind and overspends
struct RogueAdversary {
  AdversaryDecision operator()(const RoundView& view) const {
    AdversaryDecision d;
    for (Pid p = 0; p < view.config->n; ++p)
      if ((*view.alive)[p]) d.crashes.push_back({p, {}});
    return d;
  }
};

}  // namespace

TEST_CASE("illegal adversary decisions abort the execution with an error") {
  SystemConfig cfg{4, 1, 3, 0};
  ProtocolMachine machine(cfg, ProtocolParams{}, {1, 0, 1, 0});
  AdversaryConfig rogue_cfg;
  rogue_cfg.f = 1;
  // hand-roll the kernel loop far enough to feed an oversized decision
  std::vector<bool> alive(4, true);
  std::vector<int> crash_round(4, -1);
  std::vector<SendGroup> groups;
  std::vector<CoinRecord> coins;
  machine.phase_a(0, alive, groups, coins);
  RoundView view{0, &cfg, &machine, &groups, &coins, &alive, &crash_round, 0};
  AdversaryDecision too_many = RogueAdversary{}(view);
  CHECK_THROWS_AS(validate_decision(rogue_cfg, view, too_many), IllegalDecisionError);

  AdversaryDecision dead_pid;
  dead_pid.crashes.push_back({2, {}});
  alive[2] = false;
  CHECK_THROWS_AS(validate_decision(rogue_cfg, view, dead_pid), IllegalDecisionError);
}

TEST_CASE("omission only at crash: fuzzed runs deliver everything from live senders") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    SystemConfig cfg{6, 3, seed, 0};
    AdversaryConfig adv;
    adv.f = 3;
    adv.strategy = StrategyKind::RandomAdaptive;
    adv.seed = seed * 17;
    adv.random_rate = 0.4;
    adv.random_subsets = true;
    ExecutionTrace trace;
    run_execution(cfg, ProtocolParams{}, {1, 1, 0, 0, 1, 0}, adv, trace);

    int total_crashes = 0;
    std::vector<int> crash_at(6, -1);
    for (const auto& rec : trace.rounds) {
      for (const auto& c : rec.decision.crashes) {
        CHECK(crash_at[c.pid] == -1);  // absorbing
        crash_at[c.pid] = rec.round;
        ++total_crashes;
      }
      for (std::size_t i = 0; i < rec.sent.size(); ++i) {
        const auto& g = rec.sent[i];
        bool crashed_now = crash_at[g.sender] == rec.round;
        CHECK(crash_at[g.sender] == -1 || crash_at[g.sender] >= rec.round);
        if (!crashed_now) CHECK(rec.delivery[i].full);
      }
    }
    CHECK(total_crashes <= 3);
    CHECK(check_trace(trace).empty());
  }
}

TEST_CASE("n=1 degenerates gracefully") {
  SystemConfig cfg{1, 0, 11, 0};
  ExecutionTrace trace;
  RunResult r = run_execution(cfg, ProtocolParams{}, {1}, no_adversary(), trace);
  CHECK(r.outcome == RunOutcome::Decided);
  RunMetrics m = extract(trace);
  CHECK(m.decided_bit == 1);
  CHECK(m.messages == 0);
}

TEST_CASE("config validation rejects bad shapes") {
  CHECK_THROWS_AS(SystemConfig{0, 0, 1, 0}.validate(), SimError);
  CHECK_THROWS_AS((SystemConfig{4, 4, 1, 0}).validate(), SimError);
  SystemConfig cfg{4, 0, 1, 0};
  CHECK_THROWS_AS(ProtocolMachine(cfg, ProtocolParams{}, {1, 0}), SimError);
  CHECK_THROWS_AS(ProtocolMachine(cfg, ProtocolParams{}, {1, 0, 2, 0}), SimError);
}
