#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "consim/kernel.hpp"
#include "consim/stats.hpp"
#include "consim/verify.hpp"

using namespace consim;

namespace {

AdversaryConfig quiet(int f) {
  AdversaryConfig a;
  a.f = f;
  return a;
}

ProtocolParams committee_only() {
  ProtocolParams p;
  p.variant = Variant::CommitteeOnly;
  return p;
}

// replay value/decided evolution from a trace
struct Replayed {
  std::vector<std::int8_t> value;
  std::vector<std::int8_t> decided;
};

Replayed final_states(const ExecutionTrace& t) {
  Replayed r;
  r.value.assign(t.inputs.begin(), t.inputs.end());
  r.decided.assign(t.inputs.size(), -1);
  for (const auto& rec : t.rounds)
    for (const auto& tr : rec.transitions) {
      r.value[tr.pid] = tr.value;
      if (tr.decided >= 0) r.decided[tr.pid] = tr.decided;
    }
  return r;
}

}  // namespace

TEST_CASE("committee: unanimous inputs decide on the second round") {
  SystemConfig cfg{5, 0, 21, 0};
  ExecutionTrace trace;
  RunResult r = run_execution(cfg, committee_only(), {1, 1, 1, 1, 1}, quiet(0), trace);
  CHECK(r.outcome == RunOutcome::Decided);
  CHECK(r.rounds == 2);  // streak of two unanimous rounds
  CHECK(extract(trace).decided_bit == 1);
}

TEST_CASE("committee: majority adopted round 1, unanimity rounds 2-3, decide end of 3") {
  SystemConfig cfg{3, 0, 21, 0};
  ExecutionTrace trace;
  RunResult r = run_execution(cfg, committee_only(), {1, 1, 0}, quiet(0), trace);
  CHECK(r.rounds == 3);
  CHECK(extract(trace).decided_bit == 1);
  // the 0-holder adopts 1 in round 1
  REQUIRE(!trace.rounds.empty());
  bool adopted = false;
  for (const auto& tr : trace.rounds[0].transitions)
    if (tr.pid == 2 && tr.value == 1 && tr.decided < 0) adopted = true;
  CHECK(adopted);
}

TEST_CASE("committee: ties break to 1 and decide end of round 3") {
  SystemConfig cfg{2, 0, 21, 0};
  ExecutionTrace trace;
  RunResult r = run_execution(cfg, committee_only(), {1, 0}, quiet(0), trace);
  CHECK(r.rounds == 3);
  CHECK(extract(trace).decided_bit == 1);
}

TEST_CASE("committee: all-zero inputs decide 0 (ties cannot invent values)") {
  SystemConfig cfg{4, 0, 21, 0};
  ExecutionTrace trace;
  run_execution(cfg, committee_only(), {0, 0, 0, 0}, quiet(0), trace);
  CHECK(extract(trace).decided_bit == 0);
}

TEST_CASE("variant A epoch length is 3 + committee budget, independent of rosters") {
  SystemConfig cfg{4, 1, 31, 0};
  ExecutionTrace trace;
  run_execution(cfg, ProtocolParams{}, {1, 0, 0, 1}, quiet(1), trace);
  int budget = committee_budget_a(4, 1);
  int len = 3 + budget;
  for (const auto& rec : trace.rounds) {
    bool is_election = !rec.coins.empty();
    CHECK(is_election == (rec.round % len == 0));
  }
}

TEST_CASE("election coin: f = n-1 makes everyone a leader") {
  SystemConfig cfg{4, 3, 17, 0};
  ExecutionTrace trace;
  run_execution(cfg, ProtocolParams{}, {1, 0, 1, 0}, quiet(3), trace);
  int announces = 0;
  for (const auto& g : trace.rounds[0].sent)
    if (g.payload.kind == PayloadKind::LeaderAnnounce) ++announces;
  CHECK(announces == 4);
}

TEST_CASE("election count tracks the exact binomial law") {
  // n=8, f=4: per-process success 1/4, E[L] = 2
  const int trials = 20000;
  double sum = 0;
  std::vector<int> at_least(9, 0);
  for (int t = 0; t < trials; ++t) {
    int L = sample_election_count(8, 0.25, derive_seed(606, seedtag::kTrial, t), 0);
    sum += L;
    for (int x = 0; x <= L && x <= 8; ++x) ++at_least[x];
  }
  CHECK(std::abs(sum / trials - 2.0) < 0.05);
  for (int x = 1; x <= 8; ++x) {
    double exact = binomial_tail(8, 0.25, x);
    double emp = static_cast<double>(at_least[x]) / trials;
    double se = std::sqrt(std::max(exact * (1 - exact), 1e-9) / trials);
    INFO("x=" << x << " emp=" << emp << " exact=" << exact);
    CHECK(std::abs(emp - exact) <= 3 * se + 1e-3);
  }
}

TEST_CASE("gather coin: reconciled drop index, target and coin") {
  GatherCoin g = gather_leader_coin(128, 8, 128);
  CHECK(g.drop_index == 0);
  CHECK(g.target == 8.0);
  CHECK(g.coin == Catch::Approx(1.0 / 32));

  g = gather_leader_coin(128, 8, 32);
  CHECK(g.drop_index == 2);
  CHECK(g.target == 2.0);
  CHECK(g.coin == Catch::Approx(1.0 / 32));

  // deep drop floors the target at 1
  g = gather_leader_coin(1024, 4, 8);
  CHECK(g.target == 1.0);
  CHECK(g.coin == Catch::Approx(1.0 / 16));

  // pseudocode-literal coin stays available behind the switch
  CHECK(literal_gather_coin_value(128, 8, 128) == Catch::Approx(8.0 / 128));
}

TEST_CASE("count round: everyone alive counts everyone alive") {
  ProtocolParams params;
  params.variant = Variant::C;
  params.k = 4;
  SystemConfig cfg{16, 4, 23, 0};
  ProtocolMachine machine(cfg, params, std::vector<std::int8_t>(16, 1));
  std::vector<bool> alive(16, true);
  std::vector<SendGroup> groups;
  std::vector<CoinRecord> coins;
  machine.phase_a(0, alive, groups, coins);
  CHECK(groups.size() == 16);
  std::vector<GroupDelivery> full(groups.size());
  machine.receive(0, groups, full, alive, nullptr);
  for (Pid p = 0; p < 16; ++p) CHECK(machine.proc(p).n_star == 16);
}

TEST_CASE("count round: a mid-round crash splits the views") {
  ProtocolParams params;
  params.variant = Variant::C;
  params.k = 4;
  SystemConfig cfg{8, 2, 23, 0};
  ProtocolMachine machine(cfg, params, std::vector<std::int8_t>(8, 0));
  std::vector<bool> alive(8, true);
  std::vector<SendGroup> groups;
  std::vector<CoinRecord> coins;
  machine.phase_a(0, alive, groups, coins);
  // pid 0 crashes mid-count, its ping reaching only pids 1..3
  std::vector<GroupDelivery> st(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i)
    if (groups[i].sender == 0) {
      st[i].full = false;
      st[i].subset = {1, 2, 3};
    }
  alive[0] = false;
  machine.receive(0, groups, st, alive, nullptr);
  for (Pid p = 1; p <= 3; ++p) CHECK(machine.proc(p).n_star == 8);
  for (Pid p = 4; p < 8; ++p) CHECK(machine.proc(p).n_star == 7);
}

namespace {

// smallest seed for which epoch 1 of variant A elects exactly one leader
std::uint64_t seed_with_single_leader(int n, int f, Pid* leader_out) {
  for (std::uint64_t seed = 1;; ++seed) {
    int heads = 0;
    Pid leader = -1;
    for (Pid p = 0; p < n; ++p)
      if (coin_flip(seed, p, 0, 1.0 / (n - f))) {
        ++heads;
        leader = p;
      }
    if (heads == 1) {
      *leader_out = leader;
      return seed;
    }
  }
}

}  // namespace

TEST_CASE("propagation: leader crashed during repetition 1 yields adoption, not decision") {
  const int n = 4, f = 1;
  Pid leader = -1;
  std::uint64_t seed = seed_with_single_leader(n, f, &leader);
  int budget = committee_budget_a(n, f);
  int prop1 = 1 + budget;

  AdversaryConfig adv;
  adv.kind = AdversaryKind::NonAdaptive;
  adv.f = f;
  adv.schedule = {{prop1, leader, {static_cast<Pid>((leader + 1) % n)}}};

  SystemConfig cfg{n, f, seed, 4 * (budget + 3)};
  ExecutionTrace trace;
  RunResult r = run_execution(cfg, ProtocolParams{}, {1, 1, 1, 1}, adv, trace);
  // epoch 1 ends undecided for the survivors; they adopt and finish later
  Replayed st = final_states(trace);
  int epoch_end = budget + 2;
  for (const auto& rec : trace.rounds) {
    if (rec.round > epoch_end) break;
    for (const auto& tr : rec.transitions)
      if (rec.round == epoch_end) CHECK(tr.decided < 0);  // nobody decides off one hearing
  }
  CHECK(r.outcome == RunOutcome::Decided);  // a later epoch finishes the job
  CHECK(check_trace(trace).empty());
  CHECK(st.decided[(leader + 1) % n] == 1);
}

TEST_CASE("propagation: crash during repetition 2 still decides the hearers") {
  const int n = 4, f = 1;
  Pid leader = -1;
  std::uint64_t seed = seed_with_single_leader(n, f, &leader);
  int budget = committee_budget_a(n, f);
  int prop2 = 2 + budget;
  Pid hearer = (leader + 1) % n;

  AdversaryConfig adv;
  adv.kind = AdversaryKind::NonAdaptive;
  adv.f = f;
  adv.schedule = {{prop2, leader, {hearer}}};

  SystemConfig cfg{n, f, seed, 6 * (budget + 3)};
  ExecutionTrace trace;
  RunResult r = run_execution(cfg, ProtocolParams{}, {0, 0, 0, 0}, adv, trace);
  CHECK(r.outcome == RunOutcome::Decided);
  CHECK(check_trace(trace).empty());
  // the hearer decided at the end of epoch 1; repetition 1 was complete so
  // every survivor had adopted the value either way
  int epoch_end = budget + 2;
  bool hearer_decided_ep1 = false;
  for (const auto& rec : trace.rounds)
    if (rec.round == epoch_end)
      for (const auto& tr : rec.transitions)
        if (tr.pid == hearer && tr.decided == 0) hearer_decided_ep1 = true;
  CHECK(hearer_decided_ep1);
}

TEST_CASE("surviving leader decides the whole system in one epoch") {
  const int n = 4, f = 1;
  Pid leader = -1;
  std::uint64_t seed = seed_with_single_leader(n, f, &leader);
  SystemConfig cfg{n, f, seed, 0};
  ExecutionTrace trace;
  RunResult r = run_execution(cfg, ProtocolParams{}, {1, 0, 1, 0}, quiet(f), trace);
  CHECK(r.outcome == RunOutcome::Decided);
  CHECK(r.rounds == committee_budget_a(n, f) + 3);
  RunMetrics m = extract(trace);
  CHECK(m.epochs == 1);
}

TEST_CASE("stall cost: three member-crash-free committee rounds force a decision") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    SystemConfig cfg{5, 3, seed, 400};
    AdversaryConfig adv;
    adv.f = 3;
    adv.strategy = StrategyKind::RandomAdaptive;
    adv.seed = seed;
    adv.random_rate = 0.35;
    adv.random_subsets = true;
    ExecutionTrace trace;
    run_execution(cfg, committee_only(), {1, 0, 1, 0, 1}, adv, trace);
    int last_crash = -1;
    bool any_decision = false;
    for (const auto& rec : trace.rounds) {
      if (!rec.decision.crashes.empty()) last_crash = rec.round;
      for (const auto& tr : rec.transitions) any_decision |= tr.decided >= 0;
      INFO("seed " << seed << " round " << rec.round);
      if (rec.round - last_crash >= 3) CHECK(any_decision);
    }
  }
}

TEST_CASE("valency lock: after a heard-twice decision every survivor holds the value") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    SystemConfig cfg{6, 3, seed, 0};
    AdversaryConfig adv;
    adv.f = 3;
    adv.strategy = StrategyKind::RandomAdaptive;
    adv.seed = seed * 3 + 1;
    adv.random_rate = 0.3;
    adv.random_subsets = true;
    ExecutionTrace trace;
    run_execution(cfg, ProtocolParams{}, {1, 0, 1, 0, 1, 0}, adv, trace);
    CHECK(check_trace(trace).empty());

    int epoch_len = 3 + committee_budget_a(6, 3);
    std::vector<std::int8_t> value(trace.inputs.begin(), trace.inputs.end());
    std::vector<bool> alive(6, true);
    std::int8_t locked = -1;
    for (const auto& rec : trace.rounds) {
      for (const auto& c : rec.decision.crashes) alive[c.pid] = false;
      bool epoch_end = (rec.round + 1) % epoch_len == 0;
      for (const auto& tr : rec.transitions) {
        value[tr.pid] = tr.value;
        if (tr.decided >= 0 && epoch_end && locked < 0) locked = tr.decided;
      }
      if (locked >= 0 && epoch_end)
        for (Pid p = 0; p < 6; ++p)
          if (alive[p]) CHECK(value[p] == locked);
    }
  }
}

TEST_CASE("comm_send charges broadcast and gossip cost rates") {
  CommCharge b = comm_send(CommPrimitive::Broadcast, 10, 3, 10);
  CHECK(b.rounds == 1);
  CHECK(b.messages == 27);

  CommCharge g = comm_send(CommPrimitive::GossipCostModel, 256, 1, 256);
  CHECK(g.rounds == 512);            // ceil(log2 256)^3
  CHECK(g.messages == 1048576);      // 256 * 8^4

  CHECK_THROWS_AS(comm_send(static_cast<CommPrimitive>(9), 10, 1, 10), SimError);
}
