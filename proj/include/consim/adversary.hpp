#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "consim/core.hpp"
#include "consim/poset.hpp"
#include "consim/protocol.hpp"
#include "consim/rng.hpp"

// The adversary hierarchy. Every adversary is a decision policy mapping the
// round snapshot to a crash set; the kind determines which decisions are
// legal (budget only / fixed crash-prone set / pre-committed schedule /
// partial-order constrained), the strategy determines which legal decision
// gets made. Strategies are written to emit only legal decisions; the
// kernel validates every decision anyway and treats a violation as a bug,
// not a recoverable condition.

namespace consim {

enum class AdversaryKind : std::uint8_t { Strong, Weak, NonAdaptive, KChain, KOrdered };
enum class StrategyKind : std::uint8_t {
  None,             // never crashes anything
  LeaderKiller,     // suppress announced leaders, cheapest first
  WholeChainKiller, // one chain-prefix kill per round (ordered kinds)
  GroupCrash,       // whole-group crashes against a fixed partition
  RandomAdaptive,   // random legal decisions, for fuzzing
};

inline const char* to_string(AdversaryKind k) {
  switch (k) {
    case AdversaryKind::Strong: return "strong";
    case AdversaryKind::Weak: return "weak";
    case AdversaryKind::NonAdaptive: return "nonadaptive";
    case AdversaryKind::KChain: return "kchain";
    case AdversaryKind::KOrdered: return "kordered";
  }
  return "?";
}

inline const char* to_string(StrategyKind s) {
  switch (s) {
    case StrategyKind::None: return "none";
    case StrategyKind::LeaderKiller: return "leader-killer";
    case StrategyKind::WholeChainKiller: return "whole-chain-killer";
    case StrategyKind::GroupCrash: return "group-crash";
    case StrategyKind::RandomAdaptive: return "random-adaptive";
  }
  return "?";
}

struct ScheduleEntry {
  int round = 0;
  Pid pid = -1;
  std::vector<Pid> deliver_to;
};

struct AdversaryConfig {
  AdversaryKind kind = AdversaryKind::Strong;
  int f = 0;
  StrategyKind strategy = StrategyKind::None;
  std::vector<Pid> crash_prone;          // weak: exactly f pids
  std::vector<ScheduleEntry> schedule;   // nonadaptive
  PartialOrder order;                    // kchain / kordered
  std::vector<std::vector<Pid>> groups;  // group-crash partition
  std::uint64_t seed = 0;                // randomized strategy choices
  double random_rate = 0.15;             // RandomAdaptive: crash attempt rate
  bool random_subsets = false;           // random delivery subsets when crashing

  void validate(const SystemConfig& cfg) const {
    if (f != cfg.f) throw SimError("AdversaryConfig: f mismatch with system config");
    if (kind == AdversaryKind::Weak && static_cast<int>(crash_prone.size()) != f)
      throw SimError("AdversaryConfig: weak kind needs |crash_prone| == f");
    if ((kind == AdversaryKind::KChain || kind == AdversaryKind::KOrdered) &&
        order.size() != cfg.n)
      throw SimError("AdversaryConfig: ordered kind needs an order over all n processes");
    if (strategy == StrategyKind::GroupCrash && groups.empty())
      throw SimError("AdversaryConfig: group-crash strategy needs a partition");
    if (strategy == StrategyKind::WholeChainKiller && kind != AdversaryKind::KChain &&
        kind != AdversaryKind::KOrdered)
      throw SimError("AdversaryConfig: whole-chain-killer needs an ordered kind");
  }

  nlohmann::json meta_json() const {
    nlohmann::json j{{"kind", to_string(kind)},
                     {"strategy", to_string(strategy)},
                     {"f", f},
                     {"seed", seed},
                     {"random_rate", random_rate},
                     {"random_subsets", random_subsets}};
    j["crash_prone"] = crash_prone;
    auto& sch = j["schedule"] = nlohmann::json::array();
    for (const auto& e : schedule)
      sch.push_back({{"round", e.round}, {"pid", e.pid}, {"deliver", e.deliver_to}});
    if (order.size() > 0) j["order"] = order.serialize();
    j["groups"] = groups;
    return j;
  }

  static AdversaryConfig from_meta(const nlohmann::json& j) {
    AdversaryConfig c;
    std::string k = j.at("kind");
    c.kind = k == "strong"        ? AdversaryKind::Strong
             : k == "weak"        ? AdversaryKind::Weak
             : k == "nonadaptive" ? AdversaryKind::NonAdaptive
             : k == "kchain"      ? AdversaryKind::KChain
                                  : AdversaryKind::KOrdered;
    std::string s = j.at("strategy");
    c.strategy = s == "leader-killer"        ? StrategyKind::LeaderKiller
                 : s == "whole-chain-killer" ? StrategyKind::WholeChainKiller
                 : s == "group-crash"        ? StrategyKind::GroupCrash
                 : s == "random-adaptive"    ? StrategyKind::RandomAdaptive
                                             : StrategyKind::None;
    c.f = j.at("f");
    c.seed = j.at("seed");
    c.random_rate = j.at("random_rate");
    c.random_subsets = j.at("random_subsets");
    c.crash_prone = j.at("crash_prone").get<std::vector<Pid>>();
    for (const auto& e : j.at("schedule"))
      c.schedule.push_back({e.at("round").get<int>(), e.at("pid").get<Pid>(),
                            e.at("deliver").get<std::vector<Pid>>()});
    if (j.contains("order")) c.order = PartialOrder::deserialize(j.at("order").get<std::string>());
    c.groups = j.at("groups").get<std::vector<std::vector<Pid>>>();
    return c;
  }
};

// Read-only snapshot handed to the adversary once per round, after Phase A:
// all local states and coins, every queued message, the remaining budget and
// the crash history. Nothing about future rounds exists yet, so nothing
// about them can be observed.
struct RoundView {
  int round = 0;
  const SystemConfig* config = nullptr;
  const ProtocolMachine* machine = nullptr;
  const std::vector<SendGroup>* queued = nullptr;
  const std::vector<CoinRecord>* coins = nullptr;
  const std::vector<bool>* alive = nullptr;       // entering this round
  const std::vector<int>* crash_round = nullptr;  // -1 while alive
  int crashes_used = 0;

  int budget_left() const { return config->f - crashes_used; }
};

namespace detail {

// Senders whose queued traffic marks them as this epoch's leaders: election
// announcements, committee votes, or a first propagation repetition.
inline std::vector<Pid> leader_signal_senders(const RoundView& v) {
  std::vector<Pid> out;
  for (const auto& g : *v.queued) {
    bool signal = g.payload.kind == PayloadKind::LeaderAnnounce ||
                  g.payload.kind == PayloadKind::CommitteeVote ||
                  (g.payload.kind == PayloadKind::ConsensusValue && g.payload.rep == 1);
    if (signal && std::find(out.begin(), out.end(), g.sender) == out.end())
      out.push_back(g.sender);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Sample the weak adversary's crash-prone set: f pids, fixed before the
// execution and hidden from the protocol.
inline std::vector<Pid> sample_crash_prone(int n, int f, std::uint64_t seed) {
  SeqRng rng(derive_seed(seed, seedtag::kCrashProne));
  std::vector<Pid> pids(n);
  for (Pid p = 0; p < n; ++p) pids[p] = p;
  rng.shuffle(pids);
  pids.resize(f);
  std::sort(pids.begin(), pids.end());
  return pids;
}

// Pid-contiguous partition into ceil(n/(n-f)) groups of size n-f (last one
// may be smaller), for the group-crash strategy.
inline std::vector<std::vector<Pid>> make_group_partition(int n, int f) {
  int size = n - f;
  std::vector<std::vector<Pid>> groups;
  for (Pid at = 0; at < n; at += size) {
    std::vector<Pid> g;
    for (Pid p = at; p < std::min<Pid>(n, at + size); ++p) g.push_back(p);
    groups.push_back(std::move(g));
  }
  return groups;
}

class Adversary {
public:
  explicit Adversary(AdversaryConfig cfg) : cfg_(std::move(cfg)) {}

  const AdversaryConfig& config() const { return cfg_; }

  AdversaryDecision decide(const RoundView& view) {
    switch (cfg_.kind == AdversaryKind::NonAdaptive ? StrategyKind::None : cfg_.strategy) {
      case StrategyKind::None:
        return cfg_.kind == AdversaryKind::NonAdaptive ? scheduled(view) : AdversaryDecision{};
      case StrategyKind::LeaderKiller:
        return leader_killer(view, /*one_per_round=*/false);
      case StrategyKind::WholeChainKiller:
        return leader_killer(view, /*one_per_round=*/true);
      case StrategyKind::GroupCrash:
        return group_crash(view);
      case StrategyKind::RandomAdaptive:
        return random_adaptive(view);
    }
    return {};
  }

private:
  AdversaryDecision scheduled(const RoundView& view) const {
    AdversaryDecision d;
    for (const auto& e : cfg_.schedule)
      if (e.round == view.round) d.crashes.push_back({e.pid, e.deliver_to});
    return d;
  }

  // Shared core of LeaderKiller and WholeChainKiller. Targets are the
  // leaders visible in this round's queued traffic; each kill takes the
  // target plus (for ordered kinds) its uncrashed predecessors in the same
  // round, cheapest batch first, all with empty deliveries. The
  // whole-chain variant stops after one target per round, mirroring the
  // one-chain-at-a-time lower-bound construction.
  AdversaryDecision leader_killer(const RoundView& view, bool one_per_round) {
    AdversaryDecision d;
    std::vector<Pid> targets = detail::leader_signal_senders(view);
    if (targets.empty()) return d;
    if (cfg_.kind == AdversaryKind::Weak) {
      std::erase_if(targets, [&](Pid p) {
        return !std::binary_search(cfg_.crash_prone.begin(), cfg_.crash_prone.end(), p);
      });
    }
    bool ordered = cfg_.kind == AdversaryKind::KChain || cfg_.kind == AdversaryKind::KOrdered;
    std::vector<bool> planned(view.config->n, false);
    auto is_down = [&](Pid p) { return !(*view.alive)[p] || planned[p]; };
    int budget = view.budget_left();

    // batch for one target: itself plus whatever predecessors still stand
    auto batch_for = [&](Pid t) {
      std::vector<Pid> b;
      if (ordered)
        for (Pid u : cfg_.order.downward_closure(t))
          if (!is_down(u)) b.push_back(u);
      if (!ordered || b.empty()) b.assign(1, t);
      return b;  // topologically sorted already (downward_closure is)
    };

    while (budget > 0) {
      Pid best = -1;
      std::vector<Pid> best_batch;
      for (Pid t : targets) {
        if (is_down(t)) continue;
        auto b = batch_for(t);
        if (static_cast<int>(b.size()) > budget) continue;
        if (best < 0 || b.size() < best_batch.size()) {
          best = t;
          best_batch = std::move(b);
        }
      }
      if (best < 0) break;
      for (Pid p : best_batch) {
        planned[p] = true;
        d.crashes.push_back({p, {}});
      }
      budget -= static_cast<int>(best_batch.size());
      if (one_per_round) break;
    }
    return d;
  }

  // Crash the whole group containing the lowest announced leader, provided
  // the group is intact and the budget covers all of it. Groups never crash
  // partially.
  AdversaryDecision group_crash(const RoundView& view) {
    AdversaryDecision d;
    std::vector<Pid> targets = detail::leader_signal_senders(view);
    for (Pid t : targets) {
      for (const auto& g : cfg_.groups) {
        if (std::find(g.begin(), g.end(), t) == g.end()) continue;
        bool intact = std::all_of(g.begin(), g.end(), [&](Pid p) { return (*view.alive)[p]; });
        if (intact && static_cast<int>(g.size()) <= view.budget_left())
          for (Pid p : g) d.crashes.push_back({p, {}});
        break;
      }
      if (!d.crashes.empty()) break;
    }
    return d;
  }

  AdversaryDecision random_adaptive(const RoundView& view) {
    AdversaryDecision d;
    SeqRng rng(derive_seed(cfg_.seed, seedtag::kAdversary, static_cast<std::uint64_t>(view.round)));
    if (rng.next_u01() >= cfg_.random_rate || view.budget_left() <= 0) return d;
    int want = 1 + static_cast<int>(rng.next_below(
                       static_cast<std::uint64_t>(std::min(view.budget_left(), 2))));
    std::vector<bool> down(view.config->n);
    for (Pid p = 0; p < view.config->n; ++p) down[p] = !(*view.alive)[p];
    for (int c = 0; c < want; ++c) {
      std::vector<Pid> cands;
      if (cfg_.kind == AdversaryKind::KChain || cfg_.kind == AdversaryKind::KOrdered) {
        cands = legal_crash_candidates(cfg_.order, down);
      } else if (cfg_.kind == AdversaryKind::Weak) {
        for (Pid p : cfg_.crash_prone)
          if (!down[p]) cands.push_back(p);
      } else {
        for (Pid p = 0; p < view.config->n; ++p)
          if (!down[p]) cands.push_back(p);
      }
      if (cands.empty()) break;
      Pid victim = cands[rng.next_below(cands.size())];
      down[victim] = true;
      CrashDirective cd{victim, {}};
      if (cfg_.random_subsets) {
        for (const auto& g : *view.queued)
          if (g.sender == victim) {
            for (Pid r = 0; r < view.config->n; ++r)
              if (g.addresses(r) && rng.next_u01() < 0.5) cd.deliver_to.push_back(r);
          }
        std::sort(cd.deliver_to.begin(), cd.deliver_to.end());
        cd.deliver_to.erase(std::unique(cd.deliver_to.begin(), cd.deliver_to.end()),
                            cd.deliver_to.end());
      }
      d.crashes.push_back(std::move(cd));
    }
    return d;
  }

  AdversaryConfig cfg_;
};

// ---- decision legality (kernel-side enforcement) --------------------------

// Throws IllegalDecisionError unless the decision is legal for the kind:
// alive unique victims, budget respected, weak within its set, nonadaptive
// matching its schedule, ordered kinds downward-closed with the decision
// order as the same-round linearization witness.
inline void validate_decision(const AdversaryConfig& cfg, const RoundView& view,
                              const AdversaryDecision& d) {
  if (d.crashes.empty()) return;
  if (view.crashes_used + static_cast<int>(d.crashes.size()) > cfg.f)
    throw IllegalDecisionError("adversary exceeded crash budget f=" + std::to_string(cfg.f));
  std::vector<bool> in_batch(view.config->n, false);
  for (const auto& c : d.crashes) {
    if (c.pid < 0 || c.pid >= view.config->n)
      throw IllegalDecisionError("crash directive names unknown pid");
    if (!(*view.alive)[c.pid]) throw IllegalDecisionError("crash directive names a dead pid");
    if (in_batch[c.pid]) throw IllegalDecisionError("duplicate pid in crash batch");
    in_batch[c.pid] = true;
  }
  if (cfg.kind == AdversaryKind::Weak) {
    for (const auto& c : d.crashes)
      if (!std::binary_search(cfg.crash_prone.begin(), cfg.crash_prone.end(), c.pid))
        throw IllegalDecisionError("weak adversary crashed outside its crash-prone set");
  } else if (cfg.kind == AdversaryKind::NonAdaptive) {
    std::vector<std::pair<Pid, std::vector<Pid>>> want;
    for (const auto& e : cfg.schedule)
      if (e.round == view.round) want.emplace_back(e.pid, e.deliver_to);
    std::vector<std::pair<Pid, std::vector<Pid>>> got;
    for (const auto& c : d.crashes) got.emplace_back(c.pid, c.deliver_to);
    std::sort(want.begin(), want.end());
    std::sort(got.begin(), got.end());
    if (want != got)
      throw IllegalDecisionError("nonadaptive decision deviates from its schedule");
  } else if (cfg.kind == AdversaryKind::KChain || cfg.kind == AdversaryKind::KOrdered) {
    std::vector<bool> down(view.config->n, false);
    for (Pid p = 0; p < view.config->n; ++p) down[p] = !(*view.alive)[p];
    for (const auto& c : d.crashes) {  // listed order = linearization
      for (Pid u : cfg.order.predecessors(c.pid))
        if (!down[u])
          throw IllegalDecisionError("ordered crash of " + std::to_string(c.pid) +
                                     " before predecessor " + std::to_string(u));
      down[c.pid] = true;
    }
  }
}

// ---- non-adaptive schedule generators -------------------------------------

// Up to f random (round, pid, delivered-subset) triples inside the given
// round window; each pid crashes at most once.
inline std::vector<ScheduleEntry> gen_random_schedule(int n, int f, int round_window,
                                                      std::uint64_t seed,
                                                      bool random_subsets = true) {
  SeqRng rng(derive_seed(seed, seedtag::kSchedule));
  std::vector<Pid> pids(n);
  for (Pid p = 0; p < n; ++p) pids[p] = p;
  rng.shuffle(pids);
  int count = f > 0 ? static_cast<int>(rng.next_below(static_cast<std::uint64_t>(f) + 1)) : 0;
  std::vector<ScheduleEntry> out;
  for (int i = 0; i < count; ++i) {
    ScheduleEntry e;
    e.pid = pids[i];
    e.round = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(round_window)));
    if (random_subsets)
      for (Pid r = 0; r < n; ++r)
        if (r != e.pid && rng.next_u01() < 0.3) e.deliver_to.push_back(r);
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(),
            [](const ScheduleEntry& a, const ScheduleEntry& b) { return a.round < b.round; });
  return out;
}

// Schedule that gambles on election rounds: crashes random pids exactly at
// the rounds where announcements would be queued, with empty deliveries.
inline std::vector<ScheduleEntry> gen_leader_guess_schedule(int n, int f, int epoch_length,
                                                            int election_offset, int epochs,
                                                            std::uint64_t seed) {
  SeqRng rng(derive_seed(seed, seedtag::kSchedule, 0x4c47ULL));
  std::vector<Pid> pids(n);
  for (Pid p = 0; p < n; ++p) pids[p] = p;
  rng.shuffle(pids);
  std::vector<ScheduleEntry> out;
  int used = 0;
  for (int e = 0; e < epochs && used < f; ++e) {
    int per_epoch = 1 + static_cast<int>(rng.next_below(2));
    for (int i = 0; i < per_epoch && used < f; ++i)
      out.push_back({e * epoch_length + election_offset, pids[used++], {}});
  }
  return out;
}

}  // namespace consim
