#pragma once

#include <atomic>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "consim/adversary.hpp"
#include "consim/kernel.hpp"
#include "consim/stats.hpp"
#include "consim/verify.hpp"

// Scenario-driven experiment runner: a scenario file names a system,
// a protocol, an adversary and an optional parameter grid; the engine runs
// seeded trials over every grid point, verifies every trace, and emits
// per-run and aggregate CSV. Config format is a flat key/value text file
// with [section] tables; the schema is documented in the README.

namespace consim {

class ConfigError : public SimError {
public:
  explicit ConfigError(const std::string& what) : SimError(what) {}
};

namespace seedtag2 {
inline constexpr std::uint64_t kInputs = 0x494e5054ULL;
}

// ---- config text ----------------------------------------------------------

struct ConfigTable {
  // section -> key -> (value, line number)
  std::map<std::string, std::map<std::string, std::pair<std::string, int>>> kv;

  bool has(const std::string& sec, const std::string& key) const {
    auto s = kv.find(sec);
    return s != kv.end() && s->second.count(key) > 0;
  }
  std::string get(const std::string& sec, const std::string& key,
                  const std::string& fallback = "") const {
    auto s = kv.find(sec);
    if (s == kv.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second.first;
  }
  int line_of(const std::string& sec, const std::string& key) const {
    auto s = kv.find(sec);
    if (s == kv.end()) return -1;
    auto k = s->second.find(key);
    return k == s->second.end() ? -1 : k->second.second;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

}  // namespace detail

inline ConfigTable parse_config_text(const std::string& text) {
  ConfigTable t;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    t.kv[section][key] = {val, lineno};
  }
  return t;
}

// "n/2" and "n-1" style budget tokens resolve against the grid point's n.
inline int resolve_f_token(const std::string& tok, int n) {
  if (tok == "n-1") return n - 1;
  if (tok == "n/2") return n / 2;
  if (tok == "n/4") return n / 4;
  if (tok == "3n/4") return 3 * n / 4;
  try {
    return std::stoi(tok);
  } catch (...) {
    throw ConfigError("bad f value '" + tok + "'");
  }
}

// ---- scenario model --------------------------------------------------------

struct Scenario {
  std::string name;
  std::string special;  // empty = generic grid scenario
  int trials = 0;
  bool allow_aborts = false;
  std::uint64_t base_seed = 0;  // 0 -> fnv1a(name)

  int n = 0;
  std::string f_token = "0";
  int horizon = 0;

  Variant variant = Variant::A;
  int k = 1;
  CommPrimitive comm = CommPrimitive::Broadcast;
  bool literal_coin = false;

  std::string adv_kind = "strong";
  std::string adv_strategy = "none";
  std::string order_gen = "kchain";  // kchain | thick
  double density = 0.15;
  double random_rate = 0.15;
  bool random_subsets = true;

  std::map<std::string, std::vector<std::string>> sweep;
  std::map<std::string, std::vector<std::string>> special_params;

  std::string runs_csv;  // default <name>_runs.csv
  std::string agg_csv;   // default <name>_aggregate.csv

  std::uint64_t seed() const { return base_seed ? base_seed : fnv1a(name.c_str()); }
};

inline Scenario parse_scenario(const std::string& text) {
  ConfigTable t = parse_config_text(text);
  Scenario s;
  s.name = t.get("", "name");
  if (s.name.empty()) throw ConfigError("config field 'name': missing or empty");
  s.special = t.get("", "special");
  {
    std::string tr = t.get("", "trials");
    if (tr.empty() && s.special.empty())
      throw ConfigError("config field 'trials': missing or empty");
    if (!tr.empty()) {
      try {
        s.trials = std::stoi(tr);
      } catch (...) {
        throw ConfigError("config line " + std::to_string(t.line_of("", "trials")) +
                          ": trials must be an integer");
      }
      if (s.trials <= 0)
        throw ConfigError("config line " + std::to_string(t.line_of("", "trials")) +
                          ": trials must be positive");
    }
  }
  s.allow_aborts = t.get("", "allow_aborts", "false") == "true";
  if (t.has("", "seed")) s.base_seed = std::stoull(t.get("", "seed"));

  if (t.has("system", "n")) s.n = std::stoi(t.get("system", "n"));
  s.f_token = t.get("system", "f", "0");
  if (t.has("system", "horizon")) s.horizon = std::stoi(t.get("system", "horizon"));

  std::string var = t.get("protocol", "variant", "A");
  if (var == "A")
    s.variant = Variant::A;
  else if (var == "C")
    s.variant = Variant::C;
  else if (var == "committee")
    s.variant = Variant::CommitteeOnly;
  else
    throw ConfigError("config line " + std::to_string(t.line_of("protocol", "variant")) +
                      ": variant must be A, C or committee");
  if (t.has("protocol", "k")) s.k = std::stoi(t.get("protocol", "k"));
  std::string comm = t.get("protocol", "comm", "broadcast");
  if (comm == "broadcast")
    s.comm = CommPrimitive::Broadcast;
  else if (comm == "gossip-cost")
    s.comm = CommPrimitive::GossipCostModel;
  else
    throw ConfigError("config line " + std::to_string(t.line_of("protocol", "comm")) +
                      ": comm must be broadcast or gossip-cost");
  s.literal_coin = t.get("protocol", "literal_coin", "false") == "true";

  s.adv_kind = t.get("adversary", "kind", "strong");
  s.adv_strategy = t.get("adversary", "strategy", "none");
  s.order_gen = t.get("adversary", "order", "kchain");
  if (t.has("adversary", "density")) s.density = std::stod(t.get("adversary", "density"));
  if (t.has("adversary", "random_rate"))
    s.random_rate = std::stod(t.get("adversary", "random_rate"));
  s.random_subsets = t.get("adversary", "random_subsets", "true") == "true";

  if (auto it = t.kv.find("sweep"); it != t.kv.end())
    for (const auto& [key, val] : it->second) s.sweep[key] = detail::split_list(val.first);
  if (auto it = t.kv.find("special"); it != t.kv.end())
    for (const auto& [key, val] : it->second)
      s.special_params[key] = detail::split_list(val.first);

  s.runs_csv = t.get("output", "runs", s.name + "_runs.csv");
  s.agg_csv = t.get("output", "aggregate", s.name + "_aggregate.csv");
  return s;
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---- grid ------------------------------------------------------------------

struct GridPoint {
  int n = 0;
  int f = 0;
  int k = 1;
  std::string kind;
  std::string strategy;

  std::string label() const {
    std::ostringstream os;
    os << "n=" << n << ";f=" << f << ";k=" << k << ";kind=" << kind << ";strategy=" << strategy;
    return os.str();
  }
};

inline std::vector<GridPoint> expand_grid(const Scenario& s) {
  auto list_or = [&](const char* key, const std::string& fallback) {
    auto it = s.sweep.find(key);
    if (it != s.sweep.end() && !it->second.empty()) return it->second;
    return std::vector<std::string>{fallback};
  };
  std::vector<std::string> ns = list_or("n", std::to_string(s.n));
  std::vector<std::string> fs = list_or("f", s.f_token);
  std::vector<std::string> ks = list_or("k", std::to_string(s.k));
  std::vector<std::string> kinds = list_or("kind", s.adv_kind);
  std::vector<std::string> strategies = list_or("strategy", s.adv_strategy);

  std::vector<GridPoint> out;
  for (const auto& nstr : ns)
    for (const auto& fstr : fs)
      for (const auto& kstr : ks)
        for (const auto& kind : kinds)
          for (const auto& strat : strategies) {
            GridPoint g;
            g.n = std::stoi(nstr);
            g.f = resolve_f_token(fstr, g.n);
            g.k = std::stoi(kstr);
            g.kind = kind;
            g.strategy = strat;
            if (g.n < 1 || g.f < 0 || g.f >= g.n)
              throw ConfigError("grid point " + g.label() + ": invalid (n, f)");
            out.push_back(std::move(g));
          }
  return out;
}

// ---- one trial -------------------------------------------------------------

inline AdversaryKind adversary_kind_from(const std::string& s) {
  if (s == "strong") return AdversaryKind::Strong;
  if (s == "weak") return AdversaryKind::Weak;
  if (s == "nonadaptive") return AdversaryKind::NonAdaptive;
  if (s == "kchain") return AdversaryKind::KChain;
  if (s == "kordered") return AdversaryKind::KOrdered;
  throw ConfigError("unknown adversary kind '" + s + "'");
}

inline std::uint64_t trial_seed(const Scenario& s, const GridPoint& g, int trial) {
  return derive_seed(s.seed() ^ fnv1a(g.label().c_str()), seedtag::kTrial,
                     static_cast<std::uint64_t>(trial));
}

inline std::vector<std::int8_t> trial_inputs(int n, std::uint64_t seed) {
  std::vector<std::int8_t> in(n);
  for (Pid p = 0; p < n; ++p)
    in[p] = coin_flip(derive_seed(seed, seedtag2::kInputs), p, 0, 0.5) ? 1 : 0;
  return in;
}

// Builds the full (system, protocol, adversary) triple for one seeded trial.
struct TrialSetup {
  SystemConfig sys;
  ProtocolParams proto;
  std::vector<std::int8_t> inputs;
  AdversaryConfig adv;
};

inline TrialSetup make_trial(const Scenario& s, const GridPoint& g, std::uint64_t seed) {
  TrialSetup ts;
  ts.sys.n = g.n;
  ts.sys.f = g.f;
  ts.sys.seed = seed;
  ts.sys.horizon = s.horizon;
  ts.proto.variant = s.variant;
  ts.proto.k = g.k;
  ts.proto.comm = s.comm;
  ts.proto.literal_gather_coin = s.literal_coin;
  ts.inputs = trial_inputs(g.n, seed);

  AdversaryConfig& a = ts.adv;
  a.kind = adversary_kind_from(g.kind);
  a.f = g.f;
  a.seed = derive_seed(seed, seedtag::kAdversary);
  a.random_rate = s.random_rate;
  a.random_subsets = s.random_subsets;
  if (a.kind == AdversaryKind::Weak) a.crash_prone = sample_crash_prone(g.n, g.f, seed);
  if (a.kind == AdversaryKind::KChain)
    a.order = gen_k_chain_order(g.n, g.k, seed);
  else if (a.kind == AdversaryKind::KOrdered)
    a.order = s.order_gen == "thick" ? gen_thick_order(g.n, g.k, s.density, seed)
                                     : gen_k_chain_order(g.n, g.k, seed);

  const std::string& strat = g.strategy;
  if (strat == "none") {
    a.strategy = StrategyKind::None;
  } else if (strat == "leader-killer") {
    a.strategy = StrategyKind::LeaderKiller;
  } else if (strat == "whole-chain-killer") {
    a.strategy = StrategyKind::WholeChainKiller;
  } else if (strat == "group-crash") {
    a.strategy = StrategyKind::GroupCrash;
    a.groups = make_group_partition(g.n, g.f);
  } else if (strat == "random-adaptive") {
    a.strategy = StrategyKind::RandomAdaptive;
  } else if (strat == "random-schedule" || strat == "leader-guess-schedule") {
    if (a.kind != AdversaryKind::NonAdaptive)
      throw ConfigError("strategy '" + strat + "' requires the nonadaptive kind");
    a.strategy = StrategyKind::None;
    int budget_a = ts.proto.variant == Variant::A ? committee_budget_a(g.n, g.f)
                                                  : committee_budget_c(g.k);
    int epoch_len = (ts.proto.variant == Variant::C ? 1 : 0) + 1 + budget_a + 2;
    if (strat == "random-schedule")
      a.schedule = gen_random_schedule(g.n, g.f, 4 * epoch_len, seed);
    else
      a.schedule = gen_leader_guess_schedule(g.n, g.f, epoch_len,
                                             ts.proto.variant == Variant::C ? 1 : 0, 6, seed);
  } else {
    throw ConfigError("unknown strategy '" + strat + "'");
  }
  return ts;
}

struct TrialOutcome {
  RunMetrics metrics;
  int safety_violations = 0;
  bool aborted = false;
  std::string first_violation;
};

inline TrialOutcome run_one_trial(const Scenario& s, const GridPoint& g, std::uint64_t seed,
                                  ExecutionTrace* keep_trace = nullptr) {
  TrialSetup ts = make_trial(s, g, seed);
  ExecutionTrace local;
  ExecutionTrace& trace = keep_trace ? *keep_trace : local;
  run_execution(ts.sys, ts.proto, ts.inputs, ts.adv, trace);
  TrialOutcome out;
  out.metrics = extract(trace);
  out.aborted = trace.outcome == RunOutcome::Aborted;
  for (const auto& v : check_trace(trace, ts.sys, ts.adv))
    if (is_safety_violation(v.kind)) {
      ++out.safety_violations;
      if (out.first_violation.empty()) out.first_violation = v.to_string();
    }
  return out;
}

// ---- engine ----------------------------------------------------------------

struct RunnerOptions {
  int trials_override = 0;
  std::uint64_t seed_override = 0;
  std::string out_dir = "out";
  bool dump_failing = false;
  int jobs = 0;  // 0 = hardware concurrency
  bool write_csv = true;
};

struct RunRow {
  std::string grid;
  int trial = 0;
  std::uint64_t seed = 0;
  TrialOutcome outcome;
};

struct ScenarioResult {
  std::string name;
  std::vector<GridPoint> grid;
  std::vector<RunRow> rows;
  long long safety_violations = 0;
  long long aborts = 0;
  std::vector<std::string> verdicts;  // "PASS ..." / "FAIL ..." lines
  std::vector<std::string> notes;

  bool verdicts_ok() const {
    for (const auto& v : verdicts)
      if (v.rfind("FAIL", 0) == 0) return false;
    return true;
  }
  bool ok(bool allow_aborts) const {
    return safety_violations == 0 && (allow_aborts || aborts == 0) && verdicts_ok();
  }
};

inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  int workers = jobs > 0 ? jobs : static_cast<int>(hw ? hw : 1);
  workers = std::max(1, std::min<int>(workers, static_cast<int>(count ? count : 1)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

inline void write_runs_csv(std::ostream& os, const std::string& scenario,
                           const std::vector<RunRow>& rows) {
  os << "#consim-runs-v1\n";
  os << "scenario,grid,seed,rounds,messages,epochs,max_work,decided,violations,aborted\n";
  for (const auto& r : rows) {
    os << scenario << "," << r.grid << "," << r.seed << "," << r.outcome.metrics.rounds << ","
       << r.outcome.metrics.messages << "," << r.outcome.metrics.epochs << ","
       << r.outcome.metrics.max_work() << "," << static_cast<int>(r.outcome.metrics.decided_bit)
       << "," << r.outcome.safety_violations << "," << (r.outcome.aborted ? 1 : 0) << "\n";
  }
}

inline void write_aggregate_csv(std::ostream& os, const std::string& scenario,
                                const std::vector<GridPoint>& grid,
                                const std::vector<RunRow>& rows) {
  os << "#consim-agg-v1\n";
  os << "scenario,grid,metric,mean,stderr,min,max,p50,p90,p99,count,seed_lo,seed_hi\n";
  for (const auto& g : grid) {
    std::string label = g.label();
    std::vector<double> rounds, messages, epochs, max_work;
    std::uint64_t lo = ~0ULL, hi = 0;
    for (const auto& r : rows) {
      if (r.grid != label) continue;
      rounds.push_back(r.outcome.metrics.rounds);
      messages.push_back(static_cast<double>(r.outcome.metrics.messages));
      epochs.push_back(r.outcome.metrics.epochs);
      max_work.push_back(static_cast<double>(r.outcome.metrics.max_work()));
      lo = std::min(lo, r.seed);
      hi = std::max(hi, r.seed);
    }
    if (rounds.empty()) continue;
    auto emit = [&](const char* metric, const std::vector<double>& xs) {
      Aggregate a = aggregate(xs);
      os << scenario << "," << label << "," << metric << "," << a.mean << "," << a.stderr_ << ","
         << a.min << "," << a.max << "," << a.p50 << "," << a.p90 << "," << a.p99 << ","
         << a.count << "," << lo << "," << hi << "\n";
    };
    emit("rounds", rounds);
    emit("messages", messages);
    emit("epochs", epochs);
    emit("max_work", max_work);
  }
}

// Runs every (grid point x trial); verifier on every trace; CSV artifacts
// under opts.out_dir. Generic engine; bundled-scenario verdicts are layered
// on top by the caller.
inline ScenarioResult run_grid_scenario(const Scenario& sc, const RunnerOptions& opts) {
  ScenarioResult res;
  res.name = sc.name;
  res.grid = expand_grid(sc);
  int trials = opts.trials_override > 0 ? opts.trials_override : sc.trials;
  if (trials <= 0) throw ConfigError("scenario '" + sc.name + "': no trials configured");

  Scenario sc2 = sc;
  if (opts.seed_override) sc2.base_seed = opts.seed_override;

  const std::size_t total = res.grid.size() * static_cast<std::size_t>(trials);
  res.rows.resize(total);
  std::vector<std::string> labels;
  labels.reserve(res.grid.size());
  for (const auto& g : res.grid) labels.push_back(g.label());

  std::atomic<long long> violations{0}, aborts{0};
  parallel_for(total, opts.jobs, [&](std::size_t idx) {
    std::size_t gi = idx / static_cast<std::size_t>(trials);
    int ti = static_cast<int>(idx % static_cast<std::size_t>(trials));
    const GridPoint& g = res.grid[gi];
    std::uint64_t seed = trial_seed(sc2, g, ti);
    RunRow row;
    row.grid = labels[gi];
    row.trial = ti;
    row.seed = seed;
    if (opts.dump_failing) {
      ExecutionTrace trace;
      row.outcome = run_one_trial(sc2, g, seed, &trace);
      if (row.outcome.safety_violations > 0 || row.outcome.aborted) {
        std::filesystem::create_directories(opts.out_dir);
        std::ofstream dump(std::filesystem::path(opts.out_dir) /
                           (sc2.name + "_fail_" + std::to_string(seed) + ".trace"));
        trace.serialize(dump);
      }
    } else {
      row.outcome = run_one_trial(sc2, g, seed);
    }
    if (row.outcome.safety_violations) violations += row.outcome.safety_violations;
    if (row.outcome.aborted) ++aborts;
    res.rows[idx] = std::move(row);
  });
  res.safety_violations = violations.load();
  res.aborts = aborts.load();

  if (opts.write_csv) {
    std::filesystem::create_directories(opts.out_dir);
    std::ofstream runs(std::filesystem::path(opts.out_dir) / sc.runs_csv);
    write_runs_csv(runs, sc.name, res.rows);
    std::ofstream agg(std::filesystem::path(opts.out_dir) / sc.agg_csv);
    write_aggregate_csv(agg, sc.name, res.grid, res.rows);
  }
  return res;
}

// Rows for one grid label.
inline std::vector<const RunRow*> rows_for(const ScenarioResult& res, const std::string& label) {
  std::vector<const RunRow*> out;
  for (const auto& r : res.rows)
    if (r.grid == label) out.push_back(&r);
  return out;
}

}  // namespace consim
