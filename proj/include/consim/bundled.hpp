#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "consim/scenario.hpp"

// The bundled scenario catalog: the experiments that reproduce the election
// lemmas, the epoch-count and work structure, the chain-order behaviour,
// the Dilworth machinery, message accounting and the strong/weak
// separation, plus the small-instance model check. Each entry is an
// embedded scenario config (parsed by the normal parser) with a verdict
// function layered on the generic engine; a few entries replace the engine
// with special sampling and keep their own CSV schema.

namespace consim {

namespace verdict {

inline std::string pass_fail(bool ok, const std::string& what) {
  return (ok ? std::string("PASS ") : std::string("FAIL ")) + what;
}

template <typename Sel>
inline std::vector<double> collect(const ScenarioResult& res, const std::string& label, Sel sel) {
  std::vector<double> out;
  for (const auto& r : res.rows)
    if (r.grid == label) out.push_back(sel(r));
  return out;
}

struct LinFit {
  double slope = 0, intercept = 0, r2 = 0;
};

inline LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  LinFit f;
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  f.slope = denom != 0 ? (n * sxy - sx * sy) / denom : 0;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0, ss_tot = 0, ybar = sy / n;
  for (std::size_t i = 0; i < n; ++i) {
    double fit = f.intercept + f.slope * x[i];
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

}  // namespace verdict

// ---- special runners -------------------------------------------------------

namespace special {

// lemma1: empirical P(L < 6n/(n-f)) per grid point against the exact
// binomial tail oracle.
inline void lemma1(const Scenario& sc, const RunnerOptions& opts, ScenarioResult& res) {
  int trials = opts.trials_override > 0 ? opts.trials_override : sc.trials;
  std::ostringstream csv;
  csv << "#consim-lemma1-v1\n";
  csv << "scenario,n,f,bound,empirical,oracle,stderr,trials,pass\n";
  for (const auto& g : expand_grid(sc)) {
    double p = 1.0 / (g.n - g.f);
    double bound = 6.0 * g.n / (g.n - g.f);
    int t_at_least = static_cast<int>(std::ceil(bound - 1e-12));
    long long hits = 0;
    for (int t = 0; t < trials; ++t) {
      int L = sample_election_count(g.n, p, derive_seed(sc.seed(), seedtag::kTrial, t), 0);
      if (L < bound) ++hits;
    }
    double empirical = static_cast<double>(hits) / trials;
    double oracle = 1.0 - binomial_tail(g.n, p, t_at_least);
    double se = std::sqrt(std::max(oracle * (1 - oracle), empirical * (1 - empirical)) / trials);
    bool pass = empirical >= 0.9 && std::abs(empirical - oracle) <= 3 * se + 1e-9;
    res.verdicts.push_back(verdict::pass_fail(
        pass, sc.name + " n=" + std::to_string(g.n) + " f=" + std::to_string(g.f) +
                  ": P(L<" + std::to_string(bound) + ") = " + std::to_string(empirical) +
                  " (oracle " + std::to_string(oracle) + ", floor 0.9)"));
    csv << sc.name << "," << g.n << "," << g.f << "," << bound << "," << empirical << ","
        << oracle << "," << se << "," << trials << "," << pass << "\n";
  }
  if (opts.write_csv) {
    std::filesystem::create_directories(opts.out_dir);
    std::ofstream f(std::filesystem::path(opts.out_dir) / sc.runs_csv);
    f << csv.str();
  }
  res.notes.push_back(csv.str());
}

// lemma2: at least one fault-resistant leader with probability matching
// 1-(1-1/(n-f))^(n-f), floor 6/10.
inline void lemma2(const Scenario& sc, const RunnerOptions& opts, ScenarioResult& res) {
  int trials = opts.trials_override > 0 ? opts.trials_override : sc.trials;
  std::ostringstream csv;
  csv << "#consim-lemma2-v1\n";
  csv << "scenario,n,f,empirical,closed_form,floor,trials,pass\n";
  for (const auto& g : expand_grid(sc)) {
    Lemma2Result r = check_lemma2(g.n, g.f, trials, sc.seed());
    res.verdicts.push_back(verdict::pass_fail(
        r.pass, sc.name + " n=" + std::to_string(g.n) + " f=" + std::to_string(g.f) +
                    ": P(fault-resistant leader) = " + std::to_string(r.empirical) +
                    " vs closed form " + std::to_string(r.closed_form) + " (+-0.01, floor 0.6)"));
    csv << sc.name << "," << g.n << "," << g.f << "," << r.empirical << "," << r.closed_form
        << "," << r.floor << "," << trials << "," << r.pass << "\n";
  }
  if (opts.write_csv) {
    std::filesystem::create_directories(opts.out_dir);
    std::ofstream f(std::filesystem::path(opts.out_dir) / sc.runs_csv);
    f << csv.str();
  }
  res.notes.push_back(csv.str());
}

// lemma3: l/4 < L < 3l/4 with probability at least 1 - 2 e^{-l/24}, sampling
// the gather coin at matching n* (no drop).
inline void lemma3(const Scenario& sc, const RunnerOptions& opts, ScenarioResult& res) {
  int trials = opts.trials_override > 0 ? opts.trials_override : sc.trials;
  std::vector<std::string> ls{"32", "64", "128"};
  if (auto it = sc.special_params.find("l"); it != sc.special_params.end()) ls = it->second;
  std::ostringstream csv;
  csv << "#consim-lemma3-v1\n";
  csv << "scenario,l,n_star,coin,empirical,oracle,floor,trials,pass\n";
  for (const auto& lstr : ls) {
    int l = std::stoi(lstr);
    int n_star = 4 * l;
    GatherCoin gc = gather_leader_coin(n_star, l, n_star);  // d=0, target l, coin l/(2 n*)
    long long hits = 0;
    for (int t = 0; t < trials; ++t) {
      int L = sample_election_count(n_star, gc.coin,
                                    derive_seed(sc.seed(), seedtag::kTrial, t), 0);
      if (4 * L > l && 4 * L < 3 * l) ++hits;
    }
    double empirical = static_cast<double>(hits) / trials;
    double floor = 1.0 - 2.0 * std::exp(-l / 24.0);
    // exact band probability: P(L > l/4) - P(L >= 3l/4)
    double oracle = binomial_tail(n_star, gc.coin, l / 4 + 1) -
                    binomial_tail(n_star, gc.coin, (3 * l + 3) / 4);
    bool pass = empirical >= floor;
    res.verdicts.push_back(verdict::pass_fail(
        pass, sc.name + " l=" + std::to_string(l) + ": P(l/4<L<3l/4) = " +
                  std::to_string(empirical) + " >= " + std::to_string(floor) + " (exact " +
                  std::to_string(oracle) + ")"));
    csv << sc.name << "," << l << "," << n_star << "," << gc.coin << "," << empirical << ","
        << oracle << "," << floor << "," << trials << "," << pass << "\n";
  }
  if (opts.write_csv) {
    std::filesystem::create_directories(opts.out_dir);
    std::ofstream f(std::filesystem::path(opts.out_dir) / sc.runs_csv);
    f << csv.str();
  }
  res.notes.push_back(csv.str());
}

// modelcheck: exhaustive adversary search at n=3, f=2, horizon 60, all 8
// input vectors, for the full protocol and the committee rule standalone.
inline void modelcheck(const Scenario& sc, const RunnerOptions& opts, ScenarioResult& res) {
  std::ostringstream csv;
  csv << "#consim-modelcheck-v1\n";
  csv << "scenario,protocol,inputs,states,branches,max_rounds,truncated,violations\n";
  SystemConfig cfg;
  cfg.n = sc.n > 0 ? sc.n : 3;
  cfg.f = resolve_f_token(sc.f_token, cfg.n);
  cfg.seed = sc.seed();
  cfg.horizon = sc.horizon > 0 ? sc.horizon : 60;
  long long total_violations = 0;
  for (Variant variant : {Variant::A, Variant::CommitteeOnly}) {
    for (int bits = 0; bits < (1 << cfg.n); ++bits) {
      std::vector<std::int8_t> inputs(cfg.n);
      std::string istr;
      for (Pid p = 0; p < cfg.n; ++p) {
        inputs[p] = (bits >> p) & 1;
        istr += inputs[p] ? '1' : '0';
      }
      ProtocolParams params;
      params.variant = variant;
      SearchReport rep = exhaustive_search(cfg, params, inputs, cfg.horizon);
      total_violations += static_cast<long long>(rep.violations.size());
      csv << sc.name << "," << to_string(variant) << "," << istr << "," << rep.states << ","
          << rep.branches << "," << rep.max_rounds_to_decision << "," << rep.truncated << ","
          << rep.violations.size() << "\n";
      for (const auto& v : rep.violations)
        res.verdicts.push_back(
            verdict::pass_fail(false, sc.name + " " + std::string(to_string(variant)) + " inputs=" +
                                          istr + ": " + v.to_string() + " witness: " + rep.witness));
      if (rep.guard_hit)
        res.verdicts.push_back(verdict::pass_fail(
            false, sc.name + ": search truncated by state guard (result incomplete)"));
    }
  }
  res.safety_violations += total_violations;
  res.verdicts.push_back(verdict::pass_fail(
      total_violations == 0,
      sc.name + ": zero agreement/validity violations over all adaptive schedules "
                "(both protocols, all 8 input vectors)"));
  if (opts.write_csv) {
    std::filesystem::create_directories(opts.out_dir);
    std::ofstream f(std::filesystem::path(opts.out_dir) / sc.runs_csv);
    f << csv.str();
  }
  res.notes.push_back(csv.str());
}

// thm3: Dilworth cover size == brute-force max antichain on exhaustive
// small posets and random 12-element posets; then Algorithm C end to end on
// generated thick orders under a k-ordered leader killer.
inline void thm3_poset(const Scenario& sc, const RunnerOptions& opts, ScenarioResult& res) {
  SeqRng rng(derive_seed(sc.seed(), seedtag::kOrderGen, 0x706fULL));
  std::ostringstream csv;
  csv << "#consim-thm3-v1\n";
  csv << "scenario,batch,instance,n,cover,antichain,thickness,match\n";
  long long mismatches = 0;
  auto check_instance = [&](const char* batch, int idx, const PartialOrder& order) {
    int cover = static_cast<int>(dilworth_cover(order).size());
    int anti = max_antichain_bruteforce(order);
    int thick = order.thickness();
    bool match = cover == anti && thick == anti;
    if (!match) ++mismatches;
    csv << sc.name << "," << batch << "," << idx << "," << order.size() << "," << cover << ","
        << anti << "," << thick << "," << match << "\n";
  };
  // random Hasse subsets over <= 7 elements
  for (int i = 0; i < 200; ++i) {
    int n = 1 + static_cast<int>(rng.next_below(7));
    std::vector<std::pair<Pid, Pid>> edges;
    double density = rng.next_u01() * 0.6;
    for (Pid u = 0; u < n; ++u)
      for (Pid v = u + 1; v < n; ++v)
        if (rng.next_u01() < density) edges.emplace_back(u, v);  // u<v keeps it acyclic
    check_instance("hasse7", i, PartialOrder::from_edges(n, edges));
  }
  // random 12-element posets
  for (int i = 0; i < 200; ++i) {
    int n = 12;
    std::vector<Pid> perm(n);
    for (Pid p = 0; p < n; ++p) perm[p] = p;
    rng.shuffle(perm);
    std::vector<std::pair<Pid, Pid>> edges;
    double density = 0.05 + rng.next_u01() * 0.35;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (rng.next_u01() < density) edges.emplace_back(perm[a], perm[b]);
    check_instance("rand12", i, PartialOrder::from_edges(n, edges));
  }
  res.verdicts.push_back(verdict::pass_fail(
      mismatches == 0, sc.name + ": dilworth cover == brute-force max antichain on 400 posets"));

  // generator soundness: k-chain orders have thickness exactly k, thick
  // orders at most k, all acyclic by construction
  bool gen_ok = true;
  for (int i = 0; i < 100; ++i) {
    int n = 6 + static_cast<int>(rng.next_below(10));
    int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    if (gen_k_chain_order(n, k, rng.next()).thickness() != k) gen_ok = false;
    if (gen_thick_order(n, k, 0.3, rng.next()).thickness() > k) gen_ok = false;
  }
  res.verdicts.push_back(
      verdict::pass_fail(gen_ok, sc.name + ": generator thickness bounds hold on 100 draws"));

  // Algorithm C against the k-ordered adversary on thick orders
  Scenario sub = sc;
  sub.special.clear();
  sub.name = sc.name;
  sub.trials = sc.trials > 0 ? sc.trials : 100;
  sub.variant = Variant::C;
  sub.adv_kind = "kordered";
  sub.adv_strategy = "leader-killer";
  sub.order_gen = "thick";
  sub.sweep.clear();
  RunnerOptions sub_opts = opts;
  sub_opts.write_csv = false;
  ScenarioResult sub_res = run_grid_scenario(sub, sub_opts);
  res.rows = sub_res.rows;
  res.grid = sub_res.grid;
  res.safety_violations += sub_res.safety_violations;
  res.aborts += sub_res.aborts;
  res.verdicts.push_back(verdict::pass_fail(
      sub_res.safety_violations == 0 && sub_res.aborts == 0,
      sc.name + ": algorithm C on gen_thick_order instances, zero violations over " +
          std::to_string(sub_res.rows.size()) + " runs"));
  if (opts.write_csv) {
    std::filesystem::create_directories(opts.out_dir);
    std::ofstream f(std::filesystem::path(opts.out_dir) / sc.runs_csv);
    f << csv.str();
    std::ofstream agg(std::filesystem::path(opts.out_dir) / sc.agg_csv);
    write_aggregate_csv(agg, sc.name, res.grid, res.rows);
  }
  res.notes.push_back(csv.str());
}

}  // namespace special

// ---- verdicts over generic grid results -------------------------------------

namespace verdict {

inline void thm1_epochs(const Scenario& sc, ScenarioResult& res) {
  for (const auto& g : res.grid) {
    auto epochs = collect(res, g.label(), [](const RunRow& r) {
      return static_cast<double>(r.outcome.metrics.epochs);
    });
    if (epochs.empty()) continue;
    Aggregate a = aggregate(epochs);
    bool mean_ok = a.mean + 3 * a.stderr_ <= 2.5;
    long long over = 0;
    for (double e : epochs)
      if (e > 6.0) ++over;
    double frac = static_cast<double>(over) / epochs.size();
    bool quant_ok = frac <= 0.1;
    res.verdicts.push_back(pass_fail(
        mean_ok, sc.name + " " + g.label() + ": mean epochs " + std::to_string(a.mean) +
                     " + 3se <= 2.5"));
    res.verdicts.push_back(pass_fail(
        quant_ok, sc.name + " " + g.label() + ": P(epochs > 6) = " + std::to_string(frac) +
                      " <= 0.1"));
  }
}

inline void thm1_work(const Scenario& sc, ScenarioResult& res) {
  bool median_ok = true, max_ok = true;
  for (const auto& r : res.rows) {
    const auto& m = r.outcome.metrics;
    std::vector<long long> w = m.work;
    std::sort(w.begin(), w.end());
    long long median = w.empty() ? 0 : w[w.size() / 2];
    if (median > 2LL * m.epochs) median_ok = false;
    long long per_epoch_cap = 0;  // election + full committee + propagation + adoption
    for (const auto& es : m.epoch_stats) per_epoch_cap += 1 + es.committee_rounds + 3;
    if (m.max_work() > per_epoch_cap) max_ok = false;
  }
  res.verdicts.push_back(pass_fail(
      median_ok, sc.name + ": median per-process work <= 2 x epochs in every run "
                           "(non-leaders pay election plus adoption only)"));
  res.verdicts.push_back(pass_fail(
      max_ok, sc.name + ": max per-process work within the leader bound every run"));
}

inline void thm2_chains(const Scenario& sc, ScenarioResult& res) {
  std::vector<double> xs, ys;
  for (const auto& g : res.grid) {
    auto epochs = collect(res, g.label(), [](const RunRow& r) {
      return static_cast<double>(r.outcome.metrics.epochs);
    });
    if (epochs.empty()) continue;
    Aggregate a = aggregate(epochs);
    xs.push_back(std::log2(static_cast<double>(g.n) / g.k));
    ys.push_back(a.mean);
    res.notes.push_back(g.label() + ": mean epochs " + std::to_string(a.mean));
  }
  LinFit fit = linear_fit(xs, ys);
  res.verdicts.push_back(pass_fail(fit.slope > 0,
                                   sc.name + ": mean epochs slope vs log2(n/k) positive (" +
                                       std::to_string(fit.slope) + ")"));
  res.verdicts.push_back(pass_fail(
      fit.r2 >= 0.9, sc.name + ": linear fit residual bounded, R^2 = " + std::to_string(fit.r2)));

  // chain-position audit: one fixed k-chain order per n, standalone
  // election draws, per-chain mean position within 5% of (1+l_j)/2
  int draws = 40000;
  bool audit_ok = true;
  std::string worst;
  double worst_rel = 0;
  for (const auto& g : res.grid) {
    PartialOrder order = gen_k_chain_order(g.n, g.k, sc.seed() ^ g.n);
    const auto& chains = order.chain_decomposition();
    GatherCoin gc = gather_leader_coin(g.n, g.k, g.n);
    std::vector<double> pos_sum(chains.size(), 0);
    std::vector<long long> pos_cnt(chains.size(), 0);
    for (int d = 0; d < draws; ++d)
      for (Pid p = 0; p < g.n; ++p)
        if (coin_flip(derive_seed(sc.seed(), seedtag::kTrial, d), p, 1, gc.coin)) {
          auto cp = order.chain_position(p);
          pos_sum[cp.chain] += cp.position;
          ++pos_cnt[cp.chain];
        }
    for (std::size_t j = 0; j < chains.size(); ++j) {
      if (pos_cnt[j] == 0) continue;
      double mean = pos_sum[j] / pos_cnt[j];
      double expect = (1.0 + chains[j].size()) / 2.0;
      double rel = std::abs(mean - expect) / expect;
      if (rel > worst_rel) {
        worst_rel = rel;
        worst = "n=" + std::to_string(g.n) + " chain " + std::to_string(j) + " len " +
                std::to_string(chains[j].size()) + ": mean " + std::to_string(mean) + " vs " +
                std::to_string(expect);
      }
      if (rel > 0.05) audit_ok = false;
    }
  }
  res.verdicts.push_back(pass_fail(
      audit_ok, sc.name + ": elected-leader mean chain position within 5% of (1+l_j)/2 "
                          "per chain (worst: " +
                    worst + ", " + std::to_string(100 * worst_rel) + "%)"));
}

inline void separation(const Scenario& sc, ScenarioResult& res) {
  auto mean_rounds = [&](const std::string& label) {
    auto xs = collect(res, label, [](const RunRow& r) {
      return static_cast<double>(r.outcome.metrics.rounds);
    });
    return xs.empty() ? 0.0 : aggregate(xs).mean;
  };
  std::vector<int> fs;
  int n = 0, k = 1;
  for (const auto& g : res.grid) {
    if (std::find(fs.begin(), fs.end(), g.f) == fs.end()) fs.push_back(g.f);
    n = g.n;
    k = g.k;
  }
  std::sort(fs.begin(), fs.end());
  auto label = [&](const std::string& kind, int f) {
    GridPoint g{n, f, k, kind, "leader-killer"};
    return g.label();
  };
  std::vector<double> strong_means, weak_means;
  for (int f : fs) {
    strong_means.push_back(mean_rounds(label("strong", f)));
    weak_means.push_back(mean_rounds(label("weak", f)));
    res.notes.push_back("f=" + std::to_string(f) +
                        ": strong mean rounds = " + std::to_string(strong_means.back()) +
                        ", weak mean rounds = " + std::to_string(weak_means.back()));
  }
  bool increasing = true;
  for (std::size_t i = 1; i < strong_means.size(); ++i)
    if (strong_means[i] <= strong_means[i - 1]) increasing = false;
  res.verdicts.push_back(
      pass_fail(increasing, sc.name + ": strong-kind mean rounds strictly increasing in f"));
  bool weak_flat = true;
  for (double w : weak_means)
    if (w > 2.0 * weak_means.front()) weak_flat = false;
  res.verdicts.push_back(pass_fail(
      weak_flat, sc.name + ": weak-kind mean rounds within 2x of its smallest-f value"));
  double ratio = weak_means.back() > 0 ? strong_means.back() / weak_means.back() : 0;
  res.verdicts.push_back(pass_fail(ratio >= 3.0,
                                   sc.name + ": strong/weak mean-round ratio at f=" +
                                       std::to_string(fs.back()) + " is " +
                                       std::to_string(ratio) + " >= 3"));
}

// messages == sum over epochs of n(n-1) + committee_rounds*L(L-1) +
// deciders*2*(n-1), exactly, on crash-free runs.
inline void msg_accounting(const Scenario& sc, ScenarioResult& res) {
  bool ok = true;
  std::string detail;
  for (const auto& r : res.rows) {
    const auto& m = r.outcome.metrics;
    long long n = 0;
    for (const auto& g : res.grid)
      if (g.label() == r.grid) n = g.n;
    long long expect = 0;
    for (const auto& es : m.epoch_stats)
      expect += n * (n - 1) +
                static_cast<long long>(es.committee_rounds) * es.leaders * (es.leaders - 1) +
                static_cast<long long>(es.deciders) * 2 * (n - 1);
    if (expect != m.messages) {
      ok = false;
      if (detail.empty())
        detail = " (seed " + std::to_string(r.seed) + ": got " + std::to_string(m.messages) +
                 ", closed form " + std::to_string(expect) + ")";
    }
  }
  res.verdicts.push_back(pass_fail(
      ok, sc.name + ": crash-free message totals equal the closed form exactly" + detail));
}

// charged rounds/messages reproduce the gossip cost formulas exactly.
inline void gossip_costmodel(const Scenario& sc, ScenarioResult& res) {
  bool ok = true;
  std::string detail;
  for (const auto& r : res.rows) {
    const auto& m = r.outcome.metrics;
    long long n = 0, f = 0;
    for (const auto& g : res.grid)
      if (g.label() == r.grid) {
        n = g.n;
        f = g.f;
      }
    long long lg = static_cast<long long>(std::ceil(std::log2(static_cast<double>(n))));
    long long lg3 = lg * lg * lg, lg4 = lg3 * lg;
    long long rounds = 0, msgs = 0;
    int m_committee = roster_bound(static_cast<int>(n), static_cast<int>(f));
    for (const auto& es : m.epoch_stats) {
      // election round always carries traffic; committee rounds only when a
      // roster exists; propagation rounds only when someone decided
      rounds += lg3;
      msgs += n * lg4;
      if (es.leaders > 0) {
        rounds += static_cast<long long>(es.committee_rounds) * lg3;
        msgs += static_cast<long long>(es.committee_rounds) * m_committee * lg4;
      } else {
        rounds += es.committee_rounds;  // idle rounds cost one round each
      }
      if (es.deciders > 0) {
        rounds += 2 * lg3;
        msgs += 2 * n * lg4;
      } else {
        rounds += 2;  // silent propagation rounds still take a round each
      }
    }
    if (rounds != m.rounds_charged || msgs != m.messages_charged) {
      ok = false;
      if (detail.empty())
        detail = " (seed " + std::to_string(r.seed) + ": got rounds " +
                 std::to_string(m.rounds_charged) + "/" + std::to_string(rounds) + ", msgs " +
                 std::to_string(m.messages_charged) + "/" + std::to_string(msgs) + ")";
    }
  }
  res.verdicts.push_back(pass_fail(
      ok, sc.name + ": gossip cost model charges match ceil(log2 n)^3 rounds and "
                    "m*ceil(log2 n)^4 messages per invocation" +
              detail));
}

}  // namespace verdict

// ---- catalog ----------------------------------------------------------------

struct BundledScenario {
  std::string name;
  std::string config_text;
  std::function<void(const Scenario&, const RunnerOptions&, ScenarioResult&)> special;
  std::function<void(const Scenario&, ScenarioResult&)> verdict;
};

inline const std::vector<BundledScenario>& bundled_catalog() {
  static const std::vector<BundledScenario> catalog = [] {
    std::vector<BundledScenario> v;

    v.push_back({"lemma1", R"(
name = lemma1
special = lemma1
trials = 10000
[system]
n = 120
[sweep]
f = 60, 90, 108
)",
                 &special::lemma1, nullptr});

    v.push_back({"lemma2", R"(
name = lemma2
special = lemma2
trials = 100000
[system]
n = 100
f = 50
)",
                 &special::lemma2, nullptr});

    v.push_back({"lemma3", R"(
name = lemma3
special = lemma3
trials = 10000
[special]
l = 32, 64, 128
)",
                 &special::lemma3, nullptr});

    v.push_back({"thm1-epochs", R"(
name = thm1-epochs
trials = 10000
[system]
f = n/2
[protocol]
variant = A
[adversary]
kind = weak
strategy = leader-killer
[sweep]
n = 50, 100, 200
)",
                 nullptr, &verdict::thm1_epochs});

    v.push_back({"thm1-work", R"(
name = thm1-work
trials = 2000
[system]
n = 100
f = n/2
[protocol]
variant = A
[adversary]
kind = weak
strategy = leader-killer
)",
                 nullptr, &verdict::thm1_work});

    v.push_back({"thm2-chains", R"(
name = thm2-chains
trials = 2000
[system]
f = n-1
[protocol]
variant = C
k = 8
[adversary]
kind = kchain
strategy = leader-killer
[sweep]
n = 64, 128, 256, 512
)",
                 nullptr, &verdict::thm2_chains});

    v.push_back({"thm3-poset", R"(
name = thm3-poset
special = thm3
trials = 100
[system]
n = 48
f = 36
[protocol]
variant = C
k = 6
[adversary]
density = 0.2
)",
                 &special::thm3_poset, nullptr});

    v.push_back({"separation", R"(
name = separation
trials = 1000
[system]
n = 200
[protocol]
variant = A
[adversary]
strategy = leader-killer
[sweep]
kind = weak, strong
f = 50, 100, 150
)",
                 nullptr, &verdict::separation});

    v.push_back({"msg-accounting", R"(
name = msg-accounting
trials = 50
[system]
n = 10
f = 3
[protocol]
variant = A
[adversary]
kind = nonadaptive
strategy = none
)",
                 nullptr, &verdict::msg_accounting});

    v.push_back({"gossip-costmodel", R"(
name = gossip-costmodel
trials = 20
[system]
n = 16
f = 5
[protocol]
variant = A
comm = gossip-cost
[adversary]
kind = nonadaptive
strategy = none
)",
                 nullptr, &verdict::gossip_costmodel});

    v.push_back({"modelcheck-n3", R"(
name = modelcheck-n3
special = modelcheck
[system]
n = 3
f = 2
horizon = 60
)",
                 &special::modelcheck, nullptr});

    return v;
  }();
  return catalog;
}

inline std::vector<std::string> list_scenarios() {
  std::vector<std::string> names;
  for (const auto& b : bundled_catalog()) names.push_back(b.name);
  return names;
}

inline const BundledScenario* find_bundled(const std::string& name) {
  for (const auto& b : bundled_catalog())
    if (b.name == name) return &b;
  return nullptr;
}

struct BundledOutcome {
  Scenario scenario;
  ScenarioResult result;
  bool ok = false;
};

inline BundledOutcome run_bundled(const BundledScenario& b, const RunnerOptions& opts) {
  BundledOutcome out;
  out.scenario = parse_scenario(b.config_text);
  if (b.special) {
    out.result.name = out.scenario.name;
    b.special(out.scenario, opts, out.result);
  } else {
    out.result = run_grid_scenario(out.scenario, opts);
    if (b.verdict) b.verdict(out.scenario, out.result);
  }
  if (out.result.safety_violations > 0)
    out.result.verdicts.push_back("FAIL " + out.scenario.name + ": " +
                                  std::to_string(out.result.safety_violations) +
                                  " safety violations");
  if (out.result.aborts > 0 && !out.scenario.allow_aborts)
    out.result.verdicts.push_back("FAIL " + out.scenario.name + ": " +
                                  std::to_string(out.result.aborts) + " aborted runs");
  out.ok = out.result.ok(out.scenario.allow_aborts);
  return out;
}

inline BundledOutcome run_bundled(const std::string& name, const RunnerOptions& opts) {
  const BundledScenario* b = find_bundled(name);
  if (!b) {
    std::string names;
    for (const auto& s : list_scenarios()) names += (names.empty() ? "" : ", ") + s;
    throw ConfigError("unknown scenario '" + name + "'; bundled scenarios: " + names);
  }
  return run_bundled(*b, opts);
}

// Determinism probe per scenario: executions replay byte-identically; pure
// sampling specials rerun to identical verdict lines.
inline bool bundled_determinism_probe(const std::string& name) {
  const BundledScenario* b = find_bundled(name);
  if (!b) throw ConfigError("unknown scenario '" + name + "'");
  Scenario sc = parse_scenario(b->config_text);
  if (!b->special) {
    for (const auto& g : expand_grid(sc)) {
      TrialSetup ts = make_trial(sc, g, trial_seed(sc, g, 0));
      if (!replay_determinism(ts.sys, ts.proto, ts.inputs, ts.adv)) return false;
    }
    return true;
  }
  if (name == "modelcheck-n3") {
    SystemConfig cfg{3, 2, sc.seed(), 60};
    ProtocolParams params;
    SearchReport r1 = exhaustive_search(cfg, params, {1, 0, 1}, 60);
    SearchReport r2 = exhaustive_search(cfg, params, {1, 0, 1}, 60);
    return r1.states == r2.states && r1.branches == r2.branches &&
           r1.max_rounds_to_decision == r2.max_rounds_to_decision &&
           r1.violations.size() == r2.violations.size();
  }
  RunnerOptions probe;
  probe.write_csv = false;
  probe.trials_override = 50;
  ScenarioResult a, b2;
  a.name = b2.name = sc.name;
  b->special(sc, probe, a);
  b->special(sc, probe, b2);
  return a.verdicts == b2.verdicts && a.notes == b2.notes;
}

}  // namespace consim
