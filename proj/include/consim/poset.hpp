#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "consim/core.hpp"
#include "consim/rng.hpp"

// Partial-order machinery for the ordered adversaries: construction from
// Hasse edges, transitive closure, maximum-antichain size (thickness) via
// Dilworth's equality, a minimum chain cover recovered from bipartite
// matching, generators for adversary orders, and a brute-force antichain
// oracle for testing.

namespace consim {

namespace detail {

// Square bit matrix; row r holds the strict successors of r.
class BitMatrix {
public:
  BitMatrix() = default;
  explicit BitMatrix(int n)
      : n_(n), words_((n + 63) / 64), bits_(static_cast<std::size_t>(n) * words_, 0) {}

  void set(int r, int c) { bits_[static_cast<std::size_t>(r) * words_ + c / 64] |= 1ULL << (c % 64); }
  bool get(int r, int c) const {
    return (bits_[static_cast<std::size_t>(r) * words_ + c / 64] >> (c % 64)) & 1ULL;
  }
  void or_row(int r, int s) {
    std::uint64_t* a = &bits_[static_cast<std::size_t>(r) * words_];
    const std::uint64_t* b = &bits_[static_cast<std::size_t>(s) * words_];
    for (int w = 0; w < words_; ++w) a[w] |= b[w];
  }
  int size() const { return n_; }

private:
  int n_ = 0;
  int words_ = 0;
  std::vector<std::uint64_t> bits_;
};

}  // namespace detail

// The adversary's precedence structure over pids [0, n). `u precedes v`
// means the adversary must crash u no later than v (same-round batches are
// sequenced internally). Immutable after construction; cheap to share
// read-only across trials.
class PartialOrder {
public:
  PartialOrder() = default;

  // Build from an arbitrary edge list (u, v) meaning u precedes v.
  // Throws on cycles; transitive duplicates are fine, the stored Hasse set
  // is the transitive reduction.
  static PartialOrder from_edges(int n, const std::vector<std::pair<Pid, Pid>>& edges) {
    PartialOrder p;
    p.n_ = n;
    std::vector<std::vector<Pid>> succ(n);
    for (auto [u, v] : edges) {
      if (u < 0 || u >= n || v < 0 || v >= n || u == v)
        throw SimError("PartialOrder: bad edge");
      succ[u].push_back(v);
    }
    p.build_closure(succ);
    p.reduce(succ);
    return p;
  }

  // Disjoint chains, each listed head-first; the chains are cached for
  // chain_position and the chain-prefix strategies.
  static PartialOrder from_chains(int n, std::vector<std::vector<Pid>> chains) {
    std::vector<std::pair<Pid, Pid>> edges;
    for (const auto& c : chains)
      for (std::size_t i = 0; i + 1 < c.size(); ++i)
        edges.emplace_back(c[i], c[i + 1]);
    PartialOrder p = from_edges(n, edges);
    p.chains_ = std::move(chains);
    return p;
  }

  // Arbitrary edges plus a caller-supplied chain decomposition to cache
  // (the chains must remain totally ordered under the final closure).
  static PartialOrder from_edges_with_chains(int n,
                                             const std::vector<std::pair<Pid, Pid>>& edges,
                                             std::vector<std::vector<Pid>> chains) {
    PartialOrder p = from_edges(n, edges);
    p.chains_ = std::move(chains);
    return p;
  }

  int size() const { return n_; }
  bool precedes(Pid u, Pid v) const { return closure_.get(u, v); }
  const std::vector<std::pair<Pid, Pid>>& hasse_edges() const { return hasse_; }

  bool has_chain_decomposition() const { return !chains_.empty(); }
  const std::vector<std::vector<Pid>>& chain_decomposition() const {
    if (chains_.empty()) chains_ = min_chain_cover();
    return chains_;
  }

  std::vector<Pid> predecessors(Pid v) const {
    std::vector<Pid> out;
    for (Pid u = 0; u < n_; ++u)
      if (closure_.get(u, v)) out.push_back(u);
    return out;
  }

  // All of v's predecessors plus v, topologically sorted. For a chain order
  // this is exactly the chain prefix through v.
  std::vector<Pid> downward_closure(Pid v) const {
    std::vector<Pid> out = predecessors(v);
    out.push_back(v);
    topo_sort(out);
    return out;
  }

  // Sorts `pids` into a linear extension. u < v implies preds(u) is a
  // proper subset of preds(v), so ascending predecessor count is always a
  // valid topological order.
  void topo_sort(std::vector<Pid>& pids) const {
    const auto& counts = pred_counts();
    std::sort(pids.begin(), pids.end(), [&](Pid a, Pid b) {
      if (counts[a] != counts[b]) return counts[a] < counts[b];
      return a < b;
    });
  }

  const std::vector<int>& pred_counts() const {
    if (pred_counts_.empty() && n_ > 0) {
      pred_counts_.assign(n_, 0);
      for (Pid u = 0; u < n_; ++u)
        for (Pid v = 0; v < n_; ++v)
          if (closure_.get(u, v)) ++pred_counts_[v];
    }
    return pred_counts_;
  }

  // Maximum antichain size == minimum chain cover size (Dilworth).
  int thickness() const {
    if (thickness_ < 0) thickness_ = n_ - max_matching();
    return thickness_;
  }

  // Minimum chain cover via Kuhn's augmenting-path matching on the
  // comparability split: a matched edge (u -> v) links u and v into one
  // chain; cover size = n - |matching| = thickness.
  std::vector<std::vector<Pid>> min_chain_cover() const {
    std::vector<Pid> match_to = matching();
    std::vector<Pid> prev(n_, -1);
    for (Pid u = 0; u < n_; ++u)
      if (match_to[u] >= 0) prev[match_to[u]] = u;
    std::vector<std::vector<Pid>> chains;
    for (Pid v = 0; v < n_; ++v) {
      if (prev[v] >= 0) continue;  // not a chain head
      std::vector<Pid> chain;
      for (Pid x = v; x >= 0; x = match_to[x]) chain.push_back(x);
      chains.push_back(std::move(chain));
    }
    return chains;
  }

  struct ChainPos {
    int chain = -1;
    int position = 0;  // 1-based
    int length = 0;
  };
  ChainPos chain_position(Pid pid) const {
    if (pid < 0 || pid >= n_) throw SimError("chain_position: unknown pid");
    const auto& chains = chain_decomposition();
    for (std::size_t j = 0; j < chains.size(); ++j)
      for (std::size_t i = 0; i < chains[j].size(); ++i)
        if (chains[j][i] == pid)
          return {static_cast<int>(j), static_cast<int>(i + 1),
                  static_cast<int>(chains[j].size())};
    throw SimError("chain_position: pid missing from decomposition");
  }

  // "elements N" then one "edge u v" line per Hasse edge.
  std::string serialize() const {
    std::ostringstream os;
    os << "elements " << n_ << "\n";
    for (auto [u, v] : hasse_) os << "edge " << u << " " << v << "\n";
    return os.str();
  }

  static PartialOrder deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string word;
    int n = -1;
    std::vector<std::pair<Pid, Pid>> edges;
    while (is >> word) {
      if (word == "elements") {
        if (!(is >> n)) throw SimError("PartialOrder: bad elements line");
      } else if (word == "edge") {
        Pid u, v;
        if (!(is >> u >> v)) throw SimError("PartialOrder: bad edge line");
        edges.emplace_back(u, v);
      } else {
        throw SimError("PartialOrder: unknown token '" + word + "'");
      }
    }
    if (n < 0) throw SimError("PartialOrder: missing elements line");
    return from_edges(n, edges);
  }

private:
  void build_closure(const std::vector<std::vector<Pid>>& succ) {
    closure_ = detail::BitMatrix(n_);
    std::vector<int> color(n_, 0);
    std::vector<Pid> order;
    order.reserve(n_);
    for (Pid s = 0; s < n_; ++s) {
      if (color[s]) continue;
      std::vector<std::pair<Pid, std::size_t>> stack{{s, 0}};
      color[s] = 1;
      while (!stack.empty()) {
        auto& [v, idx] = stack.back();
        if (idx < succ[v].size()) {
          Pid w = succ[v][idx++];
          if (color[w] == 1) throw SimError("PartialOrder: cycle detected");
          if (color[w] == 0) {
            color[w] = 1;
            stack.emplace_back(w, 0);
          }
        } else {
          color[v] = 2;
          order.push_back(v);
          stack.pop_back();
        }
      }
    }
    // post-order: successors are finalized before their predecessors
    for (Pid v : order)
      for (Pid w : succ[v]) {
        closure_.set(v, w);
        closure_.or_row(v, w);
      }
  }

  void reduce(const std::vector<std::vector<Pid>>& succ) {
    hasse_.clear();
    for (Pid u = 0; u < n_; ++u) {
      std::vector<Pid> out;
      for (Pid v : succ[u])
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
      for (Pid v : out) {
        bool redundant = false;
        for (Pid w = 0; w < n_ && !redundant; ++w)
          if (w != v && w != u && closure_.get(u, w) && closure_.get(w, v)) redundant = true;
        if (!redundant) hasse_.emplace_back(u, v);
      }
    }
    std::sort(hasse_.begin(), hasse_.end());
    hasse_.erase(std::unique(hasse_.begin(), hasse_.end()), hasse_.end());
  }

  std::vector<Pid> matching() const {
    std::vector<Pid> match_to(n_, -1);    // left u -> right v
    std::vector<Pid> match_from(n_, -1);  // right v -> left u
    std::vector<char> used;
    auto try_kuhn = [&](auto&& self, Pid u) -> bool {
      for (Pid v = 0; v < n_; ++v) {
        if (!closure_.get(u, v) || used[v]) continue;
        used[v] = 1;
        if (match_from[v] < 0 || self(self, match_from[v])) {
          match_to[u] = v;
          match_from[v] = u;
          return true;
        }
      }
      return false;
    };
    for (Pid u = 0; u < n_; ++u) {
      used.assign(n_, 0);
      try_kuhn(try_kuhn, u);
    }
    return match_to;
  }

  int max_matching() const {
    auto m = matching();
    return static_cast<int>(std::count_if(m.begin(), m.end(), [](Pid v) { return v >= 0; }));
  }

  int n_ = 0;
  detail::BitMatrix closure_;
  std::vector<std::pair<Pid, Pid>> hasse_;
  mutable std::vector<std::vector<Pid>> chains_;
  mutable int thickness_ = -1;
};

inline int thickness(const PartialOrder& order) { return order.thickness(); }

inline std::vector<std::vector<Pid>> dilworth_cover(const PartialOrder& order) {
  return order.min_chain_cover();
}

// Brute-force maximum antichain by subset enumeration; testing oracle only.
inline int max_antichain_bruteforce(const PartialOrder& order) {
  int n = order.size();
  if (n > 20) throw SimError("max_antichain_bruteforce: too large");
  int best = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    int cnt = 0;
    bool ok = true;
    for (int u = 0; u < n && ok; ++u) {
      if (!(mask >> u & 1)) continue;
      ++cnt;
      for (int v = u + 1; v < n && ok; ++v)
        if ((mask >> v & 1) && (order.precedes(u, v) || order.precedes(v, u))) ok = false;
    }
    if (ok) best = std::max(best, cnt);
  }
  return best;
}

// k disjoint chains with random lengths (each >= 1) and random membership;
// thickness is exactly k.
inline PartialOrder gen_k_chain_order(int n, int k, std::uint64_t seed) {
  if (k < 1 || k > n) throw SimError("gen_k_chain_order: need 1 <= k <= n");
  SeqRng rng(derive_seed(seed, seedtag::kOrderGen));
  // random composition of n into k parts >= 1: k-1 distinct cut points
  std::vector<int> cuts;
  if (n > 1) {
    cuts.resize(n - 1);
    std::iota(cuts.begin(), cuts.end(), 1);
    rng.shuffle(cuts);
    cuts.resize(k - 1);
    std::sort(cuts.begin(), cuts.end());
  }
  cuts.push_back(n);
  std::vector<Pid> pids(n);
  std::iota(pids.begin(), pids.end(), 0);
  rng.shuffle(pids);
  std::vector<std::vector<Pid>> chains;
  int at = 0;
  for (int c : cuts) {
    chains.emplace_back(pids.begin() + at, pids.begin() + c);
    at = c;
  }
  return PartialOrder::from_chains(n, std::move(chains));
}

// k disjoint chains plus random cross-chain precedence edges drawn against a
// fixed linear extension (keeps the result acyclic). Thickness can only
// shrink when edges are added, so report it via thickness() rather than
// assuming k.
inline PartialOrder gen_thick_order(int n, int k, double edge_density, std::uint64_t seed) {
  PartialOrder base = gen_k_chain_order(n, k, seed);
  if (edge_density <= 0.0) return base;
  SeqRng rng(derive_seed(seed, seedtag::kOrderGen, 0x7468ULL));
  const auto chains = base.chain_decomposition();
  // random linear extension: shuffle-merge the chains
  std::vector<std::size_t> next(chains.size(), 0);
  std::vector<Pid> ext;
  std::vector<int> pos(n, 0);
  std::vector<int> chain_of(n, 0);
  for (std::size_t j = 0; j < chains.size(); ++j)
    for (Pid p : chains[j]) chain_of[p] = static_cast<int>(j);
  while (static_cast<int>(ext.size()) < n) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(chains.size()));
    if (next[j] < chains[j].size()) ext.push_back(chains[j][next[j]++]);
  }
  for (int i = 0; i < n; ++i) pos[ext[i]] = i;

  std::vector<std::pair<Pid, Pid>> edges;
  for (const auto& c : chains)
    for (std::size_t i = 0; i + 1 < c.size(); ++i) edges.emplace_back(c[i], c[i + 1]);
  for (Pid u = 0; u < n; ++u)
    for (Pid v = 0; v < n; ++v)
      if (u != v && chain_of[u] != chain_of[v] && pos[u] < pos[v] &&
          rng.next_u01() < edge_density)
        edges.emplace_back(u, v);
  // keep the generator chains cached: they remain valid chains under the
  // larger closure, and chain_position refers to them
  return PartialOrder::from_edges_with_chains(n, edges, chains);
}

// Alive pids whose predecessors are all crashed: the single-crash frontier.
// `crashed` must be downward-consistent with the order.
inline std::vector<Pid> legal_crash_candidates(const PartialOrder& order,
                                               const std::vector<bool>& crashed) {
  int n = order.size();
  if (static_cast<int>(crashed.size()) != n)
    throw SimError("legal_crash_candidates: size mismatch");
  for (Pid v = 0; v < n; ++v)
    if (crashed[v])
      for (Pid u = 0; u < n; ++u)
        if (order.precedes(u, v) && !crashed[u])
          throw SimError("legal_crash_candidates: crashed set not downward-consistent");
  std::vector<Pid> out;
  for (Pid v = 0; v < n; ++v) {
    if (crashed[v]) continue;
    bool ok = true;
    for (Pid u = 0; u < n && ok; ++u)
      if (order.precedes(u, v) && !crashed[u]) ok = false;
    if (ok) out.push_back(v);
  }
  return out;
}

}  // namespace consim
