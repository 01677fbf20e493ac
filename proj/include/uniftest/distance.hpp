#pragma once

// Exact ground truth for small families: distance to intersecting, distance
// of a pair to cross-intersecting, matching bounds, restrictions F(A↓B) and
// eps-capture, and a search for far restrictions with an uncapturable side.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "uniftest/combinatorics.hpp"
#include "uniftest/error.hpp"
#include "uniftest/family.hpp"
#include "uniftest/rational.hpp"

namespace uniftest {

inline constexpr std::uint64_t kDefaultEdgeBudget = 20'000;

/// Kneser graph K(n,k) induced on the members of a family: vertices are
/// member ranks (ascending), edges join disjoint members.
struct DisjointnessGraph {
  std::vector<std::uint64_t> vertices;
  std::vector<ElementMask> masks;
  std::vector<std::vector<std::uint32_t>> adjacency;
  std::uint64_t edge_count = 0;
};

inline DisjointnessGraph disjointness_graph(const ExplicitFamily& f, std::uint64_t edge_budget = kDefaultEdgeBudget) {
  DisjointnessGraph g;
  g.vertices = f.member_ranks();
  g.masks.reserve(g.vertices.size());
  for (auto r : g.vertices) g.masks.push_back(unrank(r, f.n(), f.k()).mask());
  g.adjacency.resize(g.vertices.size());
  for (std::uint32_t u = 0; u < g.masks.size(); ++u) {
    for (std::uint32_t v = u + 1; v < g.masks.size(); ++v) {
      if ((g.masks[u] & g.masks[v]) != 0) continue;
      if (++g.edge_count > edge_budget) {
        throw BudgetError("instance too large for exact oracle: disjointness graph has more than " +
                          std::to_string(edge_budget) + " edges");
      }
      g.adjacency[u].push_back(v);
      g.adjacency[v].push_back(u);
    }
  }
  return g;
}

namespace detail {

/// Fixed-width bitset over graph vertices.
class VertexSet {
 public:
  VertexSet() = default;
  explicit VertexSet(std::size_t n) : words_((n + 63) / 64, 0) {}

  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  bool test(std::size_t i) const { return ((words_[i >> 6] >> (i & 63)) & 1) != 0; }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  std::size_t count_and(const VertexSet& o) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) c += static_cast<std::size_t>(std::popcount(words_[i] & o.words_[i]));
    return c;
  }
  bool none() const {
    return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
  }
  void and_with(const VertexSet& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
  }
  void and_not(const VertexSet& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
  }
  /// First index in (this & o), or npos.
  std::size_t first_common(const VertexSet& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (auto w = words_[i] & o.words_[i]; w != 0) return i * 64 + static_cast<std::size_t>(std::countr_zero(w));
    }
    return npos;
  }

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      for (std::uint64_t w = words_[i]; w != 0; w &= w - 1) f(i * 64 + static_cast<std::size_t>(std::countr_zero(w)));
    }
  }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

 private:
  std::vector<std::uint64_t> words_;
};

/// Maximum independent set by branch and bound. Reductions: isolated vertices
/// and degree-1 vertices join the set. Branching: a maximum-degree vertex is
/// either in the set (drop its closed neighbourhood) or in the cover. Bounds:
/// |R| - (greedy matching in R), and the number of cliques in a greedy clique
/// cover of R.
class MaxIndependentSet {
 public:
  explicit MaxIndependentSet(const DisjointnessGraph& g) : n_(g.adjacency.size()), adj_(n_, VertexSet(n_)) {
    for (std::size_t u = 0; u < n_; ++u) {
      for (auto v : g.adjacency[u]) adj_[u].set(v);
    }
  }

  std::size_t solve() {
    VertexSet all(n_);
    for (std::size_t v = 0; v < n_; ++v) all.set(v);
    best_ = greedy(all);
    search(all, 0);
    return best_;
  }

 private:
  std::size_t greedy(VertexSet cand) const {
    std::size_t size = 0;
    while (!cand.none()) {
      std::size_t pick = VertexSet::npos, pick_deg = 0;
      cand.for_each([&](std::size_t v) {
        std::size_t d = adj_[v].count_and(cand);
        if (pick == VertexSet::npos || d < pick_deg) pick = v, pick_deg = d;
      });
      ++size;
      cand.reset(pick);
      cand.and_not(adj_[pick]);
    }
    return size;
  }

  std::size_t matching_size(const VertexSet& cand) const {
    VertexSet free = cand;
    std::size_t m = 0;
    cand.for_each([&](std::size_t u) {
      if (!free.test(u)) return;
      std::size_t v = free.first_common(adj_[u]);
      if (v == VertexSet::npos) return;
      free.reset(u);
      free.reset(v);
      ++m;
    });
    return m;
  }

  std::size_t clique_cover_size(const VertexSet& cand) const {
    std::vector<VertexSet> common;  // vertices adjacent to every member of the clique
    cand.for_each([&](std::size_t v) {
      for (auto& c : common) {
        if (c.test(v)) {
          c.and_with(adj_[v]);
          return;
        }
      }
      common.push_back(adj_[v]);
    });
    return common.size();
  }

  void search(VertexSet cand, std::size_t size) {
    for (bool changed = true; changed;) {
      changed = false;
      cand.for_each([&](std::size_t v) {
        if (!cand.test(v)) return;
        std::size_t d = adj_[v].count_and(cand);
        if (d <= 1) {
          ++size;
          cand.reset(v);
          cand.and_not(adj_[v]);
          changed = true;
        }
      });
    }
    const std::size_t remaining = cand.count();
    if (remaining == 0) {
      best_ = std::max(best_, size);
      return;
    }
    const std::size_t bound = std::min(remaining - matching_size(cand), clique_cover_size(cand));
    if (size + bound <= best_) return;

    std::size_t pivot = VertexSet::npos, pivot_deg = 0;
    cand.for_each([&](std::size_t v) {
      std::size_t d = adj_[v].count_and(cand);
      if (pivot == VertexSet::npos || d > pivot_deg) pivot = v, pivot_deg = d;
    });
    VertexSet take = cand;
    take.reset(pivot);
    take.and_not(adj_[pivot]);
    search(std::move(take), size + 1);
    cand.reset(pivot);
    search(std::move(cand), size);
  }

  std::size_t n_;
  std::vector<VertexSet> adj_;
  std::size_t best_ = 0;
};

/// Maximum matching between `left` and `right` where an edge joins disjoint
/// sets (Hopcroft–Karp).
inline std::size_t bipartite_disjoint_matching(const std::vector<ElementMask>& left,
                                               const std::vector<ElementMask>& right, std::uint64_t edge_budget) {
  constexpr std::uint32_t kNil = std::numeric_limits<std::uint32_t>::max();
  const std::size_t nl = left.size(), nr = right.size();
  std::vector<std::vector<std::uint32_t>> adj(nl);
  std::uint64_t edges = 0;
  for (std::size_t u = 0; u < nl; ++u) {
    for (std::size_t v = 0; v < nr; ++v) {
      if ((left[u] & right[v]) != 0) continue;
      if (++edges > edge_budget) {
        throw BudgetError("instance too large for exact oracle: cross-disjointness graph has more than " +
                          std::to_string(edge_budget) + " edges");
      }
      adj[u].push_back(static_cast<std::uint32_t>(v));
    }
  }
  std::vector<std::uint32_t> pair_l(nl, kNil), pair_r(nr, kNil), dist(nl);
  constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max();

  auto bfs = [&] {
    std::queue<std::uint32_t> q;
    bool found = false;
    for (std::uint32_t u = 0; u < nl; ++u) {
      if (pair_l[u] == kNil) {
        dist[u] = 0;
        q.push(u);
      } else {
        dist[u] = kInf;
      }
    }
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto v : adj[u]) {
        auto w = pair_r[v];
        if (w == kNil) {
          found = true;
        } else if (dist[w] == kInf) {
          dist[w] = dist[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  };
  auto dfs = [&](auto&& self, std::uint32_t u) -> bool {
    for (auto v : adj[u]) {
      auto w = pair_r[v];
      if (w == kNil || (dist[w] == dist[u] + 1 && self(self, w))) {
        pair_l[u] = v;
        pair_r[v] = u;
        return true;
      }
    }
    dist[u] = kInf;
    return false;
  };

  std::size_t matching = 0;
  while (bfs()) {
    for (std::uint32_t u = 0; u < nl; ++u) {
      if (pair_l[u] == kNil && dfs(dfs, u)) ++matching;
    }
  }
  return matching;
}

inline std::vector<ElementMask> restrict_masks(const std::vector<ElementMask>& masks, ElementMask a, ElementMask b) {
  std::vector<ElementMask> out;
  for (auto m : masks) {
    if ((m & a) == b) out.push_back(m);
  }
  return out;
}

inline std::size_t count_avoiding(const std::vector<ElementMask>& masks, ElementMask a) {
  return static_cast<std::size_t>(std::count_if(masks.begin(), masks.end(), [a](ElementMask m) { return (m & a) == 0; }));
}

}  // namespace detail

/// Minimum number of members whose removal leaves an intersecting family
/// (minimum vertex cover of the disjointness graph).
inline std::uint64_t exact_distance(const ExplicitFamily& f, std::uint64_t edge_budget = kDefaultEdgeBudget) {
  auto g = disjointness_graph(f, edge_budget);
  if (g.edge_count == 0) return 0;
  return f.size() - detail::MaxIndependentSet(g).solve();
}

struct MatchingBounds {
  std::uint64_t lower;
  std::uint64_t upper;
};

/// Greedy maximal matching M of disjoint member pairs, scanned in rank
/// order: |M| <= distance <= 2|M|.
inline MatchingBounds matching_bounds(const ExplicitFamily& f) {
  auto masks = f.member_masks();
  std::vector<bool> used(masks.size(), false);
  std::uint64_t m = 0;
  for (std::size_t u = 0; u < masks.size(); ++u) {
    if (used[u]) continue;
    for (std::size_t v = u + 1; v < masks.size(); ++v) {
      if (!used[v] && (masks[u] & masks[v]) == 0) {
        used[u] = used[v] = true;
        ++m;
        break;
      }
    }
  }
  return {m, 2 * m};
}

/// Size of a matching of disjoint member pairs grown from the greedy one by
/// length-3 augmenting paths. Any matching lower-bounds the distance; this
/// one is usually near-maximum on dense disjointness graphs, where the exact
/// oracle is out of budget.
inline std::uint64_t augmented_matching_size(const ExplicitFamily& f) {
  auto masks = f.member_masks();
  constexpr std::size_t kFree = std::numeric_limits<std::size_t>::max();
  const std::size_t nv = masks.size();
  std::vector<std::size_t> partner(nv, kFree);
  std::uint64_t m = 0;
  for (std::size_t u = 0; u < nv; ++u) {
    if (partner[u] != kFree) continue;
    for (std::size_t v = u + 1; v < nv; ++v) {
      if (partner[v] == kFree && (masks[u] & masks[v]) == 0) {
        partner[u] = v, partner[v] = u, ++m;
        break;
      }
    }
  }
  for (std::size_t u = 0; u < nv; ++u) {
    if (partner[u] != kFree) continue;
    bool done = false;
    for (std::size_t v = 0; v < nv && !done; ++v) {
      if (v == u || (masks[u] & masks[v]) != 0 || partner[v] == kFree) continue;
      const std::size_t w = partner[v];
      for (std::size_t x = 0; x < nv; ++x) {
        if (x == u || partner[x] != kFree || (masks[w] & masks[x]) != 0) continue;
        partner[u] = v, partner[v] = u, partner[w] = x, partner[x] = w, ++m;
        done = true;
        break;
      }
    }
  }
  return m;
}

inline void check_same_universe(const ExplicitFamily& a, const ExplicitFamily& b) {
  if (a.n() != b.n() || a.k() != b.k()) throw ValidationError("families over different universes");
}

/// Minimum removals (counted per side) making (f1, f2) cross-intersecting;
/// by König, the maximum matching of the bipartite disjointness graph.
inline std::uint64_t cross_distance(const ExplicitFamily& f1, const ExplicitFamily& f2,
                                    std::uint64_t edge_budget = kDefaultEdgeBudget) {
  check_same_universe(f1, f2);
  return detail::bipartite_disjoint_matching(f1.member_masks(), f2.member_masks(), edge_budget);
}

/// A ⊆ [n] and B ⊆ A.
class RestrictionSpec {
 public:
  RestrictionSpec(Subset a, Subset b) : a_(a), b_(b) {
    if (a.universe() != b.universe() || !b.is_subset_of(a)) throw ValidationError("restriction needs B ⊆ A");
  }
  const Subset& a() const noexcept { return a_; }
  const Subset& b() const noexcept { return b_; }

 private:
  Subset a_;
  Subset b_;
};

/// F(A↓B): the members F with F ∩ A = B.
inline ExplicitFamily restriction(const ExplicitFamily& f, const RestrictionSpec& spec) {
  if (spec.a().universe() != f.n()) throw ValidationError("restriction universe does not match the family");
  const ElementMask a = spec.a().mask(), b = spec.b().mask();
  return f.filter([&](const KSubset& s) { return (s.mask() & a) == b; });
}

/// A eps-captures F: fewer than eps * C(n,k) members avoid A.
inline bool captures(const ExplicitFamily& f, const Subset& a, const Rational& eps) {
  if (a.universe() != f.n()) throw ValidationError("capture set universe does not match the family");
  return below(detail::count_avoiding(f.member_masks(), a.mask()), eps, f.total());
}

/// Members disjoint from at least `threshold` members.
inline std::uint64_t useful_sets(const ExplicitFamily& f, std::uint64_t threshold) {
  auto masks = f.member_masks();
  std::uint64_t useful = 0;
  for (auto u : masks) {
    std::uint64_t disjoint = 0;
    for (auto v : masks) disjoint += (u & v) == 0 ? 1 : 0;
    if (disjoint >= threshold) ++useful;
  }
  return useful;
}

/// Witness (A, B, C) with B, C ⊆ A disjoint.
struct FarRestriction {
  Subset a;
  Subset b;
  Subset c;
};

inline constexpr std::uint64_t kSearchMaxTotal = 120;
inline constexpr int kSearchMaxUniverse = 10;

namespace detail {

inline Rational pow3_fraction(const Rational& eps, int exponent) {
  Rational scale(1);
  for (int i = 0; i < exponent; ++i) scale = scale * Rational(3);
  return eps / scale;
}

/// Calls f(mask) for every subset of `pool` with 1..max_size elements, by
/// size, then ascending mask; stops when f returns true.
template <typename F>
bool for_each_small_subset(ElementMask pool, int max_size, F&& f) {
  const std::vector<int> elems = bits::to_elements(pool);
  const int m = static_cast<int>(elems.size());
  for (int size = 1; size <= std::min(max_size, m); ++size) {
    ElementMask local = bits::prefix(size);
    const std::uint64_t count = binomial(m, size);
    for (std::uint64_t i = 0; i < count; ++i) {
      if (f(deposit(local, pool))) return true;
      if (i + 1 < count) local = bits::next_same_popcount(local);
    }
  }
  return false;
}

/// Disjoint (B, C) ⊆ A in lexicographic (B mask, C mask) order.
inline std::vector<std::pair<ElementMask, ElementMask>> disjoint_trace_pairs(ElementMask a) {
  std::vector<ElementMask> subs;
  for (ElementMask s = a;; s = (s - 1) & a) {
    subs.push_back(s);
    if (s == 0) break;
  }
  std::sort(subs.begin(), subs.end());
  std::vector<std::pair<ElementMask, ElementMask>> out;
  for (auto b : subs) {
    for (auto c : subs) {
      if ((b & c) == 0) out.emplace_back(b, c);
    }
  }
  return out;
}

}  // namespace detail

/// Searches for A ⊆ [n] and disjoint B, C ⊆ A such that
/// (F(A↓B), F(A↓C)) is eps/3^{r²}-far from cross-intersecting and no subset
/// of [n] \ A with at most r-1 elements eps/3^{r²}-captures F(A↓C).
///
/// The search first grows A the constructive way (r rounds; in round t a
/// capturing set A' of size <= r at level eps/3^{rt} is added together with
/// the trace pair maximizing the restricted cross-distance, ties to the
/// lexicographically smallest (B', C')). If that triple misses the target it
/// enumerates all triples by |A|. Returns nullopt when (F, F) is not
/// eps-far from cross-intersecting or nothing qualifies.
inline std::optional<FarRestriction> search_far_restriction(const ExplicitFamily& f, int r, const Rational& eps) {
  if (f.total() > kSearchMaxTotal || f.n() > kSearchMaxUniverse) {
    throw BudgetError("search_far_restriction: needs C(n,k) <= 120 and n <= 10");
  }
  if (r < 1) throw ValidationError("search_far_restriction: r must be at least 1");
  const int n = f.n();
  const std::uint64_t total = f.total();
  const auto masks = f.member_masks();
  const std::uint64_t budget = std::numeric_limits<std::uint64_t>::max();

  auto far = [&](const std::vector<ElementMask>& x, const std::vector<ElementMask>& y, const Rational& level) {
    if (!exceeds(x.size(), level, total) || !exceeds(y.size(), level, total)) return false;
    return exceeds(detail::bipartite_disjoint_matching(x, y, budget), level, total);
  };
  if (!far(masks, masks, eps)) return std::nullopt;

  const Rational target = detail::pow3_fraction(eps, r * r);
  const ElementMask universe = bits::prefix(n);
  auto qualifies = [&](ElementMask a, ElementMask b, ElementMask c) {
    auto f2 = detail::restrict_masks(masks, a, c);
    if (!far(detail::restrict_masks(masks, a, b), f2, target)) return false;
    if (r - 1 == 0) return true;
    return !detail::for_each_small_subset(universe & ~a, r - 1, [&](ElementMask s) {
      return below(detail::count_avoiding(f2, s), target, total);
    });
  };

  ElementMask a = 0, b = 0, c = 0;
  for (int t = 1; t <= r; ++t) {
    const Rational level = detail::pow3_fraction(eps, r * t);
    const auto h1 = detail::restrict_masks(masks, a, b);
    const auto h2 = detail::restrict_masks(masks, a, c);
    ElementMask capturing = 0;
    bool found = detail::for_each_small_subset(universe & ~a, r, [&](ElementMask s) {
      if (!below(detail::count_avoiding(h2, s), level, total)) return false;
      capturing = s;
      return true;
    });
    if (!found) break;  // capture only gets harder as the level drops
    std::uint64_t best = 0;
    std::pair<ElementMask, ElementMask> best_pair{0, 0};
    bool have = false;
    for (auto [b2, c2] : detail::disjoint_trace_pairs(capturing)) {
      auto x = detail::restrict_masks(h1, capturing, b2);
      auto y = detail::restrict_masks(h2, capturing, c2);
      auto d = detail::bipartite_disjoint_matching(x, y, budget);
      if (!have || d > best) best = d, best_pair = {b2, c2}, have = true;
    }
    a |= capturing;
    b |= best_pair.first;
    c |= best_pair.second;
  }
  auto as_subset = [n](ElementMask m) { return Subset(n, m); };
  if (qualifies(a, b, c)) return FarRestriction{as_subset(a), as_subset(b), as_subset(c)};

  std::optional<FarRestriction> result;
  auto try_a = [&](ElementMask cand) {
    for (auto [b2, c2] : detail::disjoint_trace_pairs(cand)) {
      if (qualifies(cand, b2, c2)) {
        result = FarRestriction{as_subset(cand), as_subset(b2), as_subset(c2)};
        return true;
      }
    }
    return false;
  };
  if (try_a(0)) return result;
  detail::for_each_small_subset(universe, n, try_a);
  return result;
}

}  // namespace uniftest
