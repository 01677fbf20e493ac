#pragma once

// The four non-adaptive testers for intersectingness. Each one draws all of
// its query points from the seed before reading any answer.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uniftest/combinatorics.hpp"
#include "uniftest/error.hpp"
#include "uniftest/family.hpp"
#include "uniftest/rational.hpp"
#include "uniftest/rng.hpp"

namespace uniftest {

enum class Verdict { accept, reject };

inline const char* to_string(Verdict v) { return v == Verdict::accept ? "accept" : "reject"; }

struct JuntaEstimate {
  Junta junta;
  Rational alpha;  // denominator divides the sample count
};

struct TesterReport {
  Verdict verdict = Verdict::accept;
  std::uint64_t queries_used = 0;
  std::uint64_t budget = 0;
  /// Ranks of two disjoint sets both answered 1; one-sided testers only.
  std::optional<std::pair<std::uint64_t, std::uint64_t>> witness;
  /// Queried ranks in query order.
  std::vector<std::uint64_t> samples;
  std::uint64_t seed = 0;
  std::optional<Rational> eps1;
  /// Junta tester only: the junta with the smallest alpha.
  std::optional<JuntaEstimate> best_junta;

  bool accepted() const noexcept { return verdict == Verdict::accept; }
};

namespace detail {

inline void check_tester_params(const FamilyOracle& o, int n, int k) {
  if (o.n() != n || o.k() != k) throw ValidationError("tester parameters (n,k) do not match the oracle");
  check_uniform_params(n, k);
}

inline std::vector<KSubset> draw_sets(int n, int k, std::uint64_t m, Rng& rng) {
  std::vector<KSubset> sets;
  sets.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) sets.push_back(sample_ksubset(n, k, rng));
  return sets;
}

/// alpha = count / m <= eps / 2.
inline bool at_most_half(std::uint64_t count, std::uint64_t m, const Rational& eps) {
  return static_cast<__int128>(2) * eps.den() * count <= static_cast<__int128>(eps.num()) * m;
}

}  // namespace detail

/// Draws m uniform k-subsets (with replacement), queries them all and rejects
/// iff two queried sets answered 1 are disjoint.
inline TesterReport canonical_tester(FamilyOracle& oracle, int n, int k, std::uint64_t m, std::uint64_t seed) {
  detail::check_tester_params(oracle, n, k);
  if (m < 1) throw ValidationError("canonical_tester: m must be at least 1");
  Rng rng(seed);
  const auto sets = detail::draw_sets(n, k, m, rng);

  TesterReport report;
  report.seed = seed;
  report.budget = m;
  std::vector<std::size_t> positive;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (oracle.query(sets[i])) positive.push_back(i);
    report.samples.push_back(oracle.query_log().back().rank);
  }
  report.queries_used = m;
  for (std::size_t a = 0; a < positive.size() && !report.witness; ++a) {
    for (std::size_t b = a + 1; b < positive.size(); ++b) {
      const auto& x = sets[positive[a]];
      const auto& y = sets[positive[b]];
      if ((x.mask() & y.mask()) == 0) {
        report.witness = {report.samples[positive[a]], report.samples[positive[b]]};
        break;
      }
    }
  }
  report.verdict = report.witness ? Verdict::reject : Verdict::accept;
  return report;
}

/// r = 2: ceil(12/eps). Any other r >= 1: ceil(c * 3^{r²} * ln(k) / eps),
/// with c the caller's choice for the unspecified constant.
inline std::uint64_t canonical_sample_size(int r, const Rational& eps, double c = 1.0, int k = 2) {
  if (eps <= Rational(0)) throw ValidationError("canonical_sample_size: eps must be positive");
  if (r < 1) throw ValidationError("canonical_sample_size: r must be at least 1");
  if (r == 2) {
    const __int128 num = static_cast<__int128>(12) * eps.den();
    return static_cast<std::uint64_t>((num + eps.num() - 1) / eps.num());
  }
  if (k < 1) throw ValidationError("canonical_sample_size: k must be at least 1");
  const double m = std::ceil(c * std::pow(3.0, r * r) * std::log(static_cast<double>(k)) / eps.to_double());
  return m < 1.0 ? 1 : static_cast<std::uint64_t>(m);
}

/// ceil(12 * (j ln n + 2^j + 2) / eps2).
inline std::uint64_t junta_sample_size(const Rational& eps2, int j, int n) {
  if (eps2 <= Rational(0)) throw ValidationError("junta_sample_size: eps2 must be positive");
  if (j < 0 || n < 1) throw ValidationError("junta_sample_size: need j >= 0 and n >= 1");
  const double m =
      std::ceil(12.0 * (j * std::log(static_cast<double>(n)) + std::ldexp(1.0, j) + 2.0) / eps2.to_double());
  return static_cast<std::uint64_t>(m);
}

inline constexpr int kMaxJuntaSize = 4;
inline constexpr std::uint64_t kJuntaEnumerationBudget = 2'000'000;

/// Trace families over j local coordinates that are intersecting-certified
/// (no empty trace, traces pairwise intersecting), including the empty one.
/// Bit t of an entry stands for the local trace with mask t.
inline const std::vector<std::uint32_t>& local_intersecting_families(int j) {
  if (j < 0 || j > kMaxJuntaSize) throw BudgetError("junta size j must lie in [0,4]");
  static const auto table = [] {
    std::array<std::vector<std::uint32_t>, kMaxJuntaSize + 1> out;
    for (int jj = 0; jj <= kMaxJuntaSize; ++jj) {
      const std::uint32_t traces = 1u << jj;
      const std::uint64_t families = std::uint64_t{1} << traces;
      for (std::uint64_t fam = 0; fam < families; fam += 2) {  // bit 0 = empty trace, never admitted
        bool ok = true;
        for (std::uint32_t s = 1; s < traces && ok; ++s) {
          if (((fam >> s) & 1) == 0) continue;
          for (std::uint32_t t = s + 1; t < traces; ++t) {
            if (((fam >> t) & 1) != 0 && (s & t) == 0) {
              ok = false;
              break;
            }
          }
        }
        if (ok) out[static_cast<std::size_t>(jj)].push_back(static_cast<std::uint32_t>(fam));
      }
    }
    return out;
  }();
  return table[static_cast<std::size_t>(j)];
}

namespace detail {

/// Inclusion-maximal entries of local_intersecting_families(j).
inline const std::vector<std::uint32_t>& maximal_local_families(int j) {
  static const auto table = [] {
    std::array<std::vector<std::uint32_t>, kMaxJuntaSize + 1> out;
    for (int jj = 0; jj <= kMaxJuntaSize; ++jj) {
      const auto& all = local_intersecting_families(jj);
      for (auto f : all) {
        bool maximal = true;
        for (auto g : all) {
          if (g != f && (f & ~g) == 0) {
            maximal = false;
            break;
          }
        }
        if (maximal) out[static_cast<std::size_t>(jj)].push_back(f);
      }
    }
    return out;
  }();
  return table[static_cast<std::size_t>(j)];
}

/// Calls f(J mask) for every j-subset J of [n] in colex order.
template <typename F>
void for_each_coordinate_set(int n, int j, F&& f) {
  if (j == 0) {
    f(ElementMask{0});
    return;
  }
  const std::uint64_t count = binomial(n, j);
  ElementMask mask = bits::prefix(j);
  for (std::uint64_t i = 0; i < count; ++i) {
    f(mask);
    if (i + 1 < count) mask = bits::next_same_popcount(mask);
  }
}

inline Junta make_junta(int n, ElementMask coords, std::uint32_t local_family) {
  std::vector<Subset> traces;
  for (std::uint32_t t = 1; t < 32; ++t) {
    if (((local_family >> t) & 1) != 0) traces.emplace_back(n, deposit(ElementMask{t}, coords));
  }
  return Junta(Subset(n, coords), std::move(traces));
}

}  // namespace detail

/// Every (J, S) with |J| = j and S an intersecting-certified trace family over J.
inline std::vector<Junta> enumerate_intersecting_juntas(int n, int j) {
  check_universe(n);
  if (j < 0 || j > kMaxJuntaSize) throw BudgetError("enumerate_intersecting_juntas: j must lie in [0,4]");
  if (j > n) throw ValidationError("enumerate_intersecting_juntas: j exceeds n");
  const auto& local = local_intersecting_families(j);
  const std::uint64_t coordinate_sets = binomial(n, j);
  if (coordinate_sets > kJuntaEnumerationBudget / local.size()) {
    throw BudgetError("enumerate_intersecting_juntas: more than " + std::to_string(kJuntaEnumerationBudget) +
                      " juntas");
  }
  std::vector<Junta> out;
  out.reserve(coordinate_sets * local.size());
  detail::for_each_coordinate_set(n, j, [&](ElementMask coords) {
    for (auto fam : local) out.push_back(detail::make_junta(n, coords, fam));
  });
  return out;
}

/// Tolerant two-sided tester. For every intersecting j-junta, alpha is the
/// fraction of the m samples answered 1 that the junta does not admit;
/// accepts iff some alpha <= eps2/2. eps1 is recorded, not used.
inline TesterReport junta_tester(FamilyOracle& oracle, int n, int k, const Rational& eps1, const Rational& eps2, int j,
                                 std::uint64_t m, std::uint64_t seed) {
  detail::check_tester_params(oracle, n, k);
  if (m < 1) throw ValidationError("junta_tester: m must be at least 1");
  if (eps1 > eps2) throw ValidationError("junta_tester: need eps1 <= eps2");
  if (j < 0 || j > kMaxJuntaSize) throw BudgetError("junta_tester: j must lie in [0,4]");
  if (j > n) throw ValidationError("junta_tester: j exceeds n");
  Rng rng(seed);
  const auto sets = detail::draw_sets(n, k, m, rng);

  TesterReport report;
  report.seed = seed;
  report.budget = m;
  report.eps1 = eps1;
  std::vector<ElementMask> positive;
  for (const auto& s : sets) {
    if (oracle.query(s)) positive.push_back(s.mask());
    report.samples.push_back(oracle.query_log().back().rank);
  }
  report.queries_used = m;

  // The count is monotone under adding traces, so its minimum over all
  // intersecting trace families is attained on an inclusion-maximal one.
  const auto& families = detail::maximal_local_families(j);
  std::uint64_t best_count = positive.size() + 1;
  ElementMask best_coords = 0;
  std::uint32_t best_family = 0;
  std::array<std::uint64_t, 1u << kMaxJuntaSize> histogram{};
  std::vector<ElementMask> coord_bits(static_cast<std::size_t>(j));
  detail::for_each_coordinate_set(n, j, [&](ElementMask coords) {
    if (best_count == 0) return;
    std::size_t idx = 0;
    for (ElementMask rest = coords; rest != 0; rest &= rest - 1) coord_bits[idx++] = rest & (~rest + 1);
    histogram.fill(0);
    for (auto p : positive) {
      std::uint32_t trace = 0;
      for (int b = 0; b < j; ++b) trace |= ((p & coord_bits[static_cast<std::size_t>(b)]) != 0 ? 1u : 0u) << b;
      ++histogram[trace];
    }
    for (auto fam : families) {
      std::uint64_t admitted = 0;
      for (std::uint32_t f = fam; f != 0; f &= f - 1) admitted += histogram[static_cast<std::size_t>(std::countr_zero(f))];
      const std::uint64_t outside = positive.size() - admitted;
      if (outside < best_count) {
        best_count = outside;
        best_coords = coords;
        best_family = fam;
      }
    }
  });
  report.best_junta = JuntaEstimate{detail::make_junta(n, best_coords, best_family),
                                    Rational(static_cast<std::int64_t>(best_count), static_cast<std::int64_t>(m))};
  report.verdict = detail::at_most_half(best_count, m, eps2) ? Verdict::accept : Verdict::reject;
  return report;
}

/// Tolerant two-sided tester by density: alpha = fraction of m samples
/// answered 1; accepts iff alpha <= eps2/2. Valid when eps2 >= 4(eps1 + k/n).
inline TesterReport density_tester(FamilyOracle& oracle, int n, int k, const Rational& eps2, std::uint64_t m,
                                   std::uint64_t seed) {
  detail::check_tester_params(oracle, n, k);
  if (m < 1) throw ValidationError("density_tester: m must be at least 1");
  Rng rng(seed);
  const auto sets = detail::draw_sets(n, k, m, rng);

  TesterReport report;
  report.seed = seed;
  report.budget = m;
  std::uint64_t positives = 0;
  for (const auto& s : sets) {
    positives += oracle.query(s) ? 1 : 0;
    report.samples.push_back(oracle.query_log().back().rank);
  }
  report.queries_used = m;
  report.verdict = detail::at_most_half(positives, m, eps2) ? Verdict::accept : Verdict::reject;
  return report;
}

/// Draws m uniform unordered disjoint pairs, queries both sides (2m queries)
/// and rejects iff some pair is answered (1, 1). m = 0 accepts vacuously.
inline TesterReport disjoint_pair_tester(FamilyOracle& oracle, int n, int k, std::uint64_t m, std::uint64_t seed) {
  detail::check_tester_params(oracle, n, k);
  Rng rng(seed);
  std::vector<DisjointPair> pairs;
  pairs.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) pairs.push_back(sample_disjoint_pair(n, k, rng));

  TesterReport report;
  report.seed = seed;
  report.budget = 2 * m;
  for (const auto& p : pairs) {
    const bool a = oracle.query(p.first);
    report.samples.push_back(oracle.query_log().back().rank);
    const bool b = oracle.query(p.second);
    report.samples.push_back(oracle.query_log().back().rank);
    if (a && b && !report.witness) report.witness = {report.samples[report.samples.size() - 2], report.samples.back()};
  }
  report.queries_used = 2 * m;
  report.verdict = report.witness ? Verdict::reject : Verdict::accept;
  return report;
}

}  // namespace uniftest
