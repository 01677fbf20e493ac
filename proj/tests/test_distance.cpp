#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "uniftest/distance.hpp"

using namespace uniftest;

namespace {

// Largest intersecting subfamily by trying every subfamily.
std::uint64_t brute_distance(const ExplicitFamily& f) {
  auto sets = f.member_sets();
  const std::size_t n = sets.size();
  std::size_t best = 0;
  for (std::uint64_t pick = 0; pick < (std::uint64_t{1} << n); ++pick) {
    const auto size = static_cast<std::size_t>(std::popcount(pick));
    if (size <= best) continue;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (((pick >> i) & 1) == 0) continue;
      for (std::size_t j = i + 1; j < n && ok; ++j) {
        if (((pick >> j) & 1) != 0 && are_disjoint(sets[i], sets[j])) ok = false;
      }
    }
    if (ok) best = size;
  }
  return n - best;
}

// Fewest removals from both sides leaving no disjoint cross pair.
std::uint64_t brute_cross(const ExplicitFamily& f1, const ExplicitFamily& f2) {
  auto a = f1.member_sets(), b = f2.member_sets();
  const std::size_t na = a.size(), nb = b.size();
  std::size_t best = na + nb;
  for (std::uint64_t keep_a = 0; keep_a < (std::uint64_t{1} << na); ++keep_a) {
    // Given the kept part of f1, keep every f2 member meeting all of it.
    std::size_t removed_b = 0;
    for (std::size_t j = 0; j < nb; ++j) {
      for (std::size_t i = 0; i < na; ++i) {
        if (((keep_a >> i) & 1) != 0 && are_disjoint(a[i], b[j])) {
          ++removed_b;
          break;
        }
      }
    }
    best = std::min(best, na - static_cast<std::size_t>(std::popcount(keep_a)) + removed_b);
  }
  return best;
}

}  // namespace

TEST(ExactDistance, SpecExamples) {
  EXPECT_EQ(exact_distance(full_family(4, 2)), 3u);
  EXPECT_EQ(exact_distance(star_family(7, 3, 2)), 0u);
  EXPECT_EQ(exact_distance(ExplicitFamily(5, 2)), 0u);
  Rng rng(2);
  EXPECT_EQ(exact_distance(dno_family(5, 2, Rational::parse("0.3"), rng)), 4u);
  EXPECT_EQ(exact_distance(dno_family(4, 2, Rational::parse("0.4"), rng)), 3u);
}

TEST(ExactDistance, FullFamilyIsComplementOfStar) {
  for (int n = 2; n <= 9; ++n) {
    for (int k = 1; 2 * k <= n; ++k) {
      if (binomial(n, k) > 84) continue;
      EXPECT_EQ(exact_distance(full_family(n, k)), binomial(n, k) - binomial(n - 1, k - 1)) << n << "," << k;
    }
  }
}

TEST(ExactDistance, AgreesWithBruteForce) {
  Rng rng(17);
  int checked = 0;
  for (auto [n, k] : std::vector<std::pair<int, int>>{{5, 2}, {6, 2}, {6, 3}, {7, 3}}) {
    for (int i = 0; i < 60; ++i) {
      auto f = random_family(n, k, 0.3, rng);
      if (f.size() > 16) continue;
      EXPECT_EQ(exact_distance(f), brute_distance(f));
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(ExactDistance, BudgetError) {
  // K(24,2) on all 276 sets has 31878 edges.
  EXPECT_THROW(exact_distance(full_family(24, 2)), BudgetError);
  EXPECT_THROW(exact_distance(full_family(12, 2), 100), BudgetError);
}

TEST(MatchingBounds, Bracket) {
  auto b = matching_bounds(full_family(4, 2));
  EXPECT_EQ(b.lower, 3u);
  EXPECT_EQ(b.upper, 6u);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto f = random_family(6, 2, 0.5, rng);
    auto d = exact_distance(f);
    auto mb = matching_bounds(f);
    EXPECT_LE(mb.lower, d);
    EXPECT_LE(d, mb.upper);
    auto aug = augmented_matching_size(f);
    EXPECT_GE(aug, mb.lower);
    EXPECT_LE(aug, d);
  }
}

TEST(CrossDistance, Examples) {
  EXPECT_EQ(cross_distance(full_family(4, 2), full_family(4, 2)), 6u);
  EXPECT_EQ(cross_distance(star_family(6, 2, 1), star_family(6, 2, 1)), 0u);
  EXPECT_EQ(cross_distance(star_family(6, 2, 1), ExplicitFamily(6, 2)), 0u);
  EXPECT_THROW(cross_distance(full_family(4, 2), full_family(5, 2)), ValidationError);
}

TEST(CrossDistance, AgreesWithBruteForce) {
  Rng rng(23);
  for (int i = 0; i < 150; ++i) {
    auto f1 = random_family(5, 2, 0.4, rng);
    auto f2 = random_family(5, 2, 0.4, rng);
    EXPECT_EQ(cross_distance(f1, f2), brute_cross(f1, f2));
  }
}

TEST(Restriction, Example) {
  auto r = restriction(full_family(5, 2), RestrictionSpec(Subset(5, {1, 2}), Subset(5, {1})));
  EXPECT_EQ(r, ExplicitFamily::from_sets(5, 2, {KSubset(5, {1, 3}), KSubset(5, {1, 4}), KSubset(5, {1, 5})}));
  EXPECT_THROW(RestrictionSpec(Subset(5, {1}), Subset(5, {2})), ValidationError);
}

TEST(Restriction, PartitionsTheFamily) {
  Rng rng(3);
  auto f = random_family(7, 3, 0.5, rng);
  Subset a(7, {2, 5, 6});
  std::uint64_t sum = 0;
  for (ElementMask b = 0; b < 8; ++b) {
    Subset bs(7, deposit(b, a.mask()));
    auto r = restriction(f, RestrictionSpec(a, bs));
    r.for_each_member([&](std::uint64_t rk) { EXPECT_TRUE(f.contains(rk)); });
    sum += r.size();
  }
  EXPECT_EQ(sum, f.size());
}

TEST(Captures, Thresholds) {
  auto f = star_family(6, 2, 1);  // 5 members, C = 15
  EXPECT_TRUE(captures(f, Subset(6, {1}), Rational(1, 100)));
  // 4 members avoid {2}. 4 < 0.3*15 captures; 4 < (4/15)*15 does not.
  EXPECT_TRUE(captures(f, Subset(6, {2}), Rational(3, 10)));
  EXPECT_FALSE(captures(f, Subset(6, {2}), Rational(4, 15)));
}

TEST(UsefulSets, Examples) {
  EXPECT_EQ(useful_sets(full_family(4, 2), 1), 6u);
  EXPECT_EQ(useful_sets(full_family(4, 2), 2), 0u);
  EXPECT_EQ(useful_sets(star_family(5, 2, 1), 1), 0u);
  EXPECT_EQ(useful_sets(full_family(5, 2), 3), 10u);
}

TEST(FarRestriction, TrivialAtROne) {
  // r = 1: (∅, ∅, ∅) works whenever (F, F) itself is far.
  auto f = full_family(5, 2);
  auto res = search_far_restriction(f, 1, Rational(1, 10));
  ASSERT_TRUE(res.has_value());
  EXPECT_TRUE(res->a.empty());
  EXPECT_FALSE(search_far_restriction(star_family(5, 2, 1), 1, Rational(1, 10)).has_value());
  EXPECT_THROW(search_far_restriction(full_family(11, 2), 1, Rational(1, 10)), BudgetError);
}

TEST(FarRestriction, RTwoCertificatesHold) {
  auto f = full_family(6, 2);
  const Rational eps(1, 5);
  auto res = search_far_restriction(f, 2, eps);
  ASSERT_TRUE(res.has_value());
  const Rational target = eps / Rational(81);
  auto f1 = restriction(f, RestrictionSpec(res->a, res->b));
  auto f2 = restriction(f, RestrictionSpec(res->a, res->c));
  EXPECT_EQ(res->b.mask() & res->c.mask(), ElementMask{0});
  EXPECT_TRUE(exceeds(cross_distance(f1, f2), target, f.total()));
  for (int e = 1; e <= 6; ++e) {
    if (res->a.contains(e)) continue;
    EXPECT_FALSE(captures(f2, Subset(6, {e}), target)) << e;
  }
}
