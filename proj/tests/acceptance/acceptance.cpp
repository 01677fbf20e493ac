// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Oracles used for cross-checks here are written
// independently of the library (plain element vectors, exhaustive search).

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "uniftest/harness.hpp"

using namespace uniftest;

namespace {

// Tolerances, pinned.
constexpr double kTwoThirds = 2.0 / 3.0;
constexpr double kSlack = 0.05;
// (1 - 2*0.3)^4 = 0.4^4 = 0.0256.
constexpr double kPairAcceptBound = 0.0256 + kSlack;

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail, double seconds) {
  std::printf("%s [%d] %s: %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <typename F>
void criterion(int id, const std::string& name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
  report(id, name, ok, detail, took.count());
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- independent oracles -------------------------------------------------

bool disjoint_elems(const std::vector<int>& a, const std::vector<int>& b) {
  for (int x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) return false;
  }
  return true;
}

std::vector<std::vector<int>> elems_of(const ExplicitFamily& f) {
  std::vector<std::vector<int>> out;
  for (const auto& s : f.member_sets()) out.push_back(s.elements());
  return out;
}

bool intersecting_elems(const std::vector<std::vector<int>>& sets) {
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      if (disjoint_elems(sets[i], sets[j])) return false;
    }
  }
  return true;
}

// Include/exclude search for the largest intersecting subfamily.
std::size_t max_intersecting_subfamily(const std::vector<std::vector<int>>& sets) {
  std::size_t best = 0;
  std::vector<std::size_t> chosen;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (chosen.size() + (sets.size() - i) <= best) return;
    if (i == sets.size()) {
      best = chosen.size();
      return;
    }
    bool fits = std::none_of(chosen.begin(), chosen.end(), [&](std::size_t c) { return disjoint_elems(sets[c], sets[i]); });
    if (fits) {
      chosen.push_back(i);
      rec(i + 1);
      chosen.pop_back();
    }
    rec(i + 1);
  };
  rec(0);
  return best;
}

// Greedy maximal matching of disjoint cross pairs. Every edge of it needs
// its own removal, so its size lower-bounds the cross distance.
std::size_t greedy_cross_matching(const std::vector<std::vector<int>>& a, const std::vector<std::vector<int>>& b) {
  std::vector<bool> used(b.size(), false);
  std::size_t size = 0;
  for (const auto& x : a) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (!used[j] && disjoint_elems(x, b[j])) {
        used[j] = true;
        ++size;
        break;
      }
    }
  }
  return size;
}

// Fewest removals over both sides leaving every cross pair intersecting.
std::size_t min_cross_removal(const std::vector<std::vector<int>>& a, const std::vector<std::vector<int>>& b) {
  const std::size_t na = a.size(), nb = b.size();
  std::size_t best = na + nb;
  for (std::uint32_t ra = 0; ra < (1u << na); ++ra) {
    for (std::uint32_t rb = 0; rb < (1u << nb); ++rb) {
      const std::size_t removed = static_cast<std::size_t>(std::popcount(ra) + std::popcount(rb));
      if (removed >= best) continue;
      bool ok = true;
      for (std::size_t i = 0; i < na && ok; ++i) {
        if ((ra >> i) & 1u) continue;
        for (std::size_t j = 0; j < nb && ok; ++j) {
          if (!((rb >> j) & 1u) && disjoint_elems(a[i], b[j])) ok = false;
        }
      }
      if (ok) best = removed;
    }
  }
  return best;
}

std::vector<ExplicitFamily> all_families(int n, int k) {
  const auto total = binomial(n, k);
  std::vector<ExplicitFamily> out;
  for (std::uint64_t bitsel = 0; bitsel < (std::uint64_t{1} << total); ++bitsel) {
    std::vector<std::uint64_t> ranks;
    for (std::uint64_t r = 0; r < total; ++r) {
      if ((bitsel >> r) & 1) ranks.push_back(r);
    }
    out.push_back(ExplicitFamily::from_ranks(n, k, ranks));
  }
  return out;
}

ExperimentConfig config(int n, int k, TesterKind t, GeneratorKind g, const Rational& eps, std::uint64_t m,
                        std::uint64_t trials, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.n = n;
  cfg.k = k;
  cfg.tester = t;
  cfg.generator = g;
  cfg.eps = eps;
  cfg.m = m;
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.validate = true;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  return cfg;
}

}  // namespace

int main() {
  // 1 ------------------------------------------------------------------------
  criterion(1, "one-sided exactness", [](std::string& detail) {
    std::vector<ExplicitFamily> corpus;
    for (auto& f : all_families(5, 2)) {
      if (intersecting_elems(elems_of(f))) corpus.push_back(std::move(f));
    }
    const std::size_t exhaustive = corpus.size();
    for (auto [n, k] : std::vector<std::pair<int, int>>{{5, 2}, {8, 4}, {10, 3}, {20, 2}, {20, 4}, {40, 2}, {40, 3}, {40, 5}}) {
      corpus.push_back(star_family(n, k, 1 + (n % 3)));
    }
    std::size_t juntas = 0;
    for (int j = 0; j <= 2; ++j) {
      for (const auto& junta : enumerate_intersecting_juntas(8, j)) {
        if (!junta.intersecting_certified()) continue;
        for (int k : {2, 3}) corpus.push_back(junta_family(8, k, junta)), ++juntas;
      }
    }
    for (int j = 1; j <= 5; ++j) {
      for (int k : {2, 3, 4}) corpus.push_back(junta_family(40, k, majority_junta(40, j))), ++juntas;
    }
    std::uint64_t runs = 0, rejections = 0;
    for (const auto& f : corpus) {
      auto shared = std::make_shared<const ExplicitFamily>(f);
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        FamilyOracle a(shared), b(shared);
        rejections += canonical_tester(a, f.n(), f.k(), 120, seed).accepted() ? 0 : 1;
        rejections += disjoint_pair_tester(b, f.n(), f.k(), 60, seed).accepted() ? 0 : 1;
        runs += 2;
      }
    }
    detail = fmt("%zu families (%zu exhaustive at n=5,k=2, %zu juntas), %llu runs, %llu rejections", corpus.size(),
                 exhaustive, juntas, static_cast<unsigned long long>(runs), static_cast<unsigned long long>(rejections));
    return exhaustive == 76 && rejections == 0;
  });

  // 2 ------------------------------------------------------------------------
  criterion(2, "canonical tester soundness r=2", [](std::string& detail) {
    auto cfg = config(50, 3, TesterKind::canonical, GeneratorKind::dno, Rational(1, 10), 120, 1000, 20240101);
    auto s = run_trials(cfg);
    const bool certified = s.classification == "far";
    detail = fmt("n=50 k=3 eps=0.1 m=120: %llu/1000 rejections, wilson_lo=%.4f (need >= %.4f), certification=%s",
                 static_cast<unsigned long long>(s.rejections), s.wilson_lo, kTwoThirds - kSlack,
                 to_string(s.certification));
    return certified && s.wilson_lo >= kTwoThirds - kSlack;
  });

  // 3 ------------------------------------------------------------------------
  criterion(3, "disjoint-pair tester at n=2k", [](std::string& detail) {
    auto cfg = config(8, 4, TesterKind::disjoint_pair, GeneratorKind::dno, Rational(3, 10), 4, 1000, 777);
    auto s = run_trials(cfg);
    const double accept = s.acceptances / 1000.0;
    detail = fmt("n=8 k=4 eps=0.3 m=4: accept rate %.4f (need <= %.4f), certification=%s/%s", accept,
                 kPairAcceptBound, to_string(s.certification), s.classification.c_str());
    return s.certification == CertificationKind::exact && s.classification == "far" && accept <= kPairAcceptBound;
  });

  // 4 ------------------------------------------------------------------------
  criterion(4, "density tester", [](std::string& detail) {
    const Rational eps2(1, 5);  // 4 * (0 + k/n) at n=40, k=2
    const std::uint64_t m = canonical_sample_size(2, eps2);
    auto close = config(40, 2, TesterKind::density, GeneratorKind::star, Rational(0), m, 500, 41);
    close.eps2 = eps2;
    auto sc = run_trials(close);
    auto far = config(40, 2, TesterKind::density, GeneratorKind::dno, Rational(0), m, 500, 42);
    far.eps2 = eps2;
    auto sf = run_trials(far);
    const double accept = sc.acceptances / 500.0, reject = sf.rejections / 500.0;
    detail = fmt("m=%llu; star accept %.4f, dno reject %.4f (need >= %.4f); certification star=%s/%s dno=%s/%s",
                 static_cast<unsigned long long>(m), accept, reject, kTwoThirds - kSlack, to_string(sc.certification),
                 sc.classification.c_str(), to_string(sf.certification), sf.classification.c_str());
    return m == 60 && accept >= kTwoThirds - kSlack && reject >= kTwoThirds - kSlack && sc.classification == "close" &&
           sf.classification == "far";
  });

  // 5 ------------------------------------------------------------------------
  criterion(5, "exact-oracle identities", [](std::string& detail) {
    std::size_t pairs = 0, mismatches = 0;
    for (int n = 2; n <= 120; ++n) {
      // C(n,k) grows with k up to n/2, so stop at the first one past 120.
      for (int k = 1; 2 * k <= n && binomial(n, k) <= 120; ++k) {
        ++pairs;
        const auto expect = binomial(n, k) - binomial(n - 1, k - 1);
        if (exact_distance(full_family(n, k)) != expect) ++mismatches;
      }
    }
    Rng rng(5005);
    const std::vector<std::pair<int, int>> shapes{{5, 2}, {6, 2}, {6, 3}, {7, 2}, {7, 3}, {8, 3}, {9, 2}};
    std::size_t checked = 0, random_mismatches = 0;
    for (int draw = 0; draw < 500; ++draw) {
      auto [n, k] = shapes[uniform_below(rng, shapes.size())];
      const double p = 20.0 / static_cast<double>(binomial(n, k)) * (0.3 + 0.8 * uniform_unit(rng));
      auto f = random_family(n, k, std::min(1.0, p), rng);
      if (f.size() > 20) continue;
      ++checked;
      if (exact_distance(f) != f.size() - max_intersecting_subfamily(elems_of(f))) ++random_mismatches;
    }
    detail = fmt("EKR on %zu (n,k) pairs: %zu mismatches; %zu/500 random draws with |F|<=20: %zu mismatches", pairs,
                 mismatches, checked, random_mismatches);
    return mismatches == 0 && random_mismatches == 0 && checked >= 400;
  });

  // 6 ------------------------------------------------------------------------
  criterion(6, "matching bracket", [](std::string& detail) {
    Rng rng(6006);
    std::size_t violations = 0, total = 0;
    for (auto [n, k] : std::vector<std::pair<int, int>>{{4, 2}, {5, 2}, {6, 2}, {6, 3}}) {
      for (int i = 0; i < 1000; ++i) {
        auto f = random_family(n, k, uniform_unit(rng), rng);
        auto d = exact_distance(f);
        auto b = matching_bounds(f);
        if (!(b.lower <= d && d <= 2 * b.lower && b.upper == 2 * b.lower)) ++violations;
        ++total;
      }
    }
    detail = fmt("%zu families, %zu violations", total, violations);
    return violations == 0;
  });

  // 7 ------------------------------------------------------------------------
  criterion(7, "useful-set count on far families", [](std::string& detail) {
    const int n = 5, k = 2;
    const std::uint64_t total = binomial(n, k);
    const std::uint64_t base = static_cast<std::uint64_t>(k * k) * binomial(n - 2, k - 2);
    std::size_t checked = 0, violations = 0;
    for (const auto& f : all_families(n, k)) {
      if (f.size() <= base) continue;
      const auto d = exact_distance(f);
      if (d == 0) continue;
      const Rational eps(static_cast<std::int64_t>(d - 1), static_cast<std::int64_t>(total));
      if (!exceeds(d, eps, total)) {
        ++violations;  // cannot happen: d > d - 1
        continue;
      }
      const std::uint64_t threshold = (f.size() - base + 1) / 2;
      ++checked;
      if (!exceeds(useful_sets(f, threshold), eps / Rational(2), total)) ++violations;
    }
    detail = fmt("%zu far families with |F| > %llu, %zu violations", checked, static_cast<unsigned long long>(base),
                 violations);
    return checked > 0 && violations == 0;
  });

  // 8 ------------------------------------------------------------------------
  criterion(8, "Konig equality", [](std::string& detail) {
    Rng rng(8008);
    std::size_t checked = 0, mismatches = 0;
    for (int draw = 0; draw < 500; ++draw) {
      auto f1 = random_family(5, 2, 0.1 + 0.7 * uniform_unit(rng), rng);
      auto f2 = random_family(5, 2, 0.1 + 0.7 * uniform_unit(rng), rng);
      if (f1.size() + f2.size() > 16) continue;
      ++checked;
      if (cross_distance(f1, f2) != min_cross_removal(elems_of(f1), elems_of(f2))) ++mismatches;
    }
    detail = fmt("%zu/500 pairs with |F1|+|F2|<=16, %zu mismatches", checked, mismatches);
    return checked > 0 && mismatches == 0;
  });

  // 9 ------------------------------------------------------------------------
  criterion(9, "far restriction certificates (r=1)", [](std::string& detail) {
    Rng rng(9009);
    std::size_t instances = 0, found = 0, verified = 0, attempts = 0;
    while (instances < 50 && attempts < 10000) {
      ++attempts;
      const int n = 5 + static_cast<int>(uniform_below(rng, 3));
      auto f = random_family(n, 2, 0.3 + 0.6 * uniform_unit(rng), rng);
      const std::uint64_t total = f.total();
      const auto d = exact_distance(f);
      if (d < 2) continue;
      const Rational eps(static_cast<std::int64_t>(d - 1), static_cast<std::int64_t>(total));
      if (!validate_instance(f, eps).far) continue;
      ++instances;
      auto res = search_far_restriction(f, 1, eps);
      if (!res) continue;
      ++found;
      const Rational target = eps / Rational(3);
      const bool shape = res->b.is_subset_of(res->a) && res->c.is_subset_of(res->a) &&
                         (res->b.mask() & res->c.mask()) == 0;
      auto f1 = restriction(f, RestrictionSpec(res->a, res->b));
      auto f2 = restriction(f, RestrictionSpec(res->a, res->c));
      const bool far = exceeds(f1.size(), target, total) && exceeds(f2.size(), target, total) &&
                       exceeds(cross_distance(f1, f2), target, total) &&
                       exceeds(greedy_cross_matching(elems_of(f1), elems_of(f2)), target, total);
      // r - 1 = 0: the only candidate capturing set is the empty one.
      const bool no_capture = !captures(f2, Subset(n, ElementMask{0}), target);
      if (shape && far && no_capture) ++verified;
    }
    detail = fmt("%zu certified-far instances, %zu triples found, %zu re-verified", instances, found, verified);
    return instances == 50 && found == 50 && verified == 50;
  });

  // 10 -----------------------------------------------------------------------
  criterion(10, "non-adaptivity and query budgets", [](std::string& detail) {
    const int n = 12, k = 3;
    Rng rng(10010);
    std::vector<std::shared_ptr<const ExplicitFamily>> oracles{
        std::make_shared<const ExplicitFamily>(full_family(n, k)),
        std::make_shared<const ExplicitFamily>(ExplicitFamily(n, k)),
        std::make_shared<const ExplicitFamily>(star_family(n, k, 3)),
        std::make_shared<const ExplicitFamily>(random_family(n, k, 0.5, rng)),
    };
    std::size_t mismatched = 0, budget_errors = 0, runs = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const std::uint64_t m = 1 + seed % 37;
      for (int t = 0; t < 4; ++t) {
        std::vector<std::uint64_t> reference;
        for (std::size_t i = 0; i < oracles.size(); ++i) {
          FamilyOracle o(oracles[i]);
          TesterReport rep;
          std::uint64_t expected = m;
          switch (t) {
            case 0: rep = canonical_tester(o, n, k, m, seed); break;
            case 1: rep = junta_tester(o, n, k, Rational(0), Rational(1, 5), 2, m, seed); break;
            case 2: rep = density_tester(o, n, k, Rational(1, 5), m, seed); break;
            default: rep = disjoint_pair_tester(o, n, k, m, seed); expected = 2 * m; break;
          }
          ++runs;
          if (rep.queries_used != expected || o.queries_used() != expected || rep.budget != expected) ++budget_errors;
          std::vector<std::uint64_t> multiset;
          for (const auto& q : o.query_log()) multiset.push_back(q.rank);
          std::sort(multiset.begin(), multiset.end());
          if (i == 0) {
            reference = multiset;
          } else if (multiset != reference) {
            ++mismatched;
          }
        }
      }
    }
    detail = fmt("%zu tester runs, %zu query-multiset mismatches, %zu budget mismatches", runs, mismatched,
                 budget_errors);
    return mismatched == 0 && budget_errors == 0;
  });

  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
