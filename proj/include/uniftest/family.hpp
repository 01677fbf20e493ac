#pragma once

// Uniform families over C([n],k): the explicit bitmap representation, the
// counted query oracle that testers see, juntas, and instance generators.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "uniftest/combinatorics.hpp"
#include "uniftest/error.hpp"
#include "uniftest/rational.hpp"
#include "uniftest/rng.hpp"

namespace uniftest {

/// Default ceiling on the number of bits (= C(n,k)) of an ExplicitFamily.
inline constexpr std::uint64_t kBitmapCap = std::uint64_t{1} << 26;

inline void check_uniform_params(int n, int k) {
  check_universe(n);
  if (k < 1 || n < 2 * k) {
    throw ValidationError("need n >= 2k >= 2, got n=" + std::to_string(n) + " k=" + std::to_string(k));
  }
}

/// Calls f(rank, subset) for every k-subset of [n] in colex order.
template <typename F>
void for_each_ksubset(int n, int k, F&& f) {
  const std::uint64_t total = binomial(n, k);
  ElementMask mask = bits::prefix(k);
  for (std::uint64_t r = 0; r < total; ++r) {
    f(r, KSubset::from_mask(n, mask));
    if (r + 1 < total) mask = bits::next_same_popcount(mask);
  }
}

/// A subfamily of C([n],k) stored as a bitmap indexed by colex rank.
class ExplicitFamily {
 public:
  /// The empty family.
  ExplicitFamily(int n, int k, bool allow_large = false) : n_(n), k_(k) {
    check_uniform_params(n, k);
    total_ = binomial(n, k);
    if (total_ > kBitmapCap && !allow_large) {
      throw BudgetError("C(" + std::to_string(n) + "," + std::to_string(k) + ") = " + std::to_string(total_) +
                        " exceeds the explicit-family bitmap cap");
    }
    words_.assign((total_ + 63) / 64, 0);
  }

  static ExplicitFamily from_ranks(int n, int k, const std::vector<std::uint64_t>& ranks, bool allow_large = false) {
    ExplicitFamily f(n, k, allow_large);
    for (auto r : ranks) {
      if (r >= f.total_) throw ValidationError("rank " + std::to_string(r) + " out of range");
      f.set(r);
    }
    return f;
  }

  static ExplicitFamily from_sets(int n, int k, const std::vector<KSubset>& sets) {
    ExplicitFamily f(n, k);
    for (const auto& s : sets) {
      if (s.n() != n || s.k() != k) throw ValidationError("set '" + s.to_string() + "' does not belong to C([n],k)");
      f.set(rank(s));
    }
    return f;
  }

  template <typename Pred>
  static ExplicitFamily from_predicate(int n, int k, Pred&& pred, bool allow_large = false) {
    ExplicitFamily f(n, k, allow_large);
    for_each_ksubset(n, k, [&](std::uint64_t r, const KSubset& s) {
      if (pred(s)) f.set(r);
    });
    return f;
  }

  int n() const noexcept { return n_; }
  int k() const noexcept { return k_; }
  /// C(n,k): the size of the ambient family.
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t size() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  bool contains(std::uint64_t r) const noexcept {
    return r < total_ && ((words_[r >> 6] >> (r & 63)) & 1) != 0;
  }
  bool contains(const KSubset& s) const { return s.n() == n_ && s.k() == k_ && contains(rank(s)); }

  template <typename F>
  void for_each_member(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t word = words_[w];
      while (word != 0) {
        f(static_cast<std::uint64_t>(w) * 64 + static_cast<std::uint64_t>(std::countr_zero(word)));
        word &= word - 1;
      }
    }
  }

  /// Member ranks, ascending.
  std::vector<std::uint64_t> member_ranks() const {
    std::vector<std::uint64_t> out;
    out.reserve(count_);
    for_each_member([&](std::uint64_t r) { out.push_back(r); });
    return out;
  }

  std::vector<KSubset> member_sets() const {
    std::vector<KSubset> out;
    out.reserve(count_);
    for_each_member([&](std::uint64_t r) { out.push_back(unrank(r, n_, k_)); });
    return out;
  }

  /// Member element masks in rank order; the hot loops of the oracles use these.
  std::vector<ElementMask> member_masks() const {
    std::vector<ElementMask> out;
    out.reserve(count_);
    for_each_member([&](std::uint64_t r) { out.push_back(unrank(r, n_, k_).mask()); });
    return out;
  }

  /// Members satisfying `keep`, same universe.
  template <typename Pred>
  ExplicitFamily filter(Pred&& keep) const {
    ExplicitFamily out(n_, k_, true);
    for_each_member([&](std::uint64_t r) {
      if (keep(unrank(r, n_, k_))) out.set(r);
    });
    return out;
  }

  friend bool operator==(const ExplicitFamily&, const ExplicitFamily&) = default;

 private:
  void set(std::uint64_t r) {
    std::uint64_t& word = words_[r >> 6];
    std::uint64_t bit = std::uint64_t{1} << (r & 63);
    if ((word & bit) == 0) {
      word |= bit;
      ++count_;
    }
  }

  int n_;
  int k_;
  std::uint64_t total_ = 0;
  std::uint64_t count_ = 0;
  std::vector<std::uint64_t> words_;
};

inline ExplicitFamily full_family(int n, int k) {
  return ExplicitFamily::from_predicate(n, k, [](const KSubset&) { return true; });
}

inline bool is_intersecting(const ExplicitFamily& f) {
  auto masks = f.member_masks();
  for (std::size_t i = 0; i < masks.size(); ++i) {
    for (std::size_t j = i + 1; j < masks.size(); ++j) {
      if ((masks[i] & masks[j]) == 0) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Query access

struct QueryRecord {
  std::uint64_t rank;
  bool answer;
};

/// Membership function f: C([n],k) -> {0,1} behind a query counter. This is
/// the only view of the input a tester gets.
class FamilyOracle {
 public:
  using Predicate = std::function<bool(const KSubset&)>;

  explicit FamilyOracle(std::shared_ptr<const ExplicitFamily> family)
      : n_(family->n()), k_(family->k()), family_(std::move(family)) {}

  explicit FamilyOracle(ExplicitFamily family)
      : FamilyOracle(std::make_shared<const ExplicitFamily>(std::move(family))) {}

  /// Bitmap-free oracle, for universes beyond the explicit-family cap.
  static FamilyOracle from_predicate(int n, int k, Predicate pred) {
    check_uniform_params(n, k);
    return FamilyOracle(n, k, std::move(pred));
  }

  int n() const noexcept { return n_; }
  int k() const noexcept { return k_; }

  bool query(const KSubset& s) {
    if (s.n() != n_ || s.k() != k_) {
      throw ValidationError("query set '" + s.to_string() + "' is not a " + std::to_string(k_) + "-subset of [" +
                            std::to_string(n_) + "]");
    }
    const std::uint64_t r = rank(s);
    const bool answer = family_ ? family_->contains(r) : predicate_(s);
    log_.push_back({r, answer});
    return answer;
  }

  std::uint64_t queries_used() const noexcept { return log_.size(); }
  const std::vector<QueryRecord>& query_log() const noexcept { return log_; }

  /// Underlying family when the oracle is bitmap-backed, else nullptr.
  const ExplicitFamily* family() const noexcept { return family_.get(); }

 private:
  FamilyOracle(int n, int k, Predicate pred) : n_(n), k_(k), predicate_(std::move(pred)) {}

  int n_;
  int k_;
  std::shared_ptr<const ExplicitFamily> family_;
  Predicate predicate_;
  std::vector<QueryRecord> log_;
};

inline FamilyOracle::Predicate star_predicate(int center) {
  return [center](const KSubset& s) { return s.contains(center); };
}
inline FamilyOracle::Predicate full_predicate() {
  return [](const KSubset&) { return true; };
}
inline FamilyOracle::Predicate zero_predicate() {
  return [](const KSubset&) { return false; };
}

// ---------------------------------------------------------------------------
// Juntas

/// Family whose membership depends only on F ∩ J: F belongs iff its trace on
/// J is one of `traces`.
class Junta {
 public:
  Junta(Subset coords, std::vector<Subset> traces) : coords_(coords), traces_(std::move(traces)) {
    for (const auto& t : traces_) {
      if (t.universe() != coords_.universe() || !t.is_subset_of(coords_)) {
        throw ValidationError("junta trace {" + join(t.elements()) + "} is not a subset of J");
      }
    }
    std::sort(traces_.begin(), traces_.end(), [](const Subset& a, const Subset& b) { return a.mask() < b.mask(); });
    traces_.erase(std::unique(traces_.begin(), traces_.end()), traces_.end());
  }

  const Subset& coords() const noexcept { return coords_; }
  const std::vector<Subset>& traces() const noexcept { return traces_; }

  bool admits(const KSubset& s) const {
    ElementMask trace = s.mask() & coords_.mask();
    return std::any_of(traces_.begin(), traces_.end(), [&](const Subset& t) { return t.mask() == trace; });
  }

  /// ∅ is not admitted and every two admitted traces meet. Sufficient for the
  /// induced k-uniform family to be intersecting, for every n and k.
  bool intersecting_certified() const {
    for (std::size_t i = 0; i < traces_.size(); ++i) {
      if (traces_[i].empty()) return false;
      for (std::size_t j = i + 1; j < traces_.size(); ++j) {
        if ((traces_[i].mask() & traces_[j].mask()) == 0) return false;
      }
    }
    return true;
  }

 private:
  static std::string join(const std::vector<int>& v) {
    std::string out;
    for (int e : v) out += (out.empty() ? "" : ",") + std::to_string(e);
    return out;
  }

  Subset coords_;
  std::vector<Subset> traces_;
};

// ---------------------------------------------------------------------------
// Generators

inline ExplicitFamily star_family(int n, int k, int center) {
  check_uniform_params(n, k);
  if (center < 1 || center > n) throw ValidationError("star center " + std::to_string(center) + " outside [1,n]");
  return ExplicitFamily::from_predicate(n, k, [center](const KSubset& s) { return s.contains(center); });
}

inline ExplicitFamily junta_family(int n, int k, const Junta& junta) {
  check_uniform_params(n, k);
  if (junta.coords().universe() != n) throw ValidationError("junta universe does not match n");
  return ExplicitFamily::from_predicate(n, k, [&](const KSubset& s) { return junta.admits(s); });
}

/// J = {1..j}; admits traces of size > j/2, and for even j also the traces
/// of size j/2 that contain 1. Pairwise intersecting for every j >= 1.
inline Junta majority_junta(int n, int j) {
  check_universe(n);
  if (j < 1 || j > n || j > 16) throw ValidationError("majority junta needs 1 <= j <= min(n,16)");
  std::vector<Subset> traces;
  for (std::uint32_t local = 1; local < (1u << j); ++local) {
    int size = std::popcount(local);
    if (2 * size > j || (2 * size == j && (local & 1u) != 0)) traces.emplace_back(n, ElementMask{local});
  }
  return Junta(Subset(n, bits::prefix(j)), std::move(traces));
}

namespace detail {

/// Calls f(neighbour_rank) for each k-subset disjoint from `a`, in colex
/// order of its position inside [n] \ a; stops when f returns true.
template <typename F>
bool for_each_kneser_neighbour(int n, int k, const KSubset& a, F&& f) {
  const ElementMask rest = bits::prefix(n) & ~a.mask();
  const std::uint64_t count = binomial(n - k, k);
  ElementMask local = bits::prefix(k);
  for (std::uint64_t i = 0; i < count; ++i) {
    if (f(rank(KSubset::from_mask(n, deposit(local, rest))))) return true;
    if (i + 1 < count) local = bits::next_same_popcount(local);
  }
  return false;
}

}  // namespace detail

/// Pairwise-disjoint unordered pairs {A, B} of k-subsets with A ∩ B = ∅
/// (a matching in the Kneser graph K(n,k)) of at least `target` pairs.
///
/// n = 2k: the complement pairing, a perfect matching. Otherwise: randomized
/// greedy (random probes, then a neighbourhood scan), length-3 augmenting
/// paths while short of target, restarts up to `restarts` times.
inline std::vector<DisjointPair> kneser_matching(int n, int k, std::uint64_t target, Rng& rng, int restarts = 32) {
  check_uniform_params(n, k);
  const std::uint64_t total = binomial(n, k);
  if (target > total / 2) {
    throw ValidationError("kneser_matching: target " + std::to_string(target) + " exceeds floor(C(n,k)/2)");
  }
  std::vector<DisjointPair> out;
  if (n == 2 * k) {
    out.reserve(total / 2);
    const ElementMask all = bits::prefix(n);
    for_each_ksubset(n, k, [&](std::uint64_t, const KSubset& s) {
      if (s.contains(1)) out.push_back({s, KSubset::from_mask(n, all & ~s.mask())});
    });
    return out;
  }
  if (total > kBitmapCap) throw BudgetError("kneser_matching: C(n,k) exceeds the explicit-family cap");

  constexpr std::uint32_t kFree = UINT32_MAX;
  std::vector<ElementMask> masks;
  masks.reserve(total);
  for_each_ksubset(n, k, [&](std::uint64_t, const KSubset& s) { masks.push_back(s.mask()); });
  std::vector<std::uint32_t> partner(total);
  std::vector<std::uint32_t> order(total);
  // Free vertices, with positions for O(1) removal.
  std::vector<std::uint32_t> free_list(total), free_pos(total);
  for (int attempt = 0; attempt <= restarts; ++attempt) {
    std::fill(partner.begin(), partner.end(), kFree);
    std::iota(order.begin(), order.end(), 0u);
    std::iota(free_list.begin(), free_list.end(), 0u);
    std::iota(free_pos.begin(), free_pos.end(), 0u);
    std::size_t free_count = total;
    for (std::uint64_t i = total; i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);

    std::uint64_t matched = 0;
    auto unfree = [&](std::uint32_t v) {
      const std::uint32_t last = free_list[--free_count];
      free_list[free_pos[v]] = last;
      free_pos[last] = free_pos[v];
    };
    auto match = [&](std::uint64_t u, std::uint64_t v) {
      partner[u] = static_cast<std::uint32_t>(v);
      partner[v] = static_cast<std::uint32_t>(u);
    };
    for (std::uint32_t u : order) {
      if (partner[u] != kFree) continue;
      const ElementMask rest = bits::prefix(n) & ~masks[u];
      std::uint32_t found = kFree;
      for (int probe = 0; probe < 16 && found == kFree; ++probe) {
        KSubset local = unrank(uniform_below(rng, binomial(n - k, k)), n - k, k);
        auto v = static_cast<std::uint32_t>(rank(KSubset::from_mask(n, deposit(local.mask(), rest))));
        if (partner[v] == kFree) found = v;
      }
      // Probes fail once few vertices are free; then the free list is short.
      for (std::size_t i = 0; i < free_count && found == kFree; ++i) {
        if ((masks[free_list[i]] & masks[u]) == 0) found = free_list[i];
      }
      if (found == kFree) continue;
      match(u, found);
      unfree(u);
      unfree(found);
      ++matched;
    }

    // u - v = w - x with u, x free becomes u = v - w = x.
    for (std::uint64_t u = 0; u < total && matched < target; ++u) {
      if (partner[u] != kFree) continue;
      detail::for_each_kneser_neighbour(n, k, unrank(u, n, k), [&](std::uint64_t v) {
        const std::uint64_t w = partner[v];
        return detail::for_each_kneser_neighbour(n, k, unrank(w, n, k), [&](std::uint64_t x) {
          if (x == u || partner[x] != kFree) return false;
          match(u, v);
          match(w, x);
          ++matched;
          return true;
        });
      });
    }

    if (matched >= target) {
      out.reserve(matched);
      for (std::uint64_t u = 0; u < total; ++u) {
        if (partner[u] != kFree && partner[u] > u) {
          out.push_back({KSubset::from_mask(n, masks[u]), KSubset::from_mask(n, masks[partner[u]])});
        }
      }
      return out;
    }
  }
  throw InsufficientMatching("kneser_matching: could not reach " + std::to_string(target) + " pairs after " +
                             std::to_string(restarts) + " restarts");
}

/// A D_no draw together with the planted pairs that certify its farness.
struct DnoInstance {
  ExplicitFamily family;
  std::vector<DisjointPair> pairs;
};

/// The hard distribution D_no: N = smallest integer > eps * C(n,k) pairs
/// drawn uniformly from a Kneser matching; f = 1 exactly on their members.
/// Every draw is eps-far from intersecting.
inline DnoInstance dno_instance(int n, int k, const Rational& eps, Rng& rng) {
  check_uniform_params(n, k);
  const std::uint64_t total = binomial(n, k);
  if (exceeds(1, eps, total)) throw ValidationError("dno_family: eps must be at least 1/C(n,k)");
  if (eps >= Rational(1, 2)) throw ValidationError("dno_family: eps must be below 1/2");
  const std::uint64_t pairs_needed = smallest_exceeding(eps, total);
  auto matching = kneser_matching(n, k, pairs_needed, rng);
  for (std::uint64_t i = 0; i < pairs_needed; ++i) {
    std::swap(matching[i], matching[i + uniform_below(rng, matching.size() - i)]);
  }
  matching.resize(pairs_needed);
  std::vector<std::uint64_t> ranks;
  ranks.reserve(2 * pairs_needed);
  for (const auto& p : matching) {
    ranks.push_back(rank(p.first));
    ranks.push_back(rank(p.second));
  }
  return {ExplicitFamily::from_ranks(n, k, ranks), std::move(matching)};
}

inline ExplicitFamily dno_family(int n, int k, const Rational& eps, Rng& rng) {
  return dno_instance(n, k, eps, rng).family;
}

/// Each k-subset independently with probability p.
inline ExplicitFamily random_family(int n, int k, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("random_family: p must lie in [0,1]");
  return ExplicitFamily::from_predicate(n, k, [&](const KSubset&) { return uniform_unit(rng) < p; });
}

// ---------------------------------------------------------------------------
// Family files: "n k" header, then one member per line as increasing
// integers; '#' lines are comments; blank lines are ignored.

inline void write_family(std::ostream& out, const ExplicitFamily& f) {
  out << f.n() << ' ' << f.k() << '\n';
  f.for_each_member([&](std::uint64_t r) { out << unrank(r, f.n(), f.k()).to_string() << '\n'; });
}

inline void write_family(const std::string& path, const ExplicitFamily& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_family(out, f);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline ExplicitFamily read_family(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  int n = 0, k = 0;
  std::vector<std::uint64_t> ranks;
  std::vector<std::uint64_t> seen;  // bitmap for duplicate detection
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[line.find_first_not_of(" \t")] == '#') continue;
    if (!have_header) {
      std::istringstream hs(line);
      std::string extra;
      if (!(hs >> n >> k) || (hs >> extra)) throw ParseError("malformed header, expected \"n k\"", line_no);
      try {
        check_uniform_params(n, k);
        if (binomial(n, k) > kBitmapCap) throw BudgetError("family too large");
      } catch (const std::exception& e) {
        throw ParseError(std::string("bad header: ") + e.what(), line_no);
      }
      seen.assign((binomial(n, k) + 63) / 64, 0);
      have_header = true;
      continue;
    }
    KSubset s;
    try {
      s = parse_ksubset(line, n, k);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
    const std::uint64_t r = rank(s);
    std::uint64_t& word = seen[r >> 6];
    const std::uint64_t bit = std::uint64_t{1} << (r & 63);
    if ((word & bit) != 0) throw ParseError("duplicate member '" + s.to_string() + "'", line_no);
    word |= bit;
    ranks.push_back(r);
  }
  if (!have_header) throw ParseError("missing \"n k\" header", line_no + 1);
  return ExplicitFamily::from_ranks(n, k, ranks);
}

inline ExplicitFamily read_family(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open family file '" + path + "'");
  return read_family(in);
}

}  // namespace uniftest
