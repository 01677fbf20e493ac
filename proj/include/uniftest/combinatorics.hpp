#pragma once

// Exact binomials, colexicographic ranking of k-subsets of [n] = {1..n}, and
// uniform sampling of subsets and disjoint pairs.

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uniftest/error.hpp"
#include "uniftest/rng.hpp"

namespace uniftest {

/// Bit e-1 stands for element e.
using ElementMask = unsigned __int128;

inline constexpr int kMaxUniverse = 128;

namespace bits {

inline constexpr ElementMask one = 1;

inline constexpr int popcount(ElementMask m) noexcept {
  return std::popcount(static_cast<std::uint64_t>(m)) + std::popcount(static_cast<std::uint64_t>(m >> 64));
}

inline constexpr int countr_zero(ElementMask m) noexcept {
  auto lo = static_cast<std::uint64_t>(m);
  return lo != 0 ? std::countr_zero(lo) : 64 + std::countr_zero(static_cast<std::uint64_t>(m >> 64));
}

/// Mask of elements {1..n}.
inline constexpr ElementMask prefix(int n) noexcept { return n >= 128 ? ~ElementMask{0} : (one << n) - 1; }

/// Next mask with the same popcount in increasing numeric order. Numeric
/// order of masks is colex order of the subsets they encode.
inline constexpr ElementMask next_same_popcount(ElementMask x) noexcept {
  ElementMask t = x | (x - 1);
  ElementMask low = (~t & (t + 1)) - 1;  // ones below the lowest zero of t
  return (t + 1) | (low >> (countr_zero(x) + 1));
}

template <typename F>
inline void for_each_element(ElementMask m, F&& f) {
  while (m != 0) {
    int b = countr_zero(m);
    f(b + 1);
    m &= m - 1;
  }
}

inline std::vector<int> to_elements(ElementMask m) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(popcount(m)));
  for_each_element(m, [&](int e) { out.push_back(e); });
  return out;
}

}  // namespace bits

/// All C(a,b), 0 <= b <= a <= n_max, as exact 64-bit values.
class BinomialTable {
 public:
  explicit BinomialTable(int n_max) : n_max_(n_max) {
    if (n_max < 0) throw ValidationError("BinomialTable: negative n_max");
    rows_.resize(static_cast<std::size_t>(n_max) + 1);
    for (int a = 0; a <= n_max; ++a) {
      auto& row = rows_[static_cast<std::size_t>(a)];
      row.assign(static_cast<std::size_t>(a) + 1, 1);
      for (int b = 1; b < a; ++b) {
        const auto& up = rows_[static_cast<std::size_t>(a) - 1];
        if (__builtin_add_overflow(up[b - 1], up[b], &row[b])) {
          throw BudgetError("BinomialTable: C(" + std::to_string(a) + "," + std::to_string(b) +
                            ") exceeds the 64-bit range");
        }
      }
    }
  }

  int n_max() const noexcept { return n_max_; }

  /// C(n,k); 0 when k > n or k < 0.
  std::uint64_t operator()(int n, int k) const {
    if (n < 0 || n > n_max_) {
      throw ValidationError("binomial: n=" + std::to_string(n) + " outside table range");
    }
    if (k < 0 || k > n) return 0;
    return rows_[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
  }

 private:
  int n_max_;
  std::vector<std::vector<std::uint64_t>> rows_;
};

inline const BinomialTable& shared_binomials() {
  static const BinomialTable table(64);
  return table;
}

/// C(n,k). Uses the shared table up to n = 64, beyond that an
/// overflow-checked product; throws BudgetError if C(n,k) >= 2^64.
inline std::uint64_t binomial(int n, int k) {
  if (n < 0) throw ValidationError("binomial: negative n");
  if (k < 0 || k > n) return 0;
  const auto& table = shared_binomials();
  if (n <= table.n_max()) return table(n, k);
  if (k > n - k) k = n - k;
  unsigned __int128 acc = 1;
  for (int i = 1; i <= k; ++i) {
    acc = acc * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (acc > UINT64_MAX) {
      throw BudgetError("binomial: C(" + std::to_string(n) + "," + std::to_string(k) + ") exceeds 64 bits");
    }
  }
  return static_cast<std::uint64_t>(acc);
}

inline void check_universe(int n) {
  if (n < 1 || n > kMaxUniverse) {
    throw ValidationError("universe size n=" + std::to_string(n) + " outside [1," + std::to_string(kMaxUniverse) + "]");
  }
}

/// Arbitrary subset of [n] (coordinate sets, restriction sets, traces).
class Subset {
 public:
  Subset() = default;
  Subset(int n, ElementMask mask) : n_(n), mask_(mask) {
    check_universe(n);
    if ((mask & ~bits::prefix(n)) != 0) throw ValidationError("subset element outside [1,n]");
  }
  Subset(int n, std::initializer_list<int> elements) : Subset(n, std::vector<int>(elements)) {}
  Subset(int n, const std::vector<int>& elements) : n_(n) {
    check_universe(n);
    for (int e : elements) {
      if (e < 1 || e > n) throw ValidationError("subset element " + std::to_string(e) + " outside [1,n]");
      mask_ |= bits::one << (e - 1);
    }
  }

  int universe() const noexcept { return n_; }
  ElementMask mask() const noexcept { return mask_; }
  int size() const noexcept { return bits::popcount(mask_); }
  bool empty() const noexcept { return mask_ == 0; }
  bool contains(int e) const noexcept { return e >= 1 && e <= n_ && ((mask_ >> (e - 1)) & 1) != 0; }
  bool is_subset_of(const Subset& other) const noexcept { return (mask_ & ~other.mask_) == 0; }
  std::vector<int> elements() const { return bits::to_elements(mask_); }

  friend bool operator==(const Subset&, const Subset&) = default;

 private:
  int n_ = 1;
  ElementMask mask_ = 0;
};

/// A k-element subset of [n]; the universal query point.
class KSubset {
 public:
  KSubset() = default;

  /// Validated construction from a strictly increasing element list.
  KSubset(int n, const std::vector<int>& elements) : n_(static_cast<std::uint8_t>(n)) {
    check_universe(n);
    int prev = 0;
    for (int e : elements) {
      if (e <= prev) throw ValidationError("k-subset elements must be strictly increasing");
      if (e > n) throw ValidationError("k-subset element " + std::to_string(e) + " exceeds n=" + std::to_string(n));
      mask_ |= bits::one << (e - 1);
      prev = e;
    }
    k_ = static_cast<std::uint8_t>(elements.size());
  }
  KSubset(int n, std::initializer_list<int> elements) : KSubset(n, std::vector<int>(elements)) {}

  static KSubset from_mask(int n, ElementMask mask) {
    check_universe(n);
    if ((mask & ~bits::prefix(n)) != 0) throw ValidationError("k-subset element outside [1,n]");
    KSubset s;
    s.n_ = static_cast<std::uint8_t>(n);
    s.k_ = static_cast<std::uint8_t>(bits::popcount(mask));
    s.mask_ = mask;
    return s;
  }

  int n() const noexcept { return n_; }
  int k() const noexcept { return k_; }
  ElementMask mask() const noexcept { return mask_; }
  std::vector<int> elements() const { return bits::to_elements(mask_); }
  bool contains(int e) const noexcept { return e >= 1 && e <= n_ && ((mask_ >> (e - 1)) & 1) != 0; }
  Subset as_subset() const { return Subset(n_, mask_); }

  /// "1 3 7"
  std::string to_string() const {
    std::string out;
    bits::for_each_element(mask_, [&](int e) {
      if (!out.empty()) out += ' ';
      out += std::to_string(e);
    });
    return out;
  }

  friend bool operator==(const KSubset&, const KSubset&) = default;

 private:
  std::uint8_t n_ = 0;
  std::uint8_t k_ = 0;
  ElementMask mask_ = 0;
};

/// Parses the text form "1 3 7". Throws ValidationError on anything that is
/// not a strictly increasing list of k integers in [1..n].
inline KSubset parse_ksubset(std::string_view line, int n, int k) {
  std::istringstream in{std::string(line)};
  std::vector<int> elements;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(token, &used);
    } catch (const std::exception&) {
      throw ValidationError("not an integer: '" + token + "'");
    }
    if (used != token.size()) throw ValidationError("not an integer: '" + token + "'");
    if (value < 1 || value > n) throw ValidationError("element " + token + " out of range [1," + std::to_string(n) + "]");
    elements.push_back(value);
  }
  if (static_cast<int>(elements.size()) != k) {
    throw ValidationError("expected " + std::to_string(k) + " elements, got " + std::to_string(elements.size()));
  }
  return KSubset(n, elements);
}

/// Colex rank: sum over i of C(e_i - 1, i + 1), elements ascending, i from 0.
inline std::uint64_t rank(const KSubset& s) {
  std::uint64_t r = 0;
  int i = 1;
  bits::for_each_element(s.mask(), [&](int e) { r += binomial(e - 1, i++); });
  return r;
}

/// Inverse of rank() over the k-subsets of [n].
inline KSubset unrank(std::uint64_t idx, int n, int k) {
  check_universe(n);
  if (k < 0 || k > n) throw ValidationError("unrank: need 0 <= k <= n");
  if (idx >= binomial(n, k)) {
    throw ValidationError("unrank: index " + std::to_string(idx) + " out of range for C(" + std::to_string(n) + "," +
                          std::to_string(k) + ")");
  }
  ElementMask mask = 0;
  int c = n - 1;
  for (int i = k; i >= 1; --i) {
    while (binomial(c, i) > idx) --c;
    mask |= bits::one << c;
    idx -= binomial(c, i);
    --c;
  }
  return KSubset::from_mask(n, mask);
}

inline void check_pair_universe(const KSubset& a, const KSubset& b) {
  if (a.n() != b.n()) throw ValidationError("subsets from different universes");
}

inline bool are_disjoint(const KSubset& a, const KSubset& b) {
  check_pair_universe(a, b);
  return (a.mask() & b.mask()) == 0;
}

inline KSubset sample_ksubset(int n, int k, Rng& rng) {
  check_universe(n);
  if (k < 1 || k > n) throw ValidationError("sample_ksubset: need n >= k >= 1");
  return unrank(uniform_below(rng, binomial(n, k)), n, k);
}

/// Unordered disjoint pair; `first` is the set drawn first.
struct DisjointPair {
  KSubset first;
  KSubset second;
};

/// Deposits the low bits of `local` onto the set bits of `onto`, in order.
inline ElementMask deposit(ElementMask local, ElementMask onto) {
  ElementMask out = 0;
  while (local != 0 && onto != 0) {
    ElementMask low = onto & (~onto + 1);
    if ((local & 1) != 0) out |= low;
    local >>= 1;
    onto &= onto - 1;
  }
  return out;
}

/// A uniform over C(n,k), then B uniform over the k-subsets of [n] \ A.
inline DisjointPair sample_disjoint_pair(int n, int k, Rng& rng) {
  check_universe(n);
  if (k < 1 || n < 2 * k) throw ValidationError("sample_disjoint_pair: need n >= 2k, k >= 1");
  KSubset a = sample_ksubset(n, k, rng);
  KSubset local = unrank(uniform_below(rng, binomial(n - k, k)), n - k, k);
  ElementMask rest = bits::prefix(n) & ~a.mask();
  return {a, KSubset::from_mask(n, deposit(local.mask(), rest))};
}

}  // namespace uniftest
