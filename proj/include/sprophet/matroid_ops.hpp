#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sprophet/element_set.hpp"
#include "sprophet/matroid.hpp"

namespace sprophet {

// Raised when an exact routine is asked to enumerate beyond its size cap.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Greedy basis of `s`, scanning members in ascending id order.
inline ElementSet greedy_basis(const Matroid& m, const ElementSet& s) {
  const ElementSet set = normalize_subset(m, s);
  ElementSet basis(m.size());
  for (ElementId e : set) {
    basis.insert(e);
    if (!m.independent(basis)) basis.erase(e);
  }
  return basis;
}

// Greedy basis built by offering `order` front to back.
inline ElementSet greedy_in_order(const Matroid& m, std::span<const ElementId> order) {
  ElementSet basis(m.size());
  for (ElementId e : order) {
    if (e >= m.size()) throw std::out_of_range("greedy_in_order: element out of range");
    if (basis.contains(e)) continue;
    basis.insert(e);
    if (!m.independent(basis)) basis.erase(e);
  }
  return basis;
}

inline std::size_t rank(const Matroid& m, const ElementSet& s) { return greedy_basis(m, s).size(); }

inline std::size_t full_rank(const Matroid& m) { return rank(m, ElementSet::full(m.size())); }

// True iff rank(S) == rank(S + e).
inline bool span_contains(const Matroid& m, const ElementSet& s, ElementId e) {
  if (e >= m.size()) throw std::out_of_range("span_contains: element out of range");
  const ElementSet set = normalize_subset(m, s);
  if (set.contains(e)) return true;
  return !m.independent(greedy_basis(m, set).with(e));
}

inline bool is_loop(const Matroid& m, ElementId e) {
  if (e >= m.size()) throw std::out_of_range("is_loop: element out of range");
  return !m.independent(ElementSet(m.size(), {e}));
}

inline bool is_basis(const Matroid& m, const ElementSet& b) {
  const ElementSet set = normalize_subset(m, b);
  return m.independent(set) && set.size() == full_rank(m);
}

namespace detail {

inline bool is_negative_weight(double w) { return w < 0.0; }

template <class Weight>
std::vector<ElementId> descending_order(std::span<const Weight> w) {
  std::vector<ElementId> order(w.size());
  std::iota(order.begin(), order.end(), ElementId{0});
  // Ties keep ascending ids.
  std::sort(order.begin(), order.end(), [&w](ElementId a, ElementId b) {
    if (w[b] < w[a]) return true;
    if (w[a] < w[b]) return false;
    return a < b;
  });
  return order;
}

}  // namespace detail

// Max-weight basis by greedy in descending weight order. Zero-weight
// elements are still taken when they extend independence, so the result is
// always a basis. `Weight` needs a strict weak order via operator< and an
// `is_negative_weight` overload found by ADL or in this namespace.
template <class Weight>
ElementSet max_weight_basis(const Matroid& m, std::span<const Weight> w) {
  if (w.size() != m.size()) {
    throw std::invalid_argument("max_weight_basis: weight vector length " +
                                std::to_string(w.size()) + " != ground set size " +
                                std::to_string(m.size()));
  }
  using detail::is_negative_weight;
  for (const auto& x : w)
    if (is_negative_weight(x)) throw std::invalid_argument("max_weight_basis: negative weight");
  const auto order = detail::descending_order(w);
  return greedy_in_order(m, order);
}

template <class Weight>
ElementSet max_weight_basis(const Matroid& m, const std::vector<Weight>& w) {
  return max_weight_basis(m, std::span<const Weight>(w));
}

// Strong basis exchange: for bases A, B and x in A \ B, the first y in B \ A
// (ascending id) with A - x + y and B - y + x both bases.
inline ElementId strong_exchange(const Matroid& m, const ElementSet& a, const ElementSet& b,
                                 ElementId x) {
  const ElementSet A = normalize_subset(m, a);
  const ElementSet B = normalize_subset(m, b);
  if (!is_basis(m, A)) throw std::invalid_argument("strong_exchange: A is not a basis");
  if (!is_basis(m, B)) throw std::invalid_argument("strong_exchange: B is not a basis");
  if (x >= m.size() || !A.contains(x) || B.contains(x)) {
    throw std::invalid_argument("strong_exchange: x must lie in A \\ B");
  }
  const ElementSet a_minus_x = A.without(x);
  for (ElementId y : B - A) {
    if (m.independent(a_minus_x.with(y)) && m.independent(B.without(y).with(x))) return y;
  }
  throw std::logic_error("strong_exchange: no exchange partner found; oracle is not a matroid");
}

using ExchangeMap = std::map<ElementId, ElementId>;

// Monotone bijection f: A -> B with B - f(a) + a a basis, w(f(a)) <= w(a) and
// f(a) = a on A n B, where A is the greedy max-weight basis for w. Members of
// A are processed from lightest to heaviest, exchanging each a not in B
// against the current basis.
template <class Weight>
ExchangeMap monotone_exchange_bijection(const Matroid& m, std::span<const Weight> w,
                                        const ElementSet& a, const ElementSet& b) {
  const ElementSet A = normalize_subset(m, a);
  const ElementSet B = normalize_subset(m, b);
  if (max_weight_basis(m, w) != A) {
    throw std::invalid_argument("monotone_exchange_bijection: A is not the greedy max-weight basis");
  }
  if (!is_basis(m, B)) throw std::invalid_argument("monotone_exchange_bijection: B is not a basis");

  // a_1 .. a_r in descending weight (ascending greedy rank).
  std::vector<ElementId> ranked;
  for (ElementId e : detail::descending_order(w))
    if (A.contains(e)) ranked.push_back(e);

  ExchangeMap f;
  ElementSet current = A;
  for (std::size_t i = ranked.size(); i-- > 0;) {
    const ElementId ai = ranked[i];
    if (current.contains(ai) && !B.contains(ai)) {
      const ElementId bi = strong_exchange(m, current, B, ai);
      f[ai] = bi;
      current.erase(ai);
      current.insert(bi);
    } else {
      f[ai] = ai;
    }
  }
  return f;
}

template <class Weight>
ExchangeMap monotone_exchange_bijection(const Matroid& m, const std::vector<Weight>& w,
                                        const ElementSet& a, const ElementSet& b) {
  return monotone_exchange_bijection(m, std::span<const Weight>(w), a, b);
}

inline constexpr std::size_t kMaxEnumerationSize = 20;

// Greedy basis of every subset of [0, n), indexed by bitmask. One oracle call
// per subset: the ascending-greedy basis of S extends that of S minus its
// largest member.
inline std::vector<std::uint32_t> subset_basis_table(const Matroid& m) {
  const std::size_t n = m.size();
  if (n > kMaxEnumerationSize) {
    throw UnsupportedError("subset enumeration limited to n <= " +
                           std::to_string(kMaxEnumerationSize));
  }
  std::vector<std::uint32_t> basis(std::size_t{1} << n, 0);
  for (std::uint32_t mask = 1; mask < basis.size(); ++mask) {
    const int top = 31 - std::countl_zero(mask);
    const std::uint32_t rest = mask & ~(1U << top);
    const std::uint32_t candidate = basis[rest] | (1U << top);
    basis[mask] = m.independent(ElementSet::from_mask(n, candidate)) ? candidate : basis[rest];
  }
  return basis;
}

// Membership in the matroid polytope by checking every subset constraint.
inline bool in_polytope(const Matroid& m, std::span<const double> x, double tolerance = 1e-12) {
  const std::size_t n = m.size();
  if (x.size() != n) throw std::invalid_argument("in_polytope: vector length mismatch");
  for (double xi : x) {
    if (!(xi >= 0.0 && xi <= 1.0)) throw std::invalid_argument("in_polytope: entry outside [0,1]");
  }
  const auto basis = subset_basis_table(m);
  for (std::uint32_t mask = 0; mask < basis.size(); ++mask) {
    double total = 0.0;
    for (std::uint32_t bits = mask; bits != 0; bits &= bits - 1) total += x[std::countr_zero(bits)];
    if (total > static_cast<double>(std::popcount(basis[mask])) + tolerance) return false;
  }
  return true;
}

inline bool in_polytope(const Matroid& m, const std::vector<double>& x, double tolerance = 1e-12) {
  return in_polytope(m, std::span<const double>(x), tolerance);
}

}  // namespace sprophet
