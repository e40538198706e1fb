#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sprophet/matroid.hpp"
#include "sprophet/random.hpp"

namespace sprophet {

// A value lifted to (base, tiebreak) with lexicographic order, so that
// point-mass distributions still yield pairwise distinct draws.
struct TieBrokenValue {
  double base = 0.0;
  double tiebreak = 0.0;

  friend auto operator<=>(const TieBrokenValue&, const TieBrokenValue&) = default;
  friend bool operator==(const TieBrokenValue&, const TieBrokenValue&) = default;

  // Below every sampled value: the exchange value of an element no basis
  // element blocks.
  static constexpr TieBrokenValue zero() {
    return {0.0, -std::numeric_limits<double>::infinity()};
  }
  static constexpr TieBrokenValue infinity() {
    return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }
};

inline bool is_negative_weight(const TieBrokenValue& v) { return v.base < 0.0; }

struct UniformDist {
  double a = 0.0;
  double b = 1.0;
};
struct ExponentialDist {
  double rate = 1.0;
};
struct DiscreteDist {
  std::vector<double> points;
  std::vector<double> masses;
};
// Value v with probability p, otherwise 0.
struct BernoulliScaledDist {
  double value = 1.0;
  double p = 0.5;
};
struct ConstantDist {
  double value = 0.0;
};

class ValueDistribution {
 public:
  using Variant = std::variant<UniformDist, ExponentialDist, DiscreteDist, BernoulliScaledDist,
                               ConstantDist>;

  static ValueDistribution uniform(double a, double b) {
    if (!(a >= 0.0) || !(b > a) || !std::isfinite(b)) {
      throw std::invalid_argument("uniform distribution needs 0 <= a < b < inf");
    }
    return ValueDistribution(UniformDist{a, b});
  }

  static ValueDistribution exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
      throw std::invalid_argument("exponential distribution needs a positive finite rate");
    }
    return ValueDistribution(ExponentialDist{rate});
  }

  static ValueDistribution discrete(std::vector<double> points, std::vector<double> masses) {
    if (points.empty() || points.size() != masses.size()) {
      throw std::invalid_argument("discrete distribution needs matching nonempty points/masses");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!(points[i] >= 0.0) || !std::isfinite(points[i])) {
        throw std::invalid_argument("discrete distribution support must be finite and nonnegative");
      }
      if (!(masses[i] >= 0.0)) throw std::invalid_argument("discrete distribution: negative mass");
      total += masses[i];
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("discrete distribution masses must sum to 1");
    }
    return ValueDistribution(DiscreteDist{std::move(points), std::move(masses)});
  }

  static ValueDistribution bernoulli_scaled(double value, double p) {
    if (!(value >= 0.0) || !std::isfinite(value) || !(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("bernoulli-scaled distribution needs value >= 0, p in [0,1]");
    }
    return ValueDistribution(BernoulliScaledDist{value, p});
  }

  static ValueDistribution constant(double value) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw std::invalid_argument("constant distribution needs a finite nonnegative value");
    }
    return ValueDistribution(ConstantDist{value});
  }

  const Variant& params() const { return params_; }

  bool is_continuous() const {
    return std::holds_alternative<UniformDist>(params_) ||
           std::holds_alternative<ExponentialDist>(params_);
  }

  double mean() const {
    return std::visit(
        [](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, UniformDist>) {
            return 0.5 * (d.a + d.b);
          } else if constexpr (std::is_same_v<T, ExponentialDist>) {
            return 1.0 / d.rate;
          } else if constexpr (std::is_same_v<T, DiscreteDist>) {
            return std::inner_product(d.points.begin(), d.points.end(), d.masses.begin(), 0.0);
          } else if constexpr (std::is_same_v<T, BernoulliScaledDist>) {
            return d.value * d.p;
          } else {
            return d.value;
          }
        },
        params_);
  }

  double sample_base(Rng& rng) const {
    return std::visit(
        [&rng](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, UniformDist>) {
            return d.a + (d.b - d.a) * rng.uniform01();
          } else if constexpr (std::is_same_v<T, ExponentialDist>) {
            return -std::log1p(-rng.uniform01()) / d.rate;
          } else if constexpr (std::is_same_v<T, DiscreteDist>) {
            const double u = rng.uniform01();
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < d.points.size(); ++i) {
              acc += d.masses[i];
              if (u < acc) return d.points[i];
            }
            return d.points.back();
          } else if constexpr (std::is_same_v<T, BernoulliScaledDist>) {
            return rng.uniform01() < d.p ? d.value : 0.0;
          } else {
            return d.value;
          }
        },
        params_);
  }

  // Base value then an independent uniform tiebreak, always attached.
  TieBrokenValue sample(Rng& rng) const {
    const double base = sample_base(rng);
    return {base, rng.uniform01()};
  }

 private:
  explicit ValueDistribution(Variant v) : params_(std::move(v)) {}
  Variant params_;
};

struct Instance {
  MatroidPtr matroid;
  std::vector<ValueDistribution> distributions;
  std::vector<ElementId> order;  // arrival order; identity when built with make_instance

  std::size_t size() const { return matroid ? matroid->size() : 0; }
};

inline void validate_order(std::span<const ElementId> order, std::size_t n) {
  if (order.size() != n) throw std::invalid_argument("arrival order length mismatch");
  std::vector<bool> seen(n, false);
  for (ElementId e : order) {
    if (e >= n || seen[e]) throw std::invalid_argument("arrival order is not a permutation");
    seen[e] = true;
  }
}

inline std::vector<ElementId> identity_order(std::size_t n) {
  std::vector<ElementId> order(n);
  std::iota(order.begin(), order.end(), ElementId{0});
  return order;
}

inline Instance make_instance(MatroidPtr matroid, std::vector<ValueDistribution> dists,
                              std::vector<ElementId> order = {}) {
  if (!matroid) throw std::invalid_argument("instance needs a matroid");
  if (dists.size() != matroid->size()) {
    throw std::invalid_argument("instance: " + std::to_string(dists.size()) +
                                " distributions for ground set of size " +
                                std::to_string(matroid->size()));
  }
  if (order.empty()) order = identity_order(matroid->size());
  validate_order(order, matroid->size());
  return Instance{std::move(matroid), std::move(dists), std::move(order)};
}

inline TieBrokenValue sample_value(const ValueDistribution& d, Rng& rng) { return d.sample(rng); }

// One independent draw per element, in element order.
inline std::vector<TieBrokenValue> sample_vector(std::span<const ValueDistribution> dists,
                                                 Rng& rng) {
  std::vector<TieBrokenValue> v;
  v.reserve(dists.size());
  for (const auto& d : dists) v.push_back(d.sample(rng));
  return v;
}

inline std::vector<TieBrokenValue> sample_vector(const Instance& inst, Rng& rng) {
  return sample_vector(std::span<const ValueDistribution>(inst.distributions), rng);
}

inline double total_base(std::span<const TieBrokenValue> v, const ElementSet& s) {
  double total = 0.0;
  for (ElementId e : s) total += v[e].base;
  return total;
}

}  // namespace sprophet
