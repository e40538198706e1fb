#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sprophet/element_set.hpp"
#include "sprophet/matroid.hpp"
#include "sprophet/matroid_ops.hpp"
#include "sprophet/parallel.hpp"
#include "sprophet/random.hpp"
#include "sprophet/values.hpp"

namespace sprophet {

// Number of finite quantile levels: floor(log_{1+eps}(1/eps)).
inline std::size_t bucket_count(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0, 1)");
  const double raw = std::log(1.0 / eps) / std::log1p(eps);
  const double nearest = std::round(raw);
  const double m = std::abs(raw - nearest) < 1e-9 ? nearest : std::floor(raw);
  return static_cast<std::size_t>(std::max(0.0, m));
}

// Quantile target eps(1+eps)^k for level k.
inline double quantile_level(double eps, std::size_t k) {
  return eps * std::pow(1.0 + eps, static_cast<double>(k));
}

// Activation probability of bucket k: eps(1+eps)^k - eps^2.
inline double activation_level(double eps, std::size_t k) {
  return quantile_level(eps, k) - eps * eps;
}

// 1-based rank ceil(eps(1+eps)^k N) of the order statistic used for level k.
inline std::size_t order_statistic_rank(double eps, std::size_t k, std::size_t samples) {
  const double target = quantile_level(eps, k) * static_cast<double>(samples);
  const double r = std::ceil(target - 1e-9);
  return static_cast<std::size_t>(std::clamp(r, 1.0, static_cast<double>(samples)));
}

inline constexpr double kDefaultThresholdSampleConstant = 48.0;

// ceil(C ln(2nm/eps) / eps^4) threshold-learning samples.
inline std::size_t default_threshold_samples(std::size_t n, double eps,
                                             double constant = kDefaultThresholdSampleConstant) {
  const double m = static_cast<double>(std::max<std::size_t>(1, bucket_count(eps)));
  const double nn = static_cast<double>(std::max<std::size_t>(1, n));
  const double value = constant * std::log(std::max(2.0 * nn * m / eps, 1.0)) / std::pow(eps, 4);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(value)));
}

struct ThresholdTable {
  double eps = 0.0;
  std::size_t m = 0;
  // thresholds[i] holds T_i^(0) .. T_i^(m); the last entry is +infinity.
  std::vector<std::vector<TieBrokenValue>> thresholds;
  std::vector<double> p;  // p_0 .. p_{m-1}
  std::size_t samples = 0;
  bool degenerate = false;  // m == 0: nothing ever activates

  std::size_t size() const { return thresholds.size(); }
};

// Per-sample exchange values for all elements from the fundamental circuits
// of OPT: for f outside OPT, tau_f is the minimum value on C(OPT, f) - f; for
// i in OPT, OPT_{-i} = OPT - i + f* with f* the best outside element whose
// circuit contains i, and tau_i = v_{f*} (zero() if there is none).
class TauCalculator {
 public:
  explicit TauCalculator(const Matroid& m) : m_(m), loops_(m.size()) {
    for (ElementId e = 0; e < m.size(); ++e)
      if (is_loop(m, e)) loops_.insert(e);
  }

  const ElementSet& loops() const { return loops_; }

  void compute(std::span<const TieBrokenValue> v, std::span<TieBrokenValue> out) {
    const std::size_t n = m_.size();
    order_ = detail::descending_order(v);
    const ElementSet opt = greedy_in_order(m_, order_);
    for (ElementId i : opt) out[i] = TieBrokenValue::zero();
    for (ElementId f = 0; f < n; ++f) {
      if (opt.contains(f)) continue;
      if (loops_.contains(f)) {
        out[f] = TieBrokenValue::infinity();
        continue;
      }
      TieBrokenValue tau = TieBrokenValue::infinity();
      ElementSet probe = opt.with(f);
      for (ElementId j : opt) {
        probe.erase(j);
        if (m_.independent(probe)) {
          if (v[j] < tau) tau = v[j];
          if (out[j] < v[f]) out[j] = v[f];
        }
        probe.insert(j);
      }
      out[f] = tau;
    }
  }

  // Straight from the definition: rerun greedy without i, then scan.
  TieBrokenValue compute_one(std::span<const TieBrokenValue> v, ElementId i) {
    order_ = detail::descending_order(v);
    return tau_against(greedy_skipping(i), i, v);
  }

 private:
  ElementSet greedy_skipping(ElementId skip) const {
    ElementSet basis(m_.size());
    for (ElementId e : order_) {
      if (e == skip) continue;
      basis.insert(e);
      if (!m_.independent(basis)) basis.erase(e);
    }
    return basis;
  }

  TieBrokenValue tau_against(const ElementSet& opt_without_i, ElementId i,
                             std::span<const TieBrokenValue> v) const {
    ElementSet probe = opt_without_i.with(i);
    if (m_.independent(probe)) return TieBrokenValue::zero();
    TieBrokenValue best = TieBrokenValue::infinity();
    for (ElementId j : opt_without_i) {
      probe.erase(j);
      if (v[j] < best && m_.independent(probe)) best = v[j];
      probe.insert(j);
    }
    return best;
  }

  const Matroid& m_;
  ElementSet loops_;
  std::vector<ElementId> order_;
};

// Smallest value in OPT_{-i} that i can exchange with; zero() when OPT_{-i}+i
// is independent.
inline TieBrokenValue compute_tau(const Matroid& m, std::span<const TieBrokenValue> v, ElementId i) {
  if (v.size() != m.size()) throw std::invalid_argument("compute_tau: value vector length mismatch");
  if (i >= m.size()) throw std::out_of_range("compute_tau: element out of range");
  if (is_loop(m, i)) throw std::invalid_argument("compute_tau: element is a loop");
  TauCalculator calc(m);
  return calc.compute_one(v, i);
}

inline TieBrokenValue compute_tau(const Matroid& m, const std::vector<TieBrokenValue>& v,
                                  ElementId i) {
  return compute_tau(m, std::span<const TieBrokenValue>(v), i);
}

namespace detail {
inline constexpr std::size_t kSampleBlock = 1024;

// Places the elements of every (sorted) rank in their sorted position.
template <class It>
void multi_select(It begin, It end, std::span<const std::size_t> ranks, std::size_t offset = 0) {
  if (ranks.empty() || begin == end) return;
  const std::size_t mid = ranks.size() / 2;
  const std::size_t r = ranks[mid] - offset;
  std::nth_element(begin, begin + static_cast<std::ptrdiff_t>(r), end);
  std::size_t lo = mid;
  while (lo > 0 && ranks[lo - 1] == ranks[mid]) --lo;
  std::size_t hi = mid + 1;
  while (hi < ranks.size() && ranks[hi] == ranks[mid]) ++hi;
  multi_select(begin, begin + static_cast<std::ptrdiff_t>(r), ranks.subspan(0, lo), offset);
  multi_select(begin + static_cast<std::ptrdiff_t>(r) + 1, end, ranks.subspan(hi), offset + r + 1);
}
}

// Exchange values of `samples` fresh value vectors, element-major:
// result[i * samples + s]. Stream (seed, label, block) feeds block s / 1024.
inline std::vector<TieBrokenValue> sample_taus(const Matroid& m,
                                               std::span<const ValueDistribution> dists,
                                               std::size_t samples, std::uint64_t seed,
                                               std::string_view label, std::size_t threads) {
  const std::size_t n = m.size();
  std::vector<TieBrokenValue> taus(n * samples);
  parallel_blocks(samples, detail::kSampleBlock, threads, [&](std::size_t begin, std::size_t end) {
    Rng rng = substream(seed, label, begin / detail::kSampleBlock);
    TauCalculator calc(m);
    std::vector<TieBrokenValue> v(n), tau(n);
    for (std::size_t s = begin; s < end; ++s) {
      for (std::size_t i = 0; i < n; ++i) v[i] = dists[i].sample(rng);
      calc.compute(v, tau);
      for (std::size_t i = 0; i < n; ++i) taus[i * samples + s] = tau[i];
    }
    return 0;
  });
  return taus;
}

// Learns T_i^(k) as the ceil(eps(1+eps)^k N)-th smallest of N sampled
// exchange values. The samples are drawn from their own stream and
// discarded before returning.
inline ThresholdTable learn_thresholds(const Matroid& m, std::span<const ValueDistribution> dists,
                                       std::size_t samples, double eps, std::uint64_t seed,
                                       std::size_t threads = 1) {
  if (samples == 0) throw std::invalid_argument("learn_thresholds: sample count must be positive");
  if (dists.size() != m.size()) throw std::invalid_argument("learn_thresholds: distribution count mismatch");
  ThresholdTable tbl;
  tbl.eps = eps;
  tbl.m = bucket_count(eps);
  tbl.samples = samples;
  tbl.degenerate = tbl.m == 0;
  for (std::size_t k = 0; k < tbl.m; ++k) tbl.p.push_back(activation_level(eps, k));

  const std::size_t n = m.size();
  tbl.thresholds.assign(n, std::vector<TieBrokenValue>(tbl.m + 1, TieBrokenValue::infinity()));
  if (tbl.m == 0) return tbl;

  std::vector<std::size_t> ranks;  // 0-based, nondecreasing
  for (std::size_t k = 0; k < tbl.m; ++k) ranks.push_back(order_statistic_rank(eps, k, samples) - 1);
  std::vector<TieBrokenValue> taus = sample_taus(m, dists, samples, seed, "threshold-samples", threads);
  for (std::size_t i = 0; i < n; ++i) {
    auto column_begin = taus.begin() + static_cast<std::ptrdiff_t>(i * samples);
    auto column_end = column_begin + static_cast<std::ptrdiff_t>(samples);
    detail::multi_select(column_begin, column_end, std::span<const std::size_t>(ranks));
    for (std::size_t k = 0; k < tbl.m; ++k) tbl.thresholds[i][k] = column_begin[static_cast<std::ptrdiff_t>(ranks[k])];
  }
  return tbl;
}

inline ThresholdTable learn_thresholds(const Matroid& m, const std::vector<ValueDistribution>& dists,
                                       std::size_t samples, double eps, std::uint64_t seed,
                                       std::size_t threads = 1) {
  return learn_thresholds(m, std::span<const ValueDistribution>(dists), samples, eps, seed, threads);
}

// p_k for v in [T_i^(k), T_i^(k+1)), 0 below T_i^(0).
inline double activation_probability(const ThresholdTable& tbl, ElementId i, const TieBrokenValue& v) {
  if (i >= tbl.size()) throw std::out_of_range("activation_probability: element out of range");
  if (tbl.m == 0) return 0.0;
  const auto& row = tbl.thresholds[i];
  const auto finite_end = row.begin() + static_cast<std::ptrdiff_t>(tbl.m);
  const auto it = std::upper_bound(row.begin(), finite_end, v);
  if (it == row.begin()) return 0.0;
  return tbl.p[static_cast<std::size_t>(it - row.begin()) - 1];
}

// One uniform per element in id order, so coins stay coupled across value
// changes.
inline ElementSet activate(const ThresholdTable& tbl, std::span<const TieBrokenValue> v, Rng& rng) {
  if (v.size() != tbl.size()) throw std::invalid_argument("activate: value vector length mismatch");
  ElementSet active(v.size());
  for (ElementId i = 0; i < v.size(); ++i) {
    const double u = rng.uniform01();
    if (u < activation_probability(tbl, i, v[i])) active.insert(i);
  }
  return active;
}

struct ThresholdDiagnostic {
  // estimate[i][k] ~ Pr[T_i^(k) > tau_i], k < m.
  std::vector<std::vector<double>> estimate;
  std::vector<double> band_low;
  std::vector<double> band_high;
  ElementSet excluded;  // loops: tau is +infinity, no level applies
  std::size_t trials = 0;
  bool all_in_band = true;
};

// Band check of one table against precomputed exchange-value samples
// (element-major, `trials` per element). Every non-loop estimate of
// Pr[tau_i < T_i^(k)] should fall in
// [eps(1+eps)^k - eps^2 - slack, eps(1+eps)^k + eps^2 + slack].
inline ThresholdDiagnostic evaluate_thresholds(const ThresholdTable& tbl, std::span<const TieBrokenValue> taus,
                                               std::size_t trials, const ElementSet& loops, double slack) {
  if (trials == 0) throw std::invalid_argument("evaluate_thresholds: trials must be positive");
  const std::size_t n = tbl.size();
  if (taus.size() != n * trials) throw std::invalid_argument("evaluate_thresholds: sample block size mismatch");
  ThresholdDiagnostic diag;
  diag.trials = trials;
  diag.excluded = loops;
  const double eps = tbl.eps;
  for (std::size_t k = 0; k < tbl.m; ++k) {
    diag.band_low.push_back(quantile_level(eps, k) - eps * eps - slack);
    diag.band_high.push_back(quantile_level(eps, k) + eps * eps + slack);
  }
  diag.estimate.assign(n, std::vector<double>(tbl.m, 0.0));
  std::vector<TieBrokenValue> column(trials);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(taus.begin() + static_cast<std::ptrdiff_t>(i * trials), trials, column.begin());
    std::sort(column.begin(), column.end());
    for (std::size_t k = 0; k < tbl.m; ++k) {
      const auto below = std::lower_bound(column.begin(), column.end(), tbl.thresholds[i][k]) - column.begin();
      const double est = static_cast<double>(below) / static_cast<double>(trials);
      diag.estimate[i][k] = est;
      if (!loops.contains(i) && (est < diag.band_low[k] || est > diag.band_high[k])) diag.all_in_band = false;
    }
  }
  return diag;
}

// Same check on `trials` fresh samples from stream "threshold-diagnostic".
inline ThresholdDiagnostic good_threshold_diagnostic(const Matroid& m,
                                                     std::span<const ValueDistribution> dists,
                                                     const ThresholdTable& tbl, std::size_t trials,
                                                     std::uint64_t seed, double slack,
                                                     std::size_t threads = 1) {
  if (trials == 0) throw std::invalid_argument("good_threshold_diagnostic: trials must be positive");
  const auto taus = sample_taus(m, dists, trials, seed, "threshold-diagnostic", threads);
  return evaluate_thresholds(tbl, taus, trials, TauCalculator(m).loops(), slack);
}

struct BelowThresholdMass {
  double below_mean = 0.0;  // E[sum_{i in OPT} v_i 1{v_i < T_i^(0)}]
  double opt_mean = 0.0;    // E[OPT]
  double ratio = 0.0;
  std::size_t trials = 0;
};

// Share of the optimum carried by OPT elements whose value is below their
// lowest threshold.
inline BelowThresholdMass below_threshold_mass(const Matroid& m,
                                               std::span<const ValueDistribution> dists,
                                               const ThresholdTable& tbl, std::size_t trials,
                                               std::uint64_t seed, std::size_t threads = 1) {
  if (trials == 0) throw std::invalid_argument("below_threshold_mass: trials must be positive");
  struct Partial {
    double below = 0.0;
    double opt = 0.0;
  };
  const std::size_t n = m.size();
  const auto partials =
      parallel_blocks(trials, detail::kSampleBlock, threads, [&](std::size_t begin, std::size_t end) {
        Rng rng = substream(seed, "below-threshold-mass", begin / detail::kSampleBlock);
        Partial p;
        std::vector<TieBrokenValue> v(n);
        for (std::size_t t = begin; t < end; ++t) {
          for (std::size_t i = 0; i < n; ++i) v[i] = dists[i].sample(rng);
          const ElementSet opt = max_weight_basis(m, std::span<const TieBrokenValue>(v));
          for (ElementId i : opt) {
            p.opt += v[i].base;
            const TieBrokenValue& lowest = tbl.m == 0 ? TieBrokenValue::infinity() : tbl.thresholds[i][0];
            if (v[i] < lowest) p.below += v[i].base;
          }
        }
        return p;
      });
  BelowThresholdMass out;
  out.trials = trials;
  for (const auto& p : partials) {
    out.below_mean += p.below;
    out.opt_mean += p.opt;
  }
  out.ratio = out.opt_mean > 0.0 ? out.below_mean / out.opt_mean : 0.0;
  out.below_mean /= static_cast<double>(trials);
  out.opt_mean /= static_cast<double>(trials);
  return out;
}

}  // namespace sprophet
