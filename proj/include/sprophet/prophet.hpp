#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sprophet/element_set.hpp"
#include "sprophet/matroid_ops.hpp"
#include "sprophet/ocrs.hpp"
#include "sprophet/parallel.hpp"
#include "sprophet/random.hpp"
#include "sprophet/thresholds.hpp"
#include "sprophet/values.hpp"

namespace sprophet {

struct TrainOptions {
  std::optional<std::size_t> threshold_samples;  // default: default_threshold_samples
  double threshold_constant = kDefaultThresholdSampleConstant;
  std::optional<OcrsParams> ocrs;                // default: default_params(n, ocrs_eps or eps)
  std::optional<double> ocrs_eps;
  double sample_constant = kDefaultSampleConstant;
  std::size_t threads = 1;
};

struct ProphetPolicy {
  ThresholdTable thresholds;
  ChainDecomposition decomposition;
  OcrsParams params;
  std::uint64_t seed = 0;
  std::size_t threshold_samples = 0;  // value vectors spent on thresholds
  std::size_t ocrs_samples = 0;       // value vectors spent on the decomposition

  bool ok() const { return decomposition.ok(); }
  std::size_t total_samples() const { return threshold_samples + ocrs_samples; }
};

// Sample of the shrunk active set induced by one fresh value vector.
inline ElementSet draw_training_active_set(const Instance& inst, const ThresholdTable& tbl, double b,
                                           Rng& rng) {
  const auto v = sample_vector(inst, rng);
  return shrink(activate(tbl, v, rng), b, rng);
}

// Stage one learns thresholds on stream "stage1"; stage two trains the
// decomposition on activation-and-shrink samples from stream "stage2".
inline ProphetPolicy train(const Instance& inst, double eps, std::uint64_t seed,
                           const TrainOptions& options = {}) {
  if (!(eps > 0.0 && eps < 0.25)) throw std::invalid_argument("train: eps must lie in (0, 1/4)");
  if (!inst.matroid) throw std::invalid_argument("train: instance has no matroid");
  const Matroid& m = *inst.matroid;
  const std::size_t n = m.size();
  if (inst.distributions.size() != n) throw std::invalid_argument("train: distribution count mismatch");

  ProphetPolicy policy;
  policy.seed = seed;
  const std::size_t big_n =
      options.threshold_samples.value_or(default_threshold_samples(n, eps, options.threshold_constant));
  policy.thresholds =
      learn_thresholds(m, inst.distributions, big_n, eps, derive_seed(seed, "stage1"), options.threads);
  policy.threshold_samples = big_n;

  policy.params = options.ocrs ? *options.ocrs
                               : default_params(n, options.ocrs_eps.value_or(eps), options.sample_constant);
  policy.params.validate();

  Rng stage2 = substream(seed, "stage2");
  const double b = policy.params.b;
  FunctionSampleSource source(n, [&]() { return draw_training_active_set(inst, policy.thresholds, b, stage2); });
  policy.decomposition = decompose_sampled(m, source, policy.params, derive_seed(seed, "stage2-layers"));
  policy.ocrs_samples = source.drawn();
  return policy;
}

struct OnlineOutcome {
  ElementSet accepted;
  double total = 0.0;
};

// Online evaluator for one trained policy. Holds the layered greedy built
// from the policy's decomposition so repeated runs share it.
class ProphetRunner {
 public:
  ProphetRunner(MatroidPtr m, ProphetPolicy policy) : m_(std::move(m)), policy_(std::move(policy)) {
    if (policy_.ok()) greedy_.emplace(m_, policy_.decomposition);
  }

  const ProphetPolicy& policy() const { return policy_; }

  // Draws the 2n activation/shrink coins in id order, then processes
  // arrivals one at a time.
  OnlineOutcome run(std::span<const TieBrokenValue> v, std::span<const ElementId> order, Rng& rng) const {
    const std::size_t n = m_->size();
    if (v.size() != n) throw std::invalid_argument("run_online: value vector length mismatch");
    OnlineOutcome out{ElementSet(n), 0.0};
    std::vector<double> coins(2 * n);
    for (auto& c : coins) c = rng.uniform01();
    if (!greedy_) return out;
    auto session = greedy_->start();
    const double b = policy_.params.b;
    for (ElementId e : order) {
      const bool active = coins[2 * e] < activation_probability(policy_.thresholds, e, v[e]) &&
                          coins[2 * e + 1] < b;
      if (session.offer(e, active)) out.total += v[e].base;
    }
    out.accepted = session.accepted();
    return out;
  }

 private:
  MatroidPtr m_;
  ProphetPolicy policy_;
  std::optional<LayeredGreedy> greedy_;
};

inline OnlineOutcome run_online(const MatroidPtr& m, const ProphetPolicy& policy,
                                std::span<const TieBrokenValue> v, std::span<const ElementId> order,
                                Rng& rng) {
  return ProphetRunner(m, policy).run(v, order, rng);
}

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

// Streaming mean and squared deviation; blocks merge in a fixed order.
struct Moments {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t count = 0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(o.count);
    const double delta = o.mean - mean;
    const double total = na + nb;
    mean += delta * nb / total;
    m2 += o.m2 + delta * delta * na * nb / total;
    count += o.count;
  }
  MeanEstimate estimate() const {
    MeanEstimate e;
    e.trials = count;
    e.mean = mean;
    if (count > 1) e.std_error = std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
    return e;
  }
};

// Monte Carlo E[max-weight basis value].
inline MeanEstimate expected_opt(const Instance& inst, std::size_t trials, std::uint64_t seed,
                                 std::size_t threads = 1) {
  if (trials == 0) throw std::invalid_argument("expected_opt: trials must be positive");
  const Matroid& m = *inst.matroid;
  const auto partials =
      parallel_blocks(trials, detail::kSampleBlock, threads, [&](std::size_t begin, std::size_t end) {
        Rng rng = substream(seed, "expected-opt", begin / detail::kSampleBlock);
        Moments mom;
        for (std::size_t t = begin; t < end; ++t) {
          const auto v = sample_vector(inst, rng);
          mom.add(total_base(v, max_weight_basis(m, std::span<const TieBrokenValue>(v))));
        }
        return mom;
      });
  Moments total;
  for (const auto& p : partials) total.merge(p);
  return total.estimate();
}

}  // namespace sprophet
