#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sprophet/element_set.hpp"
#include "sprophet/matroid.hpp"
#include "sprophet/matroid_ops.hpp"
#include "sprophet/random.hpp"

namespace sprophet {

// ---------------------------------------------------------------------------
// Samples of the active set
// ---------------------------------------------------------------------------

// Multiset of sampled active sets. Only the empirical distribution matters
// to the selection routines, so identical samples are stored once with a
// count. Small universes use a dense table indexed by bitmask.
class SampleMultiset {
 public:
  static constexpr std::size_t kDenseLimit = 16;

  explicit SampleMultiset(std::size_t universe) : universe_(universe) {
    if (universe_ <= kDenseLimit) dense_.assign(std::size_t{1} << universe_, 0);
  }

  std::size_t universe() const { return universe_; }
  std::uint64_t total() const { return total_; }

  void add(const ElementSet& s, std::uint64_t count = 1) {
    if (s.universe() != universe_) throw std::invalid_argument("SampleMultiset: universe mismatch");
    if (universe_ <= kDenseLimit) {
      dense_[s.mask()] += count;
    } else {
      sparse_[s] += count;
    }
    total_ += count;
  }

  // Distinct samples with counts, in ascending set order.
  std::vector<std::pair<ElementSet, std::uint64_t>> distinct() const {
    std::vector<std::pair<ElementSet, std::uint64_t>> out;
    if (universe_ <= kDenseLimit) {
      for (std::size_t mask = 0; mask < dense_.size(); ++mask)
        if (dense_[mask] != 0) out.emplace_back(ElementSet::from_mask(universe_, mask), dense_[mask]);
    } else {
      out.assign(sparse_.begin(), sparse_.end());
      std::sort(out.begin(), out.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    return out;
  }

 private:
  std::size_t universe_;
  std::uint64_t total_ = 0;
  std::vector<std::uint64_t> dense_;
  std::unordered_map<ElementSet, std::uint64_t, ElementSetHash> sparse_;
};

// Forward-only stream of active-set samples. Every call hands out a sample
// no other consumer has seen.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t universe() const = 0;
  virtual ElementSet next() = 0;

  std::size_t drawn() const { return drawn_; }

 protected:
  void count_draw() { ++drawn_; }

 private:
  std::size_t drawn_ = 0;
};

class ListSampleSource final : public SampleSource {
 public:
  ListSampleSource(std::size_t universe, std::vector<ElementSet> samples)
      : universe_(universe), samples_(std::move(samples)) {}

  std::size_t universe() const override { return universe_; }

  ElementSet next() override {
    if (cursor_ >= samples_.size()) throw std::invalid_argument("sample source exhausted");
    count_draw();
    return samples_[cursor_++];
  }

 private:
  std::size_t universe_;
  std::vector<ElementSet> samples_;
  std::size_t cursor_ = 0;
};

class FunctionSampleSource final : public SampleSource {
 public:
  FunctionSampleSource(std::size_t universe, std::function<ElementSet()> fn)
      : universe_(universe), fn_(std::move(fn)) {}

  std::size_t universe() const override { return universe_; }
  ElementSet next() override {
    count_draw();
    return fn_();
  }

 private:
  std::size_t universe_;
  std::function<ElementSet()> fn_;
};

// R(x): element i present independently with probability x_i.
inline ElementSet draw_active_set(std::span<const double> x, Rng& rng) {
  ElementSet s(x.size());
  for (ElementId i = 0; i < x.size(); ++i)
    if (rng.uniform01() < x[i]) s.insert(i);
  return s;
}

// Keeps each member independently with probability b. One uniform per
// ground-set element, member or not.
inline ElementSet shrink(const ElementSet& active, double b, Rng& rng) {
  if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("shrink: b must lie in [0, 1]");
  ElementSet kept(active.universe());
  for (ElementId i = 0; i < active.universe(); ++i) {
    const double u = rng.uniform01();
    if (u < b && active.contains(i)) kept.insert(i);
  }
  return kept;
}

class IndependentSampleSource final : public SampleSource {
 public:
  IndependentSampleSource(std::vector<double> x, std::uint64_t seed)
      : x_(std::move(x)), rng_(seed) {
    for (double xi : x_)
      if (!(xi >= 0.0 && xi <= 1.0)) throw std::invalid_argument("activation probabilities must lie in [0,1]");
  }

  std::size_t universe() const override { return x_.size(); }
  ElementSet next() override {
    count_draw();
    return draw_active_set(x_, rng_);
  }

 private:
  std::vector<double> x_;
  Rng rng_;
};

// Turns samples of R(x) into samples of R(b x).
class ShrunkSampleSource final : public SampleSource {
 public:
  ShrunkSampleSource(SampleSource& inner, double b, std::uint64_t seed)
      : inner_(inner), b_(b), rng_(seed) {}

  std::size_t universe() const override { return inner_.universe(); }
  ElementSet next() override {
    count_draw();
    return shrink(inner_.next(), b_, rng_);
  }

 private:
  SampleSource& inner_;
  double b_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// Span probabilities
// ---------------------------------------------------------------------------

// Distribution of R n N as a weighted list of outcomes.
struct WeightedSupport {
  std::vector<ElementSet> outcomes;
  std::vector<double> weights;
};

class SpanProbabilityOracle {
 public:
  enum class Mode { kExact, kMonteCarlo, kEmpirical };

  // Exact enumeration over the 2^|N| outcomes; |N| <= 20.
  static SpanProbabilityOracle exact(std::vector<double> x) {
    check_probabilities(x);
    SpanProbabilityOracle o(Mode::kExact, x.size());
    o.x_ = std::move(x);
    return o;
  }

  // Fixed set of `trials` draws of R(x), made once at construction so that
  // repeated queries are answered on common random numbers.
  static SpanProbabilityOracle monte_carlo(std::vector<double> x, std::size_t trials,
                                           std::uint64_t seed) {
    check_probabilities(x);
    if (trials == 0) throw std::invalid_argument("monte carlo oracle needs trials > 0");
    SpanProbabilityOracle o(Mode::kMonteCarlo, x.size());
    Rng rng = substream(seed, "span-monte-carlo");
    SampleMultiset draws(x.size());
    for (std::size_t t = 0; t < trials; ++t) draws.add(draw_active_set(x, rng));
    o.samples_ = std::move(draws);
    o.x_ = std::move(x);
    return o;
  }

  static SpanProbabilityOracle empirical(SampleMultiset samples) {
    if (samples.total() == 0) throw std::invalid_argument("empirical oracle needs at least one sample");
    SpanProbabilityOracle o(Mode::kEmpirical, samples.universe());
    o.samples_ = std::move(samples);
    return o;
  }

  static SpanProbabilityOracle empirical(std::size_t universe, std::span<const ElementSet> samples) {
    SampleMultiset ms(universe);
    for (const auto& s : samples) ms.add(s);
    return empirical(std::move(ms));
  }

  Mode mode() const { return mode_; }
  std::size_t universe() const { return universe_; }
  const std::vector<double>& x() const { return x_; }

  WeightedSupport support(const ElementSet& n_set) const {
    WeightedSupport out;
    if (mode_ == Mode::kExact) {
      const std::vector<ElementId> members = n_set.to_vector();
      if (members.size() > kMaxEnumerationSize) {
        throw UnsupportedError("exact span probabilities limited to |N| <= " +
                               std::to_string(kMaxEnumerationSize));
      }
      const std::size_t count = std::size_t{1} << members.size();
      out.outcomes.reserve(count);
      out.weights.reserve(count);
      for (std::size_t mask = 0; mask < count; ++mask) {
        ElementSet t(universe_);
        double w = 1.0;
        for (std::size_t j = 0; j < members.size(); ++j) {
          const double xj = x_[members[j]];
          if ((mask >> j) & 1U) {
            t.insert(members[j]);
            w *= xj;
          } else {
            w *= 1.0 - xj;
          }
        }
        if (w > 0.0) {
          out.outcomes.push_back(std::move(t));
          out.weights.push_back(w);
        }
      }
      return out;
    }
    // Project the samples onto N and merge duplicates.
    SampleMultiset projected(universe_);
    for (const auto& [s, c] : samples_->distinct()) projected.add(s & n_set, c);
    const double total = static_cast<double>(projected.total());
    for (auto& [s, c] : projected.distinct()) {
      out.outcomes.push_back(s);
      out.weights.push_back(static_cast<double>(c) / total);
    }
    return out;
  }

 private:
  SpanProbabilityOracle(Mode mode, std::size_t universe) : mode_(mode), universe_(universe) {}

  static void check_probabilities(const std::vector<double>& x) {
    for (double xi : x)
      if (!(xi >= 0.0 && xi <= 1.0)) throw std::invalid_argument("activation probabilities must lie in [0,1]");
  }

  Mode mode_;
  std::size_t universe_;
  std::vector<double> x_;
  std::optional<SampleMultiset> samples_;
};

namespace detail {

// Incremental evaluator of Pr[e in span(((R n N) u S) \ {e})] over a weighted
// support while S grows. Each outcome keeps a basis of (R n N) u S.
class SpanEvaluator {
 public:
  SpanEvaluator(const Matroid& m, WeightedSupport support, const ElementSet& protected_set)
      : m_(m), support_(std::move(support)) {
    closure_.reserve(support_.outcomes.size());
    bases_.reserve(support_.outcomes.size());
    for (const auto& t : support_.outcomes) {
      ElementSet x = t | protected_set;
      bases_.push_back(greedy_basis(m_, x));
      closure_.push_back(std::move(x));
    }
    for (double w : support_.weights) total_weight_ += w;
  }

  void add_protected(ElementId f) {
    for (std::size_t j = 0; j < closure_.size(); ++j) {
      if (closure_[j].contains(f)) continue;
      closure_[j].insert(f);
      bases_[j].insert(f);
      if (!m_.independent(bases_[j])) bases_[j].erase(f);
    }
  }

  bool spanned(std::size_t j, ElementId e) const {
    const ElementSet& x = closure_[j];
    const ElementSet& b = bases_[j];
    if (!x.contains(e)) return !m_.independent(b.with(e));
    if (!b.contains(e)) return true;
    // e is in the basis: rebuild a basis of X - e around B - e.
    ElementSet basis = b.without(e);
    for (ElementId y : x - b) {
      basis.insert(y);
      if (!m_.independent(basis)) basis.erase(y);
    }
    return !m_.independent(basis.with(e));
  }

  double probability(ElementId e) const {
    double p = 0.0;
    for (std::size_t j = 0; j < closure_.size(); ++j)
      if (spanned(j, e)) p += support_.weights[j];
    return p;
  }

  // Same decision as probability(e) > c, with early exits that cannot flip it.
  bool exceeds(ElementId e, double c) const {
    double p = 0.0;
    double remaining = total_weight_;
    constexpr double kMargin = 1e-12;
    for (std::size_t j = 0; j < closure_.size(); ++j) {
      const double w = support_.weights[j];
      remaining -= w;
      if (spanned(j, e)) p += w;
      if (p > c + kMargin) return true;
      if (p + remaining < c - kMargin) return false;
    }
    return probability(e) > c;
  }

 private:
  const Matroid& m_;
  WeightedSupport support_;
  std::vector<ElementSet> closure_;
  std::vector<ElementSet> bases_;
  double total_weight_ = 0.0;
};

inline ElementSet select_on_support(const Matroid& m, WeightedSupport support,
                                    const ElementSet& n_set, double c) {
  ElementSet selected(m.size());
  SpanEvaluator eval(m, std::move(support), selected);
  // Loops are spanned by every set and can never be accepted; they are never
  // selected, so they leave the chain at the first layer.
  ElementSet candidates(m.size());
  for (ElementId e : n_set)
    if (!is_loop(m, e)) candidates.insert(e);
  // Repeated ascending scans; the returned set is the unique minimal fixed
  // point, so the scan order does not matter.
  bool changed = true;
  while (changed) {
    changed = false;
    for (ElementId e : candidates - selected) {
      if (eval.exceeds(e, c)) {
        selected.insert(e);
        eval.add_protected(e);
        changed = true;
      }
    }
  }
  return selected;
}

}  // namespace detail

inline double span_probability(const SpanProbabilityOracle& oracle, const Matroid& m,
                               const ElementSet& n_set, const ElementSet& s, ElementId e) {
  const ElementSet N = normalize_subset(m, n_set);
  const ElementSet S = normalize_subset(m, s);
  if (e >= m.size()) throw std::out_of_range("span_probability: element out of range");
  if (oracle.universe() != m.size()) throw std::invalid_argument("span_probability: oracle universe mismatch");
  if (!N.contains(e) || S.contains(e)) throw std::invalid_argument("span_probability: e must lie in N \\ S");
  detail::SpanEvaluator eval(m, oracle.support(N), S);
  return eval.probability(e);
}

// Protected set of N at threshold c from exact span probabilities.
inline ElementSet select_exact(const Matroid& m, const SpanProbabilityOracle& oracle,
                               const ElementSet& n_set, double c) {
  if (oracle.mode() != SpanProbabilityOracle::Mode::kExact) {
    throw std::invalid_argument("select_exact needs an exact oracle");
  }
  const ElementSet N = normalize_subset(m, n_set);
  return detail::select_on_support(m, oracle.support(N), N, c);
}

// Same loop against any oracle mode (Monte Carlo oracles give approximate sets).
inline ElementSet select_with(const Matroid& m, const SpanProbabilityOracle& oracle,
                              const ElementSet& n_set, double c) {
  const ElementSet N = normalize_subset(m, n_set);
  return detail::select_on_support(m, oracle.support(N), N, c);
}

inline ElementSet select_sampled(const Matroid& m, const SampleMultiset& samples,
                                 const ElementSet& n_set, double c) {
  if (samples.total() == 0) throw std::invalid_argument("select_sampled: empty sample list");
  if (samples.universe() != m.size()) throw std::invalid_argument("select_sampled: sample universe mismatch");
  const ElementSet N = normalize_subset(m, n_set);
  return select_with(m, SpanProbabilityOracle::empirical(samples), N, c);
}

inline ElementSet select_sampled(const Matroid& m, std::span<const ElementSet> samples,
                                 const ElementSet& n_set, double c) {
  if (samples.empty()) throw std::invalid_argument("select_sampled: empty sample list");
  SampleMultiset ms(m.size());
  for (const auto& s : samples) ms.add(normalize_subset(m, s));
  return select_sampled(m, ms, n_set, c);
}

// ---------------------------------------------------------------------------
// Chain decomposition
// ---------------------------------------------------------------------------

struct OcrsParams {
  double eps = 0.1;
  double b = 0.5;
  std::size_t k = 2;
  std::vector<double> c;  // c_1 .. c_{k+1}
  std::size_t s = 1;      // fresh samples per layer
  std::size_t ell_max = 1;
  double sample_constant = 8.0;

  void validate() const {
    if (k < 2) throw std::invalid_argument("OcrsParams: k must be at least 2");
    if (c.size() != k + 1) throw std::invalid_argument("OcrsParams: need k + 1 thresholds");
    if (s < 1) throw std::invalid_argument("OcrsParams: s must be at least 1");
    if (!(b > 0.0 && b <= 1.0)) throw std::invalid_argument("OcrsParams: b must lie in (0, 1]");
    if (ell_max < 1) throw std::invalid_argument("OcrsParams: ell_max must be at least 1");
    for (std::size_t j = 0; j + 1 < c.size(); ++j)
      if (!(c[j] < c[j + 1])) throw std::invalid_argument("OcrsParams: thresholds must increase");
  }

  // Midpoint of [c_j, c_{j+1}] for 1-based j in [1, k].
  double midpoint(std::size_t j) const { return 0.5 * (c[j - 1] + c[j]); }
};

inline constexpr double kDefaultSampleConstant = 8.0;

inline std::vector<double> threshold_ladder(double eps, std::size_t k) {
  std::vector<double> c(k + 1);
  const double lo = 0.5 + 0.5 * eps;
  const double hi = 0.5 + eps;
  for (std::size_t j = 0; j <= k; ++j)
    c[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(k);
  c[k] = hi;
  return c;
}

// ceil(C k^2 ln n ln(1/eps) / eps^2), at least 1.
inline std::size_t default_sample_count(std::size_t n, double eps, std::size_t k, double sample_constant) {
  const double log_n = std::log(static_cast<double>(std::max<std::size_t>(n, 1)));
  const double kk = static_cast<double>(k);
  return static_cast<std::size_t>(
      std::max(1.0, std::ceil(sample_constant * kk * kk * log_n * std::log(1.0 / eps) / (eps * eps))));
}

// k = max(2, ceil(ln n / (ln(1+eps) log_{1/4}(1-eps)))), thresholds evenly
// spaced on [1/2 + eps/2, 1/2 + eps], s = ceil(C k^2 ln n ln(1/eps) / eps^2),
// ell_max = ceil(log_{1+eps} n) + 2, b = 1/2.
inline OcrsParams default_params(std::size_t n, double eps,
                                 double sample_constant = kDefaultSampleConstant) {
  if (!(eps > 0.0 && eps < 0.25)) throw std::invalid_argument("default_params: eps must lie in (0, 1/4)");
  if (!(sample_constant > 0.0)) throw std::invalid_argument("default_params: sample constant must be positive");
  const double log_n = std::log(static_cast<double>(std::max<std::size_t>(n, 1)));
  const double log_quarter = std::log(1.0 - eps) / std::log(0.25);
  OcrsParams p;
  p.eps = eps;
  p.b = 0.5;
  p.sample_constant = sample_constant;
  p.k = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(log_n / (std::log1p(eps) * log_quarter))));
  p.c = threshold_ladder(eps, p.k);
  p.s = default_sample_count(n, eps, p.k, sample_constant);
  p.ell_max = static_cast<std::size_t>(std::ceil(log_n / std::log1p(eps))) + 2;
  return p;
}

struct ChainDecomposition {
  enum class Status { kOk, kFailed };

  // layers[0] = U, ..., layers.back() = {} when ok.
  std::vector<ElementSet> layers;
  std::vector<double> thresholds;          // threshold used to build layers[i + 1]
  std::vector<std::size_t> chosen_index;   // sampled j per layer (1-based); empty for exact
  std::vector<bool> rank_decay_ok;         // exact only: rank(N_{i+1}) < (b/c) rank(N_i)
  std::size_t samples_used = 0;
  Status status = Status::kOk;
  std::string failure;

  bool ok() const { return status == Status::kOk; }
  // Number of layers N_0 .. N_{ell-1} handed to the greedy pass.
  std::size_t depth() const { return layers.empty() ? 0 : layers.size() - 1; }
};

inline ChainDecomposition decompose_exact(const Matroid& m, const SpanProbabilityOracle& oracle,
                                          double c, std::size_t ell_max, double b = 0.5) {
  if (oracle.mode() != SpanProbabilityOracle::Mode::kExact) {
    throw std::invalid_argument("decompose_exact needs an exact oracle");
  }
  ChainDecomposition d;
  d.layers.push_back(ElementSet::full(m.size()));
  while (!d.layers.back().empty()) {
    if (d.depth() >= ell_max) {
      d.status = ChainDecomposition::Status::kFailed;
      d.failure = "layer limit exceeded";
      break;
    }
    const ElementSet& current = d.layers.back();
    ElementSet next = select_exact(m, oracle, current, c);
    const double r_next = static_cast<double>(rank(m, next));
    const double r_cur = static_cast<double>(rank(m, current));
    d.rank_decay_ok.push_back(next.empty() || r_next < (b / c) * r_cur);
    d.thresholds.push_back(c);
    if (next == current) {
      d.status = ChainDecomposition::Status::kFailed;
      d.failure = "layer did not shrink";
      break;
    }
    d.layers.push_back(std::move(next));
  }
  return d;
}

// Sampled decomposition: each layer picks j uniformly from [k], uses the
// midpoint threshold and s fresh samples from `source`.
inline ChainDecomposition decompose_sampled(const Matroid& m, SampleSource& source,
                                            const OcrsParams& params, std::uint64_t seed) {
  params.validate();
  if (source.universe() != m.size()) throw std::invalid_argument("decompose_sampled: sample universe mismatch");
  Rng chooser = substream(seed, "layer-threshold");
  ChainDecomposition d;
  d.layers.push_back(ElementSet::full(m.size()));
  while (!d.layers.back().empty()) {
    if (d.depth() >= params.ell_max) {
      d.status = ChainDecomposition::Status::kFailed;
      d.failure = "layer limit exceeded";
      break;
    }
    const std::size_t j = 1 + chooser.uniform_index(params.k);
    const double c_hat = params.midpoint(j);
    SampleMultiset samples(m.size());
    for (std::size_t t = 0; t < params.s; ++t) samples.add(source.next());
    d.samples_used += params.s;
    ElementSet next = select_sampled(m, samples, d.layers.back(), c_hat);
    d.thresholds.push_back(c_hat);
    d.chosen_index.push_back(j);
    if (next == d.layers.back()) {
      d.status = ChainDecomposition::Status::kFailed;
      d.failure = "layer did not shrink";
      break;
    }
    d.layers.push_back(std::move(next));
  }
  return d;
}

// Single-layer decomposition: plain greedy over the whole ground set.
inline ChainDecomposition trivial_decomposition(std::size_t n) {
  ChainDecomposition d;
  d.layers.push_back(ElementSet::full(n));
  d.layers.push_back(ElementSet(n));
  d.thresholds.push_back(1.0);
  return d;
}

// ---------------------------------------------------------------------------
// Online pass
// ---------------------------------------------------------------------------

// Greedy per layer N_i \ N_{i+1} on M|N_i / N_{i+1}: e is accepted iff the
// layer's accepted set plus e stays independent after contracting N_{i+1}.
class LayeredGreedy {
 public:
  LayeredGreedy(MatroidPtr m, const ChainDecomposition& d) : m_(std::move(m)) {
    if (!d.ok()) throw std::invalid_argument("LayeredGreedy: decomposition failed");
    const std::size_t n = m_->size();
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    layer_of_.assign(n, kNone);
    for (std::size_t i = 0; i + 1 < d.layers.size(); ++i) {
      for (ElementId e : d.layers[i] - d.layers[i + 1]) layer_of_[e] = i;
      contracted_.push_back(greedy_basis(*m_, d.layers[i + 1]));
    }
  }

  class Session {
   public:
    explicit Session(const LayeredGreedy& owner)
        : owner_(&owner), working_(owner.contracted_), accepted_(owner.m_->size()) {}

    // Irrevocable decision for arriving element e.
    bool offer(ElementId e, bool active) {
      if (e >= owner_->layer_of_.size()) throw std::out_of_range("offer: element out of range");
      const std::size_t layer = owner_->layer_of_[e];
      if (layer >= working_.size()) throw std::logic_error("element outside every layer");
      if (!active) return false;
      ElementSet& w = working_[layer];
      if (w.contains(e)) return false;
      w.insert(e);
      if (!owner_->m_->independent(w)) {
        w.erase(e);
        return false;
      }
      accepted_.insert(e);
      return true;
    }

    const ElementSet& accepted() const { return accepted_; }

   private:
    const LayeredGreedy* owner_;
    std::vector<ElementSet> working_;  // A_i plus a basis of N_{i+1}
    ElementSet accepted_;
  };

  Session start() const { return Session(*this); }

  ElementSet run(const ElementSet& active, std::span<const ElementId> order) const {
    Session s = start();
    for (ElementId e : order) s.offer(e, active.contains(e));
    return s.accepted();
  }

  std::size_t layer_of(ElementId e) const { return layer_of_.at(e); }
  std::size_t layers() const { return contracted_.size(); }

 private:
  MatroidPtr m_;
  std::vector<std::size_t> layer_of_;
  std::vector<ElementSet> contracted_;
};

inline ElementSet run_layered_greedy(const MatroidPtr& m, const ChainDecomposition& d,
                                     const ElementSet& active, std::span<const ElementId> order) {
  return LayeredGreedy(m, d).run(normalize_subset(*m, active), order);
}

}  // namespace sprophet
