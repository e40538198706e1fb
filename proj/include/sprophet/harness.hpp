#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sprophet/element_set.hpp"
#include "sprophet/io.hpp"
#include "sprophet/matroid.hpp"
#include "sprophet/matroid_ops.hpp"
#include "sprophet/ocrs.hpp"
#include "sprophet/parallel.hpp"
#include "sprophet/prophet.hpp"
#include "sprophet/random.hpp"
#include "sprophet/thresholds.hpp"
#include "sprophet/values.hpp"

namespace sprophet {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = kZ95) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Ratio a/b of two independent estimates with the delta-method error.
inline MeanEstimate ratio_estimate(const MeanEstimate& num, const MeanEstimate& den) {
  MeanEstimate r;
  r.trials = num.trials;
  if (den.mean <= 0.0) return r;
  r.mean = num.mean / den.mean;
  const double a = num.std_error / den.mean;
  const double b = num.mean * den.std_error / (den.mean * den.mean);
  r.std_error = std::sqrt(a * a + b * b);
  return r;
}

// ---------------------------------------------------------------------------
// Arrival orders
// ---------------------------------------------------------------------------

enum class ArrivalMode { kIdentity, kReverse, kRandomPerTrial, kAdversarialHeuristic };

inline std::string to_string(ArrivalMode m) {
  switch (m) {
    case ArrivalMode::kIdentity: return "identity";
    case ArrivalMode::kReverse: return "reverse";
    case ArrivalMode::kRandomPerTrial: return "random-per-trial";
    case ArrivalMode::kAdversarialHeuristic: return "adversarial-heuristic";
  }
  return "identity";
}

inline ArrivalMode arrival_mode_from_string(const std::string& s) {
  if (s == "identity") return ArrivalMode::kIdentity;
  if (s == "reverse") return ArrivalMode::kReverse;
  if (s == "random-per-trial" || s == "random") return ArrivalMode::kRandomPerTrial;
  if (s == "adversarial-heuristic") return ArrivalMode::kAdversarialHeuristic;
  throw std::invalid_argument("unknown arrival order '" + s + "'");
}

inline void shuffle_in_place(std::vector<ElementId>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
}

// Span probability of each element inside its own layer, given the layer
// below is protected: Pr[e in span(((R n N_i) u N_{i+1}) \ {e})].
inline std::vector<double> layer_span_scores(const Matroid& m, const ChainDecomposition& d,
                                             const SpanProbabilityOracle& oracle) {
  std::vector<double> scores(m.size(), 0.0);
  for (std::size_t i = 0; i + 1 < d.layers.size(); ++i) {
    detail::SpanEvaluator eval(m, oracle.support(d.layers[i]), d.layers[i + 1]);
    for (ElementId e : d.layers[i] - d.layers[i + 1]) scores[e] = eval.probability(e);
  }
  return scores;
}

// Produces the arrival permutation for one trial. The adversarial heuristic
// sends the flagged elements (typically the realized active set) first, in
// descending score order, then the rest in id order.
class ArrivalOrders {
 public:
  ArrivalOrders(ArrivalMode mode, std::size_t n, std::vector<double> scores = {})
      : ArrivalOrders(mode, identity_order(n), std::move(scores)) {}

  // `base` is the fixed arrival permutation that identity mode replays and
  // reverse mode inverts.
  ArrivalOrders(ArrivalMode mode, std::vector<ElementId> base, std::vector<double> scores)
      : mode_(mode), base_(std::move(base)), scores_(std::move(scores)) {
    validate_order(base_, base_.size());
    if (mode_ == ArrivalMode::kReverse) std::reverse(base_.begin(), base_.end());
    if (mode_ == ArrivalMode::kAdversarialHeuristic) {
      if (scores_.size() != base_.size()) throw std::invalid_argument("adversarial order needs one score per element");
      std::stable_sort(base_.begin(), base_.end(), [this](ElementId a, ElementId b) { return scores_[a] > scores_[b]; });
    }
  }

  ArrivalMode mode() const { return mode_; }

  std::vector<ElementId> order(const ElementSet& flagged, Rng& rng) const {
    switch (mode_) {
      case ArrivalMode::kIdentity:
      case ArrivalMode::kReverse:
        return base_;
      case ArrivalMode::kRandomPerTrial: {
        std::vector<ElementId> o = base_;
        shuffle_in_place(o, rng);
        return o;
      }
      case ArrivalMode::kAdversarialHeuristic: {
        std::vector<ElementId> o;
        o.reserve(base_.size());
        for (ElementId e : base_)
          if (flagged.contains(e)) o.push_back(e);
        for (ElementId e = 0; e < base_.size(); ++e)
          if (!flagged.contains(e)) o.push_back(e);
        return o;
      }
    }
    return base_;
  }

 private:
  ArrivalMode mode_;
  std::vector<ElementId> base_;
  std::vector<double> scores_;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class ExperimentKind { kSelectability, kProphetRatio, kThresholdsDiagnostic, kLowerBound, kDecompositionStats };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kSelectability: return "selectability";
    case ExperimentKind::kProphetRatio: return "prophet-ratio";
    case ExperimentKind::kThresholdsDiagnostic: return "thresholds-diagnostic";
    case ExperimentKind::kLowerBound: return "lower-bound";
    case ExperimentKind::kDecompositionStats: return "decomposition-stats";
  }
  return "selectability";
}

inline std::optional<ExperimentKind> experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::kSelectability, ExperimentKind::kProphetRatio, ExperimentKind::kThresholdsDiagnostic,
                 ExperimentKind::kLowerBound, ExperimentKind::kDecompositionStats}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct ParamOverrides {
  std::optional<std::size_t> threshold_samples;  // N
  std::optional<double> threshold_constant;
  std::optional<std::size_t> s;
  std::optional<std::size_t> k;
  std::optional<double> sample_constant;  // C_s
  std::optional<std::size_t> ell_max;
  std::optional<double> b;
  std::optional<double> ocrs_eps;
};

struct LowerBoundSpec {
  std::size_t left = 32;
  std::size_t right = 4;
  std::vector<std::size_t> sample_sizes{0, 1};
  std::size_t edge_cap = 256;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kSelectability;
  std::uint64_t seed = 0;
  double eps = 0.1;
  std::size_t trials = 1000;
  std::size_t threads = 1;

  Json matroid_spec;  // echo of the instance matroid
  MatroidPtr matroid;
  std::vector<ValueDistribution> distributions;
  std::vector<double> x;
  std::vector<ElementId> arrival;  // base arrival permutation; identity by default

  ParamOverrides overrides;
  std::vector<ArrivalMode> orders{ArrivalMode::kIdentity};
  std::size_t policies = 20;
  std::optional<std::size_t> opt_trials;
  std::size_t repetitions = 1;
  double slack = 0.02;
  std::size_t adversary_samples = 20000;
  std::vector<std::string> policy_files;
  LowerBoundSpec lower_bound;
};

namespace detail {

inline void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* a : allowed) known = known || it.key() == a;
    if (!known) throw ConfigError(io::child(path, it.key()), "unknown field");
  }
}

inline std::optional<std::size_t> optional_count(const Json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) return std::nullopt;
  return io::count_from_json(j[key], io::child(path, key));
}

inline std::optional<double> optional_number(const Json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) return std::nullopt;
  return io::number_from_json(j[key], io::child(path, key));
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("/", "config must be an object");
  detail::reject_unknown_keys(j,
                              {"kind", "seed", "eps", "trials", "threads", "instance", "overrides", "orders",
                               "policies", "opt_trials", "repetitions", "slack", "adversary_samples", "policy_files",
                               "lower_bound"},
                              "");
  ExperimentConfig cfg;
  const Json& kind_node = io::require(j, "kind", "");
  if (!kind_node.is_string()) throw ConfigError("/kind", "expected a string");
  const auto kind = experiment_kind_from_string(kind_node.get<std::string>());
  if (!kind) throw ConfigError("/kind", "unknown experiment kind '" + kind_node.get<std::string>() + "'");
  cfg.kind = *kind;
  cfg.seed = io::seed_from_json(io::require(j, "seed", ""), "/seed");
  if (auto e = detail::optional_number(j, "eps", "")) cfg.eps = *e;
  if (auto t = detail::optional_count(j, "trials", "")) cfg.trials = *t;
  if (auto t = detail::optional_count(j, "threads", "")) cfg.threads = *t;
  if (auto p = detail::optional_count(j, "policies", "")) cfg.policies = *p;
  cfg.opt_trials = detail::optional_count(j, "opt_trials", "");
  if (auto r = detail::optional_count(j, "repetitions", "")) cfg.repetitions = *r;
  if (auto s = detail::optional_number(j, "slack", "")) cfg.slack = *s;
  if (auto a = detail::optional_count(j, "adversary_samples", "")) cfg.adversary_samples = *a;

  if (j.contains("instance")) {
    const Json& inst = j["instance"];
    if (!inst.is_object()) throw ConfigError("/instance", "expected an object");
    detail::reject_unknown_keys(inst, {"matroid", "x", "distributions", "order"}, "/instance");
    cfg.matroid_spec = io::require(inst, "matroid", "/instance");
    cfg.matroid = matroid_from_json(cfg.matroid_spec, "/instance/matroid");
    const std::size_t n = cfg.matroid->size();
    if (inst.contains("x")) {
      cfg.x = io::numbers_from_json(inst["x"], "/instance/x");
      if (cfg.x.size() != n) throw ConfigError("/instance/x", "expected " + std::to_string(n) + " entries");
      for (std::size_t i = 0; i < n; ++i)
        if (!(cfg.x[i] >= 0.0 && cfg.x[i] <= 1.0)) throw ConfigError(io::child("/instance/x", i), "must lie in [0,1]");
    }
    if (inst.contains("distributions")) {
      cfg.distributions = distributions_from_json(inst["distributions"], n, "/instance/distributions");
    }
    cfg.arrival = identity_order(n);
    if (inst.contains("order")) {
      cfg.arrival = io::ids_from_json(inst["order"], "/instance/order");
      try {
        validate_order(cfg.arrival, n);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("/instance/order", e.what());
      }
    }
  }

  if (j.contains("overrides")) {
    const Json& o = j["overrides"];
    if (!o.is_object()) throw ConfigError("/overrides", "expected an object");
    detail::reject_unknown_keys(o, {"N", "threshold_constant", "s", "k", "C_s", "ell_max", "b", "ocrs_eps"},
                                "/overrides");
    cfg.overrides.threshold_samples = detail::optional_count(o, "N", "/overrides");
    cfg.overrides.threshold_constant = detail::optional_number(o, "threshold_constant", "/overrides");
    cfg.overrides.s = detail::optional_count(o, "s", "/overrides");
    cfg.overrides.k = detail::optional_count(o, "k", "/overrides");
    cfg.overrides.sample_constant = detail::optional_number(o, "C_s", "/overrides");
    cfg.overrides.ell_max = detail::optional_count(o, "ell_max", "/overrides");
    cfg.overrides.b = detail::optional_number(o, "b", "/overrides");
    cfg.overrides.ocrs_eps = detail::optional_number(o, "ocrs_eps", "/overrides");
  }

  if (j.contains("orders")) {
    const Json& o = j["orders"];
    std::vector<std::string> names;
    if (o.is_string()) {
      names.push_back(o.get<std::string>());
    } else if (o.is_array()) {
      for (std::size_t i = 0; i < o.size(); ++i) {
        if (!o[i].is_string()) throw ConfigError(io::child("/orders", i), "expected a string");
        names.push_back(o[i].get<std::string>());
      }
    } else {
      throw ConfigError("/orders", "expected a string or an array of strings");
    }
    if (names.empty()) throw ConfigError("/orders", "at least one arrival order is required");
    cfg.orders.clear();
    for (std::size_t i = 0; i < names.size(); ++i) {
      try {
        cfg.orders.push_back(arrival_mode_from_string(names[i]));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(io::child("/orders", i), e.what());
      }
    }
  }

  if (j.contains("policy_files")) {
    const Json& f = j["policy_files"];
    if (!f.is_array()) throw ConfigError("/policy_files", "expected an array of paths");
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!f[i].is_string()) throw ConfigError(io::child("/policy_files", i), "expected a string");
      cfg.policy_files.push_back(f[i].get<std::string>());
    }
  }

  if (j.contains("lower_bound")) {
    const Json& lb = j["lower_bound"];
    if (!lb.is_object()) throw ConfigError("/lower_bound", "expected an object");
    detail::reject_unknown_keys(lb, {"left", "right", "sample_sizes", "edge_cap"}, "/lower_bound");
    if (auto v = detail::optional_count(lb, "left", "/lower_bound")) cfg.lower_bound.left = *v;
    if (auto v = detail::optional_count(lb, "right", "/lower_bound")) cfg.lower_bound.right = *v;
    if (auto v = detail::optional_count(lb, "edge_cap", "/lower_bound")) cfg.lower_bound.edge_cap = *v;
    if (lb.contains("sample_sizes")) {
      cfg.lower_bound.sample_sizes = io::ids_from_json(lb["sample_sizes"], "/lower_bound/sample_sizes");
    }
  }

  if (cfg.trials < 1) throw ConfigError("/trials", "must be at least 1");
  if (cfg.threads < 1) throw ConfigError("/threads", "must be at least 1");
  if (cfg.repetitions < 1) throw ConfigError("/repetitions", "must be at least 1");
  if (cfg.policies < 1) throw ConfigError("/policies", "must be at least 1");

  const bool needs_matroid = cfg.kind != ExperimentKind::kLowerBound;
  if (needs_matroid && !cfg.matroid) throw ConfigError("/instance", "missing field");
  switch (cfg.kind) {
    case ExperimentKind::kSelectability:
      if (cfg.x.empty() && cfg.matroid->size() > 0) throw ConfigError("/instance/x", "missing field");
      break;
    case ExperimentKind::kProphetRatio:
    case ExperimentKind::kThresholdsDiagnostic:
      if (cfg.distributions.empty() && cfg.matroid->size() > 0) {
        throw ConfigError("/instance/distributions", "missing field");
      }
      break;
    case ExperimentKind::kDecompositionStats:
      if (cfg.x.empty() && cfg.distributions.empty() && cfg.matroid->size() > 0) {
        throw ConfigError("/instance", "needs x or distributions");
      }
      break;
    case ExperimentKind::kLowerBound:
      break;
  }
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "config") {
  return parse_config(parse_json_text(text, source));
}

inline Json config_to_json(const ExperimentConfig& cfg) {
  Json j{{"kind", to_string(cfg.kind)}, {"seed", cfg.seed}, {"eps", cfg.eps}, {"trials", cfg.trials}};
  if (cfg.matroid) {
    Json inst{{"matroid", cfg.matroid_spec}};
    if (!cfg.x.empty()) inst["x"] = cfg.x;
    if (!cfg.distributions.empty()) {
      Json d = Json::array();
      for (const auto& dist : cfg.distributions) d.push_back(distribution_to_json(dist));
      inst["distributions"] = std::move(d);
    }
    if (cfg.arrival != identity_order(cfg.matroid->size())) inst["order"] = cfg.arrival;
    j["instance"] = std::move(inst);
  }
  Json o = Json::object();
  const auto& ov = cfg.overrides;
  if (ov.threshold_samples) o["N"] = *ov.threshold_samples;
  if (ov.threshold_constant) o["threshold_constant"] = *ov.threshold_constant;
  if (ov.s) o["s"] = *ov.s;
  if (ov.k) o["k"] = *ov.k;
  if (ov.sample_constant) o["C_s"] = *ov.sample_constant;
  if (ov.ell_max) o["ell_max"] = *ov.ell_max;
  if (ov.b) o["b"] = *ov.b;
  if (ov.ocrs_eps) o["ocrs_eps"] = *ov.ocrs_eps;
  j["overrides"] = std::move(o);
  Json orders = Json::array();
  for (auto m : cfg.orders) orders.push_back(to_string(m));
  j["orders"] = std::move(orders);
  switch (cfg.kind) {
    case ExperimentKind::kProphetRatio:
      j["policies"] = cfg.policies;
      if (cfg.opt_trials) j["opt_trials"] = *cfg.opt_trials;
      if (!cfg.policy_files.empty()) j["policy_files"] = cfg.policy_files;
      break;
    case ExperimentKind::kThresholdsDiagnostic:
      j["repetitions"] = cfg.repetitions;
      j["slack"] = cfg.slack;
      break;
    case ExperimentKind::kLowerBound:
      j["lower_bound"] = Json{{"left", cfg.lower_bound.left},
                              {"right", cfg.lower_bound.right},
                              {"sample_sizes", cfg.lower_bound.sample_sizes},
                              {"edge_cap", cfg.lower_bound.edge_cap}};
      break;
    default:
      break;
  }
  if (std::find(cfg.orders.begin(), cfg.orders.end(), ArrivalMode::kAdversarialHeuristic) != cfg.orders.end()) {
    j["adversary_samples"] = cfg.adversary_samples;
  }
  return j;
}

// OCRS parameters from defaults plus overrides. An overridden k rebuilds the
// threshold ladder and, unless s is also given, the sample count.
inline OcrsParams resolve_ocrs_params(std::size_t n, double eps, const ParamOverrides& o) {
  const double ocrs_eps = o.ocrs_eps.value_or(eps);
  const double constant = o.sample_constant.value_or(kDefaultSampleConstant);
  OcrsParams p = default_params(n, ocrs_eps, constant);
  if (o.k) {
    p.k = *o.k;
    p.c = threshold_ladder(ocrs_eps, p.k);
    p.s = default_sample_count(n, ocrs_eps, p.k, constant);
  }
  if (o.s) p.s = *o.s;
  if (o.ell_max) p.ell_max = *o.ell_max;
  if (o.b) p.b = *o.b;
  p.validate();
  return p;
}

inline TrainOptions resolve_train_options(const ExperimentConfig& cfg) {
  TrainOptions t;
  t.threshold_samples = cfg.overrides.threshold_samples;
  t.threshold_constant = cfg.overrides.threshold_constant.value_or(kDefaultThresholdSampleConstant);
  t.ocrs = resolve_ocrs_params(cfg.matroid->size(), cfg.eps, cfg.overrides);
  t.threads = cfg.threads;
  return t;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct Report {
  std::string kind;
  std::string status = "ok";  // ok | refused | error
  std::string message;
  Json config = Json::object();
  Json results = Json::object();
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;
  std::string timestamp;

  bool ok() const { return status == "ok"; }
};

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Json report_to_json(const Report& r, bool include_timestamp = true) {
  Json j{{"kind", r.kind}, {"status", r.status}};
  if (!r.message.empty()) j["message"] = r.message;
  j["fingerprint"] = Json{{"version", kVersion}, {"seed", r.config.value("seed", std::uint64_t{0})}};
  if (include_timestamp) j["timestamp"] = r.timestamp;
  j["config"] = r.config;
  j["results"] = r.results;
  return j;
}

inline std::string report_to_csv(const Report& r) {
  std::ostringstream out;
  auto emit = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  };
  emit(r.csv_header);
  for (const auto& row : r.csv_rows) emit(row);
  return out.str();
}

// ---------------------------------------------------------------------------
// OCRS measurements
// ---------------------------------------------------------------------------

// Sampled decomposition from b-shrunk draws of R(x).
inline ChainDecomposition train_ocrs_from_x(const Matroid& m, std::span<const double> x, const OcrsParams& p,
                                            std::uint64_t seed) {
  IndependentSampleSource raw(std::vector<double>(x.begin(), x.end()), derive_seed(seed, "ocrs-train-draws"));
  ShrunkSampleSource source(raw, p.b, derive_seed(seed, "ocrs-train-shrink"));
  return decompose_sampled(m, source, p, derive_seed(seed, "ocrs-train-layers"));
}

struct SelectabilityCounts {
  std::vector<std::uint64_t> active;
  std::vector<std::uint64_t> accepted;
  std::uint64_t dependent_outputs = 0;
  std::uint64_t trials = 0;

  explicit SelectabilityCounts(std::size_t n = 0) : active(n, 0), accepted(n, 0) {}

  void merge(const SelectabilityCounts& o) {
    for (std::size_t i = 0; i < active.size(); ++i) {
      active[i] += o.active[i];
      accepted[i] += o.accepted[i];
    }
    dependent_outputs += o.dependent_outputs;
    trials += o.trials;
  }

  // Minimum of accepted/active over elements with data; nullopt if none.
  std::optional<std::pair<ElementId, double>> minimum() const {
    std::optional<std::pair<ElementId, double>> best;
    for (ElementId e = 0; e < active.size(); ++e) {
      if (active[e] == 0) continue;
      const double est = static_cast<double>(accepted[e]) / static_cast<double>(active[e]);
      if (!best || est < best->second) best = std::make_pair(e, est);
    }
    return best;
  }
};

inline constexpr std::size_t kTrialBlock = 256;

// Conditional acceptance counts of the OCRS on fresh draws of R(x): each
// trial shrinks the draw by b and runs the layered greedy. A failed
// decomposition accepts nothing.
inline SelectabilityCounts measure_selectability(const MatroidPtr& m, const ChainDecomposition& d,
                                                 std::span<const double> x, double b, const ArrivalOrders& orders,
                                                 std::size_t trials, std::uint64_t seed, std::size_t threads) {
  const std::size_t n = m->size();
  std::optional<LayeredGreedy> greedy;
  if (d.ok()) greedy.emplace(m, d);
  const auto partials = parallel_blocks(trials, kTrialBlock, threads, [&](std::size_t begin, std::size_t end) {
    Rng rng = substream(seed, "selectability-trials", begin / kTrialBlock);
    SelectabilityCounts c(n);
    for (std::size_t t = begin; t < end; ++t) {
      const ElementSet active = draw_active_set(x, rng);
      const ElementSet kept = shrink(active, b, rng);
      const auto order = orders.order(active, rng);
      const ElementSet accepted = greedy ? greedy->run(kept, order) : ElementSet(n);
      for (ElementId e : active) {
        ++c.active[e];
        if (accepted.contains(e)) ++c.accepted[e];
      }
      if (!m->independent(accepted)) ++c.dependent_outputs;
      ++c.trials;
    }
    return c;
  });
  SelectabilityCounts total(n);
  for (const auto& p : partials) total.merge(p);
  return total;
}

// Oracle for the b-scaled point: exact when every layer is small enough,
// Monte Carlo otherwise.
inline SpanProbabilityOracle scaled_oracle(std::span<const double> x, double b, std::size_t mc_trials,
                                           std::uint64_t seed) {
  std::vector<double> bx(x.begin(), x.end());
  for (double& v : bx) v *= b;
  if (bx.size() <= kMaxEnumerationSize) return SpanProbabilityOracle::exact(std::move(bx));
  return SpanProbabilityOracle::monte_carlo(std::move(bx), std::max<std::size_t>(1, mc_trials),
                                            derive_seed(seed, "adversary"));
}

inline Json selectability_json(const SelectabilityCounts& c) {
  Json elements = Json::array();
  for (ElementId e = 0; e < c.active.size(); ++e) {
    Json row{{"element", e}, {"active", c.active[e]}, {"accepted", c.accepted[e]}};
    if (c.active[e] == 0) {
      row["estimate"] = nullptr;
      row["no_data"] = true;
    } else {
      const double nn = static_cast<double>(c.active[e]);
      const double p = static_cast<double>(c.accepted[e]) / nn;
      const Interval ci = wilson_interval(c.accepted[e], c.active[e]);
      row["estimate"] = p;
      row["std_error"] = std::sqrt(p * (1.0 - p) / nn);
      row["ci_low"] = ci.low;
      row["ci_high"] = ci.high;
    }
    elements.push_back(std::move(row));
  }
  Json out{{"trials", c.trials}, {"dependent_outputs", c.dependent_outputs}, {"elements", std::move(elements)}};
  if (const auto best = c.minimum()) {
    const Interval ci = wilson_interval(c.accepted[best->first], c.active[best->first]);
    out["min"] = Json{{"element", best->first}, {"estimate", best->second}, {"ci_low", ci.low}, {"ci_high", ci.high}};
  } else {
    out["min"] = nullptr;
  }
  return out;
}

inline Json decomposition_summary(const ChainDecomposition& d) {
  Json sizes = Json::array();
  for (const auto& l : d.layers) sizes.push_back(l.size());
  return Json{{"status", d.ok() ? "ok" : "failed"},
              {"depth", d.depth()},
              {"layer_sizes", std::move(sizes)},
              {"thresholds", d.thresholds},
              {"samples_used", d.samples_used}};
}

inline Report run_selectability(const ExperimentConfig& cfg) {
  Report r;
  const Matroid& m = *cfg.matroid;
  const std::size_t n = m.size();
  if (n <= kMaxEnumerationSize && !in_polytope(m, cfg.x)) {
    r.status = "refused";
    r.message = "x lies outside the matroid polytope: some subset S has sum of x over S above rank(S)";
    return r;
  }
  const OcrsParams params = resolve_ocrs_params(n, cfg.eps, cfg.overrides);
  const ChainDecomposition d = train_ocrs_from_x(m, cfg.x, params, cfg.seed);
  r.results["params"] = params_to_json(params);
  r.results["decomposition"] = decomposition_summary(d);
  r.results["samples"] = Json{{"training", d.samples_used}};

  std::vector<double> scores;
  Json per_order = Json::array();
  std::vector<SelectabilityCounts> all;
  for (std::size_t o = 0; o < cfg.orders.size(); ++o) {
    const ArrivalMode mode = cfg.orders[o];
    if (mode == ArrivalMode::kAdversarialHeuristic && scores.empty()) {
      scores = d.ok() ? layer_span_scores(m, d, scaled_oracle(cfg.x, params.b, cfg.adversary_samples, cfg.seed))
                      : std::vector<double>(n, 0.0);
    }
    const ArrivalOrders orders(mode, cfg.arrival, mode == ArrivalMode::kAdversarialHeuristic ? scores : std::vector<double>{});
    auto counts = measure_selectability(cfg.matroid, d, cfg.x, params.b, orders, cfg.trials,
                                        derive_seed(cfg.seed, "evaluation", o), cfg.threads);
    Json block = selectability_json(counts);
    block["order"] = to_string(mode);
    per_order.push_back(std::move(block));
    all.push_back(std::move(counts));
  }
  r.results["orders"] = std::move(per_order);

  r.csv_header = {"element", "x"};
  for (auto mode : cfg.orders) {
    const std::string p = to_string(mode) + "_";
    for (const char* col : {"active", "accepted", "estimate", "ci_low", "ci_high"}) r.csv_header.push_back(p + col);
  }
  for (ElementId e = 0; e < n; ++e) {
    std::vector<std::string> row{std::to_string(e), format_number(cfg.x[e])};
    for (const auto& c : all) {
      row.push_back(std::to_string(c.active[e]));
      row.push_back(std::to_string(c.accepted[e]));
      if (c.active[e] == 0) {
        row.insert(row.end(), {"", "", ""});
      } else {
        const Interval ci = wilson_interval(c.accepted[e], c.active[e]);
        row.push_back(format_number(static_cast<double>(c.accepted[e]) / static_cast<double>(c.active[e])));
        row.push_back(format_number(ci.low));
        row.push_back(format_number(ci.high));
      }
    }
    r.csv_rows.push_back(std::move(row));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Prophet ratio
// ---------------------------------------------------------------------------

struct PolicyEvaluation {
  Moments value;
  std::uint64_t dependent_outputs = 0;
};

inline PolicyEvaluation evaluate_policy(const Instance& inst, const ProphetRunner& runner, const ArrivalOrders& orders,
                                        std::size_t trials, std::uint64_t seed, std::size_t threads) {
  const Matroid& m = *inst.matroid;
  const auto& tbl = runner.policy().thresholds;
  const auto partials = parallel_blocks(trials, kTrialBlock, threads, [&](std::size_t begin, std::size_t end) {
    Rng rng = substream(seed, "online-trials", begin / kTrialBlock);
    PolicyEvaluation ev;
    for (std::size_t t = begin; t < end; ++t) {
      const auto v = sample_vector(inst, rng);
      ElementSet eligible(v.size());
      for (ElementId e = 0; e < v.size(); ++e)
        if (activation_probability(tbl, e, v[e]) > 0.0) eligible.insert(e);
      const auto order = orders.order(eligible, rng);
      const OnlineOutcome out = runner.run(v, order, rng);
      ev.value.add(out.total);
      if (!m.independent(out.accepted)) ++ev.dependent_outputs;
    }
    return ev;
  });
  PolicyEvaluation total;
  for (const auto& p : partials) {
    total.value.merge(p.value);
    total.dependent_outputs += p.dependent_outputs;
  }
  return total;
}

// Empirical oracle over the policy's own activation-and-shrink pipeline.
inline SpanProbabilityOracle pipeline_oracle(const Instance& inst, const ProphetPolicy& policy, std::size_t samples,
                                             std::uint64_t seed) {
  Rng rng = substream(seed, "adversary-samples");
  SampleMultiset ms(inst.size());
  for (std::size_t t = 0; t < std::max<std::size_t>(1, samples); ++t)
    ms.add(draw_training_active_set(inst, policy.thresholds, policy.params.b, rng));
  return SpanProbabilityOracle::empirical(std::move(ms));
}

inline Report run_prophet_ratio(const ExperimentConfig& cfg) {
  Report r;
  const Instance inst = make_instance(cfg.matroid, cfg.distributions, cfg.arrival);
  const std::size_t n = inst.size();
  const TrainOptions options = resolve_train_options(cfg);

  std::vector<ProphetPolicy> policies;
  if (!cfg.policy_files.empty()) {
    for (const auto& f : cfg.policy_files) policies.push_back(load_policy(f));
  } else {
    for (std::size_t p = 0; p < cfg.policies; ++p)
      policies.push_back(train(inst, cfg.eps, derive_seed(cfg.seed, "policy", p), options));
  }
  for (const auto& p : policies) {
    if (p.thresholds.size() != n) throw std::invalid_argument("policy does not match the instance size");
  }
  const std::size_t failed = static_cast<std::size_t>(
      std::count_if(policies.begin(), policies.end(), [](const ProphetPolicy& p) { return !p.ok(); }));
  if (failed == policies.size()) {
    r.status = "error";
    r.message = "every policy failed to build its decomposition";
    return r;
  }

  const std::size_t opt_trials = cfg.opt_trials.value_or(cfg.trials * policies.size());
  const MeanEstimate opt = expected_opt(inst, opt_trials, derive_seed(cfg.seed, "opt"), cfg.threads);
  r.results["expected_opt"] = Json{{"mean", opt.mean}, {"std_error", opt.std_error}, {"trials", opt.trials}};

  Json sample_counts = Json::array();
  std::size_t max_total = 0;
  for (const auto& p : policies) {
    sample_counts.push_back(Json{{"thresholds", p.threshold_samples}, {"ocrs", p.ocrs_samples},
                                 {"depth", p.decomposition.depth()}, {"status", p.ok() ? "ok" : "failed"}});
    max_total = std::max(max_total, p.total_samples());
  }
  r.results["policies"] = Json{{"count", policies.size()}, {"failed", failed}, {"max_total_samples", max_total},
                               {"per_policy", std::move(sample_counts)}};
  r.results["params"] = params_to_json(policies.front().params);

  std::vector<ProphetRunner> runners;
  for (const auto& p : policies) runners.emplace_back(cfg.matroid, p);

  r.csv_header = {"order", "policy", "status", "depth", "mean_value", "std_error", "ratio"};
  Json per_order = Json::array();
  for (std::size_t o = 0; o < cfg.orders.size(); ++o) {
    const ArrivalMode mode = cfg.orders[o];
    Moments pooled;
    Moments policy_means;
    std::uint64_t dependent = 0;
    Json per_policy = Json::array();
    for (std::size_t p = 0; p < runners.size(); ++p) {
      std::vector<double> scores;
      if (mode == ArrivalMode::kAdversarialHeuristic) {
        scores = policies[p].ok()
                     ? layer_span_scores(*cfg.matroid, policies[p].decomposition,
                                         pipeline_oracle(inst, policies[p], cfg.adversary_samples,
                                                         derive_seed(cfg.seed, "adversary", p)))
                     : std::vector<double>(n, 0.0);
      }
      const ArrivalOrders orders(mode, cfg.arrival, std::move(scores));
      const PolicyEvaluation ev = evaluate_policy(inst, runners[p], orders, cfg.trials,
                                                  derive_seed(cfg.seed, "policy-eval", o * runners.size() + p),
                                                  cfg.threads);
      const MeanEstimate est = ev.value.estimate();
      pooled.merge(ev.value);
      policy_means.add(est.mean);
      dependent += ev.dependent_outputs;
      const double ratio = opt.mean > 0.0 ? est.mean / opt.mean : 0.0;
      per_policy.push_back(Json{{"mean_value", est.mean}, {"std_error", est.std_error}, {"ratio", ratio}});
      r.csv_rows.push_back({to_string(mode), std::to_string(p), policies[p].ok() ? "ok" : "failed",
                            std::to_string(policies[p].decomposition.depth()), format_number(est.mean),
                            format_number(est.std_error), format_number(ratio)});
    }
    // Pooled error: the larger of the trial-level and the policy-level spread.
    MeanEstimate alg = pooled.estimate();
    const MeanEstimate between = policy_means.estimate();
    alg.std_error = std::max(alg.std_error, between.std_error);
    const MeanEstimate ratio = ratio_estimate(alg, opt);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& pp : per_policy) {
      lo = std::min(lo, pp["ratio"].get<double>());
      hi = std::max(hi, pp["ratio"].get<double>());
    }
    per_order.push_back(Json{{"order", to_string(mode)},
                             {"mean_value", alg.mean},
                             {"std_error", alg.std_error},
                             {"ratio", ratio.mean},
                             {"ratio_std_error", ratio.std_error},
                             {"ci_low", ratio.mean - kZ95 * ratio.std_error},
                             {"ci_high", ratio.mean + kZ95 * ratio.std_error},
                             {"policy_ratio_min", lo},
                             {"policy_ratio_max", hi},
                             {"dependent_outputs", dependent},
                             {"per_policy", std::move(per_policy)}});
  }
  r.results["orders"] = std::move(per_order);
  return r;
}

// ---------------------------------------------------------------------------
// Threshold diagnostics
// ---------------------------------------------------------------------------

inline Report run_thresholds_diagnostic(const ExperimentConfig& cfg) {
  Report r;
  const Matroid& m = *cfg.matroid;
  const std::size_t n = m.size();
  const std::size_t big_n = cfg.overrides.threshold_samples.value_or(default_threshold_samples(
      n, cfg.eps, cfg.overrides.threshold_constant.value_or(kDefaultThresholdSampleConstant)));
  // One shared pool of fresh exchange values scores every repetition's table.
  const auto taus = sample_taus(m, cfg.distributions, cfg.trials, derive_seed(cfg.seed, "diagnostic"),
                                "threshold-diagnostic", cfg.threads);
  const ElementSet loops = TauCalculator(m).loops();

  std::size_t in_band = 0;
  Moments below_ratio;
  double below_max = 0.0;
  Json reps = Json::array();
  ThresholdDiagnostic first;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    const ThresholdTable tbl =
        learn_thresholds(m, cfg.distributions, big_n, cfg.eps, derive_seed(cfg.seed, "learn", rep), cfg.threads);
    ThresholdDiagnostic diag = evaluate_thresholds(tbl, taus, cfg.trials, loops, cfg.slack);
    const BelowThresholdMass mass =
        below_threshold_mass(m, cfg.distributions, tbl, cfg.trials, derive_seed(cfg.seed, "mass", rep), cfg.threads);
    if (diag.all_in_band) ++in_band;
    below_ratio.add(mass.ratio);
    below_max = std::max(below_max, mass.ratio);
    // Largest distance outside the unwidened band over non-loop elements.
    double worst = 0.0;
    const double eps = tbl.eps;
    for (std::size_t i = 0; i < n; ++i) {
      if (loops.contains(i)) continue;
      for (std::size_t k = 0; k < tbl.m; ++k) {
        const double est = diag.estimate[i][k];
        const double lo = quantile_level(eps, k) - eps * eps;
        const double hi = quantile_level(eps, k) + eps * eps;
        worst = std::max({worst, lo - est, est - hi});
      }
    }
    reps.push_back(Json{{"all_in_band", diag.all_in_band}, {"worst_excess", worst}, {"below_threshold_ratio", mass.ratio}});
    if (rep == 0) first = std::move(diag);
  }
  r.results["threshold_samples"] = big_n;
  r.results["levels"] = bucket_count(cfg.eps);
  r.results["check_samples"] = cfg.trials;
  r.results["repetitions"] = cfg.repetitions;
  r.results["fraction_all_in_band"] = static_cast<double>(in_band) / static_cast<double>(cfg.repetitions);
  r.results["below_threshold"] = Json{{"mean_ratio", below_ratio.estimate().mean}, {"max_ratio", below_max}, {"eps", cfg.eps}};
  r.results["per_repetition"] = std::move(reps);

  r.csv_header = {"element", "level", "estimate", "band_low", "band_high"};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < first.band_low.size(); ++k) {
      r.csv_rows.push_back({std::to_string(i), std::to_string(k), format_number(first.estimate[i][k]),
                            format_number(first.band_low[k]), format_number(first.band_high[k])});
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Lower-bound instance
// ---------------------------------------------------------------------------

struct HardInstance {
  MatroidPtr matroid;
  std::size_t left = 0;
  std::size_t right = 0;
  std::vector<std::vector<double>> family;  // family[i]: 1 on the edges at left vertex i, 1/right elsewhere
};

inline HardInstance gen_hard_instance(std::size_t left, std::size_t right, std::size_t edge_cap = 256) {
  if (left < 1 || right < 1) throw std::invalid_argument("hard instance needs both sides nonempty");
  if (left * right > edge_cap) {
    throw std::invalid_argument("hard instance has " + std::to_string(left * right) + " edges, above the cap of " +
                                std::to_string(edge_cap));
  }
  HardInstance h;
  h.left = left;
  h.right = right;
  h.matroid = make_complete_bipartite(left, right);
  for (std::size_t i = 0; i < left; ++i) {
    std::vector<double> x(left * right, 1.0 / static_cast<double>(right));
    for (std::size_t j = 0; j < right; ++j) x[i * right + j] = 1.0;
    if (x.size() <= kMaxEnumerationSize && !in_polytope(*h.matroid, x)) {
      throw std::logic_error("hard instance point outside the polytope");
    }
    h.family.push_back(std::move(x));
  }
  return h;
}

// 1/right + right^((s+1) right) / left.
inline double lower_bound_curve(std::size_t s, std::size_t left, std::size_t right) {
  const double mm = static_cast<double>(right);
  return 1.0 / mm + std::pow(mm, static_cast<double>((s + 1) * right)) / static_cast<double>(left);
}

struct LowerBoundPoint {
  std::size_t s = 0;
  double worst = 0.0;  // min over hidden i of min over elements
  std::vector<double> per_hidden;
  std::size_t failures = 0;
  double bound = 0.0;
};

// For each hidden i the OCRS trains on s samples of R(x^i) and is then scored
// on `trials` draws; s = 0 means an untrained single-layer greedy.
inline LowerBoundPoint run_lower_bound_experiment(std::size_t s, const HardInstance& h, const OcrsParams& base,
                                                  ArrivalMode mode, std::size_t trials, std::uint64_t seed,
                                                  std::size_t threads = 1) {
  LowerBoundPoint pt;
  pt.s = s;
  pt.bound = lower_bound_curve(s, h.left, h.right);
  pt.worst = std::numeric_limits<double>::infinity();
  const std::size_t n = h.matroid->size();
  OcrsParams params = base;
  if (s > 0) params.s = s;
  for (std::size_t i = 0; i < h.family.size(); ++i) {
    const std::uint64_t hidden_seed = derive_seed(seed, "hidden", i);
    const ChainDecomposition d =
        s == 0 ? trivial_decomposition(n) : train_ocrs_from_x(*h.matroid, h.family[i], params, hidden_seed);
    if (!d.ok()) ++pt.failures;
    const ArrivalOrders orders(mode == ArrivalMode::kAdversarialHeuristic ? ArrivalMode::kIdentity : mode, n);
    const auto counts = measure_selectability(h.matroid, d, h.family[i], params.b, orders, trials,
                                              derive_seed(hidden_seed, "evaluation"), threads);
    const auto best = counts.minimum();
    const double bal = best ? best->second : 1.0;
    pt.per_hidden.push_back(bal);
    pt.worst = std::min(pt.worst, bal);
  }
  return pt;
}

inline Report run_lower_bound(const ExperimentConfig& cfg) {
  Report r;
  const auto& spec = cfg.lower_bound;
  const HardInstance h = gen_hard_instance(spec.left, spec.right, spec.edge_cap);
  const OcrsParams base = resolve_ocrs_params(h.matroid->size(), cfg.eps, cfg.overrides);
  r.results["params"] = params_to_json(base);
  r.results["note"] = "scaled-down trend demonstration; the bound curve is informative only at far larger left sizes";
  Json points = Json::array();
  r.csv_header = {"s", "worst_balancedness", "mean_balancedness", "bound", "failures"};
  for (std::size_t idx = 0; idx < spec.sample_sizes.size(); ++idx) {
    const std::size_t s = spec.sample_sizes[idx];
    const LowerBoundPoint pt = run_lower_bound_experiment(s, h, base, cfg.orders.front(), cfg.trials,
                                                          derive_seed(cfg.seed, "lower-bound", idx), cfg.threads);
    double mean = 0.0;
    for (double v : pt.per_hidden) mean += v;
    mean /= static_cast<double>(std::max<std::size_t>(1, pt.per_hidden.size()));
    points.push_back(Json{{"s", s},
                          {"worst_balancedness", pt.worst},
                          {"mean_balancedness", mean},
                          {"bound", pt.bound},
                          {"failures", pt.failures},
                          {"per_hidden", pt.per_hidden}});
    r.csv_rows.push_back({std::to_string(s), format_number(pt.worst), format_number(mean), format_number(pt.bound),
                          std::to_string(pt.failures)});
  }
  r.results["points"] = std::move(points);
  return r;
}

// ---------------------------------------------------------------------------
// Decomposition statistics
// ---------------------------------------------------------------------------

inline Report run_decomposition_stats(const ExperimentConfig& cfg) {
  Report r;
  const Matroid& m = *cfg.matroid;
  const std::size_t n = m.size();
  const OcrsParams params = resolve_ocrs_params(n, cfg.eps, cfg.overrides);
  r.results["params"] = params_to_json(params);

  std::optional<ThresholdTable> tbl;
  std::optional<Instance> inst;
  if (cfg.x.empty()) {
    inst = make_instance(cfg.matroid, cfg.distributions);
    const std::size_t big_n = cfg.overrides.threshold_samples.value_or(default_threshold_samples(
        n, cfg.eps, cfg.overrides.threshold_constant.value_or(kDefaultThresholdSampleConstant)));
    tbl = learn_thresholds(m, cfg.distributions, big_n, cfg.eps, derive_seed(cfg.seed, "stage1"), cfg.threads);
    r.results["threshold_samples"] = big_n;
  }

  const auto depths = parallel_blocks(cfg.trials, 1, cfg.threads, [&](std::size_t t, std::size_t) {
    const std::uint64_t run_seed = derive_seed(cfg.seed, "decomposition", t);
    if (!tbl) return train_ocrs_from_x(m, cfg.x, params, run_seed);
    Rng rng = substream(run_seed, "stage2");
    FunctionSampleSource source(n, [&]() { return draw_training_active_set(*inst, *tbl, params.b, rng); });
    return decompose_sampled(m, source, params, derive_seed(run_seed, "stage2-layers"));
  });

  std::map<std::size_t, std::size_t> histogram;
  std::size_t failures = 0;
  std::size_t within = 0;
  const std::size_t depth_target =
      static_cast<std::size_t>(std::ceil(std::log(static_cast<double>(std::max<std::size_t>(n, 1))) /
                                         std::log1p(params.eps))) + 1;
  std::size_t samples = 0;
  for (const auto& d : depths) {
    samples += d.samples_used;
    if (!d.ok()) {
      ++failures;
      continue;
    }
    ++histogram[d.depth()];
    if (d.depth() <= depth_target) ++within;
  }
  const double runs = static_cast<double>(cfg.trials);
  Json hist = Json::array();
  r.csv_header = {"depth", "count"};
  for (const auto& [depth, count] : histogram) {
    hist.push_back(Json{{"depth", depth}, {"count", count}});
    r.csv_rows.push_back({std::to_string(depth), std::to_string(count)});
  }
  r.results["runs"] = cfg.trials;
  r.results["depth_histogram"] = std::move(hist);
  r.results["failure_rate"] = static_cast<double>(failures) / runs;
  r.results["depth_target"] = depth_target;
  r.results["fraction_within_target"] = static_cast<double>(within) / runs;
  r.results["mean_samples"] = static_cast<double>(samples) / runs;

  // Exact reference decomposition with the rank-decay check, when feasible.
  if (!cfg.x.empty() && n <= kMaxEnumerationSize) {
    std::vector<double> bx = cfg.x;
    for (double& v : bx) v *= params.b;
    const auto exact = decompose_exact(m, SpanProbabilityOracle::exact(bx), params.c.front(), params.ell_max, params.b);
    const bool decay = std::all_of(exact.rank_decay_ok.begin(), exact.rank_decay_ok.end(), [](bool b) { return b; });
    Json e = decomposition_summary(exact);
    e["rank_decay_ok"] = decay;
    r.results["exact"] = std::move(e);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

inline Report run_experiment(const ExperimentConfig& cfg) {
  Report r;
  try {
    switch (cfg.kind) {
      case ExperimentKind::kSelectability: r = run_selectability(cfg); break;
      case ExperimentKind::kProphetRatio: r = run_prophet_ratio(cfg); break;
      case ExperimentKind::kThresholdsDiagnostic: r = run_thresholds_diagnostic(cfg); break;
      case ExperimentKind::kLowerBound: r = run_lower_bound(cfg); break;
      case ExperimentKind::kDecompositionStats: r = run_decomposition_stats(cfg); break;
    }
  } catch (const std::exception& e) {
    r = Report{};
    r.status = "error";
    r.message = e.what();
  }
  r.kind = to_string(cfg.kind);
  r.config = config_to_json(cfg);
  r.timestamp = utc_timestamp();
  return r;
}

}  // namespace sprophet
