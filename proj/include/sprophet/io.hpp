#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sprophet/element_set.hpp"
#include "sprophet/matroid.hpp"
#include "sprophet/ocrs.hpp"
#include "sprophet/prophet.hpp"
#include "sprophet/thresholds.hpp"
#include "sprophet/values.hpp"

namespace sprophet {

using Json = nlohmann::ordered_json;

// Malformed input; `where` is "line:column" for syntax errors and a JSON
// pointer for semantic ones.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

namespace io {

inline std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
inline std::string child(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

inline const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(child(path, key), "missing field");
  return *it;
}

// Doubles are written as numbers; infinities as the strings "inf"/"-inf".
inline Json number_to_json(double x) {
  if (std::isinf(x)) return x > 0 ? Json("inf") : Json("-inf");
  return Json(x);
}

inline double number_from_json(const Json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ConfigError(path, "expected a number");
}

inline std::size_t count_from_json(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::size_t>(j.get<long long>());
  throw ConfigError(path, "expected a nonnegative integer");
}

inline std::uint64_t seed_from_json(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::uint64_t>(j.get<long long>());
  throw ConfigError(path, "expected a nonnegative integer seed");
}

inline std::vector<double> numbers_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number_from_json(j[i], child(path, i)));
  return out;
}

inline std::vector<ElementId> ids_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of element ids");
  std::vector<ElementId> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(count_from_json(j[i], child(path, i)));
  return out;
}

inline ElementSet set_from_json(const Json& j, std::size_t universe, const std::string& path) {
  ElementSet s(universe);
  for (ElementId e : ids_from_json(j, path)) {
    if (e >= universe) throw ConfigError(path, "element id " + std::to_string(e) + " out of range");
    s.insert(e);
  }
  return s;
}

inline Json set_to_json(const ElementSet& s) { return Json(s.to_vector()); }

}  // namespace io

// ---------------------------------------------------------------------------
// Matroids
// ---------------------------------------------------------------------------

inline Json matroid_to_json(const Matroid& m) {
  if (const auto* u = dynamic_cast<const UniformMatroid*>(&m)) {
    return Json{{"kind", "uniform"}, {"n", u->size()}, {"rank", u->rank_bound()}};
  }
  if (const auto* p = dynamic_cast<const PartitionMatroid*>(&m)) {
    return Json{{"kind", "partition"}, {"blocks", p->blocks()}, {"capacities", p->capacities()}};
  }
  if (const auto* g = dynamic_cast<const GraphicMatroid*>(&m)) {
    Json edges = Json::array();
    for (const auto& [a, b] : g->edges()) edges.push_back(Json::array({a, b}));
    return Json{{"kind", "graphic"}, {"vertices", g->vertices()}, {"edges", std::move(edges)}};
  }
  if (const auto* r = dynamic_cast<const RestrictionMatroid*>(&m)) {
    return Json{{"kind", "restriction"}, {"parent", matroid_to_json(*r->parent())},
                {"subset", io::set_to_json(r->subset())}};
  }
  if (const auto* c = dynamic_cast<const ContractionMatroid*>(&m)) {
    return Json{{"kind", "contraction"}, {"parent", matroid_to_json(*c->parent())},
                {"subset", io::set_to_json(c->subset())}};
  }
  if (const auto* d = dynamic_cast<const DirectSumMatroid*>(&m)) {
    Json parts = Json::array();
    for (const auto& part : d->parts()) parts.push_back(matroid_to_json(*part));
    return Json{{"kind", "direct_sum"}, {"parts", std::move(parts)}};
  }
  throw std::invalid_argument("matroid_to_json: unsupported matroid kind " + m.kind());
}

inline MatroidPtr matroid_from_json(const Json& j, const std::string& path = "") {
  const Json& kind_node = io::require(j, "kind", path);
  if (!kind_node.is_string()) throw ConfigError(io::child(path, "kind"), "expected a string");
  const std::string kind = kind_node.get<std::string>();
  try {
    if (kind == "uniform") {
      return make_uniform(io::count_from_json(io::require(j, "n", path), io::child(path, "n")),
                          io::count_from_json(io::require(j, "rank", path), io::child(path, "rank")));
    }
    if (kind == "partition") {
      const Json& blocks_node = io::require(j, "blocks", path);
      if (!blocks_node.is_array()) throw ConfigError(io::child(path, "blocks"), "expected an array");
      std::vector<std::vector<ElementId>> blocks;
      for (std::size_t b = 0; b < blocks_node.size(); ++b)
        blocks.push_back(io::ids_from_json(blocks_node[b], io::child(io::child(path, "blocks"), b)));
      const Json& caps_node = io::require(j, "capacities", path);
      std::vector<std::size_t> caps;
      if (caps_node.is_array()) {
        for (std::size_t b = 0; b < caps_node.size(); ++b)
          caps.push_back(io::count_from_json(caps_node[b], io::child(io::child(path, "capacities"), b)));
      } else {
        caps.assign(blocks.size(), io::count_from_json(caps_node, io::child(path, "capacities")));
      }
      return make_partition(std::move(blocks), std::move(caps));
    }
    if (kind == "graphic") {
      const std::size_t v = io::count_from_json(io::require(j, "vertices", path), io::child(path, "vertices"));
      const Json& edges_node = io::require(j, "edges", path);
      if (!edges_node.is_array()) throw ConfigError(io::child(path, "edges"), "expected an array");
      std::vector<GraphicMatroid::Edge> edges;
      for (std::size_t e = 0; e < edges_node.size(); ++e) {
        const auto ends = io::ids_from_json(edges_node[e], io::child(io::child(path, "edges"), e));
        if (ends.size() != 2) throw ConfigError(io::child(io::child(path, "edges"), e), "edge needs two endpoints");
        edges.emplace_back(ends[0], ends[1]);
      }
      return make_graphic(v, std::move(edges));
    }
    if (kind == "complete_graph") {
      return make_complete_graph(io::count_from_json(io::require(j, "vertices", path), io::child(path, "vertices")));
    }
    if (kind == "complete_bipartite") {
      return make_complete_bipartite(io::count_from_json(io::require(j, "left", path), io::child(path, "left")),
                                     io::count_from_json(io::require(j, "right", path), io::child(path, "right")));
    }
    if (kind == "restriction" || kind == "contraction") {
      MatroidPtr parent = matroid_from_json(io::require(j, "parent", path), io::child(path, "parent"));
      ElementSet subset = io::set_from_json(io::require(j, "subset", path), parent->size(), io::child(path, "subset"));
      return kind == "restriction" ? restrict(parent, subset) : contract(parent, subset);
    }
    if (kind == "direct_sum") {
      const Json& parts_node = io::require(j, "parts", path);
      if (!parts_node.is_array()) throw ConfigError(io::child(path, "parts"), "expected an array");
      std::vector<MatroidPtr> parts;
      for (std::size_t p = 0; p < parts_node.size(); ++p)
        parts.push_back(matroid_from_json(parts_node[p], io::child(io::child(path, "parts"), p)));
      return make_direct_sum(std::move(parts));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path.empty() ? "/" : path, e.what());
  }
  throw ConfigError(io::child(path, "kind"), "unknown matroid kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Value distributions
// ---------------------------------------------------------------------------

inline Json distribution_to_json(const ValueDistribution& d) {
  return std::visit(
      [](const auto& p) -> Json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, UniformDist>) {
          return Json{{"kind", "uniform"}, {"a", p.a}, {"b", p.b}};
        } else if constexpr (std::is_same_v<T, ExponentialDist>) {
          return Json{{"kind", "exponential"}, {"rate", p.rate}};
        } else if constexpr (std::is_same_v<T, DiscreteDist>) {
          return Json{{"kind", "discrete"}, {"points", p.points}, {"masses", p.masses}};
        } else if constexpr (std::is_same_v<T, BernoulliScaledDist>) {
          return Json{{"kind", "bernoulli-scaled"}, {"value", p.value}, {"p", p.p}};
        } else {
          return Json{{"kind", "constant"}, {"value", p.value}};
        }
      },
      d.params());
}

inline ValueDistribution distribution_from_json(const Json& j, const std::string& path = "") {
  const Json& type_node = io::require(j, "kind", path);
  if (!type_node.is_string()) throw ConfigError(io::child(path, "kind"), "expected a string");
  const std::string type = type_node.get<std::string>();
  auto num = [&](const char* key) { return io::number_from_json(io::require(j, key, path), io::child(path, key)); };
  try {
    if (type == "uniform") return ValueDistribution::uniform(num("a"), num("b"));
    if (type == "exponential") return ValueDistribution::exponential(num("rate"));
    if (type == "discrete") {
      return ValueDistribution::discrete(io::numbers_from_json(io::require(j, "points", path), io::child(path, "points")),
                                         io::numbers_from_json(io::require(j, "masses", path), io::child(path, "masses")));
    }
    if (type == "bernoulli-scaled") return ValueDistribution::bernoulli_scaled(num("value"), num("p"));
    if (type == "constant") return ValueDistribution::constant(num("value"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path.empty() ? "/" : path, e.what());
  }
  throw ConfigError(io::child(path, "kind"), "unknown distribution kind '" + type + "'");
}

// Either one distribution per element or a single object shared by all.
inline std::vector<ValueDistribution> distributions_from_json(const Json& j, std::size_t n,
                                                              const std::string& path) {
  if (j.is_object()) return std::vector<ValueDistribution>(n, distribution_from_json(j, path));
  if (!j.is_array()) throw ConfigError(path, "expected a distribution or an array of them");
  if (j.size() != n) {
    throw ConfigError(path, "expected " + std::to_string(n) + " distributions, got " + std::to_string(j.size()));
  }
  std::vector<ValueDistribution> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(distribution_from_json(j[i], io::child(path, i)));
  return out;
}

// ---------------------------------------------------------------------------
// Trained artifacts
// ---------------------------------------------------------------------------

inline Json value_to_json(const TieBrokenValue& v) {
  return Json::array({io::number_to_json(v.base), io::number_to_json(v.tiebreak)});
}

inline TieBrokenValue value_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(path, "expected [base, tiebreak]");
  return {io::number_from_json(j[0], io::child(path, 0)), io::number_from_json(j[1], io::child(path, 1))};
}

inline Json thresholds_to_json(const ThresholdTable& t) {
  Json rows = Json::array();
  for (const auto& row : t.thresholds) {
    Json r = Json::array();
    for (const auto& v : row) r.push_back(value_to_json(v));
    rows.push_back(std::move(r));
  }
  return Json{{"eps", t.eps}, {"levels", t.m}, {"samples", t.samples}, {"p", t.p}, {"thresholds", std::move(rows)}};
}

inline ThresholdTable thresholds_from_json(const Json& j, const std::string& path = "") {
  ThresholdTable t;
  t.eps = io::number_from_json(io::require(j, "eps", path), io::child(path, "eps"));
  t.m = io::count_from_json(io::require(j, "levels", path), io::child(path, "levels"));
  t.samples = io::count_from_json(io::require(j, "samples", path), io::child(path, "samples"));
  t.p = io::numbers_from_json(io::require(j, "p", path), io::child(path, "p"));
  t.degenerate = t.m == 0;
  const Json& rows = io::require(j, "thresholds", path);
  const std::string rows_path = io::child(path, "thresholds");
  if (!rows.is_array()) throw ConfigError(rows_path, "expected an array");
  if (t.p.size() != t.m) throw ConfigError(io::child(path, "p"), "expected one activation level per bucket");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != t.m + 1) {
      throw ConfigError(io::child(rows_path, i), "expected levels + 1 thresholds");
    }
    std::vector<TieBrokenValue> row;
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      row.push_back(value_from_json(rows[i][k], io::child(io::child(rows_path, i), k)));
    t.thresholds.push_back(std::move(row));
  }
  return t;
}

inline Json params_to_json(const OcrsParams& p) {
  return Json{{"eps", p.eps}, {"b", p.b}, {"k", p.k}, {"c", p.c}, {"s", p.s}, {"ell_max", p.ell_max},
              {"sample_constant", p.sample_constant}};
}

inline OcrsParams params_from_json(const Json& j, const std::string& path = "") {
  OcrsParams p;
  p.eps = io::number_from_json(io::require(j, "eps", path), io::child(path, "eps"));
  p.b = io::number_from_json(io::require(j, "b", path), io::child(path, "b"));
  p.k = io::count_from_json(io::require(j, "k", path), io::child(path, "k"));
  p.c = io::numbers_from_json(io::require(j, "c", path), io::child(path, "c"));
  p.s = io::count_from_json(io::require(j, "s", path), io::child(path, "s"));
  p.ell_max = io::count_from_json(io::require(j, "ell_max", path), io::child(path, "ell_max"));
  if (j.contains("sample_constant")) {
    p.sample_constant = io::number_from_json(j["sample_constant"], io::child(path, "sample_constant"));
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path.empty() ? "/" : path, e.what());
  }
  return p;
}

inline Json decomposition_to_json(const ChainDecomposition& d) {
  Json layers = Json::array();
  for (const auto& l : d.layers) layers.push_back(io::set_to_json(l));
  Json out{{"status", d.ok() ? "ok" : "failed"},
           {"universe", d.layers.empty() ? 0 : d.layers.front().universe()},
           {"layers", std::move(layers)},
           {"thresholds", d.thresholds},
           {"chosen_index", d.chosen_index},
           {"samples_used", d.samples_used}};
  if (!d.ok()) out["failure"] = d.failure;
  return out;
}

inline ChainDecomposition decomposition_from_json(const Json& j, const std::string& path = "") {
  ChainDecomposition d;
  const Json& status = io::require(j, "status", path);
  if (status == "ok") {
    d.status = ChainDecomposition::Status::kOk;
  } else if (status == "failed") {
    d.status = ChainDecomposition::Status::kFailed;
  } else {
    throw ConfigError(io::child(path, "status"), "expected \"ok\" or \"failed\"");
  }
  const std::size_t n = io::count_from_json(io::require(j, "universe", path), io::child(path, "universe"));
  const Json& layers = io::require(j, "layers", path);
  if (!layers.is_array()) throw ConfigError(io::child(path, "layers"), "expected an array");
  for (std::size_t i = 0; i < layers.size(); ++i)
    d.layers.push_back(io::set_from_json(layers[i], n, io::child(io::child(path, "layers"), i)));
  d.thresholds = io::numbers_from_json(io::require(j, "thresholds", path), io::child(path, "thresholds"));
  d.chosen_index = io::ids_from_json(io::require(j, "chosen_index", path), io::child(path, "chosen_index"));
  d.samples_used = io::count_from_json(io::require(j, "samples_used", path), io::child(path, "samples_used"));
  if (j.contains("failure") && j["failure"].is_string()) d.failure = j["failure"].get<std::string>();
  for (std::size_t i = 0; i + 1 < d.layers.size(); ++i) {
    if (!(d.layers[i + 1].is_subset_of(d.layers[i])) || d.layers[i + 1] == d.layers[i]) {
      throw ConfigError(io::child(path, "layers"), "layers must be strictly nested");
    }
  }
  if (d.ok() && (d.layers.empty() || !d.layers.back().empty() || d.layers.front() != ElementSet::full(n))) {
    throw ConfigError(io::child(path, "layers"), "a successful decomposition runs from the ground set to the empty set");
  }
  return d;
}

// Policy file: thresholds, decomposition, OCRS parameters and seed lineage.
inline Json policy_to_json(const ProphetPolicy& p) {
  return Json{{"seed", p.seed},
              {"threshold_samples", p.threshold_samples},
              {"ocrs_samples", p.ocrs_samples},
              {"params", params_to_json(p.params)},
              {"thresholds", thresholds_to_json(p.thresholds)},
              {"decomposition", decomposition_to_json(p.decomposition)}};
}

inline ProphetPolicy policy_from_json(const Json& j, const std::string& path = "") {
  ProphetPolicy p;
  p.seed = io::seed_from_json(io::require(j, "seed", path), io::child(path, "seed"));
  p.threshold_samples =
      io::count_from_json(io::require(j, "threshold_samples", path), io::child(path, "threshold_samples"));
  p.ocrs_samples = io::count_from_json(io::require(j, "ocrs_samples", path), io::child(path, "ocrs_samples"));
  p.params = params_from_json(io::require(j, "params", path), io::child(path, "params"));
  p.thresholds = thresholds_from_json(io::require(j, "thresholds", path), io::child(path, "thresholds"));
  p.decomposition = decomposition_from_json(io::require(j, "decomposition", path), io::child(path, "decomposition"));
  return p;
}

// ---------------------------------------------------------------------------
// Text and files
// ---------------------------------------------------------------------------

// Parses JSON text; syntax errors carry a line:column location.
inline Json parse_json_text(const std::string& text, const std::string& source = "config") {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(column), "syntax error");
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline void save_policy(const std::string& path, const ProphetPolicy& p) {
  write_text_file(path, policy_to_json(p).dump(2) + "\n");
}

inline ProphetPolicy load_policy(const std::string& path) {
  return policy_from_json(parse_json_text(read_text_file(path), path));
}

}  // namespace sprophet
