#pragma once

#include <cstddef>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sprophet/element_set.hpp"

namespace sprophet {

// Independence oracle over the ground set [0, size()). Implementations are
// immutable after construction, so a MatroidPtr may be shared across threads.
class Matroid {
 public:
  virtual ~Matroid() = default;

  virtual std::size_t size() const = 0;

  // `s.universe()` equals size(); callers go through is_independent() which
  // normalizes and range-checks.
  virtual bool independent(const ElementSet& s) const = 0;

  virtual std::string kind() const = 0;
};

using MatroidPtr = std::shared_ptr<const Matroid>;

// Normalizes `s` to the ground set of `m`; any member >= m.size() is an
// out-of-range error.
inline ElementSet normalize_subset(const Matroid& m, const ElementSet& s) {
  if (s.universe() == m.size()) return s;
  ElementSet out(m.size());
  for (ElementId e : s) {
    if (e >= m.size()) {
      throw std::out_of_range("element " + std::to_string(e) + " outside ground set of size " +
                              std::to_string(m.size()));
    }
    out.insert(e);
  }
  return out;
}

inline bool is_independent(const Matroid& m, const ElementSet& s) {
  if (s.universe() == m.size()) return m.independent(s);
  return m.independent(normalize_subset(m, s));
}

class UniformMatroid final : public Matroid {
 public:
  UniformMatroid(std::size_t n, std::size_t rank) : n_(n), rank_(rank) {}

  std::size_t size() const override { return n_; }
  bool independent(const ElementSet& s) const override { return s.size() <= rank_; }
  std::string kind() const override { return "uniform"; }
  std::size_t rank_bound() const { return rank_; }

 private:
  std::size_t n_;
  std::size_t rank_;
};

class PartitionMatroid final : public Matroid {
 public:
  // Blocks must partition [0, n) where n is the total block size.
  PartitionMatroid(std::vector<std::vector<ElementId>> blocks, std::vector<std::size_t> capacities)
      : blocks_(std::move(blocks)), capacities_(std::move(capacities)) {
    if (blocks_.size() != capacities_.size()) {
      throw std::invalid_argument("partition matroid: blocks and capacities differ in length");
    }
    std::size_t n = 0;
    for (const auto& b : blocks_) n += b.size();
    block_of_.assign(n, blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      for (ElementId e : blocks_[b]) {
        if (e >= n || block_of_[e] != blocks_.size()) {
          throw std::invalid_argument("partition matroid: blocks must partition [0, n)");
        }
        block_of_[e] = b;
      }
    }
  }

  std::size_t size() const override { return block_of_.size(); }

  bool independent(const ElementSet& s) const override {
    std::vector<std::size_t> used(blocks_.size(), 0);
    for (ElementId e : s) {
      const std::size_t b = block_of_[e];
      if (++used[b] > capacities_[b]) return false;
    }
    return true;
  }

  std::string kind() const override { return "partition"; }
  const std::vector<std::vector<ElementId>>& blocks() const { return blocks_; }
  const std::vector<std::size_t>& capacities() const { return capacities_; }

 private:
  std::vector<std::vector<ElementId>> blocks_;
  std::vector<std::size_t> capacities_;
  std::vector<std::size_t> block_of_;
};

// Edge i of the graph is element i; a set is independent iff it is a forest.
class GraphicMatroid final : public Matroid {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  GraphicMatroid(std::size_t vertices, std::vector<Edge> edges)
      : vertices_(vertices), edges_(std::move(edges)) {
    for (const auto& [u, v] : edges_) {
      if (u >= vertices_ || v >= vertices_) {
        throw std::invalid_argument("graphic matroid: edge endpoint out of range");
      }
    }
  }

  std::size_t size() const override { return edges_.size(); }

  bool independent(const ElementSet& s) const override {
    // Union-find on a per-thread scratch array; only touched vertices are reset.
    thread_local std::vector<std::size_t> parent;
    if (parent.size() < vertices_) {
      const std::size_t old = parent.size();
      parent.resize(vertices_);
      std::iota(parent.begin() + static_cast<std::ptrdiff_t>(old), parent.end(), old);
    }
    struct Reset {
      std::vector<std::size_t>& parent;
      const std::vector<Edge>& edges;
      const ElementSet& s;
      ~Reset() {
        for (ElementId e : s) {
          parent[edges[e].first] = edges[e].first;
          parent[edges[e].second] = edges[e].second;
        }
      }
    } reset{parent, edges_, s};
    auto find = [](std::size_t x) {
      while (parent[x] != x) x = parent[x];
      return x;
    };
    for (ElementId e : s) {
      const auto [u, v] = edges_[e];
      const std::size_t ru = find(u);
      const std::size_t rv = find(v);
      if (ru == rv) return false;
      parent[ru] = rv;
    }
    return true;
  }

  std::string kind() const override { return "graphic"; }
  std::size_t vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }

 private:
  std::size_t vertices_;
  std::vector<Edge> edges_;
};

// Matroid on a relabeled subset of a parent ground set. Element j of this
// matroid is parent element parent_ids()[j].
class RelabeledMatroid : public Matroid {
 public:
  const MatroidPtr& parent() const { return parent_; }
  const std::vector<ElementId>& parent_ids() const { return parent_ids_; }
  std::size_t size() const override { return parent_ids_.size(); }

  ElementSet to_parent(const ElementSet& s) const {
    ElementSet out(parent_->size());
    for (ElementId e : s) out.insert(parent_ids_[e]);
    return out;
  }

 protected:
  RelabeledMatroid(MatroidPtr parent, std::vector<ElementId> ids)
      : parent_(std::move(parent)), parent_ids_(std::move(ids)) {
    if (!parent_) throw std::invalid_argument("relabeled matroid: null parent");
  }

  MatroidPtr parent_;
  std::vector<ElementId> parent_ids_;
};

// M|S: ground set S (ascending parent ids), independent sets those of M inside S.
class RestrictionMatroid final : public RelabeledMatroid {
 public:
  RestrictionMatroid(MatroidPtr parent, const ElementSet& subset)
      : RelabeledMatroid(parent, normalize_subset(*parent, subset).to_vector()),
        subset_(normalize_subset(*parent_, subset)) {}

  bool independent(const ElementSet& s) const override {
    return parent_->independent(to_parent(s));
  }
  std::string kind() const override { return "restriction"; }
  const ElementSet& subset() const { return subset_; }

 private:
  ElementSet subset_;
};

// M/S: ground set U \ S. I is independent iff I together with a basis of S is
// independent in M, which is equivalent to rank(I) + rank(S) = rank(I u S).
class ContractionMatroid final : public RelabeledMatroid {
 public:
  ContractionMatroid(MatroidPtr parent, const ElementSet& subset)
      : RelabeledMatroid(parent, normalize_subset(*parent, subset).complement().to_vector()),
        subset_(normalize_subset(*parent_, subset)),
        contracted_basis_(parent_->size()) {
    for (ElementId e : subset_) {
      contracted_basis_.insert(e);
      if (!parent_->independent(contracted_basis_)) contracted_basis_.erase(e);
    }
  }

  bool independent(const ElementSet& s) const override {
    return parent_->independent(to_parent(s) | contracted_basis_);
  }
  std::string kind() const override { return "contraction"; }
  const ElementSet& subset() const { return subset_; }

 private:
  ElementSet subset_;
  ElementSet contracted_basis_;
};

// Disjoint union; part p occupies the id range [offset(p), offset(p) + size).
class DirectSumMatroid final : public Matroid {
 public:
  explicit DirectSumMatroid(std::vector<MatroidPtr> parts) : parts_(std::move(parts)) {
    std::size_t offset = 0;
    for (const auto& p : parts_) {
      if (!p) throw std::invalid_argument("direct sum: null part");
      offsets_.push_back(offset);
      offset += p->size();
    }
    n_ = offset;
  }

  std::size_t size() const override { return n_; }

  bool independent(const ElementSet& s) const override {
    for (std::size_t p = 0; p < parts_.size(); ++p) {
      ElementSet local(parts_[p]->size());
      for (std::size_t j = 0; j < parts_[p]->size(); ++j)
        if (s.contains(offsets_[p] + j)) local.insert(j);
      if (!parts_[p]->independent(local)) return false;
    }
    return true;
  }

  std::string kind() const override { return "direct_sum"; }
  const std::vector<MatroidPtr>& parts() const { return parts_; }

 private:
  std::vector<MatroidPtr> parts_;
  std::vector<std::size_t> offsets_;
  std::size_t n_ = 0;
};

inline MatroidPtr make_uniform(std::size_t n, std::size_t rank) {
  return std::make_shared<UniformMatroid>(n, rank);
}

inline MatroidPtr make_partition(std::vector<std::vector<ElementId>> blocks,
                                 std::vector<std::size_t> capacities) {
  return std::make_shared<PartitionMatroid>(std::move(blocks), std::move(capacities));
}

inline MatroidPtr make_graphic(std::size_t vertices, std::vector<GraphicMatroid::Edge> edges) {
  return std::make_shared<GraphicMatroid>(vertices, std::move(edges));
}

inline MatroidPtr make_direct_sum(std::vector<MatroidPtr> parts) {
  return std::make_shared<DirectSumMatroid>(std::move(parts));
}

inline MatroidPtr restrict(const MatroidPtr& m, const ElementSet& s) {
  return std::make_shared<RestrictionMatroid>(m, s);
}

inline MatroidPtr contract(const MatroidPtr& m, const ElementSet& s) {
  return std::make_shared<ContractionMatroid>(m, s);
}

// Complete graph K_v.
inline MatroidPtr make_complete_graph(std::size_t v) {
  std::vector<GraphicMatroid::Edge> edges;
  for (std::size_t a = 0; a < v; ++a)
    for (std::size_t b = a + 1; b < v; ++b) edges.emplace_back(a, b);
  return make_graphic(v, std::move(edges));
}

// Complete bipartite graph K_{left,right}: left vertex i is i, right vertex j
// is left + j, and edge i * right + j joins them.
inline MatroidPtr make_complete_bipartite(std::size_t left, std::size_t right) {
  std::vector<GraphicMatroid::Edge> edges;
  edges.reserve(left * right);
  for (std::size_t i = 0; i < left; ++i)
    for (std::size_t j = 0; j < right; ++j) edges.emplace_back(i, left + j);
  return make_graphic(left + right, std::move(edges));
}

}  // namespace sprophet
