#include <gtest/gtest.h>

#include <random>

#include "sprophet/matroid.hpp"
#include "sprophet/matroid_ops.hpp"
#include "support/oracles.hpp"

using namespace sprophet;

namespace {

MatroidPtr triangle() { return make_complete_graph(3); }

// Checks the oracle against the two matroid axioms on every subset pair.
void expect_matroid_axioms(const Matroid& m) {
  const auto ind = oracle::independent_table(m);
  ASSERT_TRUE(ind[0]);
  for (oracle::Mask s = 0; s < ind.size(); ++s) {
    if (!ind[s]) continue;
    for (oracle::Mask b = s; b; b &= b - 1) EXPECT_TRUE(ind[s & ~(b & -b)]) << "downward closure at " << s;
  }
  for (oracle::Mask a = 0; a < ind.size(); ++a) {
    if (!ind[a]) continue;
    for (oracle::Mask b = 0; b < ind.size(); ++b) {
      if (!ind[b] || oracle::popcount(a) <= oracle::popcount(b)) continue;
      bool extends = false;
      for (oracle::Mask d = a & ~b; d && !extends; d &= d - 1) extends = ind[b | (d & -d)];
      EXPECT_TRUE(extends) << "exchange fails for " << a << " vs " << b;
    }
  }
}

}  // namespace

TEST(MatroidExamples, Independence) {
  EXPECT_TRUE(is_independent(*make_uniform(4, 2), ElementSet(4, {0, 1})));
  EXPECT_FALSE(is_independent(*triangle(), ElementSet::full(3)));
  EXPECT_TRUE(is_independent(*make_partition({{0, 1}, {2, 3}}, {1, 1}), ElementSet(4, {0, 2})));
  EXPECT_FALSE(is_independent(*make_partition({{0, 1}, {2, 3}}, {1, 1}), ElementSet(4, {0, 1})));
}

TEST(MatroidExamples, OutOfRangeElementIsAnError) {
  EXPECT_THROW(is_independent(*make_uniform(4, 2), ElementSet(6, {5})), std::out_of_range);
  EXPECT_THROW(span_contains(*make_uniform(4, 2), ElementSet(4), 4), std::out_of_range);
  EXPECT_THROW(rank(*make_uniform(4, 2), ElementSet(9, {8})), std::out_of_range);
}

TEST(MatroidExamples, Rank) {
  EXPECT_EQ(rank(*make_uniform(5, 3), ElementSet(5, {0, 1, 2, 3})), 3u);
  EXPECT_EQ(rank(*triangle(), ElementSet::full(3)), 2u);
  EXPECT_EQ(rank(*make_complete_graph(4), ElementSet(6)), 0u);
}

TEST(MatroidExamples, Span) {
  EXPECT_TRUE(span_contains(*make_uniform(3, 1), ElementSet(3, {0}), 2));
  EXPECT_TRUE(span_contains(*triangle(), ElementSet(3, {0, 1}), 2));
  EXPECT_FALSE(span_contains(*triangle(), ElementSet(3), 1));
  EXPECT_TRUE(span_contains(*triangle(), ElementSet(3, {1}), 1));
}

TEST(MatroidExamples, ContractUniformByOneElementIsRankOne) {
  const auto base = make_uniform(4, 2);
  const auto c = contract(base, ElementSet(4, {0}));
  ASSERT_EQ(c->size(), 3u);
  for (std::uint64_t mask = 0; mask < 8; ++mask) {
    const ElementSet s = ElementSet::from_mask(3, mask);
    EXPECT_EQ(c->independent(s), s.size() <= 1) << s.to_string();
  }
}

TEST(MatroidExamples, RestrictTriangleToOneEdgeIsFree) {
  const auto r = restrict(triangle(), ElementSet(3, {0}));
  ASSERT_EQ(r->size(), 1u);
  EXPECT_TRUE(r->independent(ElementSet::full(1)));
}

TEST(MatroidExamples, ContractByEmptySetIsIdentity) {
  const auto g = make_complete_graph(4);
  const auto c = contract(g, ElementSet(6));
  for (std::uint64_t mask = 0; mask < 64; ++mask) {
    const ElementSet s = ElementSet::from_mask(6, mask);
    EXPECT_EQ(c->independent(s), g->independent(s));
  }
}

TEST(MatroidExamples, MaxWeightBasis) {
  const std::vector<double> w1{5, 3, 2};
  EXPECT_EQ(max_weight_basis(*make_uniform(3, 1), w1), ElementSet(3, {0}));
  const std::vector<double> w2{3, 2, 1};
  EXPECT_EQ(max_weight_basis(*triangle(), w2), ElementSet(3, {0, 1}));
  const std::vector<double> w3{1, 9, 4};
  EXPECT_EQ(max_weight_basis(*make_partition({{0, 1}, {2}}, {1, 1}), w3), ElementSet(3, {1, 2}));
}

TEST(MatroidExamples, MaxWeightBasisKeepsZeroWeightsAndRejectsBadInput) {
  const std::vector<double> zeros{0, 0, 0};
  EXPECT_EQ(max_weight_basis(*make_uniform(3, 2), zeros), ElementSet(3, {0, 1}));
  const std::vector<double> negative{1, -1, 0};
  EXPECT_THROW(max_weight_basis(*make_uniform(3, 2), negative), std::invalid_argument);
  const std::vector<double> short_w{1, 2};
  EXPECT_THROW(max_weight_basis(*make_uniform(3, 2), short_w), std::invalid_argument);
}

TEST(MatroidExamples, InPolytope) {
  const auto u = make_uniform(2, 1);
  EXPECT_TRUE(in_polytope(*u, std::vector<double>{0.5, 0.5}));
  EXPECT_FALSE(in_polytope(*u, std::vector<double>{0.6, 0.6}));
  EXPECT_TRUE(in_polytope(*make_complete_graph(4), std::vector<double>(6, 0.0)));
  EXPECT_THROW(in_polytope(*u, std::vector<double>{1.5, 0.0}), std::invalid_argument);
  EXPECT_THROW(in_polytope(*make_uniform(21, 3), std::vector<double>(21, 0.0)), UnsupportedError);
}

TEST(MatroidAxioms, BuiltInFamilies) {
  expect_matroid_axioms(*make_uniform(7, 3));
  expect_matroid_axioms(*make_partition({{0, 3}, {1, 2, 4}, {5, 6}}, {1, 2, 1}));
  expect_matroid_axioms(*make_complete_graph(4));
  expect_matroid_axioms(*make_graphic(3, {{0, 1}, {1, 1}, {0, 1}, {1, 2}, {2, 0}}));
  expect_matroid_axioms(*make_complete_bipartite(2, 3));
  expect_matroid_axioms(*make_direct_sum({make_uniform(3, 1), make_complete_graph(3)}));
  expect_matroid_axioms(*restrict(make_complete_graph(4), ElementSet(6, {0, 1, 3, 5})));
  expect_matroid_axioms(*contract(make_complete_graph(4), ElementSet(6, {0})));
}

TEST(MatroidAxioms, RankAgreesWithBruteForceAndIsSubmodular) {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = oracle::random_matroid(gen, 3, 8);
    const auto ind = oracle::independent_table(*m);
    const auto r = oracle::rank_table(ind);
    const std::size_t n = m->size();
    for (oracle::Mask s = 0; s < r.size(); ++s) {
      ASSERT_EQ(rank(*m, oracle::to_set(n, s)), static_cast<std::size_t>(r[s]));
      for (std::size_t e = 0; e < n; ++e) EXPECT_LE(r[s], r[s | (1u << e)]);
    }
    for (oracle::Mask a = 0; a < r.size(); a += 3)
      for (oracle::Mask b = 0; b < r.size(); b += 5) EXPECT_LE(r[a | b] + r[a & b], r[a] + r[b]);
  }
}

TEST(MatroidCombinators, MatchSetDefinitions) {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 30; ++rep) {
    const auto m = oracle::random_matroid(gen, 3, 8);
    const std::size_t n = m->size();
    const auto ind = oracle::independent_table(*m);
    const auto r = oracle::rank_table(ind);
    const oracle::Mask S = static_cast<oracle::Mask>(gen() & ((1u << n) - 1));
    const auto res = restrict(m, oracle::to_set(n, S));
    const auto con = contract(m, oracle::to_set(n, S));
    const auto* rr = dynamic_cast<const RestrictionMatroid*>(res.get());
    const auto* cc = dynamic_cast<const ContractionMatroid*>(con.get());
    ASSERT_NE(rr, nullptr);
    ASSERT_NE(cc, nullptr);
    for (std::uint64_t local = 0; local < (1u << res->size()); ++local) {
      const ElementSet l = ElementSet::from_mask(res->size(), local);
      EXPECT_EQ(res->independent(l), static_cast<bool>(ind[oracle::to_mask(rr->to_parent(l))]));
    }
    for (std::uint64_t local = 0; local < (1u << con->size()); ++local) {
      const ElementSet l = ElementSet::from_mask(con->size(), local);
      const oracle::Mask I = oracle::to_mask(cc->to_parent(l));
      const bool expected = ind[I] && r[I] + r[S] == r[I | S];
      EXPECT_EQ(con->independent(l), expected);
    }
  }
}

TEST(StrongExchange, UniformAnySwapWorks) {
  const auto u = make_uniform(4, 2);
  const ElementId y = strong_exchange(*u, ElementSet(4, {0, 1}), ElementSet(4, {2, 3}), 0);
  EXPECT_EQ(y, 2u);
}

TEST(StrongExchange, TrianglePlusPendantEdge) {
  // Triangle 0-1-2 with pendant edge 2-3: edges (0,1),(1,2),(0,2),(2,3).
  const auto g = make_graphic(4, {{0, 1}, {1, 2}, {0, 2}, {2, 3}});
  const auto ind = oracle::independent_table(*g);
  const auto all_bases = oracle::bases(ind);
  for (auto a : all_bases) {
    for (auto b : all_bases) {
      for (std::size_t x = 0; x < 4; ++x) {
        if (!oracle::has(a, x) || oracle::has(b, x)) continue;
        const ElementId y = strong_exchange(*g, oracle::to_set(4, a), oracle::to_set(4, b), x);
        EXPECT_TRUE(oracle::has(b, y) && !oracle::has(a, y));
        EXPECT_TRUE(ind[(a & ~(1u << x)) | (1u << y)]);
        EXPECT_TRUE(ind[(b & ~(1u << y)) | (1u << x)]);
      }
    }
  }
}

TEST(StrongExchange, RejectsNonBasesAndBadPivot) {
  const auto u = make_uniform(4, 2);
  EXPECT_THROW(strong_exchange(*u, ElementSet(4, {0}), ElementSet(4, {2, 3}), 0), std::invalid_argument);
  EXPECT_THROW(strong_exchange(*u, ElementSet(4, {0, 1}), ElementSet(4, {1, 3}), 1), std::invalid_argument);
}

TEST(ExchangeBijection, IdentityWhenBasesCoincide) {
  const auto g = make_complete_graph(4);
  const std::vector<double> w{6, 5, 4, 3, 2, 1};
  const ElementSet a = max_weight_basis(*g, w);
  const auto f = monotone_exchange_bijection(*g, w, a, a);
  for (const auto& [from, to] : f) EXPECT_EQ(from, to);
  EXPECT_EQ(f.size(), a.size());
}

TEST(ExchangeBijection, UniformExample) {
  const auto u = make_uniform(4, 2);
  const std::vector<double> w{4, 3, 2, 1};
  const ElementSet a(4, {0, 1}), b(4, {2, 3});
  const auto f = monotone_exchange_bijection(*u, w, a, b);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_NE(f.at(0), f.at(1));
  EXPECT_LE(w[f.at(0)], 4.0);
  EXPECT_LE(w[f.at(1)], 3.0);
  for (const auto& [x, y] : f) EXPECT_TRUE(u->independent(b.without(y).with(x)));
}

TEST(ExchangeBijection, RejectsNonGreedyA) {
  const auto u = make_uniform(4, 2);
  const std::vector<double> w{4, 3, 2, 1};
  EXPECT_THROW(monotone_exchange_bijection(*u, w, ElementSet(4, {2, 3}), ElementSet(4, {0, 1})),
               std::invalid_argument);
}

TEST(ExchangeBijection, FactsHoldOnRandomGraphs) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t v = 3 + gen() % 3;
    std::vector<GraphicMatroid::Edge> edges;
    for (std::size_t k = 0; k < 4 + gen() % 6; ++k) edges.emplace_back(gen() % v, gen() % v);
    const auto g = make_graphic(v, edges);
    const std::size_t n = g->size();
    std::vector<double> w(n);
    for (auto& x : w) x = unif(gen);
    const ElementSet a = max_weight_basis(*g, w);
    const auto all_bases = oracle::bases(oracle::independent_table(*g));
    const ElementSet b = oracle::to_set(n, all_bases[gen() % all_bases.size()]);
    const auto f = monotone_exchange_bijection(*g, w, a, b);
    ElementSet image(n);
    for (const auto& [x, y] : f) {
      EXPECT_TRUE(a.contains(x));
      EXPECT_TRUE(b.contains(y));
      EXPECT_FALSE(image.contains(y));
      image.insert(y);
      EXPECT_LE(w[y], w[x]);
      EXPECT_TRUE(is_basis(*g, b.without(y).with(x)));
      if (b.contains(x)) {
        EXPECT_EQ(y, x);
      }
    }
    EXPECT_EQ(image, b);
  }
}
