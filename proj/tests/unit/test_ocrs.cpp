#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "sprophet/harness.hpp"
#include "sprophet/ocrs.hpp"
#include "support/oracles.hpp"
#include "support/sampling.hpp"

using namespace sprophet;

namespace {

std::vector<double> random_point(std::mt19937_64& gen, const Matroid& m, double scale) {
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::vector<double> x(m.size());
  for (auto& v : x) v = unif(gen);
  const auto r = oracle::rank_table(oracle::independent_table(m));
  const double t = std::min(1.0, oracle::polytope_scale(r, x));
  for (auto& v : x) v = std::min(1.0, v * t * scale);
  return x;
}

}  // namespace

TEST(SpanProbability, SpecExamples) {
  const auto u = make_uniform(2, 1);
  const auto oracle_x = SpanProbabilityOracle::exact({0.4, 0.4});
  EXPECT_NEAR(span_probability(oracle_x, *u, ElementSet::full(2), ElementSet(2), 0), 0.4, 1e-12);
  EXPECT_NEAR(span_probability(oracle_x, *u, ElementSet::full(2), ElementSet(2, {1}), 0), 1.0, 1e-12);
  const auto zero = SpanProbabilityOracle::exact({0.0, 0.0});
  EXPECT_EQ(span_probability(zero, *u, ElementSet::full(2), ElementSet(2), 1), 0.0);
}

TEST(SpanProbability, Errors) {
  const auto u = make_uniform(2, 1);
  const auto o = SpanProbabilityOracle::exact({0.4, 0.4});
  EXPECT_THROW(span_probability(o, *u, ElementSet::full(2), ElementSet(2, {0}), 0), std::invalid_argument);
  EXPECT_THROW(span_probability(o, *u, ElementSet(2, {1}), ElementSet(2), 0), std::invalid_argument);
  const auto big = make_uniform(21, 2);
  const auto ob = SpanProbabilityOracle::exact(std::vector<double>(21, 0.1));
  EXPECT_THROW(span_probability(ob, *big, ElementSet::full(21), ElementSet(21), 0), UnsupportedError);
  EXPECT_THROW(SpanProbabilityOracle::exact({1.5}), std::invalid_argument);
  EXPECT_THROW(SpanProbabilityOracle::empirical(SampleMultiset(3)), std::invalid_argument);
}

TEST(SpanProbability, ExactModeMatchesBruteForce) {
  std::mt19937_64 gen(12);
  for (int rep = 0; rep < 40; ++rep) {
    const auto m = oracle::random_matroid(gen, 2, 7);
    const std::size_t n = m->size();
    const auto r = oracle::rank_table(oracle::independent_table(*m));
    const auto x = random_point(gen, *m, 1.0);
    const auto o = SpanProbabilityOracle::exact(x);
    const oracle::Mask all = (1u << n) - 1;
    const oracle::Mask N = static_cast<oracle::Mask>(gen() & all) | 1u;
    const oracle::Mask S = static_cast<oracle::Mask>(gen() & N & ~1u);
    EXPECT_NEAR(span_probability(o, *m, oracle::to_set(n, N), oracle::to_set(n, S), 0),
                oracle::span_probability(r, x, N, S, 0), 1e-12);
  }
}

TEST(SpanProbability, EmpiricalModeCountsSamples) {
  const auto u = make_uniform(3, 1);
  const std::vector<ElementSet> samples{ElementSet(3, {1}), ElementSet(3), ElementSet(3, {1, 2}), ElementSet(3, {0})};
  const auto o = SpanProbabilityOracle::empirical(3, samples);
  EXPECT_DOUBLE_EQ(span_probability(o, *u, ElementSet::full(3), ElementSet(3), 0), 0.5);
  EXPECT_DOUBLE_EQ(span_probability(o, *u, ElementSet(3, {0, 2}), ElementSet(3), 0), 0.25);
}

TEST(SelectExact, SpecExamples) {
  const auto u = make_uniform(2, 1);
  EXPECT_TRUE(select_exact(*u, SpanProbabilityOracle::exact({0.4, 0.4}), ElementSet::full(2), 0.5).empty());
  EXPECT_EQ(select_exact(*u, SpanProbabilityOracle::exact({0.6, 0.6}), ElementSet::full(2), 0.5), ElementSet::full(2));
  EXPECT_TRUE(select_exact(*u, SpanProbabilityOracle::exact({1.0, 1.0}), ElementSet::full(2), 1.0).empty());
  const auto mc = SpanProbabilityOracle::monte_carlo({0.4, 0.4}, 100, 1);
  EXPECT_THROW(select_exact(*u, mc, ElementSet::full(2), 0.5), std::invalid_argument);
}

TEST(SelectExact, OrderInvariantMonotoneAndTerminal) {
  std::mt19937_64 gen(33);
  for (int rep = 0; rep < 60; ++rep) {
    const auto m = oracle::random_matroid(gen, 2, 7);
    const std::size_t n = m->size();
    const auto r = oracle::rank_table(oracle::independent_table(*m));
    const auto x = random_point(gen, *m, 1.0);
    const auto o = SpanProbabilityOracle::exact(x);
    const ElementSet N = ElementSet::full(n);
    const double c = 0.3 + 0.6 * std::uniform_real_distribution<double>(0, 1)(gen);
    const ElementSet S = select_exact(*m, o, N, c);
    std::vector<std::size_t> scan(n);
    std::iota(scan.begin(), scan.end(), 0);
    for (int perm = 0; perm < 4; ++perm) {
      std::shuffle(scan.begin(), scan.end(), gen);
      EXPECT_EQ(oracle::to_mask(S), oracle::select(r, x, (1u << n) - 1, c, scan));
    }
    for (ElementId e : N - S) {
      if (is_loop(*m, e)) continue;
      EXPECT_LE(span_probability(o, *m, N, S, e), c + 1e-12);
    }
    EXPECT_TRUE(select_exact(*m, o, N, c + 0.05).is_subset_of(S));
  }
}

TEST(SelectSampled, SpecExamples) {
  const auto u = make_uniform(3, 1);
  const std::vector<ElementSet> empties(5, ElementSet(3));
  EXPECT_TRUE(select_sampled(*u, empties, ElementSet::full(3), 0.5).empty());
  const std::vector<ElementSet> fulls(5, ElementSet::full(3));
  EXPECT_EQ(select_sampled(*u, fulls, ElementSet::full(3), 0.5), ElementSet::full(3));
  EXPECT_THROW(select_sampled(*u, std::vector<ElementSet>{}, ElementSet::full(3), 0.5), std::invalid_argument);
}

TEST(SelectSampled, SandwichAtGenerousSampleSize) {
  std::mt19937_64 gen(44);
  const double lo = 0.6, hi = 0.7, mid = 0.65;
  int contained = 0;
  const int trials = 50;
  for (int rep = 0; rep < trials; ++rep) {
    const auto m = oracle::random_matroid(gen, 3, 7);
    const std::size_t n = m->size();
    const auto x = random_point(gen, *m, 0.5);
    const auto o = SpanProbabilityOracle::exact(x);
    const ElementSet N = ElementSet::full(n);
    const auto samples = oracle::multinomial_samples(x, 200000, gen);
    const ElementSet sampled = select_sampled(*m, samples, N, mid);
    if (select_exact(*m, o, N, hi).is_subset_of(sampled) && sampled.is_subset_of(select_exact(*m, o, N, lo)))
      ++contained;
  }
  EXPECT_GE(contained, trials - 2);
}

TEST(DecomposeExact, SpecExamples) {
  const auto u = make_uniform(2, 1);
  const auto d0 = decompose_exact(*u, SpanProbabilityOracle::exact({0.0, 0.0}), 0.75, 5);
  ASSERT_TRUE(d0.ok());
  EXPECT_EQ(d0.depth(), 1u);
  const auto d1 = decompose_exact(*u, SpanProbabilityOracle::exact({0.2, 0.2}), 0.75, 5);
  ASSERT_TRUE(d1.ok());
  EXPECT_TRUE(d1.layers[1].empty());
  EXPECT_THROW(decompose_exact(*u, SpanProbabilityOracle::monte_carlo({0.2, 0.2}, 10, 1), 0.75, 5),
               std::invalid_argument);
}

TEST(DecomposeExact, FailsWhenLayerCannotShrink) {
  const auto u = make_uniform(2, 1);
  const auto d = decompose_exact(*u, SpanProbabilityOracle::exact({1.0, 1.0}), 0.5, 5);
  EXPECT_FALSE(d.ok());
}

TEST(DecomposeExact, RankDecayOnGraphsInsideHalfPolytope) {
  std::mt19937_64 gen(55);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t v = 3 + gen() % 3;
    std::vector<GraphicMatroid::Edge> edges;
    for (std::size_t k = 0; k < 5 + gen() % 5; ++k) edges.emplace_back(gen() % v, gen() % v);
    const auto g = make_graphic(v, edges);
    const auto x = random_point(gen, *g, 0.5);
    const auto d = decompose_exact(*g, SpanProbabilityOracle::exact(x), 0.75, 20);
    ASSERT_TRUE(d.ok());
    for (bool ok : d.rank_decay_ok) EXPECT_TRUE(ok);
  }
}

TEST(DecomposeSampled, EmptySamplesGiveOneLayer) {
  const auto u = make_uniform(4, 2);
  OcrsParams p = default_params(4, 0.2);
  p.s = 100;
  FunctionSampleSource source(4, [] { return ElementSet(4); });
  const auto d = decompose_sampled(*u, source, p, 1);
  ASSERT_TRUE(d.ok());
  EXPECT_EQ(d.depth(), 1u);
  EXPECT_EQ(d.samples_used, p.s);
  ASSERT_EQ(d.chosen_index.size(), 1u);
  EXPECT_GE(d.chosen_index[0], 1u);
  EXPECT_LE(d.chosen_index[0], p.k);
}

TEST(DecomposeSampled, ExhaustedSourceThrows) {
  const auto u = make_uniform(2, 1);
  OcrsParams p = default_params(2, 0.2);
  p.s = 3;
  ListSampleSource source(2, {ElementSet(2), ElementSet(2)});
  EXPECT_THROW(decompose_sampled(*u, source, p, 1), std::invalid_argument);
}

TEST(DecomposeSampled, StrictNestingAndFreshSamples) {
  std::mt19937_64 gen(66);
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = oracle::random_matroid(gen, 3, 8);
    const std::size_t n = m->size();
    const auto x = random_point(gen, *m, 1.0);
    OcrsParams p = default_params(std::max<std::size_t>(n, 2), 0.2);
    p.s = 2000;
    const auto d = train_ocrs_from_x(*m, x, p, static_cast<std::uint64_t>(rep));
    if (!d.ok()) continue;
    EXPECT_EQ(d.samples_used, p.s * d.depth());
    EXPECT_TRUE(d.layers.back().empty());
    for (std::size_t i = 0; i + 1 < d.layers.size(); ++i) {
      EXPECT_TRUE(d.layers[i + 1].is_subset_of(d.layers[i]));
      EXPECT_NE(d.layers[i + 1], d.layers[i]);
    }
  }
}

TEST(LayeredGreedy, SpecExamples) {
  const auto u = make_uniform(2, 1);
  const auto d = trivial_decomposition(2);
  const std::vector<ElementId> order{0, 1};
  EXPECT_TRUE(run_layered_greedy(u, d, ElementSet(2), order).empty());
  EXPECT_EQ(run_layered_greedy(u, d, ElementSet::full(2), order), ElementSet(2, {0}));
}

TEST(LayeredGreedy, RejectsFailedDecompositionAndUncoveredElements) {
  const auto u = make_uniform(2, 1);
  ChainDecomposition failed = trivial_decomposition(2);
  failed.status = ChainDecomposition::Status::kFailed;
  EXPECT_THROW(LayeredGreedy(u, failed), std::invalid_argument);
  ChainDecomposition partial;
  partial.layers = {ElementSet(2, {0}), ElementSet(2)};
  LayeredGreedy g(u, partial);
  auto session = g.start();
  EXPECT_THROW(session.offer(1, true), std::logic_error);
}

TEST(LayeredGreedy, OutputsAndLayersStayIndependent) {
  std::mt19937_64 gen(77);
  for (int rep = 0; rep < 40; ++rep) {
    const auto m = oracle::random_matroid(gen, 3, 9);
    const std::size_t n = m->size();
    const auto x = random_point(gen, *m, 0.5);
    const auto d = decompose_exact(*m, SpanProbabilityOracle::exact(x), 0.6, 20);
    if (!d.ok()) continue;
    const LayeredGreedy greedy(m, d);
    Rng rng(static_cast<std::uint64_t>(rep));
    for (int t = 0; t < 200; ++t) {
      const ElementSet active = draw_active_set(std::vector<double>(n, 0.6), rng);
      std::vector<ElementId> order = identity_order(n);
      shuffle_in_place(order, rng);
      const ElementSet accepted = greedy.run(active, order);
      ASSERT_TRUE(m->independent(accepted));
      ASSERT_TRUE(accepted.is_subset_of(active));
      for (std::size_t i = 0; i + 1 < d.layers.size(); ++i) {
        const ElementSet layer_accepted = accepted & (d.layers[i] - d.layers[i + 1]);
        EXPECT_EQ(rank(*m, layer_accepted | d.layers[i + 1]), layer_accepted.size() + rank(*m, d.layers[i + 1]));
      }
    }
  }
}

TEST(Shrink, ExtremesAndRate) {
  Rng rng(9);
  const ElementSet full = ElementSet::full(10);
  EXPECT_EQ(shrink(full, 1.0, rng), full);
  EXPECT_TRUE(shrink(full, 0.0, rng).empty());
  EXPECT_THROW(shrink(full, 1.5, rng), std::invalid_argument);
  std::size_t kept = 0;
  const ElementSet one(1, {0});
  for (int t = 0; t < 100000; ++t) kept += shrink(one, 0.5, rng).size();
  EXPECT_NEAR(kept / 100000.0, 0.5, 0.01);
}

TEST(DefaultParams, LadderAndFloors) {
  for (std::size_t n : {2u, 10u, 1000u}) {
    for (double eps : {0.05, 0.1, 0.2}) {
      const OcrsParams p = default_params(n, eps);
      EXPECT_GE(p.k, 2u);
      ASSERT_EQ(p.c.size(), p.k + 1);
      EXPECT_DOUBLE_EQ(p.c.front(), 0.5 + eps / 2);
      EXPECT_DOUBLE_EQ(p.c.back(), 0.5 + eps);
      for (std::size_t j = 0; j + 1 < p.c.size(); ++j) {
        EXPECT_NEAR(p.c[j + 1] - p.c[j], eps / (2.0 * p.k), 1e-12);
        EXPECT_NEAR((p.c[j + 1] - p.c[j]) / 2.0, eps / (4.0 * p.k), 1e-12);
      }
      EXPECT_EQ(p.b, 0.5);
      EXPECT_EQ(p.ell_max, static_cast<std::size_t>(std::ceil(std::log(n) / std::log1p(eps))) + 2);
      EXPECT_GE(p.s, 1u);
    }
  }
  EXPECT_EQ(default_params(1, 0.2).k, 2u);
  EXPECT_EQ(default_params(2, 0.2).k, 24u);
  EXPECT_THROW(default_params(10, 0.25), std::invalid_argument);
  EXPECT_THROW(default_params(10, 0.0), std::invalid_argument);
}

TEST(SampleMultiset, DenseAndSparseAgree) {
  SampleMultiset dense(4), sparse(40);
  dense.add(ElementSet(4, {1}), 3);
  dense.add(ElementSet(4, {1}));
  dense.add(ElementSet(4));
  sparse.add(ElementSet(40, {39}), 2);
  sparse.add(ElementSet(40, {39}));
  EXPECT_EQ(dense.total(), 5u);
  EXPECT_EQ(dense.distinct().size(), 2u);
  EXPECT_EQ(sparse.total(), 3u);
  ASSERT_EQ(sparse.distinct().size(), 1u);
  EXPECT_EQ(sparse.distinct()[0].second, 3u);
  EXPECT_THROW(dense.add(ElementSet(5)), std::invalid_argument);
}
