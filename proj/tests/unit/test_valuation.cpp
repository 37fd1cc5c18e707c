#include <gtest/gtest.h>

#include <bit>

#include "helpers.hpp"
#include "refit/errors.hpp"
#include "refit/valuation.hpp"

using namespace refit;
using test_util::random_pool;

TEST(ShapleyExact, AdditiveGame) {
  const std::vector<double> c{0.5, -1.0, 2.0, 0.25, 3.0};
  const auto sv = shapley_exact_game(5, [&](std::uint64_t mask) {
    double u = 0.0;
    for (int i = 0; i < 5; ++i) if (mask >> i & 1) u += c[i];
    return u;
  });
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(sv[i], c[i], 1e-14);
}

TEST(ShapleyExact, GloveGame) {
  // player 0 holds a left glove, players 1 and 2 right gloves; a pair is worth 1.
  // Marginals over the 6 orders: player 0 contributes in 4, each right glove in 1.
  const auto sv = shapley_exact_game(3, [](std::uint64_t m) {
    return (m & 1) && (m & 6) ? 1.0 : 0.0;
  });
  EXPECT_NEAR(sv[0], 4.0 / 6.0, 1e-15);
  EXPECT_NEAR(sv[1], 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(sv[2], 1.0 / 6.0, 1e-15);
}

TEST(ShapleyExact, EfficiencyOnRandomGame) {
  Rng rng(3);
  std::vector<double> table(1 << 6);
  for (auto& v : table) v = rng.normal();
  const auto sv = shapley_exact_game(6, [&](std::uint64_t m) { return table[m]; });
  EXPECT_NEAR(sv.sum(), table[63] - table[0], 1e-12);
}

namespace {
UtilitySpec eval_on_reserve(const DataPool& pool) {
  return {pool.reserve_subset(), UtilityMeasure::kNegAvgLoss};
}
}  // namespace

TEST(Shapley, OnePointPool) {
  const auto pool = random_pool(1, 2, 2, 4, 5);
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 1.0);
  const auto backend = UtilityBackend::solver(spec, SolveConfig{});
  const auto uspec = eval_on_reserve(pool);
  const double full = utility(solve(spec, pool, Subset{0}, SolveConfig{}).params, pool, uspec);
  const double empty = utility(zero_params(spec), pool, uspec);
  EXPECT_NEAR(shapley_exact(pool, uspec, backend)[0], full - empty, 1e-14);
  const auto est = shapley_permutation(pool, uspec, backend, 3, 1);
  EXPECT_NEAR(est.values[0], full - empty, 1e-14);
  EXPECT_NEAR(est.empty_utility, empty, 1e-15);
}

TEST(Shapley, PermutationEfficiencyAndDeterminism) {
  const auto pool = random_pool(7, 3, 2, 8, 6);
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 0.5);
  const auto backend = UtilityBackend::solver(spec, SolveConfig{});
  const auto uspec = eval_on_reserve(pool);
  const auto a = shapley_permutation(pool, uspec, backend, 20, 5);
  EXPECT_NEAR(a.values.sum(), a.full_utility - a.empty_utility, 1e-10);
  EXPECT_LE(a.max_efficiency_residual, 1e-10);
  EXPECT_EQ(a.permutations, 20u);
  const auto b = shapley_permutation(pool, uspec, backend, 20, 5);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_THROW(shapley_permutation(pool, uspec, backend, 0, 5), InvalidArgument);
}

TEST(Shapley, DuplicatePointsShareExactValue) {
  auto base = random_pool(5, 2, 2, 2, 4);
  std::vector<DataPoint> pts = base.points();
  pts[3] = pts[1];
  const DataPool pool(pts, 4, 2);
  const auto spec = spec_for(pool, ModelKind::kRidge, 0.5);
  const auto sv = shapley_exact(pool, eval_on_reserve(pool), UtilityBackend::solver(spec, SolveConfig{}));
  EXPECT_NEAR(sv[1], sv[3], 1e-9);
}

TEST(Shapley, PermutationEstimateWithinMonteCarloBand) {
  const auto pool = random_pool(6, 2, 2, 21, 6);
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 1.0);
  const auto backend = UtilityBackend::solver(spec, SolveConfig{});
  const auto uspec = eval_on_reserve(pool);
  const auto exact = shapley_exact(pool, uspec, backend);
  const auto est = shapley_permutation(pool, uspec, backend, 2000, 3);
  for (Eigen::Index i = 0; i < exact.size(); ++i) {
    EXPECT_LE(std::abs(est.values[i] - exact[i]), 4 * est.std_error[i] + 1e-12) << i;
  }
}

TEST(Shapley, CacheDoesNotChangeValues) {
  const auto pool = random_pool(5, 2, 2, 13, 4);
  const auto spec = spec_for(pool, ModelKind::kSquaredHingeSvm, 1.0);
  auto cached = UtilityBackend::solver(spec, SolveConfig{});
  auto plain = UtilityBackend::solver(spec, SolveConfig{});
  plain.set_cache(false);
  const auto uspec = eval_on_reserve(pool);
  EXPECT_EQ(shapley_permutation(pool, uspec, cached, 10, 2).values,
            shapley_permutation(pool, uspec, plain, 10, 2).values);
}

TEST(Shapley, ExactRejectsLargePools) {
  const auto pool = random_pool(13, 2, 2, 1, 2);
  const auto spec = spec_for(pool, ModelKind::kRidge, 1.0);
  EXPECT_THROW(shapley_exact(pool, eval_on_reserve(pool), UtilityBackend::solver(spec, SolveConfig{})),
               InvalidArgument);
}

TEST(CompareSv, Examples) {
  const Eigen::Vector4d r(0.1, 0.4, -0.2, 0.3);
  const auto same = compare_sv(r, r);
  EXPECT_EQ(same.nrmse, 0.0);
  EXPECT_DOUBLE_EQ(same.spearman, 1.0);
  EXPECT_DOUBLE_EQ(compare_sv(-r, r).spearman, -1.0);
  EXPECT_THROW(compare_sv(Eigen::Vector3d(1, 2, 3), r), Error);
  for (const auto b : {BackendKind::kSolver, BackendKind::kParamNet, BackendKind::kDeepUtility}) {
    EXPECT_EQ(parse_backend(to_string(b)), b);
  }
}
