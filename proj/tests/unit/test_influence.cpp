#include <gtest/gtest.h>

#include "helpers.hpp"
#include "refit/errors.hpp"
#include "refit/influence.hpp"

using namespace refit;
using test_util::random_pool;
using test_util::random_vector;

namespace {
SolveConfig tight() {
  SolveConfig c;
  c.tol = 1e-11;
  return c;
}
}  // namespace

TEST(Influence, ExactForRidge) {
  const auto pool = random_pool(40, 4, 2, 31);
  const auto spec = spec_for(pool, ModelKind::kRidge, 0.1);
  const auto base_subset = pool.train_subset();
  const auto base = solve(spec, pool, base_subset, tight());
  for (const Subset removed : {Subset{0}, Subset{1, 5, 9}, Subset::range(0, 20)}) {
    const auto target = base_subset.without(removed);
    const auto est = influence_refit(base, pool, base_subset, target);
    const auto truth = solve(spec, pool, target, tight());
    EXPECT_LT((est.params.theta - truth.params.theta).norm(), 1e-9);
  }
}

TEST(Influence, CgMatchesDense) {
  for (const auto kind : {ModelKind::kBinaryLogistic, ModelKind::kMultinomialLogistic}) {
    const auto pool = random_pool(40, 5, kind == ModelKind::kBinaryLogistic ? 2 : 3, 12);
    const auto spec = spec_for(pool, kind, 0.05);
    const auto base = solve(spec, pool, pool.train_subset(), tight());
    const auto target = pool.train_subset().without(Subset::range(0, 8));
    const auto dense = influence_refit(base, pool, pool.train_subset(), target, InfluenceSolveMode::kDense);
    const auto cg = influence_refit(base, pool, pool.train_subset(), target, InfluenceSolveMode::kCg);
    EXPECT_LT((dense.params.theta - cg.params.theta).norm(), 1e-6);
  }
}

TEST(Influence, ErrorShrinksWithSmallerChanges) {
  const auto pool = random_pool(200, 3, 2, 3);
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 0.05);
  const auto base = solve(spec, pool, pool.train_subset(), tight());
  auto err = [&](std::size_t k) {
    const auto target = pool.train_subset().without(Subset::range(0, k));
    const auto est = influence_refit(base, pool, pool.train_subset(), target);
    return (est.params.theta - solve(spec, pool, target, tight()).params.theta).norm();
  };
  EXPECT_LT(err(2), err(60));
}

TEST(Influence, ConjugateGradientSolvesSpdSystem) {
  const auto pool = random_pool(30, 6, 2, 7);
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 0.2);
  const Objective obj(spec, pool, pool.train_subset());
  Rng rng(1);
  const Eigen::VectorXd at = random_vector(6, rng);
  const Eigen::VectorXd b = random_vector(6, rng);
  const auto res = conjugate_gradient(obj, at, b, 1e-12);
  EXPECT_LT((obj.hessian(at) * res.x - b).norm(), 1e-10);
  EXPECT_LE(res.iterations, 12);
}

TEST(Influence, Preconditions) {
  const auto pool = random_pool(20, 3, 2, 1);
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 0.5);
  auto base = solve(spec, pool, pool.train_subset(), tight());
  EXPECT_THROW(influence_refit(base, pool, pool.train_subset(), Subset{}), InvalidArgument);
  base.converged = false;
  EXPECT_THROW(influence_refit(base, pool, pool.train_subset(), Subset{0}), InvalidArgument);
}
