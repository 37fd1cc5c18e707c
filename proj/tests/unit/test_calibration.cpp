#include <gtest/gtest.h>

#include "helpers.hpp"
#include "refit/calibration.hpp"
#include "refit/errors.hpp"
#include "refit/sampling.hpp"

using namespace refit;
using test_util::random_pool;

namespace {
// Row whose largest entry is `conf`, spread over 4 classes, max at column 0.
Eigen::RowVector4d row_with_conf(double conf) {
  const double rest = (1.0 - conf) / 3.0;
  return Eigen::RowVector4d(conf, rest, rest, rest);
}
}  // namespace

TEST(Ece, HandBinnedExample) {
  Eigen::MatrixXd p(4, 4);
  const double confs[] = {0.3, 0.4, 0.8, 0.9};
  for (int i = 0; i < 4; ++i) p.row(i) = row_with_conf(confs[i]);
  const std::vector<int> labels{0, 1, 0, 0};  // correct, wrong, correct, correct
  const auto r = ece(p, labels, 2);
  EXPECT_NEAR(r.ece, 0.15, 1e-15);
  ASSERT_EQ(r.bin_stats.size(), 2u);
  EXPECT_EQ(r.bin_stats[0].count, 2u);
  EXPECT_NEAR(r.bin_stats[0].confidence, 0.35, 1e-15);
  EXPECT_NEAR(r.bin_stats[1].accuracy, 1.0, 0.0);
  EXPECT_NEAR(r.accuracy, 0.75, 0.0);
}

TEST(Ece, TrivialCases) {
  Eigen::MatrixXd p(2, 2);
  p << 0.9, 0.1, 0.9, 0.1;
  EXPECT_NEAR(ece(p, std::vector<int>{1, 1}, 1).ece, 0.9, 1e-15);
  Eigen::MatrixXd sure(3, 2);
  sure << 1, 0, 0, 1, 1, 0;
  EXPECT_EQ(ece(sure, std::vector<int>{0, 1, 0}).ece, 0.0);
}

TEST(Ece, SingleBinIdentity) {
  Rng rng(4);
  Eigen::MatrixXd p(50, 3);
  std::vector<int> labels(50);
  double conf = 0.0, correct = 0.0;
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector3d v(rng.uniform01(), rng.uniform01(), rng.uniform01());
    v /= v.sum();
    p.row(i) = v.transpose();
    labels[i] = static_cast<int>(rng.uniform_index(3));
    Eigen::Index arg = 0;
    conf += v.maxCoeff(&arg);
    correct += arg == labels[i];
  }
  EXPECT_NEAR(ece(p, labels, 1).ece, std::abs(correct / 50 - conf / 50), 1e-14);
  for (int m : {2, 5, 10, 15}) {
    const auto r = ece(p, labels, m);
    EXPECT_GE(r.ece, 0.0);
    EXPECT_LE(r.ece, 1.0);
    std::size_t total = 0;
    for (const auto& b : r.bin_stats) total += b.count;
    EXPECT_EQ(total, 50u);
  }
}

TEST(Ece, RightClosedBins) {
  // confidence 0.5 with M = 2 belongs to the first bin (0, 0.5]
  Eigen::MatrixXd p(1, 2);
  p << 0.5, 0.5;
  const auto r = ece(p, std::vector<int>{0}, 2);
  EXPECT_EQ(r.bin_stats[0].count, 1u);
  EXPECT_EQ(r.bin_stats[1].count, 0u);
}

TEST(Ece, RejectsInvalidInput) {
  Eigen::MatrixXd p(1, 2);
  p << 0.7, 0.7;
  EXPECT_THROW(ece(p, std::vector<int>{0}), InvalidArgument);
  p << 1.2, -0.2;
  EXPECT_THROW(ece(p, std::vector<int>{0}), InvalidArgument);
  p << 0.5, 0.5;
  EXPECT_THROW(ece(p, std::vector<int>{0}, 0), InvalidArgument);
  EXPECT_THROW(ece(p, std::vector<int>{0, 1}), Error);
}

TEST(Aggregator, MeanAndMerge) {
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 0.2, 0.8, 0.6, 0.4;
  b << 0.4, 0.6, 0.1, 0.9;
  ProbabilityAggregator one(2, 2);
  one.add(a);
  EXPECT_EQ(one.mean(), a);
  one.add(a);
  EXPECT_LT((one.mean() - a).norm(), 1e-15);
  ProbabilityAggregator x(2, 2), y(2, 2);
  x.add(a);
  y.add(b);
  x.merge(y);
  EXPECT_EQ(x.members(), 2u);
  EXPECT_LT((x.mean() - (a + b) / 2).norm(), 1e-15);
  for (Eigen::Index i = 0; i < 2; ++i) EXPECT_NEAR(x.mean().row(i).sum(), 1.0, 1e-15);
  EXPECT_THROW(x.add(Eigen::MatrixXd::Zero(3, 2)), DimensionError);
  EXPECT_THROW(ProbabilityAggregator(2, 2).mean(), Error);
}

TEST(Ensembles, RegularEnsembleAveragesPhiModels) {
  const auto pool = random_pool(5, 2, 2, 3, 6);
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 1.0);
  const auto phi = sample_phi(pool, spec, SolveConfig{}, {1, 2, false});
  const auto eval = pool.reserve_subset();
  const auto agg = regular_ensemble(phi, pool, eval);
  EXPECT_EQ(agg.members(), phi.samples.size());
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(6, 2);
  for (const auto& s : phi.samples) {
    expect += member_probabilities({s.theta, spec}, pool, eval);
  }
  expect /= static_cast<double>(phi.samples.size());
  EXPECT_LT((agg.mean() - expect).norm(), 1e-14);
  EXPECT_EQ(labels_of(pool, eval).size(), 6u);
  Phi empty;
  empty.header.spec = spec;
  EXPECT_THROW(regular_ensemble(empty, pool, eval), InvalidArgument);
}
