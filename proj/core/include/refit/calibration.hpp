#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "refit/convex.hpp"
#include "refit/paramnet.hpp"
#include "refit/sampling.hpp"

namespace refit {

struct BinStat {
  std::size_t count = 0;
  double accuracy = 0.0;
  double confidence = 0.0;
};

struct EceReport {
  double ece = 0.0;
  int bins = 10;
  std::vector<BinStat> bin_stats;
  double accuracy = 0.0;  // overall
};

void to_json(nlohmann::json& j, const EceReport& r);

// Expected calibration error with M equal-width bins ((m-1)/M, m/M].
// Confidence is the predicted-class probability; a confidence of exactly 0
// lands in the first bin. Rows must be probability vectors.
EceReport ece(const Eigen::MatrixXd& probs, std::span<const int> labels, int bins = 10);

/// Running mean of probability matrices with compensated summation.
class ProbabilityAggregator {
 public:
  ProbabilityAggregator(Eigen::Index rows, Eigen::Index cols);

  void add(const Eigen::MatrixXd& probs);
  void merge(const ProbabilityAggregator& other);
  std::size_t members() const { return members_; }
  Eigen::MatrixXd mean() const;

 private:
  Eigen::MatrixXd sum_;
  Eigen::MatrixXd comp_;
  std::size_t members_ = 0;
};

/// n_eval x K predicted probabilities of one model on the eval slots.
Eigen::MatrixXd member_probabilities(const ModelParams& params, const DataPool& pool,
                                     const Subset& eval);
std::vector<int> labels_of(const DataPool& pool, const Subset& eval);

// Members from the network: each draws ceil(ratio * n_train) train slots
// with replacement (seed derive_seed(seed, k) for member k), estimates the
// parameters and predicts on `eval`.
ProbabilityAggregator bagging_ensemble(const ParamNet& net, const DataPool& pool,
                                       const Subset& eval, double ratio, std::size_t count,
                                       std::uint64_t seed);

/// Mean over the solver-produced models stored in phi.
ProbabilityAggregator regular_ensemble(const Phi& phi, const DataPool& pool,
                                       const Subset& eval);

}  // namespace refit
