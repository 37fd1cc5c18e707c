#include "refit/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "refit/errors.hpp"
#include "refit/rng.hpp"

namespace refit {

void to_json(nlohmann::json& j, const EceReport& r) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : r.bin_stats) {
    bins.push_back({{"count", b.count}, {"accuracy", b.accuracy}, {"confidence", b.confidence}});
  }
  j = {{"ece", r.ece}, {"bins", r.bins}, {"accuracy", r.accuracy}, {"bin_stats", bins}};
}

EceReport ece(const Eigen::MatrixXd& probs, std::span<const int> labels, int bins) {
  if (bins < 1) throw InvalidArgument("bin count must be >= 1");
  if (probs.rows() == 0) throw InvalidArgument("no predictions");
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) {
    throw DimensionError("probability rows and labels differ in count");
  }
  EceReport rep;
  rep.bins = bins;
  rep.bin_stats.assign(static_cast<std::size_t>(bins), {});
  std::vector<double> correct(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> conf_sum(static_cast<std::size_t>(bins), 0.0);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    if (!row.allFinite() || row.minCoeff() < -1e-12 || std::abs(row.sum() - 1.0) > 1e-9) {
      throw InvalidArgument("row " + std::to_string(i) + " is not a probability vector");
    }
    Eigen::Index pred = 0;
    const double conf = std::clamp(row.maxCoeff(&pred), 0.0, 1.0);
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= probs.cols()) {
      throw InvalidArgument("label out of range at row " + std::to_string(i));
    }
    auto m = static_cast<int>(std::ceil(conf * bins));
    m = std::clamp(m, 1, bins) - 1;
    auto& b = rep.bin_stats[static_cast<std::size_t>(m)];
    ++b.count;
    conf_sum[static_cast<std::size_t>(m)] += conf;
    if (pred == label) {
      correct[static_cast<std::size_t>(m)] += 1.0;
      ++hits;
    }
  }
  const auto n = static_cast<double>(probs.rows());
  for (std::size_t m = 0; m < rep.bin_stats.size(); ++m) {
    auto& b = rep.bin_stats[m];
    if (b.count == 0) continue;
    const auto c = static_cast<double>(b.count);
    b.accuracy = correct[m] / c;
    b.confidence = conf_sum[m] / c;
    rep.ece += (c / n) * std::abs(b.accuracy - b.confidence);
  }
  rep.accuracy = static_cast<double>(hits) / n;
  return rep;
}

ProbabilityAggregator::ProbabilityAggregator(Eigen::Index rows, Eigen::Index cols)
    : sum_(Eigen::MatrixXd::Zero(rows, cols)), comp_(Eigen::MatrixXd::Zero(rows, cols)) {}

void ProbabilityAggregator::add(const Eigen::MatrixXd& probs) {
  if (probs.rows() != sum_.rows() || probs.cols() != sum_.cols()) {
    throw DimensionError("ensemble member has the wrong shape");
  }
  // Neumaier summation, elementwise.
  for (Eigen::Index c = 0; c < sum_.cols(); ++c) {
    for (Eigen::Index r = 0; r < sum_.rows(); ++r) {
      const double x = probs(r, c);
      const double s = sum_(r, c);
      const double t = s + x;
      comp_(r, c) += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
      sum_(r, c) = t;
    }
  }
  ++members_;
}

void ProbabilityAggregator::merge(const ProbabilityAggregator& other) {
  if (other.sum_.rows() != sum_.rows() || other.sum_.cols() != sum_.cols()) {
    throw DimensionError("cannot merge ensembles of different shapes");
  }
  const std::size_t m = members_ + other.members_;
  add(other.sum_);
  add(other.comp_);
  members_ = m;
}

Eigen::MatrixXd ProbabilityAggregator::mean() const {
  if (members_ == 0) throw InvalidArgument("empty ensemble");
  Eigen::MatrixXd out = (sum_ + comp_) / static_cast<double>(members_);
  // Renormalize rows so rounding never leaves them off the simplex.
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) /= out.row(r).sum();
  return out;
}

Eigen::MatrixXd member_probabilities(const ModelParams& params, const DataPool& pool,
                                     const Subset& eval) {
  pool.check(eval);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(eval.size()), pool.num_classes());
  for (std::size_t k = 0; k < eval.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = predict_proba(params, pool[eval[k]]).transpose();
  }
  return out;
}

std::vector<int> labels_of(const DataPool& pool, const Subset& eval) {
  std::vector<int> out;
  out.reserve(eval.size());
  for (const std::size_t i : eval) out.push_back(pool[i].label);
  return out;
}

ProbabilityAggregator bagging_ensemble(const ParamNet& net, const DataPool& pool,
                                       const Subset& eval, double ratio, std::size_t count,
                                       std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("ensemble needs at least one member");
  std::vector<std::size_t> universe(pool.n_train());
  std::iota(universe.begin(), universe.end(), std::size_t{0});
  const SubsetSource source = bootstrap_source(universe, ratio);
  ProbabilityAggregator agg(static_cast<Eigen::Index>(eval.size()), pool.num_classes());
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng(derive_seed(seed, k));
    const Subset s = source.draw(rng);
    agg.add(member_probabilities(estimate(net, pool, s), pool, eval));
  }
  return agg;
}

ProbabilityAggregator regular_ensemble(const Phi& phi, const DataPool& pool,
                                       const Subset& eval) {
  if (phi.samples.empty()) throw InvalidArgument("phi has no models");
  ProbabilityAggregator agg(static_cast<Eigen::Index>(eval.size()), pool.num_classes());
  for (const auto& s : phi.samples) {
    agg.add(member_probabilities({s.theta, phi.header.spec}, pool, eval));
  }
  return agg;
}

}  // namespace refit
