#include "refit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "refit/errors.hpp"

namespace refit {

double param_distance(const ModelParams& a, const ModelParams& b) {
  if (!(a.spec == b.spec) || a.theta.size() != b.theta.size()) {
    throw InvalidArgument("parameter distance between different models");
  }
  return (a.theta - b.theta).norm();
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (const double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty list");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double nrmse(std::span<const double> estimates, std::span<const double> truth) {
  if (estimates.size() != truth.size() || truth.empty()) {
    throw InvalidArgument("nrmse needs equal, non-empty lists");
  }
  const auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) throw InvalidArgument("nrmse undefined: ground truth is constant");
  double ss = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss += (estimates[i] - truth[i]) * (estimates[i] - truth[i]);
  }
  return std::sqrt(ss / static_cast<double>(truth.size())) / range;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw InvalidArgument("spearman needs two equal lists of length >= 2");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double ma = mean(ra);
  const double mb = mean(rb);
  double cov = 0.0;
  double va = 0.0;
  double vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) throw InvalidArgument("spearman undefined: zero rank variance");
  return cov / std::sqrt(va * vb);
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = {{"param_dist", r.param_dist},
       {"nrmse", r.nrmse},
       {"spearman", r.spearman},
       {"per_subset_times", r.per_subset_times}};
}

}  // namespace refit
