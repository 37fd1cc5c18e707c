#pragma once

#include <chrono>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "refit/convex.hpp"

namespace refit {

/// Euclidean distance between parameter vectors of the same model.
double param_distance(const ModelParams& a, const ModelParams& b);

/// RMSE(estimates, truth) / (max(truth) - min(truth)).
/// The range normalization is this library's convention; other definitions
/// (mean, std) give different magnitudes for the same ordering.
double nrmse(std::span<const double> estimates, std::span<const double> truth);

/// Pearson correlation of fractional (tie-averaged) ranks.
double spearman(std::span<const double> a, std::span<const double> b);

/// 1-based ranks with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> values);
double median(std::vector<double> values);

struct EvalReport {
  double param_dist = 0.0;
  double nrmse = 0.0;
  double spearman = 0.0;
  std::vector<double> per_subset_times;
};

void to_json(nlohmann::json& j, const EvalReport& r);

template <typename Thunk>
auto time_block(const std::string& /*label*/, Thunk&& thunk) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  if constexpr (std::is_void_v<std::invoke_result_t<Thunk>>) {
    std::forward<Thunk>(thunk)();
    return std::chrono::duration<double>(Clock::now() - start).count();
  } else {
    auto result = std::forward<Thunk>(thunk)();
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return std::pair{std::move(result), seconds};
  }
}

}  // namespace refit
