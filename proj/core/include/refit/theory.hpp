#pragma once

#include <cstdint>
#include <string_view>

#include <nlohmann/json.hpp>

#include "refit/convex.hpp"

namespace refit {

// Empirical curvature and mixed-partial constants of the point loss. These
// are estimates over a finite set of points, not certified bounds.
struct TheoryConstants {
  double alpha = 0.0;  // strong convexity of the point loss, lambda excluded
  double beta = 0.0;   // smoothness of the point loss
  double B1 = 0.0;     // max |d/dz_j grad_theta loss|
  double B2 = 0.0;     // |theta*|
  double eta = 0.0;
  int t = 0;
};

void to_json(nlohmann::json& j, const TheoryConstants& c);

// alpha/beta from the extreme point-Hessian eigenvalues, B1 from central
// differences of the point gradient in every data coordinate (features and
// target). Points: the subset's own rows plus `grid_size` random points in
// the unit ball; theta in {0, theta*}. Binary, ridge and quadratic kinds.
TheoryConstants estimate_constants(const ModelSpec& spec, const DataPool& pool,
                                   const Subset& subset, std::size_t grid_size,
                                   std::uint64_t seed);

enum class CheckMode { kReport, kAssert };
std::string_view to_string(CheckMode mode);
CheckMode parse_check_mode(std::string_view name);

struct BoundCheck {
  int theorem = 1;
  Eigen::Index k = 0;
  double measured = 0.0;  // |d theta_k / dD| over the probed coordinates
  double bound = 0.0;
  double slack = 0.05;
  bool satisfied = false;
  CheckMode mode = CheckMode::kAssert;
  std::size_t probes = 0;
  double eps = 1e-5;
  /// |s(eps) - s(eps/2)| over the probed coordinates.
  double richardson_gap = 0.0;
  int t = 0;
  double eta = 0.0;
  Eigen::VectorXd sensitivity;  // per probed coordinate, eps estimate
  std::vector<std::size_t> coordinates;
};

void to_json(nlohmann::json& j, const BoundCheck& c);

struct ProbeOptions {
  std::size_t probes = 0;  // 0 or >= n(d+1): every data coordinate
  double eps = 1e-5;
  std::uint64_t seed = 0;
};

// Data coordinate j addresses point j / (d+1); the last slot of each point
// is its target. Sensitivities are central differences of the re-solved
// optimum (Newton, tol 1e-10).
BoundCheck check_theorem1(const ModelSpec& spec, const DataPool& pool, const Subset& subset,
                          const TheoryConstants& consts, Eigen::Index k,
                          const ProbeOptions& probes);

/// Theorem 1 bound B1 sqrt(d_param (d+1)) / (sqrt(n) (alpha + lambda)).
double theorem1_bound(const ModelSpec& spec, const TheoryConstants& consts, std::size_t n);
/// Theorem 2 bound for t GD steps of size eta.
double theorem2_bound(const ModelSpec& spec, const TheoryConstants& consts, std::size_t n,
                      double eta, int t);

// Same measurement on the t-step GD map started at 0. Requires
// 0 < eta (lambda + d_param beta) < 1. In assert mode the check passes when
// measured <= 2 * bound; report mode only records the pair.
BoundCheck check_theorem2(const ModelSpec& spec, const DataPool& pool, const Subset& subset,
                          const TheoryConstants& consts, Eigen::Index k, int t, double eta,
                          const ProbeOptions& probes, CheckMode mode = CheckMode::kReport);

}  // namespace refit
