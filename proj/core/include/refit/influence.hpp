#pragma once

#include <string_view>

#include "refit/convex.hpp"
#include "refit/solver.hpp"

namespace refit {

enum class InfluenceSolveMode { kDense, kCg };

std::string_view to_string(InfluenceSolveMode mode);

struct InfluenceEstimate {
  ModelParams params;
  Subset base_subset;
  Subset target_subset;
  InfluenceSolveMode solve_mode = InfluenceSolveMode::kDense;
};

// Group influence as a single Newton step on the target objective, taken
// from the converged base optimum:
//   theta~ = theta^ - H^{-1} grad L(theta^; target),  H = hess L(theta^; target)
// The L2 term stays inside H. Exact when the loss is quadratic.
InfluenceEstimate influence_refit(const SolveResult& base, const DataPool& pool,
                                  const Subset& base_subset,
                                  const Subset& target_subset,
                                  InfluenceSolveMode mode = InfluenceSolveMode::kDense);

struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual = 0.0;
};

/// Conjugate gradient on H x = b using only Hessian-vector products.
/// Stops at |r| <= tol * max(1, |b|); throws NumericError on stagnation or
/// loss of positive curvature.
CgResult conjugate_gradient(const Objective& objective, const Eigen::VectorXd& at,
                            const Eigen::VectorXd& b, double tol = 1e-8,
                            int max_iter = 0);

}  // namespace refit
