#pragma once

#include <optional>
#include <string_view>

#include "refit/convex.hpp"
#include "refit/errors.hpp"

namespace refit {

enum class SolveMethod {
  kGd,            // fixed-step gradient descent until |grad| <= tol
  kGdFixedSteps,  // exactly t_steps gradient steps, tolerance ignored
  kNewton,        // damped Newton with Armijo backtracking; needs lambda > 0
};

std::string_view to_string(SolveMethod method);
SolveMethod parse_solve_method(std::string_view name);

struct SolveConfig {
  SolveMethod method = SolveMethod::kNewton;
  double tol = 1e-8;
  int max_iter = 10000;
  std::optional<double> eta;  // gd step; default 1/(lambda + curvature at 0)
  int t_steps = 0;            // gd-fixed-steps iteration count

  void validate() const;
};

struct SolveResult {
  ModelParams params;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time = 0.0;
};

/// Raised when gradient descent keeps increasing the loss; carries the last
/// iterate so callers can inspect where it went wrong.
class NonConvergenceError : public NumericError {
 public:
  NonConvergenceError(const std::string& what, ModelParams last)
      : NumericError(what), last_(std::move(last)) {}
  const ModelParams& last_iterate() const { return last_; }

 private:
  ModelParams last_;
};

// Minimizes the regularized empirical risk starting from theta = 0. The
// result is a deterministic function of its inputs.
SolveResult solve(const Objective& objective, const SolveConfig& cfg);
SolveResult solve(const ModelSpec& spec, const DataPool& pool,
                  const Subset& subset, const SolveConfig& cfg);

/// 1 / (lambda + largest data-Hessian eigenvalue at theta = 0), the latter
/// from power iteration.
double default_step_size(const Objective& objective);

}  // namespace refit
