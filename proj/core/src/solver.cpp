#include "refit/solver.hpp"

#include <chrono>
#include <cmath>

namespace refit {

std::string_view to_string(SolveMethod method) {
  switch (method) {
    case SolveMethod::kGd: return "gd";
    case SolveMethod::kGdFixedSteps: return "gd-fixed-steps";
    case SolveMethod::kNewton: return "newton";
  }
  return "unknown";
}

SolveMethod parse_solve_method(std::string_view name) {
  if (name == "gd") return SolveMethod::kGd;
  if (name == "gd-fixed-steps") return SolveMethod::kGdFixedSteps;
  if (name == "newton") return SolveMethod::kNewton;
  throw InvalidArgument("unknown solver method '" + std::string(name) + "'");
}

void SolveConfig::validate() const {
  if (!(tol > 0.0)) throw InvalidArgument("solver tol must be positive");
  if (max_iter < 1) throw InvalidArgument("solver max_iter must be >= 1");
  if (eta && !(*eta > 0.0)) throw InvalidArgument("solver eta must be positive");
  if (t_steps < 0) throw InvalidArgument("t_steps must be non-negative");
}

double default_step_size(const Objective& objective) {
  const ModelSpec& spec = objective.spec();
  // Largest second derivative of the point loss in the margin. For the
  // binary kinds it is attained at theta = 0, so curvature * gram_max is the
  // Hessian's top eigenvalue there; for softmax it bounds it globally.
  double curvature = 0.0;
  switch (spec.kind) {
    case ModelKind::kBinaryLogistic: curvature = 0.25; break;
    case ModelKind::kSquaredHingeSvm: curvature = 2.0; break;
    case ModelKind::kRidge: curvature = 1.0; break;
    case ModelKind::kMultinomialLogistic: curvature = 0.5; break;
    case ModelKind::kRegularizerOnly: curvature = 0.0; break;
    case ModelKind::kMeanQuadratic: return 1.0 / (spec.lambda + 1.0);
  }
  double gram_max = 0.0;
  const Eigen::MatrixXd& x = objective.rows();
  if (curvature > 0.0 && x.rows() > 0) {
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    Eigen::VectorXd v = Eigen::VectorXd::Constant(x.cols(), 1.0 / std::sqrt(static_cast<double>(x.cols())));
    // Power iteration on X^T X / n.
    for (int it = 0; it < 200; ++it) {
      const Eigen::VectorXd gv = inv_n * (x.transpose() * (x * v));
      const double norm = gv.norm();
      if (norm == 0.0) break;
      const double next = v.dot(gv);
      v = gv / norm;
      const bool settled = it > 0 && std::abs(next - gram_max) <= 1e-12 * next;
      gram_max = next;
      if (settled) break;
    }
  }
  const double upper = spec.lambda + curvature * std::max(gram_max, 0.0);
  return upper > 0.0 ? 1.0 / upper : 1.0;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

SolveResult run_gd(const Objective& obj, const SolveConfig& cfg, bool fixed_steps) {
  const double eta = cfg.eta ? *cfg.eta : default_step_size(obj);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(obj.spec().param_dim());
  Eigen::VectorXd grad = obj.gradient(theta);
  double loss = obj.value(theta);
  int increases = 0;
  int it = 0;
  if (fixed_steps) {
    for (; it < cfg.t_steps; ++it) {
      theta -= eta * grad;
      grad = obj.gradient(theta);
    }
    const double gn = grad.norm();
    return {{theta, obj.spec()}, gn, it, gn <= cfg.tol, 0.0};
  }
  while (grad.norm() > cfg.tol && it < cfg.max_iter) {
    theta -= eta * grad;
    ++it;
    grad = obj.gradient(theta);
    const double next = obj.value(theta);
    if (!std::isfinite(next) || !grad.allFinite()) {
      throw NonConvergenceError("gradient descent produced non-finite values",
                                {theta, obj.spec()});
    }
    increases = next > loss ? increases + 1 : 0;
    if (increases >= 10) {
      throw NonConvergenceError(
          "gradient descent diverged: loss increased for 10 consecutive steps",
          {theta, obj.spec()});
    }
    loss = next;
  }
  const double gn = grad.norm();
  return {{theta, obj.spec()}, gn, it, gn <= cfg.tol, 0.0};
}

SolveResult run_newton(const Objective& obj, const SolveConfig& cfg) {
  if (!(obj.spec().lambda > 0.0)) {
    throw InvalidArgument("newton solver requires lambda > 0");
  }
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(obj.spec().param_dim());
  Eigen::VectorXd grad = obj.gradient(theta);
  double loss = obj.value(theta);
  int it = 0;
  while (grad.norm() > cfg.tol && it < cfg.max_iter) {
    const Eigen::LLT<Eigen::MatrixXd> llt(obj.hessian(theta));
    if (llt.info() != Eigen::Success) {
      throw NumericError("newton system is not positive definite");
    }
    const Eigen::VectorXd step = llt.solve(grad);
    const double slope = grad.dot(step);
    double t = 1.0;
    Eigen::VectorXd candidate = theta - step;
    double next = obj.value(candidate);
    // Once the predicted decrease is below the rounding of the loss, the
    // line search can no longer tell steps apart; take the full step.
    const bool below_rounding = slope <= 1e-13 * (1.0 + std::abs(loss));
    // Armijo backtracking; full steps are accepted near the optimum.
    while (!below_rounding && next > loss - 1e-4 * t * slope && t > 1e-10) {
      t *= 0.5;
      candidate = theta - t * step;
      next = obj.value(candidate);
    }
    if (t <= 1e-10 || below_rounding) {
      // Progress is below rounding; the last full step is the best we have.
      candidate = theta - step;
      next = obj.value(candidate);
      if (obj.gradient(candidate).norm() >= grad.norm()) break;
    }
    theta = std::move(candidate);
    loss = next;
    grad = obj.gradient(theta);
    ++it;
    if (!grad.allFinite()) throw NumericError("newton iterate became non-finite");
  }
  const double gn = grad.norm();
  return {{theta, obj.spec()}, gn, it, gn <= cfg.tol, 0.0};
}

}  // namespace

SolveResult solve(const Objective& objective, const SolveConfig& cfg) {
  cfg.validate();
  if (objective.size() == 0) throw InvalidArgument("cannot solve on an empty subset");
  const auto start = Clock::now();
  SolveResult result;
  switch (cfg.method) {
    case SolveMethod::kGd: result = run_gd(objective, cfg, false); break;
    case SolveMethod::kGdFixedSteps: result = run_gd(objective, cfg, true); break;
    case SolveMethod::kNewton: result = run_newton(objective, cfg); break;
  }
  result.wall_time = seconds_since(start);
  return result;
}

SolveResult solve(const ModelSpec& spec, const DataPool& pool, const Subset& subset,
                  const SolveConfig& cfg) {
  if (subset.empty()) throw InvalidArgument("cannot solve on an empty subset");
  return solve(Objective(spec, pool, subset), cfg);
}

}  // namespace refit
