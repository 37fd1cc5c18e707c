#include "refit/influence.hpp"

#include <cmath>

namespace refit {

std::string_view to_string(InfluenceSolveMode mode) {
  return mode == InfluenceSolveMode::kDense ? "dense" : "cg";
}

CgResult conjugate_gradient(const Objective& objective, const Eigen::VectorXd& at,
                            const Eigen::VectorXd& b, double tol, int max_iter) {
  const Eigen::Index p = b.size();
  if (max_iter <= 0) max_iter = static_cast<int>(10 * p + 50);
  const double threshold = tol * std::max(1.0, b.norm());
  CgResult out{Eigen::VectorXd::Zero(p), 0, b.norm()};
  Eigen::VectorXd r = b;
  Eigen::VectorXd dir = r;
  double rr = r.squaredNorm();
  double best = out.residual;
  int since_best = 0;
  while (std::sqrt(rr) > threshold) {
    if (out.iterations >= max_iter) {
      throw NumericError("conjugate gradient did not reach the residual target");
    }
    const Eigen::VectorXd hd = objective.hvp(at, dir);
    const double curvature = dir.dot(hd);
    if (!(curvature > 0.0)) throw NumericError("conjugate gradient lost positive curvature");
    const double step = rr / curvature;
    out.x += step * dir;
    r -= step * hd;
    const double rr_next = r.squaredNorm();
    dir = r + (rr_next / rr) * dir;
    rr = rr_next;
    ++out.iterations;
    const double res = std::sqrt(rr);
    if (res < 0.5 * best) {
      best = res;
      since_best = 0;
    } else if (++since_best > 2 * p + 10) {
      throw NumericError("conjugate gradient stagnated");
    }
  }
  out.residual = std::sqrt(rr);
  return out;
}

InfluenceEstimate influence_refit(const SolveResult& base, const DataPool& pool,
                                  const Subset& base_subset,
                                  const Subset& target_subset,
                                  InfluenceSolveMode mode) {
  if (!base.converged) throw InvalidArgument("influence needs a converged base solve");
  if (target_subset.empty()) throw InvalidArgument("influence target subset is empty");
  const ModelSpec& spec = base.params.spec;
  if (!(spec.lambda > 0.0)) throw InvalidArgument("influence needs lambda > 0");
  pool.check(base_subset);

  const Objective target(spec, pool, target_subset);
  const Eigen::VectorXd& theta = base.params.theta;
  const Eigen::VectorXd g = target.gradient(theta);
  Eigen::VectorXd correction;
  if (mode == InfluenceSolveMode::kDense) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(target.hessian(theta));
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw NumericError("influence Hessian is not positive definite");
    }
    correction = ldlt.solve(g);
  } else {
    correction = conjugate_gradient(target, theta, g, 1e-8).x;
  }
  return {{theta - correction, spec}, base_subset, target_subset, mode};
}

}  // namespace refit
