#include "refit/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "refit/errors.hpp"
#include "refit/rng.hpp"
#include "refit/serialize.hpp"
#include "refit/solver.hpp"

namespace refit {

void to_json(nlohmann::json& j, const TheoryConstants& c) {
  j = {{"alpha", c.alpha}, {"beta", c.beta}, {"B1", c.B1}, {"B2", c.B2},
       {"eta", c.eta},     {"t", c.t},       {"certified", false}};
}

std::string_view to_string(CheckMode mode) {
  return mode == CheckMode::kAssert ? "assert" : "report";
}

CheckMode parse_check_mode(std::string_view name) {
  if (name == "assert") return CheckMode::kAssert;
  if (name == "report") return CheckMode::kReport;
  throw InvalidArgument("unknown check mode '" + std::string(name) + "'");
}

void to_json(nlohmann::json& j, const BoundCheck& c) {
  j = {{"theorem", c.theorem},
       {"k", c.k},
       {"measured", c.measured},
       {"bound", c.bound},
       {"slack", c.slack},
       {"satisfied", c.satisfied},
       {"mode", to_string(c.mode)},
       {"probes", c.probes},
       {"eps", c.eps},
       {"richardson_gap", c.richardson_gap}};
  if (c.theorem == 2) {
    j["t"] = c.t;
    j["eta"] = c.eta;
  }
}

namespace {

void require_supported(const ModelSpec& spec) {
  if (spec.kind == ModelKind::kMultinomialLogistic) {
    throw InvalidArgument("sensitivity checks need a model with a continuous target");
  }
}

struct Data {
  Eigen::MatrixXd rows;
  Eigen::VectorXd targets;
  std::vector<int> labels;
};

Data subset_data(const ModelSpec& spec, const DataPool& pool, const Subset& subset) {
  if (subset.empty()) throw InvalidArgument("sensitivity check on an empty subset");
  const Objective obj(spec, pool, subset);
  return {obj.rows(), obj.targets(), obj.labels()};
}

SolveConfig tight_config(const ModelSpec& spec) {
  SolveConfig cfg;
  cfg.tol = 1e-10;
  cfg.max_iter = spec.lambda > 0.0 ? 500 : 200000;
  cfg.method = spec.lambda > 0.0 ? SolveMethod::kNewton : SolveMethod::kGd;
  return cfg;
}

Eigen::VectorXd tight_solve(const Objective& obj) {
  SolveResult r = solve(obj, tight_config(obj.spec()));
  if (!r.converged) throw NumericError("tight re-solve did not converge");
  return r.params.theta;
}

Eigen::VectorXd point_gradient(const ModelSpec& spec, const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& x, double y) {
  ModelSpec bare = spec;
  bare.lambda = 0.0;
  Eigen::VectorXd target(1);
  target[0] = y;
  return Objective(bare, x.transpose(), target, {0}).data_gradient(theta);
}

Eigen::MatrixXd point_hessian(const ModelSpec& spec, const Eigen::VectorXd& theta,
                              const Eigen::VectorXd& x, double y) {
  ModelSpec bare = spec;
  bare.lambda = 0.0;
  Eigen::VectorXd target(1);
  target[0] = y;
  return Objective(bare, x.transpose(), target, {0}).hessian(theta);
}

std::vector<std::size_t> choose_coordinates(std::size_t total, const ProbeOptions& opt) {
  std::vector<std::size_t> all(total);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (opt.probes == 0 || opt.probes >= total) return all;
  Rng rng(derive_seed(opt.seed, "probes"));
  for (std::size_t i = 0; i < opt.probes; ++i) {
    const std::size_t j = i + rng.uniform_index(total - i);
    std::swap(all[i], all[j]);
  }
  all.resize(opt.probes);
  std::sort(all.begin(), all.end());
  return all;
}

using ThetaMap = std::function<Eigen::VectorXd(const Objective&)>;

// Central differences of theta_k in the chosen data coordinates, at eps and
// eps / 2.
void measure(const ModelSpec& spec, const Data& data, Eigen::Index k,
             const ProbeOptions& opt, const ThetaMap& theta_of, BoundCheck& out) {
  if (!(opt.eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (k < 0 || k >= spec.param_dim()) {
    throw InvalidArgument("parameter index " + std::to_string(k) + " out of range");
  }
  const auto n = static_cast<std::size_t>(data.rows.rows());
  const auto width = static_cast<std::size_t>(spec.dim) + 1;
  out.coordinates = choose_coordinates(n * width, opt);
  out.probes = out.coordinates.size();
  out.eps = opt.eps;
  out.k = k;

  auto coordinate_at = [&](std::size_t j, double delta) {
    Data d = data;
    const auto i = static_cast<Eigen::Index>(j / width);
    const auto c = static_cast<Eigen::Index>(j % width);
    if (c == spec.dim) {
      d.targets[i] += delta;
    } else {
      d.rows(i, c) += delta;
    }
    return theta_of(Objective(spec, std::move(d.rows), std::move(d.targets), d.labels))[k];
  };
  auto derivative = [&](std::size_t j, double h) {
    try {
      return (coordinate_at(j, h) - coordinate_at(j, -h)) / (2.0 * h);
    } catch (const NumericError& e) {
      throw NumericError("re-solve failed for data coordinate " + std::to_string(j) + ": " +
                         e.what());
    }
  };

  out.sensitivity.resize(static_cast<Eigen::Index>(out.probes));
  Eigen::VectorXd half(static_cast<Eigen::Index>(out.probes));
  for (std::size_t p = 0; p < out.probes; ++p) {
    out.sensitivity[static_cast<Eigen::Index>(p)] = derivative(out.coordinates[p], opt.eps);
    half[static_cast<Eigen::Index>(p)] = derivative(out.coordinates[p], 0.5 * opt.eps);
  }
  out.measured = out.sensitivity.norm();
  out.richardson_gap = (out.sensitivity - half).norm();
}

}  // namespace

TheoryConstants estimate_constants(const ModelSpec& spec, const DataPool& pool,
                                   const Subset& subset, std::size_t grid_size,
                                   std::uint64_t seed) {
  require_supported(spec);
  const Data data = subset_data(spec, pool, subset);
  const Objective obj(spec, data.rows, data.targets, data.labels);
  const Eigen::VectorXd theta_star = tight_solve(obj);

  std::vector<std::pair<Eigen::VectorXd, double>> points;
  for (Eigen::Index i = 0; i < data.rows.rows(); ++i) {
    points.emplace_back(data.rows.row(i).transpose(), data.targets[i]);
  }
  Rng rng(derive_seed(seed, "grid"));
  const int d = spec.dim;
  for (std::size_t g = 0; g < grid_size; ++g) {
    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x[j] = rng.normal();
    const double norm = x.norm();
    const double radius = std::pow(rng.uniform01(), 1.0 / d);
    if (norm > 0.0) x *= radius / norm;
    double y = 0.0;
    if (spec.kind == ModelKind::kRidge) {
      y = 2.0 * rng.uniform01() - 1.0;
    } else {
      y = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    }
    points.emplace_back(std::move(x), y);
  }

  TheoryConstants c;
  c.B2 = theta_star.norm();
  c.alpha = std::numeric_limits<double>::infinity();
  constexpr double h = 1e-6;
  const std::array<Eigen::VectorXd, 2> thetas{Eigen::VectorXd::Zero(spec.param_dim()),
                                              theta_star};
  for (const auto& theta : thetas) {
    for (const auto& [x, y] : points) {
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(point_hessian(spec, theta, x, y),
                                                               Eigen::EigenvaluesOnly);
      c.beta = std::max(c.beta, eig.eigenvalues().maxCoeff());
      c.alpha = std::min(c.alpha, eig.eigenvalues().minCoeff());
      for (int j = 0; j <= d; ++j) {
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        double yp = y;
        double ym = y;
        if (j == d) {
          yp += h;
          ym -= h;
        } else {
          xp[j] += h;
          xm[j] -= h;
        }
        const Eigen::VectorXd mixed =
            (point_gradient(spec, theta, xp, yp) - point_gradient(spec, theta, xm, ym)) /
            (2.0 * h);
        c.B1 = std::max(c.B1, mixed.norm());
      }
    }
  }
  // Eigenvalues of a rank-one Hessian come back as tiny negatives.
  c.alpha = std::max(0.0, c.alpha);
  if (c.alpha < 1e-12) c.alpha = 0.0;
  return c;
}

double theorem1_bound(const ModelSpec& spec, const TheoryConstants& consts, std::size_t n) {
  const double denom = std::sqrt(static_cast<double>(n)) * (consts.alpha + spec.lambda);
  if (!(denom > 0.0)) throw InvalidArgument("theorem 1 needs alpha + lambda > 0");
  return consts.B1 * std::sqrt(static_cast<double>(spec.param_dim()) * (spec.dim + 1)) / denom;
}

double theorem2_bound(const ModelSpec& spec, const TheoryConstants& consts, std::size_t n,
                      double eta, int t) {
  const double dp = static_cast<double>(spec.param_dim());
  const double rate = 1.0 - eta * spec.lambda - eta * dp * consts.beta;
  const double factor = 1.0 - std::pow(rate, t);
  return factor * consts.B1 * std::sqrt(static_cast<double>(spec.dim + 1)) /
         (std::sqrt(static_cast<double>(n)) * (spec.lambda + dp * consts.beta));
}

BoundCheck check_theorem1(const ModelSpec& spec, const DataPool& pool, const Subset& subset,
                          const TheoryConstants& consts, Eigen::Index k,
                          const ProbeOptions& probes) {
  require_supported(spec);
  const Data data = subset_data(spec, pool, subset);
  BoundCheck out;
  out.theorem = 1;
  out.mode = CheckMode::kAssert;
  out.bound = theorem1_bound(spec, consts, subset.size());
  measure(spec, data, k, probes, tight_solve, out);
  out.satisfied = out.measured <= out.bound * (1.0 + out.slack);
  return out;
}

BoundCheck check_theorem2(const ModelSpec& spec, const DataPool& pool, const Subset& subset,
                          const TheoryConstants& consts, Eigen::Index k, int t, double eta,
                          const ProbeOptions& probes, CheckMode mode) {
  require_supported(spec);
  if (t < 0) throw InvalidArgument("t must be non-negative");
  const double contraction =
      eta * (spec.lambda + static_cast<double>(spec.param_dim()) * consts.beta);
  if (!(contraction > 0.0 && contraction < 1.0)) {
    throw InvalidArgument("eta must satisfy 0 < eta (lambda + d_param beta) < 1");
  }
  const Data data = subset_data(spec, pool, subset);
  SolveConfig cfg;
  cfg.method = SolveMethod::kGdFixedSteps;
  cfg.eta = eta;
  cfg.t_steps = t;
  BoundCheck out;
  out.theorem = 2;
  out.mode = mode;
  out.t = t;
  out.eta = eta;
  out.slack = 1.0;  // assert mode allows 2x the bound
  out.bound = theorem2_bound(spec, consts, subset.size(), eta, t);
  measure(spec, data, k, probes,
          [&](const Objective& obj) { return solve(obj, cfg).params.theta; }, out);
  out.satisfied = out.measured <= out.bound * (1.0 + out.slack);
  return out;
}

}  // namespace refit
