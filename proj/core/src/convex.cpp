#include "refit/convex.hpp"

#include <cmath>

#include "refit/errors.hpp"

namespace refit {

namespace {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double log1pexp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Row-wise softmax of a score matrix.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd p = scores;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double top = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - top).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Eigen::Map<const RowMajorMatrix> as_class_matrix(const Eigen::VectorXd& theta,
                                                 const ModelSpec& spec) {
  return {theta.data(), spec.num_classes, spec.dim};
}

// First and second derivative of a binary point loss w.r.t. the margin w.x.
struct MarginDerivs {
  double first;
  double second;
};

double binary_loss(ModelKind kind, double margin, double y) {
  switch (kind) {
    case ModelKind::kBinaryLogistic:
      return log1pexp(-y * margin);
    case ModelKind::kSquaredHingeSvm: {
      const double gap = std::max(0.0, 1.0 - y * margin);
      return gap * gap;
    }
    case ModelKind::kRidge:
      return 0.5 * (margin - y) * (margin - y);
    default:
      return 0.0;
  }
}

MarginDerivs binary_derivs(ModelKind kind, double margin, double y) {
  switch (kind) {
    case ModelKind::kBinaryLogistic: {
      const double s = sigmoid(y * margin);
      return {-y * (1.0 - s), y * y * s * (1.0 - s)};
    }
    case ModelKind::kSquaredHingeSvm: {
      // C^1 at the kink; the second-derivative jump belongs to the zero side.
      const double z = y * margin;
      if (z < 1.0) return {-2.0 * y * (1.0 - z), 2.0 * y * y};
      return {0.0, 0.0};
    }
    case ModelKind::kRidge:
      return {margin - y, 1.0};
    default:
      return {0.0, 0.0};
  }
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kBinaryLogistic: return "binary-logistic";
    case ModelKind::kMultinomialLogistic: return "multinomial-logistic";
    case ModelKind::kSquaredHingeSvm: return "svm-squared-hinge";
    case ModelKind::kRidge: return "ridge";
    case ModelKind::kRegularizerOnly: return "regularizer-only";
    case ModelKind::kMeanQuadratic: return "mean-quadratic";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "binary-logistic" || name == "logistic") return ModelKind::kBinaryLogistic;
  if (name == "multinomial-logistic" || name == "multinomial") {
    return ModelKind::kMultinomialLogistic;
  }
  if (name == "svm-squared-hinge" || name == "svm") return ModelKind::kSquaredHingeSvm;
  if (name == "ridge") return ModelKind::kRidge;
  if (name == "regularizer-only") return ModelKind::kRegularizerOnly;
  if (name == "mean-quadratic") return ModelKind::kMeanQuadratic;
  throw InvalidArgument("unknown model kind '" + std::string(name) + "'");
}

ModelSpec spec_for(const DataPool& pool, ModelKind kind, double lambda) {
  if (kind == ModelKind::kMultinomialLogistic || pool.num_classes() == 2) {
    return {kind, pool.dim(), pool.num_classes(), lambda};
  }
  throw InvalidArgument("binary model requested on a pool with " +
                        std::to_string(pool.num_classes()) + " classes");
}

ModelParams zero_params(const ModelSpec& spec) {
  return {Eigen::VectorXd::Zero(spec.param_dim()), spec};
}

std::string_view to_string(UtilityMeasure measure) {
  switch (measure) {
    case UtilityMeasure::kAvgLoss: return "avg-loss";
    case UtilityMeasure::kNegAvgLoss: return "neg-avg-loss";
    case UtilityMeasure::kAccuracy: return "accuracy";
  }
  return "unknown";
}

UtilityMeasure parse_utility_measure(std::string_view name) {
  if (name == "avg-loss" || name == "loss") return UtilityMeasure::kAvgLoss;
  if (name == "neg-avg-loss" || name == "neg-loss") return UtilityMeasure::kNegAvgLoss;
  if (name == "accuracy") return UtilityMeasure::kAccuracy;
  throw InvalidArgument("unknown utility measure '" + std::string(name) + "'");
}

Objective::Objective(ModelSpec spec, const DataPool& pool, const Subset& subset)
    : spec_(spec) {
  if (spec_.lambda < 0.0) throw InvalidArgument("lambda must be non-negative");
  if (spec_.dim != pool.dim()) throw DimensionError("model and pool dimensions differ");
  if (spec_.kind == ModelKind::kMultinomialLogistic &&
      spec_.num_classes != pool.num_classes()) {
    throw DimensionError("model and pool class counts differ");
  }
  pool.check(subset);
  const auto n = static_cast<Eigen::Index>(subset.size());
  rows_.resize(n, spec_.dim);
  targets_.resize(n);
  labels_.resize(subset.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    const DataPoint& p = pool[subset[static_cast<std::size_t>(r)]];
    rows_.row(r) = p.features.transpose();
    targets_[r] = 2.0 * p.label - 1.0;
    labels_[static_cast<std::size_t>(r)] = p.label;
  }
}

Objective::Objective(ModelSpec spec, Eigen::MatrixXd rows, Eigen::VectorXd targets,
                     std::vector<int> labels)
    : spec_(spec), rows_(std::move(rows)), targets_(std::move(targets)),
      labels_(std::move(labels)) {
  if (spec_.lambda < 0.0) throw InvalidArgument("lambda must be non-negative");
  if (rows_.cols() != spec_.dim) throw DimensionError("row width differs from model dim");
  if (targets_.size() != rows_.rows() ||
      static_cast<Eigen::Index>(labels_.size()) != rows_.rows()) {
    throw DimensionError("targets/labels do not match row count");
  }
}

void Objective::check_theta(const Eigen::VectorXd& theta) const {
  if (theta.size() != spec_.param_dim()) {
    throw DimensionError("theta has length " + std::to_string(theta.size()) +
                         ", model expects " + std::to_string(spec_.param_dim()));
  }
}

double Objective::data_loss(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  const Eigen::Index n = size();
  if (n == 0 || spec_.kind == ModelKind::kRegularizerOnly) return 0.0;
  if (spec_.kind == ModelKind::kMeanQuadratic) {
    return 0.5 * (rows_.rowwise() - theta.transpose()).rowwise().squaredNorm().mean();
  }
  double total = 0.0;
  if (spec_.kind == ModelKind::kMultinomialLogistic) {
    const Eigen::MatrixXd scores = rows_ * as_class_matrix(theta, spec_).transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double top = scores.row(i).maxCoeff();
      const double lse = top + std::log((scores.row(i).array() - top).exp().sum());
      total += lse - scores(i, labels_[static_cast<std::size_t>(i)]);
    }
  } else {
    const Eigen::VectorXd margins = rows_ * theta;
    for (Eigen::Index i = 0; i < n; ++i) {
      total += binary_loss(spec_.kind, margins[i], targets_[i]);
    }
  }
  return total / static_cast<double>(n);
}

Eigen::VectorXd Objective::data_gradient(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  const Eigen::Index n = size();
  if (n == 0 || spec_.kind == ModelKind::kRegularizerOnly) {
    return Eigen::VectorXd::Zero(theta.size());
  }
  if (spec_.kind == ModelKind::kMeanQuadratic) {
    return theta - rows_.colwise().mean().transpose();
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  if (spec_.kind == ModelKind::kMultinomialLogistic) {
    Eigen::MatrixXd p = softmax_rows(rows_ * as_class_matrix(theta, spec_).transpose());
    for (Eigen::Index i = 0; i < n; ++i) p(i, labels_[static_cast<std::size_t>(i)]) -= 1.0;
    const RowMajorMatrix g = inv_n * p.transpose() * rows_;
    return Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
  }
  const Eigen::VectorXd margins = rows_ * theta;
  Eigen::VectorXd coeff(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    coeff[i] = binary_derivs(spec_.kind, margins[i], targets_[i]).first;
  }
  return inv_n * (rows_.transpose() * coeff);
}

double Objective::value(const Eigen::VectorXd& theta) const {
  return data_loss(theta) + 0.5 * spec_.lambda * theta.squaredNorm();
}

Eigen::VectorXd Objective::gradient(const Eigen::VectorXd& theta) const {
  return data_gradient(theta) + spec_.lambda * theta;
}

Eigen::VectorXd Objective::hvp(const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& v) const {
  check_theta(theta);
  if (v.size() != theta.size()) throw DimensionError("hvp direction has wrong length");
  Eigen::VectorXd out = spec_.lambda * v;
  const Eigen::Index n = size();
  if (n == 0 || spec_.kind == ModelKind::kRegularizerOnly) return out;
  if (spec_.kind == ModelKind::kMeanQuadratic) return out + v;
  const double inv_n = 1.0 / static_cast<double>(n);
  if (spec_.kind == ModelKind::kMultinomialLogistic) {
    const Eigen::MatrixXd p = softmax_rows(rows_ * as_class_matrix(theta, spec_).transpose());
    const Eigen::MatrixXd u = rows_ * as_class_matrix(v, spec_).transpose();
    Eigen::MatrixXd r = p.cwiseProduct(u);
    const Eigen::VectorXd pu = r.rowwise().sum();
    r -= p.cwiseProduct(pu.replicate(1, p.cols()));
    const RowMajorMatrix hv = inv_n * r.transpose() * rows_;
    return out + Eigen::Map<const Eigen::VectorXd>(hv.data(), hv.size());
  }
  const Eigen::VectorXd margins = rows_ * theta;
  Eigen::VectorXd xv = rows_ * v;
  for (Eigen::Index i = 0; i < n; ++i) {
    xv[i] *= binary_derivs(spec_.kind, margins[i], targets_[i]).second;
  }
  return out + inv_n * (rows_.transpose() * xv);
}

Eigen::MatrixXd Objective::hessian(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  const Eigen::Index p = theta.size();
  if (spec_.kind == ModelKind::kMultinomialLogistic) {
    Eigen::MatrixXd h(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
      h.col(j) = hvp(theta, Eigen::VectorXd::Unit(p, j));
    }
    return 0.5 * (h + h.transpose());
  }
  Eigen::MatrixXd h = spec_.lambda * Eigen::MatrixXd::Identity(p, p);
  const Eigen::Index n = size();
  if (n == 0 || spec_.kind == ModelKind::kRegularizerOnly) return h;
  if (spec_.kind == ModelKind::kMeanQuadratic) return h + Eigen::MatrixXd::Identity(p, p);
  const Eigen::VectorXd margins = rows_ * theta;
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w[i] = binary_derivs(spec_.kind, margins[i], targets_[i]).second;
  }
  h.noalias() += (rows_.transpose() * w.asDiagonal() * rows_) / static_cast<double>(n);
  return h;
}

namespace {

Objective single_point(const ModelParams& params, const DataPoint& point) {
  Eigen::MatrixXd row = point.features.transpose();
  Eigen::VectorXd target(1);
  target[0] = 2.0 * point.label - 1.0;
  return Objective(params.spec, std::move(row), std::move(target), {point.label});
}

Objective nonempty_objective(const ModelParams& params, const DataPool& pool,
                             const Subset& subset) {
  if (subset.empty()) throw InvalidArgument("training subset is empty");
  return Objective(params.spec, pool, subset);
}

}  // namespace

double point_loss(const ModelParams& params, const DataPoint& point) {
  return single_point(params, point).data_loss(params.theta);
}

double training_loss(const ModelParams& params, const DataPool& pool,
                     const Subset& subset) {
  return nonempty_objective(params, pool, subset).value(params.theta);
}

Eigen::VectorXd gradient(const ModelParams& params, const DataPool& pool,
                         const Subset& subset) {
  return nonempty_objective(params, pool, subset).gradient(params.theta);
}

Eigen::VectorXd hvp(const ModelParams& params, const DataPool& pool,
                    const Subset& subset, const Eigen::VectorXd& v) {
  return nonempty_objective(params, pool, subset).hvp(params.theta, v);
}

Eigen::VectorXd predict_proba(const ModelParams& params, const DataPoint& point) {
  const ModelSpec& spec = params.spec;
  if (point.features.size() != spec.dim) throw DimensionError("point dimension differs from model");
  if (params.theta.size() != spec.param_dim()) throw DimensionError("theta length differs from spec");
  if (spec.kind == ModelKind::kMultinomialLogistic) {
    const Eigen::VectorXd scores = as_class_matrix(params.theta, spec) * point.features;
    Eigen::VectorXd p = (scores.array() - scores.maxCoeff()).exp();
    return p / p.sum();
  }
  const double margin = params.theta.dot(point.features);
  Eigen::VectorXd p(2);
  p[1] = sigmoid(margin);
  p[0] = sigmoid(-margin);
  return p;
}

int predict_label(const ModelParams& params, const DataPoint& point) {
  Eigen::Index best = 0;
  predict_proba(params, point).maxCoeff(&best);
  return static_cast<int>(best);
}

double utility(const ModelParams& params, const DataPool& pool,
               const UtilitySpec& uspec) {
  if (uspec.eval_subset.empty()) throw InvalidArgument("utility evaluation set is empty");
  pool.check(uspec.eval_subset);
  if (uspec.measure == UtilityMeasure::kAccuracy) {
    std::size_t correct = 0;
    for (const std::size_t i : uspec.eval_subset) {
      if (predict_label(params, pool[i]) == pool[i].label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(uspec.eval_subset.size());
  }
  const double loss = Objective(params.spec, pool, uspec.eval_subset).data_loss(params.theta);
  return uspec.measure == UtilityMeasure::kAvgLoss ? loss : -loss;
}

}  // namespace refit
