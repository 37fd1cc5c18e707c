#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

#include "refit/data.hpp"

namespace refit {

enum class ModelKind {
  kBinaryLogistic,       // log(1 + exp(-y w.x)), y = 2*label - 1
  kMultinomialLogistic,  // softmax cross-entropy, theta is K x d row-major
  kSquaredHingeSvm,      // max(0, 1 - y w.x)^2
  kRidge,                // (w.x - y)^2 / 2, the quadratic reference model
  kRegularizerOnly,      // zero data term; only the L2 penalty remains
  kMeanQuadratic,        // |theta - x|^2 / 2, labels ignored
};

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::kBinaryLogistic;
  int dim = 0;
  int num_classes = 2;
  double lambda = 1.0;

  Eigen::Index param_dim() const {
    return kind == ModelKind::kMultinomialLogistic ? num_classes * dim : dim;
  }
  bool is_binary() const { return kind != ModelKind::kMultinomialLogistic; }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Default spec for a pool: binary models for K = 2, multinomial otherwise.
ModelSpec spec_for(const DataPool& pool, ModelKind kind, double lambda);

struct ModelParams {
  Eigen::VectorXd theta;
  ModelSpec spec;
};

ModelParams zero_params(const ModelSpec& spec);

enum class UtilityMeasure { kAvgLoss, kNegAvgLoss, kAccuracy };

std::string_view to_string(UtilityMeasure measure);
UtilityMeasure parse_utility_measure(std::string_view name);

struct UtilitySpec {
  Subset eval_subset;
  UtilityMeasure measure = UtilityMeasure::kNegAvgLoss;
};

// L(theta; D_S) = (1/n_S) sum_i loss(theta; x_i, y_i) + (lambda/2)|theta|^2
// over a fixed set of rows. Binary kinds read real-valued targets so the
// sensitivity harness can perturb labels continuously; from a pool the
// target is 2*label - 1.
class Objective {
 public:
  Objective(ModelSpec spec, const DataPool& pool, const Subset& subset);
  Objective(ModelSpec spec, Eigen::MatrixXd rows, Eigen::VectorXd targets,
            std::vector<int> labels);

  const ModelSpec& spec() const { return spec_; }
  Eigen::Index size() const { return rows_.rows(); }
  const Eigen::MatrixXd& rows() const { return rows_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const std::vector<int>& labels() const { return labels_; }

  double value(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd hvp(const Eigen::VectorXd& theta, const Eigen::VectorXd& v) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const;

  /// Unregularized mean loss and its gradient.
  double data_loss(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd data_gradient(const Eigen::VectorXd& theta) const;

 private:
  void check_theta(const Eigen::VectorXd& theta) const;

  ModelSpec spec_;
  Eigen::MatrixXd rows_;     // n x d
  Eigen::VectorXd targets_;  // binary kinds
  std::vector<int> labels_;  // multinomial kind
};

double point_loss(const ModelParams& params, const DataPoint& point);
double training_loss(const ModelParams& params, const DataPool& pool,
                     const Subset& subset);
Eigen::VectorXd gradient(const ModelParams& params, const DataPool& pool,
                         const Subset& subset);
Eigen::VectorXd hvp(const ModelParams& params, const DataPool& pool,
                    const Subset& subset, const Eigen::VectorXd& v);
double utility(const ModelParams& params, const DataPool& pool,
               const UtilitySpec& uspec);

/// Class probabilities. Binary kinds map the margin w.x through the
/// logistic link (no Platt fitting for the SVM).
Eigen::VectorXd predict_proba(const ModelParams& params, const DataPoint& point);
int predict_label(const ModelParams& params, const DataPoint& point);

}  // namespace refit
