#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "refit/convex.hpp"
#include "refit/data.hpp"
#include "refit/sampling.hpp"

namespace refit {

enum class Activation { kRelu, kTanh };
enum class Head {
  kParams,   // predicts theta for the subset
  kUtility,  // predicts a scalar utility directly (the DeepUtility baseline)
};
enum class OptimizerKind { kSgd, kAdam };

std::string_view to_string(Activation a);
std::string_view to_string(Head h);
std::string_view to_string(OptimizerKind o);
Activation parse_activation(std::string_view name);
Head parse_head(std::string_view name);
OptimizerKind parse_optimizer(std::string_view name);

struct NetArch {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  Activation activation = Activation::kRelu;
  std::size_t output_dim = 0;
  Head head = Head::kParams;

  void validate() const;
  friend bool operator==(const NetArch&, const NetArch&) = default;
};

/// Two hidden layers of width max(128, d_param) with relu.
NetArch default_arch(const DataPool& pool, const ModelSpec& spec,
                     Head head = Head::kParams);

/// Per-output affine map between network outputs and targets:
/// target = shift + scale * raw.
struct TargetScale {
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;

  Eigen::VectorXd to_target(const Eigen::VectorXd& raw) const;
  Eigen::VectorXd to_raw(const Eigen::VectorXd& target) const;
  static TargetScale identity(Eigen::Index n);
  /// Column mean / std over the rows of `targets`; zero spread maps to 1.
  static TargetScale standardize(const Eigen::MatrixXd& targets);
};

/// Non-zero entries of a subset encoding. Members contribute d + 2 entries
/// (features, label bit, mask bit), everything else is zero.
struct SparseInput {
  std::vector<Eigen::Index> columns;
  std::vector<double> values;
};

SparseInput sparse_encode(const DataPool& pool, const Subset& subset);
SparseInput sparse_from_dense(const Eigen::VectorXd& dense);

// Fully connected network. Parameters are stored in one flat buffer, layer
// by layer: W (out x in, column-major) followed by b (out).
class ParamNet {
 public:
  ParamNet(NetArch arch, TargetScale scale);  // all weights zero
  static ParamNet random_init(NetArch arch, TargetScale scale, std::uint64_t seed);

  const NetArch& arch() const { return arch_; }
  const TargetScale& target_scale() const { return scale_; }
  void set_target_scale(TargetScale scale);

  std::size_t num_layers() const { return arch_.hidden.size() + 1; }
  std::size_t layer_in(std::size_t l) const;
  std::size_t layer_out(std::size_t l) const;
  Eigen::Map<Eigen::MatrixXd> weight(std::size_t l);
  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t l) const;
  Eigen::Map<Eigen::VectorXd> bias(std::size_t l);
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const;

  std::span<double> parameters() {
    slot_cache_.reset();
    return params_;
  }
  std::span<const double> parameters() const { return params_; }

  /// Activations kept for backprop: pre[l] = W_l h_{l-1} + b_l, post[l] = act(pre[l]).
  struct Tape {
    std::vector<Eigen::VectorXd> pre;
    std::vector<Eigen::VectorXd> post;
  };

  Eigen::VectorXd forward_raw(const SparseInput& input) const;
  Eigen::VectorXd forward_raw(const SparseInput& input, Tape& tape) const;
  /// Output mapped through the target scale.
  Eigen::VectorXd forward(const SparseInput& input) const;
  Eigen::VectorXd forward(const SubsetEncoding& enc) const;
  /// Same as forward(sparse_encode(pool, subset)) up to summation order: the
  /// first layer is summed from cached per-slot columns of the pool.
  Eigen::VectorXd forward_subset(const DataPool& pool, const Subset& subset) const;

  /// Adds d(loss)/d(params) into `grad` given d(loss)/d(raw output).
  void backward(const SparseInput& input, const Tape& tape,
                const Eigen::VectorXd& d_raw, std::span<double> grad) const;

  ModelSpec model;        // base model whose parameters the params head predicts
  std::string pool_hash;  // pool the network was trained on

 private:
  std::size_t weight_offset(std::size_t l) const { return offsets_[l]; }
  std::size_t bias_offset(std::size_t l) const {
    return offsets_[l] + layer_in(l) * layer_out(l);
  }

  Eigen::VectorXd forward_hidden(Eigen::VectorXd z, Tape& tape) const;

  struct SlotCache {
    std::string pool_hash;
    Eigen::MatrixXd columns;  // first-layer contribution of each pool slot
  };

  NetArch arch_;
  TargetScale scale_;
  mutable std::shared_ptr<const SlotCache> slot_cache_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct TrainConfig {
  double kkt_weight = 1.0;   // gamma_K
  double util_weight = 1.0;  // gamma_U
  int epochs = 200;
  std::size_t batch_size = 32;
  double step_size = 1e-3;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double validation_fraction = 0.1;
  bool anneal = false;  // cosine decay of the step size to 0 over the run

  void validate() const;
};

struct LossTerms {
  double total = 0.0;
  double direct = 0.0;   // |theta^ - theta~|
  double kkt = 0.0;      // |grad L(theta~; D_S)|, unweighted
  double utility = 0.0;  // |U(D_S; theta~) - U(D_S; theta^)|, unweighted
};

struct LossAndGradient {
  LossTerms terms;
  Eigen::VectorXd gradient;  // w.r.t. the flat parameter buffer
};

// Per-sample training loss for the params head,
//   |theta^ - theta~| + gamma_K |grad L(theta~)| + gamma_U |U(theta~) - U(theta^)|
// with U the mean (unregularized) loss on the sample's own subset. The KKT
// term differentiates through the base model's Hessian-vector product and
// has zero gradient where grad L(theta~) vanishes exactly.
LossAndGradient composite_loss(const ParamNet& net, const DataPool& pool,
                               const TrainingSample& sample, const TrainConfig& cfg);

/// |u^ - u| for the utility head; the sample must carry a utility.
LossAndGradient utility_loss(const ParamNet& net, const DataPool& pool,
                             const TrainingSample& sample);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_param_error = 0.0;  // mean |theta~ - theta^| (params head)
  double val_kkt = 0.0;          // mean |grad L(theta~)| (params head)
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
};

// Mini-batch training with a fixed shuffle schedule derived from cfg.seed;
// sums run in a fixed order so the result is bit-for-bit reproducible.
// Holds out cfg.validation_fraction of the samples and returns the weights
// of the epoch with the lowest validation loss.
ParamNet train(const DataPool& pool, const ModelSpec& spec,
               std::span<const TrainingSample> samples, const NetArch& arch,
               const TrainConfig& cfg, TrainReport* report = nullptr);

/// Same trainer on the utility head: regression on each sample's utility.
ParamNet train_deeputility(const DataPool& pool, std::span<const TrainingSample> samples,
                           const NetArch& arch, const TrainConfig& cfg,
                           TrainReport* report = nullptr);

ModelParams estimate(const ParamNet& net, const DataPool& pool, const Subset& subset);
std::vector<ModelParams> estimate_batch(const ParamNet& net, const DataPool& pool,
                                        std::span<const Subset> subsets);
double estimate_utility(const ParamNet& net, const DataPool& pool, const Subset& subset);

void to_json(nlohmann::json& j, const ParamNet& net);
ParamNet net_from_json(const nlohmann::json& j);
void save_net(const std::string& path, const ParamNet& net);
ParamNet load_net(const std::string& path);

}  // namespace refit
