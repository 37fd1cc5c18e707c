#include "refit/paramnet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>

#include "refit/errors.hpp"
#include "refit/rng.hpp"
#include "refit/serialize.hpp"

namespace refit {

std::string_view to_string(Activation a) { return a == Activation::kRelu ? "relu" : "tanh"; }
std::string_view to_string(Head h) { return h == Head::kParams ? "params" : "utility-scalar"; }
std::string_view to_string(OptimizerKind o) {
  return o == OptimizerKind::kAdam ? "adaptive-moment" : "sgd";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

Head parse_head(std::string_view name) {
  if (name == "params") return Head::kParams;
  if (name == "utility-scalar" || name == "utility") return Head::kUtility;
  throw InvalidArgument("unknown head '" + std::string(name) + "'");
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adaptive-moment" || name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw InvalidArgument("unknown optimizer '" + std::string(name) + "'");
}

void NetArch::validate() const {
  if (input_dim == 0 || output_dim == 0) throw InvalidArgument("network dims must be positive");
  for (const auto w : hidden) {
    if (w == 0) throw InvalidArgument("hidden widths must be positive");
  }
  if (head == Head::kUtility && output_dim != 1) {
    throw InvalidArgument("utility head has exactly one output");
  }
}

NetArch default_arch(const DataPool& pool, const ModelSpec& spec, Head head) {
  const auto width = std::max<std::size_t>(128, static_cast<std::size_t>(spec.param_dim()));
  return {encoding_size(pool), {width, width}, Activation::kRelu,
          head == Head::kParams ? static_cast<std::size_t>(spec.param_dim()) : 1, head};
}

Eigen::VectorXd TargetScale::to_target(const Eigen::VectorXd& raw) const {
  return shift + scale.cwiseProduct(raw);
}

Eigen::VectorXd TargetScale::to_raw(const Eigen::VectorXd& target) const {
  return (target - shift).cwiseQuotient(scale);
}

TargetScale TargetScale::identity(Eigen::Index n) {
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)};
}

TargetScale TargetScale::standardize(const Eigen::MatrixXd& targets) {
  const Eigen::Index m = targets.cols();
  TargetScale s{Eigen::VectorXd::Zero(m), Eigen::VectorXd::Ones(m)};
  const auto n = static_cast<double>(targets.rows());
  if (targets.rows() == 0) return s;
  s.shift = targets.colwise().mean().transpose();
  for (Eigen::Index j = 0; j < m; ++j) {
    const double var = (targets.col(j).array() - s.shift[j]).square().sum() / n;
    const double sd = std::sqrt(var);
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

SparseInput sparse_encode(const DataPool& pool, const Subset& subset) {
  pool.check(subset);
  const auto width = static_cast<Eigen::Index>(slot_width(pool));
  const int d = pool.dim();
  SparseInput in;
  in.columns.reserve(subset.size() * static_cast<std::size_t>(d + 2));
  in.values.reserve(in.columns.capacity());
  for (const std::size_t i : subset) {
    const Eigen::Index base = static_cast<Eigen::Index>(i) * width;
    const DataPoint& p = pool[i];
    for (int j = 0; j < d; ++j) {
      if (p.features[j] != 0.0) {
        in.columns.push_back(base + j);
        in.values.push_back(p.features[j]);
      }
    }
    in.columns.push_back(base + d + p.label);
    in.values.push_back(1.0);
    in.columns.push_back(base + d + pool.num_classes());
    in.values.push_back(1.0);
  }
  return in;
}

SparseInput sparse_from_dense(const Eigen::VectorXd& dense) {
  SparseInput in;
  for (Eigen::Index i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      in.columns.push_back(i);
      in.values.push_back(dense[i]);
    }
  }
  return in;
}

ParamNet::ParamNet(NetArch arch, TargetScale scale)
    : arch_(std::move(arch)), scale_(std::move(scale)) {
  arch_.validate();
  if (scale_.shift.size() != static_cast<Eigen::Index>(arch_.output_dim) ||
      scale_.scale.size() != scale_.shift.size()) {
    throw DimensionError("target scale does not match the output width");
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    offsets_.push_back(total);
    total += layer_out(l) * (layer_in(l) + 1);
  }
  params_.assign(total, 0.0);
}

ParamNet ParamNet::random_init(NetArch arch, TargetScale scale, std::uint64_t seed) {
  ParamNet net(std::move(arch), std::move(scale));
  Rng rng(seed);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const bool last = l + 1 == net.num_layers();
    const double fan_in = static_cast<double>(net.layer_in(l));
    // He init for relu layers, Glorot-style otherwise and on the output.
    const double gain = (!last && net.arch_.activation == Activation::kRelu) ? 2.0 : 1.0;
    const double sd = std::sqrt(gain / fan_in);
    auto w = net.weight(l);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = sd * rng.normal();
    }
  }
  return net;
}

void ParamNet::set_target_scale(TargetScale scale) {
  if (scale.shift.size() != static_cast<Eigen::Index>(arch_.output_dim)) {
    throw DimensionError("target scale does not match the output width");
  }
  scale_ = std::move(scale);
}

std::size_t ParamNet::layer_in(std::size_t l) const {
  return l == 0 ? arch_.input_dim : arch_.hidden[l - 1];
}

std::size_t ParamNet::layer_out(std::size_t l) const {
  return l == arch_.hidden.size() ? arch_.output_dim : arch_.hidden[l];
}

Eigen::Map<Eigen::MatrixXd> ParamNet::weight(std::size_t l) {
  slot_cache_.reset();
  return {params_.data() + weight_offset(l), static_cast<Eigen::Index>(layer_out(l)),
          static_cast<Eigen::Index>(layer_in(l))};
}

Eigen::Map<const Eigen::MatrixXd> ParamNet::weight(std::size_t l) const {
  return {params_.data() + weight_offset(l), static_cast<Eigen::Index>(layer_out(l)),
          static_cast<Eigen::Index>(layer_in(l))};
}

Eigen::Map<Eigen::VectorXd> ParamNet::bias(std::size_t l) {
  slot_cache_.reset();
  return {params_.data() + bias_offset(l), static_cast<Eigen::Index>(layer_out(l))};
}

Eigen::Map<const Eigen::VectorXd> ParamNet::bias(std::size_t l) const {
  return {params_.data() + bias_offset(l), static_cast<Eigen::Index>(layer_out(l))};
}

namespace {

void activate(Activation a, const Eigen::VectorXd& pre, Eigen::VectorXd& post) {
  if (a == Activation::kRelu) {
    post = pre.cwiseMax(0.0);
  } else {
    post = pre.array().tanh().matrix();
  }
}

// d act / d pre, evaluated from the stored tape.
void activation_slope(Activation a, const Eigen::VectorXd& pre,
                      const Eigen::VectorXd& post, Eigen::VectorXd& delta) {
  if (a == Activation::kRelu) {
    for (Eigen::Index i = 0; i < delta.size(); ++i) {
      if (!(pre[i] > 0.0)) delta[i] = 0.0;
    }
  } else {
    delta.array() *= 1.0 - post.array().square();
  }
}

}  // namespace

Eigen::VectorXd ParamNet::forward_raw(const SparseInput& input, Tape& tape) const {
  for (const auto c : input.columns) {
    if (c < 0 || static_cast<std::size_t>(c) >= arch_.input_dim) {
      throw DimensionError("network input column out of range");
    }
  }
  const auto w0 = weight(0);
  Eigen::VectorXd z = bias(0);
  for (std::size_t k = 0; k < input.columns.size(); ++k) {
    z.noalias() += input.values[k] * w0.col(input.columns[k]);
  }
  return forward_hidden(std::move(z), tape);
}

Eigen::VectorXd ParamNet::forward_hidden(Eigen::VectorXd z, Tape& tape) const {
  const std::size_t layers = num_layers();
  tape.pre.resize(layers);
  tape.post.resize(layers);
  for (std::size_t l = 0;; ++l) {
    tape.pre[l] = std::move(z);
    if (l + 1 == layers) {
      tape.post[l] = tape.pre[l];
      break;
    }
    activate(arch_.activation, tape.pre[l], tape.post[l]);
    z = bias(l + 1);
    z.noalias() += weight(l + 1) * tape.post[l];
  }
  return tape.post.back();
}

Eigen::VectorXd ParamNet::forward_raw(const SparseInput& input) const {
  Tape tape;
  return forward_raw(input, tape);
}

Eigen::VectorXd ParamNet::forward(const SparseInput& input) const {
  return scale_.to_target(forward_raw(input));
}

Eigen::VectorXd ParamNet::forward(const SubsetEncoding& enc) const {
  if (static_cast<std::size_t>(enc.size()) != arch_.input_dim) {
    throw DimensionError("encoding length " + std::to_string(enc.size()) +
                         " does not match network input " +
                         std::to_string(arch_.input_dim));
  }
  return forward(sparse_from_dense(enc));
}

Eigen::VectorXd ParamNet::forward_subset(const DataPool& pool, const Subset& subset) const {
  if (encoding_size(pool) != arch_.input_dim) {
    throw DimensionError("network input width does not match the pool encoding");
  }
  pool.check(subset);
  std::shared_ptr<const SlotCache> cache = slot_cache_;
  if (!cache || cache->pool_hash != pool.hash()) {
    auto fresh = std::make_shared<SlotCache>();
    fresh->pool_hash = pool.hash();
    fresh->columns.resize(static_cast<Eigen::Index>(layer_out(0)),
                          static_cast<Eigen::Index>(pool.size()));
    const auto w0 = weight(0);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const SparseInput slot = sparse_encode(pool, Subset{i});
      Eigen::VectorXd col = Eigen::VectorXd::Zero(w0.rows());
      for (std::size_t k = 0; k < slot.columns.size(); ++k) {
        col.noalias() += slot.values[k] * w0.col(slot.columns[k]);
      }
      fresh->columns.col(static_cast<Eigen::Index>(i)) = col;
    }
    cache = fresh;
    slot_cache_ = cache;
  }
  Eigen::VectorXd z = bias(0);
  for (const std::size_t i : subset) z += cache->columns.col(static_cast<Eigen::Index>(i));
  Tape tape;
  return scale_.to_target(forward_hidden(std::move(z), tape));
}

void ParamNet::backward(const SparseInput& input, const Tape& tape,
                        const Eigen::VectorXd& d_raw, std::span<double> grad) const {
  if (grad.size() != params_.size()) throw DimensionError("gradient buffer size mismatch");
  Eigen::VectorXd delta = d_raw;
  for (std::size_t l = num_layers(); l-- > 0;) {
    const auto rows = static_cast<Eigen::Index>(layer_out(l));
    const auto cols = static_cast<Eigen::Index>(layer_in(l));
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + weight_offset(l), rows, cols);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + bias_offset(l), rows);
    gb += delta;
    if (l == 0) {
      for (std::size_t k = 0; k < input.columns.size(); ++k) {
        gw.col(input.columns[k]) += input.values[k] * delta;
      }
      break;
    }
    gw.noalias() += delta * tape.post[l - 1].transpose();
    Eigen::VectorXd next = weight(l).transpose() * delta;
    activation_slope(arch_.activation, tape.pre[l - 1], tape.post[l - 1], next);
    delta = std::move(next);
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (!(step_size > 0.0)) throw InvalidArgument("step size must be positive");
  if (kkt_weight < 0.0 || util_weight < 0.0) {
    throw InvalidArgument("regularizer weights must be non-negative");
  }
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw InvalidArgument("validation fraction must be in [0, 1)");
  }
}

namespace {

// Everything about one training sample that does not depend on the weights.
struct Prepared {
  SparseInput input;
  const TrainingSample* sample = nullptr;
  std::optional<Objective> objective;  // params head only
  double reference = 0.0;  // U(D_S; theta^) for params head, target utility otherwise
};

Prepared prepare(const DataPool& pool, const ModelSpec& spec, const TrainingSample& s,
                 Head head) {
  Prepared p;
  p.input = sparse_encode(pool, s.subset);
  p.sample = &s;
  if (head == Head::kParams) {
    if (s.theta.size() != spec.param_dim()) {
      throw DimensionError("training sample theta does not match the model");
    }
    p.objective.emplace(spec, pool, s.subset);
    p.reference = p.objective->data_loss(s.theta);
  } else {
    if (!s.utility) throw InvalidArgument("utility head needs samples with a utility");
    p.reference = *s.utility;
  }
  return p;
}

// Loss for one prepared sample; when `grad` is non-empty the parameter
// gradient is added into it.
LossTerms params_loss(const ParamNet& net, const Prepared& p, const TrainConfig& cfg,
                      std::span<double> grad, ParamNet::Tape& tape) {
  const Eigen::VectorXd raw = net.forward_raw(p.input, tape);
  const Eigen::VectorXd theta = net.target_scale().to_target(raw);
  const Objective& obj = *p.objective;

  LossTerms t;
  const Eigen::VectorXd diff = theta - p.sample->theta;
  t.direct = diff.norm();
  const Eigen::VectorXd g = obj.gradient(theta);
  t.kkt = g.norm();
  const double gap = obj.data_loss(theta) - p.reference;
  t.utility = std::abs(gap);
  t.total = t.direct + cfg.kkt_weight * t.kkt + cfg.util_weight * t.utility;
  if (grad.empty()) return t;

  Eigen::VectorXd d_theta = Eigen::VectorXd::Zero(theta.size());
  if (t.direct > 0.0) d_theta += diff / t.direct;
  if (cfg.kkt_weight > 0.0 && t.kkt > 0.0) {
    d_theta += (cfg.kkt_weight / t.kkt) * obj.hvp(theta, g);
  }
  if (cfg.util_weight > 0.0 && gap != 0.0) {
    d_theta += (gap > 0.0 ? cfg.util_weight : -cfg.util_weight) * obj.data_gradient(theta);
  }
  net.backward(p.input, tape, net.target_scale().scale.cwiseProduct(d_theta), grad);
  return t;
}

LossTerms scalar_loss(const ParamNet& net, const Prepared& p, std::span<double> grad,
                      ParamNet::Tape& tape) {
  const Eigen::VectorXd raw = net.forward_raw(p.input, tape);
  const double predicted = net.target_scale().to_target(raw)[0];
  const double gap = predicted - p.reference;
  LossTerms t;
  t.direct = std::abs(gap);
  t.total = t.direct;
  if (grad.empty() || gap == 0.0) return t;
  Eigen::VectorXd d_raw(1);
  d_raw[0] = (gap > 0.0 ? 1.0 : -1.0) * net.target_scale().scale[0];
  net.backward(p.input, tape, d_raw, grad);
  return t;
}

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, std::size_t n)
      : kind_(cfg.optimizer), lr_(cfg.step_size), m_(n, 0.0), v_(n, 0.0) {}

  void set_rate(double lr) { lr_ = lr; }

  void step(std::span<double> params, std::span<const double> grad) {
    if (kind_ == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
      return;
    }
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  OptimizerKind kind_;
  double lr_;
  std::vector<double> m_;
  std::vector<double> v_;
  int t_ = 0;
};

ParamNet train_impl(const DataPool& pool, const ModelSpec& spec,
                    std::span<const TrainingSample> samples, const NetArch& arch,
                    const TrainConfig& cfg, TrainReport* report) {
  cfg.validate();
  arch.validate();
  if (arch.input_dim != encoding_size(pool)) {
    throw DimensionError("network input width does not match the pool encoding");
  }
  if (samples.size() < cfg.batch_size) {
    throw InvalidArgument("training set is smaller than one batch");
  }
  if (arch.head == Head::kParams &&
      arch.output_dim != static_cast<std::size_t>(spec.param_dim())) {
    throw DimensionError("params head width does not match the model");
  }

  std::vector<Prepared> prepared;
  prepared.reserve(samples.size());
  for (const auto& s : samples) prepared.push_back(prepare(pool, spec, s, arch.head));

  // Hold-out split.
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(derive_seed(cfg.seed, "split"));
  split_rng.shuffle(std::span<std::size_t>(order));
  auto n_val = static_cast<std::size_t>(cfg.validation_fraction *
                                        static_cast<double>(samples.size()));
  if (n_val >= samples.size()) n_val = samples.size() - 1;
  std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  if (train_idx.size() < cfg.batch_size) {
    throw InvalidArgument("training split is smaller than one batch");
  }
  if (val_idx.empty()) val_idx = train_idx;

  Eigen::MatrixXd targets(static_cast<Eigen::Index>(train_idx.size()),
                          static_cast<Eigen::Index>(arch.output_dim));
  for (std::size_t r = 0; r < train_idx.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    if (arch.head == Head::kParams) {
      targets.row(row) = samples[train_idx[r]].theta.transpose();
    } else {
      targets(row, 0) = prepared[train_idx[r]].reference;
    }
  }

  ParamNet net = ParamNet::random_init(arch, TargetScale::standardize(targets),
                                       derive_seed(cfg.seed, "init"));
  net.model = spec;
  net.pool_hash = pool.hash();

  auto sample_loss = [&](const Prepared& p, std::span<double> grad, ParamNet::Tape& tape) {
    return arch.head == Head::kParams ? params_loss(net, p, cfg, grad, tape)
                                      : scalar_loss(net, p, grad, tape);
  };

  const std::size_t n_params = net.parameters().size();
  Optimizer opt(cfg, n_params);
  std::vector<double> grad(n_params);
  std::vector<double> best(net.parameters().begin(), net.parameters().end());
  double best_val = std::numeric_limits<double>::infinity();
  TrainReport rep;
  rep.train_count = train_idx.size();
  rep.validation_count = n_val == 0 ? 0 : val_idx.size();
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  ParamNet::Tape tape;

  const std::size_t batches_per_epoch = train_idx.size() / cfg.batch_size;
  const double total_steps = static_cast<double>(batches_per_epoch) * cfg.epochs;
  std::size_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(train_idx));
    double epoch_loss = 0.0;
    std::size_t batch_id = 0;
    for (std::size_t start = 0; start + cfg.batch_size <= train_idx.size();
         start += cfg.batch_size, ++batch_id) {
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < start + cfg.batch_size; ++k) {
        batch_loss += sample_loss(prepared[train_idx[k]], grad, tape).total;
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_id));
      }
      const double inv = 1.0 / static_cast<double>(cfg.batch_size);
      for (auto& g : grad) g *= inv;
      if (cfg.anneal) {
        opt.set_rate(cfg.step_size * 0.5 *
                     (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps)));
      }
      ++step;
      opt.step(net.parameters(), grad);
      epoch_loss += batch_loss;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(batch_id * cfg.batch_size);
    for (const std::size_t i : val_idx) {
      const LossTerms t = sample_loss(prepared[i], {}, tape);
      stats.val_loss += t.total;
      stats.val_param_error += t.direct;
      stats.val_kkt += t.kkt;
    }
    const auto nv = static_cast<double>(val_idx.size());
    stats.val_loss /= nv;
    stats.val_param_error /= nv;
    stats.val_kkt /= nv;
    if (!std::isfinite(stats.val_loss)) {
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    if (stats.val_loss < best_val) {
      best_val = stats.val_loss;
      rep.best_epoch = epoch;
      std::copy(net.parameters().begin(), net.parameters().end(), best.begin());
    }
    rep.epochs.push_back(stats);
  }
  std::copy(best.begin(), best.end(), net.parameters().begin());
  if (report) *report = std::move(rep);
  return net;
}

LossAndGradient single_sample(const ParamNet& net, const DataPool& pool,
                              const ModelSpec& spec, const TrainingSample& sample,
                              const TrainConfig& cfg) {
  if (net.arch().input_dim != encoding_size(pool)) {
    throw DimensionError("network input width does not match the pool encoding");
  }
  const Prepared p = prepare(pool, spec, sample, net.arch().head);
  LossAndGradient out;
  out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.parameters().size()));
  std::span<double> grad(out.gradient.data(), net.parameters().size());
  ParamNet::Tape tape;
  out.terms = net.arch().head == Head::kParams ? params_loss(net, p, cfg, grad, tape)
                                               : scalar_loss(net, p, grad, tape);
  return out;
}

void check_net_matches(const ParamNet& net, const DataPool& pool) {
  if (net.arch().input_dim != encoding_size(pool)) {
    throw DimensionError("network expects an encoding of width " +
                         std::to_string(net.arch().input_dim) + ", pool gives " +
                         std::to_string(encoding_size(pool)));
  }
  if (!net.pool_hash.empty() && net.pool_hash != pool.hash()) {
    throw InvalidArgument("network was trained on a different data pool");
  }
}

}  // namespace

LossAndGradient composite_loss(const ParamNet& net, const DataPool& pool,
                               const TrainingSample& sample, const TrainConfig& cfg) {
  if (net.arch().head != Head::kParams) throw InvalidArgument("composite loss needs a params head");
  return single_sample(net, pool, net.model, sample, cfg);
}

LossAndGradient utility_loss(const ParamNet& net, const DataPool& pool,
                             const TrainingSample& sample) {
  if (net.arch().head != Head::kUtility) throw InvalidArgument("utility loss needs a utility head");
  return single_sample(net, pool, net.model, sample, TrainConfig{});
}

ParamNet train(const DataPool& pool, const ModelSpec& spec,
               std::span<const TrainingSample> samples, const NetArch& arch,
               const TrainConfig& cfg, TrainReport* report) {
  if (arch.head != Head::kParams) throw InvalidArgument("train() expects a params head");
  return train_impl(pool, spec, samples, arch, cfg, report);
}

ParamNet train_deeputility(const DataPool& pool, std::span<const TrainingSample> samples,
                           const NetArch& arch, const TrainConfig& cfg,
                           TrainReport* report) {
  if (arch.head != Head::kUtility) {
    throw InvalidArgument("train_deeputility() expects a utility head");
  }
  ModelSpec spec{ModelKind::kBinaryLogistic, pool.dim(), pool.num_classes(), 0.0};
  return train_impl(pool, spec, samples, arch, cfg, report);
}

ModelParams estimate(const ParamNet& net, const DataPool& pool, const Subset& subset) {
  if (net.arch().head != Head::kParams) throw InvalidArgument("estimate() needs a params head");
  check_net_matches(net, pool);
  return {net.forward_subset(pool, subset), net.model};
}

std::vector<ModelParams> estimate_batch(const ParamNet& net, const DataPool& pool,
                                        std::span<const Subset> subsets) {
  std::vector<ModelParams> out;
  out.reserve(subsets.size());
  for (const auto& s : subsets) out.push_back(estimate(net, pool, s));
  return out;
}

double estimate_utility(const ParamNet& net, const DataPool& pool, const Subset& subset) {
  if (net.arch().head != Head::kUtility) {
    throw InvalidArgument("estimate_utility() needs a utility head");
  }
  check_net_matches(net, pool);
  return net.forward_subset(pool, subset)[0];
}

void to_json(nlohmann::json& j, const ParamNet& net) {
  const NetArch& a = net.arch();
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weight(l);
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(w.cols()));
      for (Eigen::Index c = 0; c < w.cols(); ++c) row[static_cast<std::size_t>(c)] = w(r, c);
      rows.push_back(std::move(row));
    }
    layers.push_back({{"W", std::move(rows)}, {"b", vector_to_json(net.bias(l))}});
  }
  j = {{"version", 1},
       {"arch",
        {{"input_dim", a.input_dim},
         {"hidden", a.hidden},
         {"activation", to_string(a.activation)},
         {"output_dim", a.output_dim},
         {"head", to_string(a.head)}}},
       {"target_scale",
        {{"shift", vector_to_json(net.target_scale().shift)},
         {"scale", vector_to_json(net.target_scale().scale)}}},
       {"layers", std::move(layers)},
       {"model", net.model},
       {"pool_hash", net.pool_hash}};
}

ParamNet net_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw IngestError("unsupported checkpoint version");
    const auto& ja = j.at("arch");
    NetArch arch{ja.at("input_dim").get<std::size_t>(),
                 ja.at("hidden").get<std::vector<std::size_t>>(),
                 parse_activation(ja.at("activation").get<std::string>()),
                 ja.at("output_dim").get<std::size_t>(),
                 parse_head(ja.at("head").get<std::string>())};
    TargetScale scale{vector_from_json(j.at("target_scale").at("shift")),
                      vector_from_json(j.at("target_scale").at("scale"))};
    ParamNet net(std::move(arch), std::move(scale));
    const auto& layers = j.at("layers");
    if (layers.size() != net.num_layers()) throw IngestError("checkpoint layer count mismatch");
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      auto w = net.weight(l);
      const auto& rows = layers[l].at("W");
      if (rows.size() != static_cast<std::size_t>(w.rows())) {
        throw IngestError("checkpoint weight shape mismatch");
      }
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        const auto row = rows[static_cast<std::size_t>(r)].get<std::vector<double>>();
        if (row.size() != static_cast<std::size_t>(w.cols())) {
          throw IngestError("checkpoint weight shape mismatch");
        }
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = row[static_cast<std::size_t>(c)];
      }
      const Eigen::VectorXd b = vector_from_json(layers[l].at("b"));
      if (b.size() != w.rows()) throw IngestError("checkpoint bias shape mismatch");
      net.bias(l) = b;
    }
    net.model = j.at("model").get<ModelSpec>();
    net.pool_hash = j.value("pool_hash", "");
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_net(const std::string& path, const ParamNet& net) {
  write_json_file(path, nlohmann::json(net));
}

ParamNet load_net(const std::string& path) { return net_from_json(read_json_file(path)); }

}  // namespace refit
