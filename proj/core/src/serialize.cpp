#include "refit/serialize.hpp"

#include <fstream>

#include "refit/errors.hpp"

namespace refit {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

void to_json(nlohmann::json& j, const Subset& s) {
  j = std::vector<std::size_t>(s.begin(), s.end());
}

void from_json(const nlohmann::json& j, Subset& s) {
  s = Subset(j.get<std::vector<std::size_t>>());
}

void to_json(nlohmann::json& j, const ModelSpec& spec) {
  j = {{"kind", to_string(spec.kind)},
       {"d", spec.dim},
       {"K", spec.num_classes},
       {"lambda", spec.lambda}};
}

void from_json(const nlohmann::json& j, ModelSpec& spec) {
  spec.kind = parse_model_kind(j.at("kind").get<std::string>());
  spec.dim = j.at("d").get<int>();
  spec.num_classes = j.at("K").get<int>();
  spec.lambda = j.at("lambda").get<double>();
}

void to_json(nlohmann::json& j, const ModelParams& params) {
  j = params.spec;
  j["theta"] = vector_to_json(params.theta);
}

void from_json(const nlohmann::json& j, ModelParams& params) {
  params.spec = j.get<ModelSpec>();
  params.theta = vector_from_json(j.at("theta"));
  if (params.theta.size() != params.spec.param_dim()) {
    throw DimensionError("theta length does not match the model descriptor");
  }
}

void to_json(nlohmann::json& j, const SolveConfig& cfg) {
  j = {{"method", to_string(cfg.method)},
       {"tol", cfg.tol},
       {"max_iter", cfg.max_iter},
       {"t_steps", cfg.t_steps}};
  j["eta"] = cfg.eta ? nlohmann::json(*cfg.eta) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, SolveConfig& cfg) {
  cfg.method = parse_solve_method(j.at("method").get<std::string>());
  cfg.tol = j.at("tol").get<double>();
  cfg.max_iter = j.at("max_iter").get<int>();
  cfg.t_steps = j.value("t_steps", 0);
  if (j.contains("eta") && !j.at("eta").is_null()) cfg.eta = j.at("eta").get<double>();
}

void to_json(nlohmann::json& j, const SolveResult& res) {
  j = {{"params", res.params},
       {"grad_norm", res.grad_norm},
       {"iterations", res.iterations},
       {"converged", res.converged}};
}

void to_json(nlohmann::json& j, const PhiHeader& h) {
  j = {{"pool_hash", h.pool_hash}, {"model", h.spec},     {"solver", h.solver},
       {"source", h.source},       {"seed", h.seed},      {"count", h.count}};
}

void from_json(const nlohmann::json& j, PhiHeader& h) {
  h.pool_hash = j.at("pool_hash").get<std::string>();
  h.spec = j.at("model").get<ModelSpec>();
  h.solver = j.at("solver").get<SolveConfig>();
  h.source = j.at("source").get<std::string>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.count = j.at("count").get<std::size_t>();
}

void to_json(nlohmann::json& j, const TrainingSample& s) {
  j = {{"subset", s.subset},
       {"theta", vector_to_json(s.theta)},
       {"grad_norm", s.grad_norm},
       {"perm_seed", s.perm_seed},
       {"prefix_len", s.prefix_len}};
  if (s.utility) j["utility"] = *s.utility;
}

void from_json(const nlohmann::json& j, TrainingSample& s) {
  s.subset = j.at("subset").get<Subset>();
  s.theta = vector_from_json(j.at("theta"));
  s.grad_norm = j.at("grad_norm").get<double>();
  s.perm_seed = j.at("perm_seed").get<std::uint64_t>();
  s.prefix_len = j.at("prefix_len").get<std::size_t>();
  if (j.contains("utility")) s.utility = j.at("utility").get<double>();
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace refit
