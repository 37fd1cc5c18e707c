#pragma once

// JSON mappings for the artifact types. Doubles are written by nlohmann's
// shortest round-trip formatter, so identical values give identical bytes.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <string>

#include "refit/convex.hpp"
#include "refit/sampling.hpp"
#include "refit/solver.hpp"

namespace refit {

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const Subset& s);
void from_json(const nlohmann::json& j, Subset& s);
void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);
void to_json(nlohmann::json& j, const ModelParams& params);
void from_json(const nlohmann::json& j, ModelParams& params);
void to_json(nlohmann::json& j, const SolveConfig& cfg);
void from_json(const nlohmann::json& j, SolveConfig& cfg);
/// wall_time is left out; timings live in the separate timing log.
void to_json(nlohmann::json& j, const SolveResult& res);
void to_json(nlohmann::json& j, const PhiHeader& h);
void from_json(const nlohmann::json& j, PhiHeader& h);
void to_json(nlohmann::json& j, const TrainingSample& s);
void from_json(const nlohmann::json& j, TrainingSample& s);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace refit
