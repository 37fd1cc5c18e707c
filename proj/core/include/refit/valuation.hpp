#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "refit/convex.hpp"
#include "refit/paramnet.hpp"
#include "refit/solver.hpp"

namespace refit {

enum class BackendKind { kSolver, kParamNet, kDeepUtility };
std::string_view to_string(BackendKind kind);
BackendKind parse_backend(std::string_view name);

// Subset -> utility. The empty subset always maps to the utility of the
// zero-parameter model, whatever the backend.
class UtilityBackend {
 public:
  static UtilityBackend solver(ModelSpec spec, SolveConfig cfg);
  static UtilityBackend paramnet(const ParamNet& net);
  /// `spec` is only used for the empty-set utility.
  static UtilityBackend deeputility(const ParamNet& net, ModelSpec spec);

  BackendKind kind() const { return kind_; }
  const ModelSpec& spec() const { return spec_; }

  double utility(const DataPool& pool, const Subset& subset, const UtilitySpec& uspec) const;

  /// Memoize utilities by subset (on by default; results are identical).
  void set_cache(bool enabled) { cache_enabled_ = enabled; }

 private:
  UtilityBackend(BackendKind kind, ModelSpec spec) : kind_(kind), spec_(spec) {}
  double compute(const DataPool& pool, const Subset& subset, const UtilitySpec& uspec) const;

  BackendKind kind_;
  ModelSpec spec_;
  SolveConfig solve_cfg_;
  const ParamNet* net_ = nullptr;
  bool cache_enabled_ = true;
  mutable std::map<std::vector<std::size_t>, double> cache_;
};

struct ShapleyEstimate {
  Eigen::VectorXd values;     // one per train slot
  Eigen::VectorXd std_error;  // Monte-Carlo standard error per value
  std::size_t permutations = 0;
  BackendKind backend = BackendKind::kSolver;
  double empty_utility = 0.0;
  double full_utility = 0.0;
  /// max over permutations of |sum of marginals - (U(D) - U(empty))|
  double max_efficiency_residual = 0.0;
  double wall_time = 0.0;
};

/// Without wall_time, which callers log separately.
void to_json(nlohmann::json& j, const ShapleyEstimate& e);

// Monte-Carlo Shapley values over the pool's train segment. Permutation t
// is drawn from derive_seed(seed, t).
ShapleyEstimate shapley_permutation(const DataPool& pool, const UtilitySpec& uspec,
                                    const UtilityBackend& backend, std::size_t permutations,
                                    std::uint64_t seed);

/// Full enumeration over the 2^n subsets of the train segment (n <= 12).
Eigen::VectorXd shapley_exact(const DataPool& pool, const UtilitySpec& uspec,
                              const UtilityBackend& backend);

/// Shapley values of an arbitrary game on n players, by enumeration.
/// `game` receives a bitmask of the coalition.
Eigen::VectorXd shapley_exact_game(std::size_t n,
                                   const std::function<double(std::uint64_t)>& game);

struct SvComparison {
  double nrmse = 0.0;
  double spearman = 0.0;
};
SvComparison compare_sv(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference);

}  // namespace refit
