#include "refit/valuation.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>

#include "refit/errors.hpp"
#include "refit/metrics.hpp"
#include "refit/rng.hpp"
#include "refit/sampling.hpp"

namespace refit {

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kSolver: return "solver";
    case BackendKind::kParamNet: return "paramnet";
    case BackendKind::kDeepUtility: return "deeputility";
  }
  return "?";
}

BackendKind parse_backend(std::string_view name) {
  if (name == "solver") return BackendKind::kSolver;
  if (name == "paramnet" || name == "optlearn") return BackendKind::kParamNet;
  if (name == "deeputility") return BackendKind::kDeepUtility;
  throw InvalidArgument("unknown backend '" + std::string(name) + "'");
}

UtilityBackend UtilityBackend::solver(ModelSpec spec, SolveConfig cfg) {
  cfg.validate();
  UtilityBackend b(BackendKind::kSolver, spec);
  b.solve_cfg_ = cfg;
  return b;
}

UtilityBackend UtilityBackend::paramnet(const ParamNet& net) {
  if (net.arch().head != Head::kParams) throw InvalidArgument("paramnet backend needs a params head");
  UtilityBackend b(BackendKind::kParamNet, net.model);
  b.net_ = &net;
  return b;
}

UtilityBackend UtilityBackend::deeputility(const ParamNet& net, ModelSpec spec) {
  if (net.arch().head != Head::kUtility) {
    throw InvalidArgument("deeputility backend needs a utility head");
  }
  UtilityBackend b(BackendKind::kDeepUtility, spec);
  b.net_ = &net;
  return b;
}

double UtilityBackend::compute(const DataPool& pool, const Subset& subset,
                               const UtilitySpec& uspec) const {
  if (subset.empty()) return refit::utility(zero_params(spec_), pool, uspec);
  switch (kind_) {
    case BackendKind::kSolver: {
      SolveResult r = solve(spec_, pool, subset, solve_cfg_);
      if (!r.converged) throw NumericError("solver did not converge");
      return refit::utility(r.params, pool, uspec);
    }
    case BackendKind::kParamNet:
      return refit::utility(estimate(*net_, pool, subset), pool, uspec);
    case BackendKind::kDeepUtility:
      return estimate_utility(*net_, pool, subset);
  }
  return 0.0;
}

double UtilityBackend::utility(const DataPool& pool, const Subset& subset,
                               const UtilitySpec& uspec) const {
  if (!cache_enabled_) return compute(pool, subset, uspec);
  std::vector<std::size_t> key(subset.begin(), subset.end());
  if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
  const double u = compute(pool, subset, uspec);
  cache_.emplace(std::move(key), u);
  return u;
}

void to_json(nlohmann::json& j, const ShapleyEstimate& e) {
  j = {{"backend", to_string(e.backend)},
       {"permutations", e.permutations},
       {"values", std::vector<double>(e.values.data(), e.values.data() + e.values.size())},
       {"std_error",
        std::vector<double>(e.std_error.data(), e.std_error.data() + e.std_error.size())},
       {"empty_utility", e.empty_utility},
       {"full_utility", e.full_utility},
       {"max_efficiency_residual", e.max_efficiency_residual}};
}

namespace {

std::string describe(const Subset& s) {
  std::string out = "{";
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += ",";
    out += std::to_string(s[k]);
  }
  return out + "}";
}

double guarded(const UtilityBackend& backend, const DataPool& pool, const Subset& s,
               const UtilitySpec& uspec) {
  try {
    return backend.utility(pool, s, uspec);
  } catch (const NumericError& e) {
    throw NumericError("utility failed on subset " + describe(s) + ": " + e.what());
  }
}

}  // namespace

ShapleyEstimate shapley_permutation(const DataPool& pool, const UtilitySpec& uspec,
                                    const UtilityBackend& backend, std::size_t permutations,
                                    std::uint64_t seed) {
  if (permutations == 0) throw InvalidArgument("need at least one permutation");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = pool.n_train();
  std::vector<std::size_t> universe(n);
  std::iota(universe.begin(), universe.end(), std::size_t{0});

  ShapleyEstimate est;
  est.backend = backend.kind();
  est.permutations = permutations;
  est.empty_utility = guarded(backend, pool, Subset{}, uspec);
  est.full_utility = guarded(backend, pool, pool.train_subset(), uspec);

  // Welford accumulators per point.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  std::vector<double> marginal(n);
  for (std::size_t t = 0; t < permutations; ++t) {
    const PermutationRecord perm = draw_permutation(universe, derive_seed(seed, t));
    std::vector<std::size_t> prefix;
    prefix.reserve(n);
    double prev = est.empty_utility;
    double sum = 0.0;
    for (const std::size_t i : perm.order) {
      prefix.insert(std::upper_bound(prefix.begin(), prefix.end(), i), i);
      const double u = guarded(backend, pool, Subset(prefix), uspec);
      marginal[i] = u - prev;
      sum += marginal[i];
      prev = u;
    }
    est.max_efficiency_residual =
        std::max(est.max_efficiency_residual,
                 std::abs(sum - (est.full_utility - est.empty_utility)));
    const double count = static_cast<double>(t + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const double delta = marginal[i] - mean[k];
      mean[k] += delta / count;
      m2[k] += delta * (marginal[i] - mean[k]);
    }
  }
  est.values = mean;
  est.std_error = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (permutations > 1) {
    const double t = static_cast<double>(permutations);
    est.std_error = (m2 / (t - 1.0) / t).cwiseSqrt();
  }
  est.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return est;
}

Eigen::VectorXd shapley_exact_game(std::size_t n,
                                   const std::function<double(std::uint64_t)>& game) {
  if (n == 0) return {};
  if (n > 20) throw InvalidArgument("exact enumeration is limited to small games");
  const std::uint64_t total = std::uint64_t{1} << n;
  std::vector<double> u(total);
  for (std::uint64_t mask = 0; mask < total; ++mask) u[mask] = game(mask);
  // weight[s] = s! (n - s - 1)! / n!
  std::vector<double> weight(n);
  for (std::size_t s = 0; s < n; ++s) {
    weight[s] = std::exp(std::lgamma(static_cast<double>(s) + 1) +
                         std::lgamma(static_cast<double>(n - s)) -
                         std::lgamma(static_cast<double>(n) + 1));
  }
  Eigen::VectorXd sv = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    const auto s = static_cast<std::size_t>(std::popcount(mask));
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t bit = std::uint64_t{1} << i;
      if (mask & bit) continue;
      sv[static_cast<Eigen::Index>(i)] += weight[s] * (u[mask | bit] - u[mask]);
    }
  }
  return sv;
}

Eigen::VectorXd shapley_exact(const DataPool& pool, const UtilitySpec& uspec,
                              const UtilityBackend& backend) {
  const std::size_t n = pool.n_train();
  if (n > 12) {
    throw InvalidArgument("exact Shapley values need n_train <= 12, got " + std::to_string(n));
  }
  return shapley_exact_game(n, [&](std::uint64_t mask) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::uint64_t{1} << i)) members.push_back(i);
    }
    return guarded(backend, pool, Subset(std::move(members)), uspec);
  });
}

SvComparison compare_sv(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference) {
  if (estimate.size() != reference.size()) {
    throw DimensionError("Shapley vectors differ in length");
  }
  std::span<const double> e(estimate.data(), static_cast<std::size_t>(estimate.size()));
  std::span<const double> r(reference.data(), static_cast<std::size_t>(reference.size()));
  return {nrmse(e, r), spearman(e, r)};
}

}  // namespace refit
