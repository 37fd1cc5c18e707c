#include "refit/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "refit/errors.hpp"
#include "refit/metrics.hpp"
#include "refit/rng.hpp"

namespace refit {

std::string_view to_string(Scenario s) {
  return s == Scenario::kDeletion ? "deletion" : "addition";
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// k distinct draws from `from`, by partial Fisher-Yates.
std::vector<std::size_t> pick(std::vector<std::size_t> from, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(from[i], from[i + rng.uniform_index(from.size() - i)]);
  }
  from.resize(k);
  return from;
}

// Metric that can be undefined (constant truth, tied ranks); NaN then.
template <typename F>
double or_nan(F&& f) {
  try {
    return f();
  } catch (const InvalidArgument&) {
    return std::numeric_limits<double>::quiet_NaN();
  } catch (const NumericError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

nlohmann::json num(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

SweepResult run_sweep(Scenario scenario, const DataPool& pool, const ModelSpec& spec,
                      const ParamNet* net, const SweepConfig& cfg) {
  cfg.solver.validate();
  if (cfg.repeats == 0) throw InvalidArgument("sweep needs at least one repeat per size");
  const std::size_t base_size = cfg.base_size == 0 ? pool.n_train() : cfg.base_size;
  if (base_size > pool.n_train()) {
    throw InvalidArgument("base size " + std::to_string(base_size) + " exceeds the " +
                          std::to_string(pool.n_train()) + " train slots");
  }
  const Subset base = Subset::range(0, base_size);
  std::vector<std::size_t> candidates;
  if (scenario == Scenario::kDeletion) {
    candidates.assign(base.begin(), base.end());
  } else {
    const Subset r = pool.reserve_subset();
    candidates.assign(r.begin(), r.end());
  }
  for (const auto s : cfg.sizes) {
    if (s == 0 || s > candidates.size() ||
        (scenario == Scenario::kDeletion && s >= base_size)) {
      throw InvalidArgument("group size " + std::to_string(s) + " does not fit the " +
                            std::string(to_string(scenario)) + " setting");
    }
  }
  if (pool.n_reserve() == 0) throw InvalidArgument("sweeps evaluate on the reserve segment");
  if (net) {
    if (net->model != spec) throw InvalidArgument("network was trained for a different model");
  }

  const UtilitySpec uspec{pool.reserve_subset(), cfg.measure};
  const SolveResult base_fit = solve(spec, pool, base, cfg.solver);
  if (!base_fit.converged) throw NumericError("base subset solve did not converge");

  SweepResult result;
  result.base_utility = utility(base_fit.params, pool, uspec);
  for (const std::size_t size : cfg.sizes) {
    auto make_row = [&](const char* method) {
      SweepRow row;
      row.scenario = scenario;
      row.size = size;
      row.method = method;
      return row;
    };
    SweepRow solver_row = make_row("solver");
    SweepRow infl_row = make_row("influence");
    SweepRow net_row = make_row("optlearn");
    for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
      Rng rng(derive_seed(derive_seed(cfg.seed, std::string(to_string(scenario))),
                          size * 1000003u + rep));
      const std::vector<std::size_t> group = pick(candidates, size, rng);
      const Subset changed = Subset::from_unsorted(group);
      const Subset target =
          scenario == Scenario::kDeletion ? base.without(changed) : base.merged(changed);

      auto t0 = Clock::now();
      const SolveResult exact = solve(spec, pool, target, cfg.solver);
      const double t_solver = since(t0);
      if (!exact.converged) {
        throw NumericError("solver did not converge on a " + std::string(to_string(scenario)) +
                           " subset (size " + std::to_string(size) + ", repeat " +
                           std::to_string(rep) + ")");
      }
      solver_row.subset_size = infl_row.subset_size = net_row.subset_size = target.size();
      solver_row.distances.push_back(0.0);
      solver_row.utilities.push_back(utility(exact.params, pool, uspec));
      solver_row.times.push_back(t_solver);

      t0 = Clock::now();
      const InfluenceEstimate infl =
          influence_refit(base_fit, pool, base, target, cfg.influence_mode);
      infl_row.times.push_back(since(t0));
      infl_row.distances.push_back(param_distance(infl.params, exact.params));
      infl_row.utilities.push_back(utility(infl.params, pool, uspec));

      if (net) {
        t0 = Clock::now();
        const ModelParams est = estimate(*net, pool, target);
        net_row.times.push_back(since(t0));
        net_row.distances.push_back(param_distance(est, exact.params));
        net_row.utilities.push_back(utility(est, pool, uspec));
      }
    }
    std::vector<SweepRow*> rows{&solver_row, &infl_row};
    if (net) rows.push_back(&net_row);
    for (SweepRow* row : rows) {
      row->dist_mean = mean(row->distances);
      row->dist_std = stddev(row->distances);
      row->nrmse = or_nan([&] { return nrmse(row->utilities, solver_row.utilities); });
      row->spearman = or_nan([&] { return spearman(row->utilities, solver_row.utilities); });
      result.rows.push_back(*row);
    }
  }
  return result;
}

SweepResult run_deletion_sweep(const DataPool& pool, const ModelSpec& spec, const ParamNet* net,
                               const SweepConfig& cfg) {
  return run_sweep(Scenario::kDeletion, pool, spec, net, cfg);
}

SweepResult run_addition_sweep(const DataPool& pool, const ModelSpec& spec, const ParamNet* net,
                               const SweepConfig& cfg) {
  return run_sweep(Scenario::kAddition, pool, spec, net, cfg);
}

const char* const kSweepCsvHeader =
    "scenario,group_size,subset_size,method,param_dist_mean,param_dist_std,utility_nrmse,"
    "utility_spearman";

void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  out << kSweepCsvHeader << '\n';
  for (const auto& row : r.rows) {
    out << to_string(row.scenario) << ',' << row.size << ',' << row.subset_size << ','
        << row.method << ',' << fmt(row.dist_mean) << ',' << fmt(row.dist_std) << ','
        << fmt(row.nrmse) << ',' << fmt(row.spearman) << '\n';
  }
}

nlohmann::json sweep_json(const SweepResult& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"scenario", to_string(row.scenario)},
                    {"group_size", row.size},
                    {"subset_size", row.subset_size},
                    {"method", row.method},
                    {"param_dist_mean", row.dist_mean},
                    {"param_dist_std", row.dist_std},
                    {"utility_nrmse", num(row.nrmse)},
                    {"utility_spearman", num(row.spearman)},
                    {"distances", row.distances},
                    {"utilities", row.utilities}});
  }
  return {{"base_utility", r.base_utility}, {"rows", rows}};
}

nlohmann::json sweep_timing_json(const SweepResult& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    if (row.times.empty()) continue;
    rows.push_back({{"scenario", to_string(row.scenario)},
                    {"group_size", row.size},
                    {"method", row.method},
                    {"mean_seconds", mean(row.times)},
                    {"seconds", row.times}});
  }
  return {{"rows", rows}};
}

BenchResult run_bench(const DataPool& pool, const ParamNet& net, const BenchConfig& cfg) {
  cfg.solver.validate();
  if (cfg.counts.empty()) throw InvalidArgument("bench needs at least one subset count");
  if (cfg.offline_seconds < 0.0) throw InvalidArgument("offline cost must be non-negative");
  const std::size_t total = *std::max_element(cfg.counts.begin(), cfg.counts.end());
  std::vector<std::size_t> universe(pool.n_train());
  std::iota(universe.begin(), universe.end(), std::size_t{0});
  const SubsetSource source = uniform_size_source(universe);

  BenchResult r;
  r.offline_seconds = cfg.offline_seconds;
  r.solver_times.reserve(total);
  r.net_times.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    Rng rng(derive_seed(cfg.seed, k));
    const Subset s = source.draw(rng);
    auto t0 = Clock::now();
    const SolveResult fit = solve(net.model, pool, s, cfg.solver);
    r.solver_times.push_back(since(t0));
    if (!fit.converged) throw NumericError("solver did not converge on bench subset " + std::to_string(k));
    t0 = Clock::now();
    const ModelParams est = estimate(net, pool, s);
    r.net_times.push_back(since(t0));
    if (!est.theta.allFinite()) throw NumericError("network produced non-finite parameters");
  }
  r.median_solver = median(r.solver_times);
  r.median_net = median(r.net_times);

  std::vector<std::size_t> counts = cfg.counts;
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
  double solver_sum = 0.0;
  double net_sum = 0.0;
  std::size_t done = 0;
  for (const std::size_t c : counts) {
    for (; done < c; ++done) {
      solver_sum += r.solver_times[done];
      net_sum += r.net_times[done];
    }
    r.curve.push_back({c, solver_sum, r.offline_seconds + net_sum});
  }
  if (r.median_solver > r.median_net) {
    r.crossover = r.offline_seconds / (r.median_solver - r.median_net);
  }
  return r;
}

void write_bench_csv(std::ostream& out, const BenchResult& r) {
  out << "subsets,solver_seconds,optlearn_seconds\n";
  for (const auto& p : r.curve) {
    out << p.count << ',' << fmt(p.solver_seconds) << ',' << fmt(p.net_seconds) << '\n';
  }
}

nlohmann::json bench_json(const BenchResult& r) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.curve) {
    curve.push_back({{"subsets", p.count},
                     {"solver_seconds", p.solver_seconds},
                     {"optlearn_seconds", p.net_seconds}});
  }
  return {{"offline_seconds", r.offline_seconds},
          {"median_solver_seconds", r.median_solver},
          {"median_optlearn_seconds", r.median_net},
          {"crossover_subsets", r.crossover ? nlohmann::json(*r.crossover) : nlohmann::json(nullptr)},
          {"curve", curve}};
}

}  // namespace refit
