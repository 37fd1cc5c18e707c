#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refit/convex.hpp"
#include "refit/influence.hpp"
#include "refit/paramnet.hpp"
#include "refit/sampling.hpp"
#include "refit/solver.hpp"

namespace refit {

enum class Scenario { kDeletion, kAddition };
std::string_view to_string(Scenario s);

struct SweepConfig {
  std::vector<std::size_t> sizes;  // points removed (deletion) or added (addition)
  std::size_t repeats = 10;        // random subsets per size
  std::size_t base_size = 0;       // 0: the whole train segment
  std::uint64_t seed = 0;
  UtilityMeasure measure = UtilityMeasure::kAvgLoss;
  InfluenceSolveMode influence_mode = InfluenceSolveMode::kDense;
  SolveConfig solver;
};

struct SweepRow {
  Scenario scenario = Scenario::kDeletion;
  std::size_t size = 0;          // size of the changed group
  std::size_t subset_size = 0;   // size of the resulting training subset
  std::string method;            // solver | influence | optlearn
  double dist_mean = 0.0;
  double dist_std = 0.0;
  double nrmse = 0.0;            // of utilities across the repeats
  double spearman = 0.0;
  std::vector<double> distances;
  std::vector<double> utilities;
  std::vector<double> times;     // seconds per subset, timing log only
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double base_utility = 0.0;
};

// Deletion: base = first base_size train slots, each repeat drops `size`
// random members. Addition: base likewise, each repeat adds `size` random
// reserve slots. Every resulting subset is solved exactly, estimated by the
// influence step from the base optimum, and by `net` when given.
SweepResult run_sweep(Scenario scenario, const DataPool& pool, const ModelSpec& spec,
                      const ParamNet* net, const SweepConfig& cfg);
SweepResult run_deletion_sweep(const DataPool& pool, const ModelSpec& spec,
                               const ParamNet* net, const SweepConfig& cfg);
SweepResult run_addition_sweep(const DataPool& pool, const ModelSpec& spec,
                               const ParamNet* net, const SweepConfig& cfg);

/// Header of the sweep CSV.
extern const char* const kSweepCsvHeader;
void write_sweep_csv(std::ostream& out, const SweepResult& r);
/// Deterministic part of the report (no times).
nlohmann::json sweep_json(const SweepResult& r);
nlohmann::json sweep_timing_json(const SweepResult& r);

struct BenchConfig {
  std::vector<std::size_t> counts;  // subset counts for the cumulative curves
  std::uint64_t seed = 0;
  double offline_seconds = 0.0;     // sampling + training cost of the net
  SolveConfig solver;
};

struct BenchPoint {
  std::size_t count = 0;
  double solver_seconds = 0.0;
  double net_seconds = 0.0;  // includes the offline offset
};

struct BenchResult {
  std::vector<BenchPoint> curve;
  std::vector<double> solver_times;
  std::vector<double> net_times;
  double offline_seconds = 0.0;
  double median_solver = 0.0;
  double median_net = 0.0;
  /// offline / (median solver - median net); empty when the net is not faster.
  std::optional<double> crossover;
};

// Times the solver and the net on max(counts) random subsets of the train
// segment (uniform size, then uniform members).
BenchResult run_bench(const DataPool& pool, const ParamNet& net, const BenchConfig& cfg);
void write_bench_csv(std::ostream& out, const BenchResult& r);
nlohmann::json bench_json(const BenchResult& r);

}  // namespace refit
