#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refit/convex.hpp"
#include "refit/rng.hpp"
#include "refit/solver.hpp"

namespace refit {

struct PermutationRecord {
  std::uint64_t seed = 0;
  std::vector<std::size_t> order;
};

/// Fisher-Yates over `universe` driven by Rng(seed).
PermutationRecord draw_permutation(std::span<const std::size_t> universe,
                                   std::uint64_t seed);

struct TrainingSample {
  Subset subset;
  Eigen::VectorXd theta;
  double grad_norm = 0.0;
  std::uint64_t perm_seed = 0;
  std::size_t prefix_len = 0;
  std::optional<double> utility;  // filled for utility-head training
};

struct PhiHeader {
  std::string pool_hash;
  ModelSpec spec;
  SolveConfig solver;
  std::string source = "permutation";  // or the custom generator's name
  std::uint64_t seed = 0;
  std::size_t count = 0;  // permutations, or draws for custom sources
};

struct Phi {
  PhiHeader header;
  std::vector<TrainingSample> samples;
};

using SampleSink = std::function<void(TrainingSample)>;

struct PermutationOptions {
  std::size_t permutations = 1;
  std::uint64_t seed = 0;
  bool include_reserve = false;  // permute the whole pool instead of the train segment
};

// Permutation prefixes: for each of T permutations (seed derived per
// permutation), solve every prefix of length 1..n and emit it. Any solver
// failure aborts with the prefix identified.
void sample_phi(const DataPool& pool, const ModelSpec& spec, const SolveConfig& cfg,
                const PermutationOptions& options, const SampleSink& sink);
Phi sample_phi(const DataPool& pool, const ModelSpec& spec, const SolveConfig& cfg,
               const PermutationOptions& options);

/// Subset generator for custom sampling distributions.
struct SubsetSource {
  std::string name;
  std::function<Subset(Rng&)> draw;
};

/// Size uniform on 1..n, then a uniform subset of that size.
SubsetSource uniform_size_source(std::vector<std::size_t> universe);
/// Each element independently with probability 1/2, redrawn when empty.
SubsetSource uniform_subset_source(std::vector<std::size_t> universe);
/// ceil(ratio * n) draws with replacement, collapsed to a set.
SubsetSource bootstrap_source(std::vector<std::size_t> universe, double ratio);
SubsetSource fixed_source(Subset subset);

void sample_phi_custom(const DataPool& pool, const ModelSpec& spec,
                       const SolveConfig& cfg, const SubsetSource& source,
                       std::size_t count, std::uint64_t seed, const SampleSink& sink);
Phi sample_phi_custom(const DataPool& pool, const ModelSpec& spec,
                      const SolveConfig& cfg, const SubsetSource& source,
                      std::size_t count, std::uint64_t seed);

/// Evaluates uspec at each sample's theta and stores it in `utility`.
void attach_utilities(Phi& phi, const DataPool& pool, const UtilitySpec& uspec);

// JSON-lines persistence: one header object, then one sample per line in
// generation order (permutation index, then prefix length).
void write_phi(std::ostream& out, const Phi& phi);
Phi read_phi(std::istream& in);
void save_phi(const std::string& path, const Phi& phi);
Phi load_phi(const std::string& path);

}  // namespace refit
