#include "refit/sampling.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "refit/serialize.hpp"

namespace refit {

PermutationRecord draw_permutation(std::span<const std::size_t> universe,
                                   std::uint64_t seed) {
  PermutationRecord rec{seed, {universe.begin(), universe.end()}};
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(rec.order));
  return rec;
}

namespace {

TrainingSample solve_sample(const DataPool& pool, const ModelSpec& spec,
                            const SolveConfig& cfg, Subset subset,
                            std::uint64_t seed, std::size_t prefix_len) {
  SolveResult res;
  try {
    res = solve(spec, pool, subset, cfg);
  } catch (const Error& e) {
    throw NumericError("solver failed on sample (seed " + std::to_string(seed) +
                       ", prefix " + std::to_string(prefix_len) + "): " + e.what());
  }
  if (!res.converged && cfg.method != SolveMethod::kGdFixedSteps) {
    throw NumericError("solver did not converge on sample (seed " +
                       std::to_string(seed) + ", prefix " +
                       std::to_string(prefix_len) + "), |grad| = " +
                       std::to_string(res.grad_norm));
  }
  return {std::move(subset), std::move(res.params.theta), res.grad_norm, seed,
          prefix_len, std::nullopt};
}

std::vector<std::size_t> universe_of(const DataPool& pool, bool include_reserve) {
  std::vector<std::size_t> u(include_reserve ? pool.size() : pool.n_train());
  std::iota(u.begin(), u.end(), std::size_t{0});
  return u;
}

}  // namespace

void sample_phi(const DataPool& pool, const ModelSpec& spec, const SolveConfig& cfg,
                const PermutationOptions& options, const SampleSink& sink) {
  if (options.permutations < 1) throw InvalidArgument("need at least one permutation");
  const auto universe = universe_of(pool, options.include_reserve);
  for (std::size_t t = 0; t < options.permutations; ++t) {
    const std::uint64_t perm_seed = derive_seed(options.seed, t);
    const auto perm = draw_permutation(universe, perm_seed);
    std::vector<std::size_t> prefix;
    for (std::size_t i = 0; i < perm.order.size(); ++i) {
      prefix.push_back(perm.order[i]);
      sink(solve_sample(pool, spec, cfg, Subset::from_unsorted(prefix), perm_seed, i + 1));
    }
  }
}

Phi sample_phi(const DataPool& pool, const ModelSpec& spec, const SolveConfig& cfg,
               const PermutationOptions& options) {
  Phi phi;
  phi.header = {pool.hash(), spec, cfg, "permutation", options.seed, options.permutations};
  sample_phi(pool, spec, cfg, options,
             [&phi](TrainingSample s) { phi.samples.push_back(std::move(s)); });
  return phi;
}

SubsetSource uniform_size_source(std::vector<std::size_t> universe) {
  return {"uniform-size", [u = std::move(universe)](Rng& rng) {
            std::vector<std::size_t> pool = u;
            const std::size_t k = 1 + rng.uniform_index(pool.size());
            // Partial Fisher-Yates: the first k slots are a uniform k-subset.
            for (std::size_t i = 0; i < k; ++i) {
              std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);
            }
            pool.resize(k);
            return Subset::from_unsorted(std::move(pool));
          }};
}

SubsetSource uniform_subset_source(std::vector<std::size_t> universe) {
  return {"uniform-subset", [u = std::move(universe)](Rng& rng) {
            std::vector<std::size_t> picked;
            while (picked.empty()) {
              for (const std::size_t i : u) {
                if (rng.next_u64() >> 63) picked.push_back(i);
              }
            }
            return Subset(std::move(picked));
          }};
}

SubsetSource bootstrap_source(std::vector<std::size_t> universe, double ratio) {
  if (!(ratio > 0.0)) throw InvalidArgument("bootstrap ratio must be positive");
  return {"bootstrap", [u = std::move(universe), ratio](Rng& rng) {
            const auto draws = static_cast<std::size_t>(
                std::ceil(ratio * static_cast<double>(u.size()) - 1e-12));
            std::vector<std::size_t> picked;
            picked.reserve(draws);
            for (std::size_t i = 0; i < std::max<std::size_t>(draws, 1); ++i) {
              picked.push_back(u[rng.uniform_index(u.size())]);
            }
            return Subset::from_unsorted(std::move(picked));
          }};
}

SubsetSource fixed_source(Subset subset) {
  return {"fixed", [s = std::move(subset)](Rng&) { return s; }};
}

void sample_phi_custom(const DataPool& pool, const ModelSpec& spec,
                       const SolveConfig& cfg, const SubsetSource& source,
                       std::size_t count, std::uint64_t seed, const SampleSink& sink) {
  for (std::size_t k = 0; k < count; ++k) {
    const std::uint64_t draw_seed = derive_seed(seed, k);
    Rng rng(draw_seed);
    Subset subset = source.draw(rng);
    if (subset.empty()) throw InvalidArgument("subset source yielded an empty subset");
    pool.check(subset);
    sink(solve_sample(pool, spec, cfg, std::move(subset), draw_seed, k + 1));
  }
}

Phi sample_phi_custom(const DataPool& pool, const ModelSpec& spec,
                      const SolveConfig& cfg, const SubsetSource& source,
                      std::size_t count, std::uint64_t seed) {
  Phi phi;
  phi.header = {pool.hash(), spec, cfg, source.name, seed, count};
  sample_phi_custom(pool, spec, cfg, source, count, seed,
                    [&phi](TrainingSample s) { phi.samples.push_back(std::move(s)); });
  return phi;
}

void attach_utilities(Phi& phi, const DataPool& pool, const UtilitySpec& uspec) {
  for (auto& s : phi.samples) {
    s.utility = utility({s.theta, phi.header.spec}, pool, uspec);
  }
}

void write_phi(std::ostream& out, const Phi& phi) {
  nlohmann::json header = phi.header;
  header["type"] = "header";
  out << header.dump() << '\n';
  for (const auto& s : phi.samples) out << nlohmann::json(s).dump() << '\n';
}

Phi read_phi(std::istream& in) {
  Phi phi;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        if (j.value("type", "") != "header") throw IngestError("first line must be the header");
        phi.header = j.get<PhiHeader>();
        have_header = true;
      } else {
        phi.samples.push_back(j.get<TrainingSample>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw IngestError("phi line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw IngestError("phi file has no header");
  return phi;
}

void save_phi(const std::string& path, const Phi& phi) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write " + path);
  write_phi(out, phi);
}

Phi load_phi(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path);
  return read_phi(in);
}

}  // namespace refit
