#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace refit {

// Deterministic random source.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard distributions are implementation-defined, so every
// derived quantity (bounded integers, uniforms, normals) is computed here:
//   uniform_index  - rejection sampling on the top bits (no modulo bias)
//   uniform01      - 53 high bits scaled to [0, 1)
//   normal         - Marsaglia polar method, spare value cached
// Shuffles are Fisher-Yates running from the last element down.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  std::size_t uniform_index(std::size_t n);
  double uniform01();
  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Named sub-seed: every consumer of randomness derives its own stream from
/// the experiment seed so adding a consumer never perturbs the others.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace refit
