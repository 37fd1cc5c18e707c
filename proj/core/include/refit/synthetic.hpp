#pragma once

#include <cstdint>

#include "refit/data.hpp"

namespace refit {

// Gaussian classes: class c is centred at separation * m_c, with m_c random
// unit vectors, and has identity covariance. Features are then scaled as the
// CSV loader would. Labels cycle through the classes before shuffling.
struct SyntheticConfig {
  std::size_t n_train = 60;
  std::size_t n_reserve = 40;
  int dim = 5;
  int num_classes = 2;
  double separation = 1.5;
  std::uint64_t seed = 0;
};

DataPool gaussian_pool(const SyntheticConfig& cfg);

}  // namespace refit
