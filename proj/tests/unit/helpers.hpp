#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "refit/convex.hpp"
#include "refit/data.hpp"
#include "refit/rng.hpp"

namespace refit::test_util {

// Random pool with features in the unit ball and labels in [0, K).
inline DataPool random_pool(std::size_t n, int d, int k, std::uint64_t seed,
                            std::size_t n_reserve = 0) {
  Rng rng(seed);
  std::vector<DataPoint> pts;
  for (std::size_t i = 0; i < n + n_reserve; ++i) {
    DataPoint p;
    p.features.resize(d);
    for (int j = 0; j < d; ++j) p.features[j] = rng.normal();
    p.features *= rng.uniform01() / p.features.norm();
    p.label = static_cast<int>(i % static_cast<std::size_t>(k));
    if (rng.uniform01() < 0.2) p.label = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(k)));
    pts.push_back(std::move(p));
  }
  return DataPool(std::move(pts), n_reserve, k);
}

inline Eigen::VectorXd random_vector(Eigen::Index n, Rng& rng, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace refit::test_util
