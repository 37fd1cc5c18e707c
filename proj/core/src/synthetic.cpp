#include "refit/synthetic.hpp"

#include <numeric>

#include "refit/errors.hpp"
#include "refit/rng.hpp"

namespace refit {

DataPool gaussian_pool(const SyntheticConfig& cfg) {
  if (cfg.dim < 1) throw InvalidArgument("synthetic dim must be >= 1");
  if (cfg.num_classes < 2) throw InvalidArgument("synthetic pool needs >= 2 classes");
  if (cfg.n_train < 1) throw InvalidArgument("synthetic pool needs training points");

  Rng centres(derive_seed(cfg.seed, "centres"));
  std::vector<Eigen::VectorXd> means;
  for (int c = 0; c < cfg.num_classes; ++c) {
    Eigen::VectorXd m(cfg.dim);
    for (int j = 0; j < cfg.dim; ++j) m[j] = centres.normal();
    means.push_back(cfg.separation * m / m.norm());
  }

  const std::size_t n = cfg.n_train + cfg.n_reserve;
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(cfg.num_classes));
  Rng order(derive_seed(cfg.seed, "labels"));
  order.shuffle(std::span<int>(labels));

  Rng noise(derive_seed(cfg.seed, "points"));
  std::vector<DataPoint> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    DataPoint p;
    p.label = labels[i];
    p.features = means[static_cast<std::size_t>(p.label)];
    for (int j = 0; j < cfg.dim; ++j) p.features[j] += noise.normal();
    points.push_back(std::move(p));
  }
  normalize_features(points, cfg.n_train);
  return DataPool(std::move(points), cfg.n_reserve, cfg.num_classes);
}

}  // namespace refit
