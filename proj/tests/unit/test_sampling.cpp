#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "refit/errors.hpp"
#include "refit/sampling.hpp"
#include "refit/serialize.hpp"

using namespace refit;
using test_util::random_pool;

namespace {
SolveConfig cfg() {
  SolveConfig c;
  c.tol = 1e-9;
  return c;
}
}  // namespace

TEST(Sampling, PermutationIsDeterministicPerSeed) {
  const std::vector<std::size_t> u{3, 4, 5, 6, 7, 8};
  const auto a = draw_permutation(u, 99);
  const auto b = draw_permutation(u, 99);
  EXPECT_EQ(a.order, b.order);
  auto sorted = a.order;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, u);
  bool any_diff = false;
  for (std::uint64_t s = 0; s < 10; ++s) any_diff |= draw_permutation(u, s).order != a.order;
  EXPECT_TRUE(any_diff);
}

TEST(Sampling, PrefixesOfEachPermutation) {
  const auto pool = random_pool(8, 2, 2, 5, 3);
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 0.5);
  const auto phi = sample_phi(pool, spec, cfg(), {2, 7, false});
  ASSERT_EQ(phi.samples.size(), 16u);
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t k = 0; k < 8; ++k) {
      const auto& s = phi.samples[p * 8 + k];
      EXPECT_EQ(s.prefix_len, k + 1);
      EXPECT_EQ(s.subset.size(), k + 1);
      for (const auto i : s.subset) EXPECT_LT(i, pool.n_train());
      if (k > 0) {
        const auto& prev = phi.samples[p * 8 + k - 1];
        EXPECT_EQ(prev.perm_seed, s.perm_seed);
        EXPECT_EQ(s.subset.without(prev.subset).size(), 1u);
      }
      const auto direct = solve(spec, pool, s.subset, cfg());
      EXPECT_LT((direct.params.theta - s.theta).norm(), 1e-12);
      EXPECT_LE(s.grad_norm, 1e-9);
    }
  }
  EXPECT_EQ(phi.header.pool_hash, pool.hash());
  EXPECT_EQ(phi.header.count, 2u);
  const auto again = sample_phi(pool, spec, cfg(), {2, 7, false});
  for (std::size_t i = 0; i < phi.samples.size(); ++i) {
    EXPECT_EQ(phi.samples[i].theta, again.samples[i].theta);
  }
}

TEST(Sampling, IncludeReserveCoversWholePool) {
  const auto pool = random_pool(5, 2, 2, 5, 3);
  const auto spec = spec_for(pool, ModelKind::kRidge, 0.5);
  const auto phi = sample_phi(pool, spec, cfg(), {1, 1, true});
  ASSERT_EQ(phi.samples.size(), 8u);
  EXPECT_EQ(phi.samples.back().subset, pool.all());
}

TEST(Sampling, CustomSources) {
  std::vector<std::size_t> u(20);
  for (std::size_t i = 0; i < 20; ++i) u[i] = i;
  Rng rng(4);
  const auto sized = uniform_size_source(u);
  const auto any = uniform_subset_source(u);
  const auto boot = bootstrap_source(u, 0.5);
  std::set<std::size_t> sizes;
  for (int t = 0; t < 400; ++t) {
    const auto s = sized.draw(rng);
    EXPECT_GE(s.size(), 1u);
    EXPECT_LE(s.size(), 20u);
    sizes.insert(s.size());
    EXPECT_FALSE(any.draw(rng).empty());
    const auto b = boot.draw(rng);
    EXPECT_GE(b.size(), 1u);
    EXPECT_LE(b.size(), 10u);
  }
  EXPECT_GT(sizes.size(), 15u);
  EXPECT_EQ(fixed_source(Subset{1, 2}).draw(rng), (Subset{1, 2}));
  EXPECT_THROW(bootstrap_source(u, 0.0), InvalidArgument);
}

TEST(Sampling, JsonlRoundTrip) {
  const auto pool = random_pool(6, 3, 3, 2);
  const auto spec = spec_for(pool, ModelKind::kMultinomialLogistic, 0.3);
  auto phi = sample_phi_custom(pool, spec, cfg(), uniform_subset_source({0, 1, 2, 3, 4, 5}), 5, 11);
  attach_utilities(phi, pool, {pool.all(), UtilityMeasure::kAvgLoss});
  std::ostringstream out;
  write_phi(out, phi);
  std::istringstream in(out.str());
  const auto back = read_phi(in);
  EXPECT_EQ(back.header.pool_hash, phi.header.pool_hash);
  EXPECT_EQ(back.header.spec, phi.header.spec);
  EXPECT_EQ(back.header.source, phi.header.source);
  ASSERT_EQ(back.samples.size(), phi.samples.size());
  for (std::size_t i = 0; i < phi.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].subset, phi.samples[i].subset);
    EXPECT_EQ(back.samples[i].theta, phi.samples[i].theta);  // bit-exact
    ASSERT_TRUE(back.samples[i].utility.has_value());
    EXPECT_EQ(*back.samples[i].utility, *phi.samples[i].utility);
  }
}

TEST(Sampling, MalformedPhiIsRejected) {
  std::istringstream empty("");
  EXPECT_THROW(read_phi(empty), IngestError);
  std::istringstream garbage("{not json\n");
  EXPECT_THROW(read_phi(garbage), IngestError);
}
