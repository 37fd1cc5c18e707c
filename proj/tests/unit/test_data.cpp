#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "refit/data.hpp"
#include "refit/errors.hpp"

using namespace refit;

TEST(Subset, Construction) {
  EXPECT_THROW(Subset({2, 1}), InvalidArgument);
  EXPECT_THROW(Subset({1, 1}), InvalidArgument);
  const auto s = Subset::from_unsorted({5, 1, 3, 1});
  EXPECT_EQ(s, (Subset{1, 3, 5}));
  EXPECT_EQ(Subset::range(2, 5), (Subset{2, 3, 4}));
  EXPECT_TRUE(s.contains(3));
  EXPECT_FALSE(s.contains(2));
}

TEST(Subset, SetOperations) {
  const Subset a{1, 3, 5};
  EXPECT_EQ(a.with(4), (Subset{1, 3, 4, 5}));
  EXPECT_EQ(a.without(Subset{3, 9}), (Subset{1, 5}));
  EXPECT_EQ(a.merged(Subset{0, 3}), (Subset{0, 1, 3, 5}));
}

TEST(DataPool, Validation) {
  EXPECT_THROW(DataPool({}, 0, 2), InvalidArgument);
  std::vector<DataPoint> pts{{Eigen::Vector2d(1, 0), 0}, {Eigen::Vector3d(1, 0, 0), 1}};
  EXPECT_THROW(DataPool(pts, 0, 2), DimensionError);
  std::vector<DataPoint> bad{{Eigen::Vector2d(1, 0), 0}, {Eigen::Vector2d(0, 1), 2}};
  EXPECT_THROW(DataPool(bad, 0, 2), InvalidArgument);
  std::vector<DataPoint> ok{{Eigen::Vector2d(1, 0), 0}, {Eigen::Vector2d(0, 1), 1}};
  EXPECT_THROW(DataPool(ok, 2, 2), InvalidArgument);
  const DataPool pool(ok, 1, 2);
  EXPECT_EQ(pool.n_train(), 1u);
  EXPECT_EQ(pool.reserve_subset(), (Subset{1}));
  EXPECT_THROW(pool.check(Subset{0, 2}), InvalidArgument);
}

TEST(DataPool, HashTracksContent) {
  const auto a = test_util::random_pool(10, 3, 2, 1);
  const auto b = test_util::random_pool(10, 3, 2, 1);
  const auto c = test_util::random_pool(10, 3, 2, 2);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_FALSE(a.hash().empty());
}

TEST(Encoding, LayoutAndRoundTrip) {
  const auto pool = test_util::random_pool(6, 2, 3, 4);
  EXPECT_EQ(slot_width(pool), 6u);
  EXPECT_EQ(encoding_size(pool), 36u);
  const Subset s{0, 2, 5};
  const auto enc = encode(pool, s);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto base = static_cast<Eigen::Index>(i * 6);
    if (s.contains(i)) {
      EXPECT_EQ(enc.segment(base, 2), pool[i].features);
      for (int k = 0; k < 3; ++k) EXPECT_EQ(enc[base + 2 + k], k == pool[i].label ? 1.0 : 0.0);
      EXPECT_EQ(enc[base + 5], 1.0);
    } else {
      EXPECT_TRUE(enc.segment(base, 6).isZero());
    }
  }
  EXPECT_EQ(decode_membership(pool, enc), s);
  EXPECT_TRUE(encode(pool, Subset{}).isZero());
  EXPECT_THROW(decode_membership(pool, Eigen::VectorXd::Zero(5)), DimensionError);
}

TEST(Csv, ReadsAndNormalizes) {
  std::istringstream in("a,label,b\n3,0,4\n0,1,1\n6,1,8\n");
  const auto pool = read_pool_csv(in, CsvOptions{"label", 1});
  EXPECT_EQ(pool.size(), 3u);
  EXPECT_EQ(pool.dim(), 2);
  EXPECT_EQ(pool[0].label, 0);
  EXPECT_EQ(pool[1].label, 1);
  // scaled by the largest training norm (5); the reserve row is clipped to the ball
  EXPECT_NEAR(pool[0].features.norm(), 1.0, 1e-15);
  EXPECT_NEAR(pool[0].features[0], 0.6, 1e-15);
  EXPECT_NEAR(pool[1].features[1], 0.2, 1e-15);
  EXPECT_NEAR(pool[2].features.norm(), 1.0, 1e-15);
}

TEST(Csv, Errors) {
  auto read = [](const std::string& text, std::string label = "label") {
    std::istringstream in(text);
    return read_pool_csv(in, CsvOptions{label, 0});
  };
  EXPECT_THROW(read(""), IngestError);
  EXPECT_THROW(read("a,b\n1,2\n3,4\n"), IngestError);
  EXPECT_THROW(read("a,label\n1,0\n2\n"), IngestError);
  EXPECT_THROW(read("a,label\nx,0\n2,1\n"), IngestError);
  EXPECT_THROW(read("a,label\n1,cat\n2,1\n"), IngestError);
  EXPECT_THROW(read("a,label\nnan,0\n2,1\n"), IngestError);
  EXPECT_THROW(read("a,label\n1,0\n"), IngestError);
}

TEST(Csv, WriteReadRoundTrip) {
  const auto pool = test_util::random_pool(12, 3, 2, 8, 3);
  std::ostringstream out;
  write_pool_csv(out, pool);
  std::istringstream in(out.str());
  const auto back = read_pool_csv(in, CsvOptions{"label", 3});
  ASSERT_EQ(back.size(), pool.size());
  // the first pool is already inside the unit ball, so renormalizing rescales it
  // by the inverse of its largest training norm
  double max_norm = 0;
  for (std::size_t i = 0; i < pool.n_train(); ++i) max_norm = std::max(max_norm, pool[i].features.norm());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    EXPECT_EQ(back[i].label, pool[i].label);
    Eigen::VectorXd expect = pool[i].features / max_norm;
    if (expect.norm() > 1.0) expect /= expect.norm();
    EXPECT_LT((back[i].features - expect).norm(), 1e-12);
  }
}

TEST(SubsetFile, RoundTripAndErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "refit_test_subset";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "s.json").string();
  save_subset(path, Subset{1, 4, 7});
  EXPECT_EQ(load_subset(path), (Subset{1, 4, 7}));
  {
    std::ofstream(path) << "{\"a\": 1}";
  }
  EXPECT_THROW(load_subset(path), IngestError);
  {
    std::ofstream(path) << "[1, -2]";
  }
  EXPECT_THROW(load_subset(path), IngestError);
  EXPECT_THROW(load_subset((dir / "missing.json").string()), IngestError);
}
