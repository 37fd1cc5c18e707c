#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace refit {

struct DataPoint {
  Eigen::VectorXd features;
  int label = 0;  // class index in [0, K)
};

/// Sorted, duplicate-free list of pool indices.
class Subset {
 public:
  Subset() = default;
  /// Requires strictly increasing indices; throws InvalidArgument otherwise.
  explicit Subset(std::vector<std::size_t> indices);
  Subset(std::initializer_list<std::size_t> indices)
      : Subset(std::vector<std::size_t>(indices)) {}

  /// Sorts and removes duplicates (bootstrap draws collapse to a set).
  static Subset from_unsorted(std::vector<std::size_t> indices);
  static Subset range(std::size_t begin, std::size_t end);

  std::span<const std::size_t> indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  bool contains(std::size_t index) const;
  std::size_t operator[](std::size_t i) const { return indices_[i]; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  Subset with(std::size_t index) const;
  Subset without(const Subset& removed) const;
  Subset merged(const Subset& other) const;

  friend bool operator==(const Subset&, const Subset&) = default;

 private:
  std::vector<std::size_t> indices_;
};

// The fixed universe every subset indexes into. Training slots come first,
// reserve slots (used for addition and as the evaluation set) trail them.
// Slot identity is positional and never changes.
class DataPool {
 public:
  DataPool(std::vector<DataPoint> points, std::size_t n_reserve,
           int num_classes);

  std::size_t size() const { return points_.size(); }
  std::size_t n_train() const { return points_.size() - n_reserve_; }
  std::size_t n_reserve() const { return n_reserve_; }
  int dim() const { return dim_; }
  int num_classes() const { return num_classes_; }

  const DataPoint& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<DataPoint>& points() const { return points_; }

  Subset train_subset() const { return Subset::range(0, n_train()); }
  Subset reserve_subset() const { return Subset::range(n_train(), size()); }
  Subset all() const { return Subset::range(0, size()); }

  /// Throws InvalidArgument if any index is outside the pool.
  void check(const Subset& subset) const;

  /// 64-bit FNV-1a digest over dimensions, labels and feature bit patterns,
  /// rendered as 16 hex digits. Used to bind artifacts to their pool.
  const std::string& hash() const { return hash_; }

 private:
  std::string compute_hash() const;

  std::vector<DataPoint> points_;
  std::string hash_;
  std::size_t n_reserve_ = 0;
  int dim_ = 0;
  int num_classes_ = 2;
};

/// Concatenated (features[d], one-hot label[K], mask) per pool slot.
using SubsetEncoding = Eigen::VectorXd;

std::size_t slot_width(const DataPool& pool);
std::size_t encoding_size(const DataPool& pool);

SubsetEncoding encode(const DataPool& pool, const Subset& subset);

/// Recovers membership from mask bits (>= 0.5).
Subset decode_membership(const DataPool& pool, const SubsetEncoding& enc);

struct CsvOptions {
  std::string label_column = "label";
  std::size_t n_reserve = 0;
};

// Reads a headered CSV. Every column except the label column is a numeric
// feature; labels are non-negative integer class ids. Features are divided
// by the largest row norm in the training segment and clamped to the unit
// ball, so loading an already-normalized file is a no-op.
DataPool load_pool(const std::string& path, const CsvOptions& options);
/// The loader's scaling rule: divide by the largest norm among the first
/// n_train points, then clamp every point to the unit ball.
void normalize_features(std::vector<DataPoint>& points, std::size_t n_train);
DataPool read_pool_csv(std::istream& in, const CsvOptions& options);

/// Writes the pool as CSV (features f0..f{d-1} then `label`).
void write_pool_csv(std::ostream& out, const DataPool& pool);

Subset load_subset(const std::string& path);
void save_subset(const std::string& path, const Subset& subset);

}  // namespace refit
