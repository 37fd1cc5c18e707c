#include "refit/data.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "refit/errors.hpp"

namespace refit {

Subset::Subset(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  for (std::size_t i = 1; i < indices_.size(); ++i) {
    if (indices_[i] <= indices_[i - 1]) {
      throw InvalidArgument("subset indices must be strictly increasing");
    }
  }
}

Subset Subset::from_unsorted(std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  return Subset(std::move(indices));
}

Subset Subset::range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> out;
  out.reserve(end > begin ? end - begin : 0);
  for (std::size_t i = begin; i < end; ++i) out.push_back(i);
  return Subset(std::move(out));
}

bool Subset::contains(std::size_t index) const {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

Subset Subset::with(std::size_t index) const {
  if (contains(index)) return *this;
  std::vector<std::size_t> out = indices_;
  out.insert(std::upper_bound(out.begin(), out.end(), index), index);
  return Subset(std::move(out));
}

Subset Subset::without(const Subset& removed) const {
  std::vector<std::size_t> out;
  std::set_difference(indices_.begin(), indices_.end(), removed.begin(),
                      removed.end(), std::back_inserter(out));
  return Subset(std::move(out));
}

Subset Subset::merged(const Subset& other) const {
  std::vector<std::size_t> out;
  std::set_union(indices_.begin(), indices_.end(), other.begin(), other.end(),
                 std::back_inserter(out));
  return Subset(std::move(out));
}

DataPool::DataPool(std::vector<DataPoint> points, std::size_t n_reserve,
                   int num_classes)
    : points_(std::move(points)), n_reserve_(n_reserve), num_classes_(num_classes) {
  if (points_.empty()) throw InvalidArgument("data pool is empty");
  if (n_reserve_ >= points_.size()) {
    throw InvalidArgument("reserve segment leaves no training points");
  }
  if (num_classes_ < 2) throw InvalidArgument("need at least two classes");
  dim_ = static_cast<int>(points_.front().features.size());
  for (const auto& p : points_) {
    if (p.features.size() != dim_) {
      throw DimensionError("data points disagree on feature dimension");
    }
    if (p.label < 0 || p.label >= num_classes_) {
      throw InvalidArgument("label outside [0, K)");
    }
  }
  hash_ = compute_hash();
}

void DataPool::check(const Subset& subset) const {
  if (!subset.empty() && subset.indices().back() >= size()) {
    throw InvalidArgument("subset index " +
                          std::to_string(subset.indices().back()) +
                          " outside pool of size " + std::to_string(size()));
  }
}

std::string DataPool::compute_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(points_.size());
  mix(n_reserve_);
  mix(static_cast<std::uint64_t>(dim_));
  mix(static_cast<std::uint64_t>(num_classes_));
  for (const auto& p : points_) {
    mix(static_cast<std::uint64_t>(p.label));
    for (Eigen::Index j = 0; j < p.features.size(); ++j) {
      mix(std::bit_cast<std::uint64_t>(p.features[j]));
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t slot_width(const DataPool& pool) {
  return static_cast<std::size_t>(pool.dim() + pool.num_classes() + 1);
}

std::size_t encoding_size(const DataPool& pool) {
  return pool.size() * slot_width(pool);
}

SubsetEncoding encode(const DataPool& pool, const Subset& subset) {
  pool.check(subset);
  const std::size_t width = slot_width(pool);
  SubsetEncoding enc = SubsetEncoding::Zero(static_cast<Eigen::Index>(encoding_size(pool)));
  const auto d = pool.dim();
  for (const std::size_t i : subset) {
    const auto base = static_cast<Eigen::Index>(i * width);
    enc.segment(base, d) = pool[i].features;
    enc[base + d + pool[i].label] = 1.0;
    enc[base + d + pool.num_classes()] = 1.0;
  }
  return enc;
}

Subset decode_membership(const DataPool& pool, const SubsetEncoding& enc) {
  if (static_cast<std::size_t>(enc.size()) != encoding_size(pool)) {
    throw DimensionError("encoding length does not match pool");
  }
  const std::size_t width = slot_width(pool);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (enc[static_cast<Eigen::Index>(i * width + width - 1)] >= 0.5) {
      members.push_back(i);
    }
  }
  return Subset(std::move(members));
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    cells.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return cells;
}

std::string where(std::size_t row, const std::string& column) {
  return "row " + std::to_string(row) + ", column '" + column + "'";
}

}  // namespace

DataPool read_pool_csv(std::istream& in, const CsvOptions& options) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError("CSV is empty");
  const auto header = split_row(line);
  const auto label_it =
      std::find(header.begin(), header.end(), options.label_column);
  if (label_it == header.end()) {
    throw IngestError("label column '" + options.label_column +
                      "' not found in CSV header");
  }
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1) throw IngestError("CSV has no feature columns");

  std::vector<DataPoint> points;
  int max_label = 0;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size()) {
      throw IngestError("row " + std::to_string(row) + " has " +
                        std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(header.size()));
    }
    DataPoint p;
    p.features.resize(d);
    int f = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      if (c == label_col) {
        int label = -1;
        const auto [ptr, ec] =
            std::from_chars(cell.data(), cell.data() + cell.size(), label);
        if (ec != std::errc{} || ptr != cell.data() + cell.size() || label < 0) {
          throw IngestError("unknown label value '" + cell + "' at " +
                            where(row, header[c]));
        }
        p.label = label;
        max_label = std::max(max_label, label);
        continue;
      }
      double value = 0.0;
      try {
        std::size_t used = 0;
        value = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw IngestError("non-numeric feature '" + cell + "' at " +
                          where(row, header[c]));
      }
      if (!std::isfinite(value)) {
        throw IngestError("non-finite feature at " + where(row, header[c]));
      }
      p.features[f++] = value;
    }
    points.push_back(std::move(p));
  }
  if (points.size() < 2) throw IngestError("CSV needs at least two data rows");
  if (options.n_reserve >= points.size()) {
    throw IngestError("reserve count leaves no training rows");
  }

  normalize_features(points, points.size() - options.n_reserve);
  return DataPool(std::move(points), options.n_reserve, std::max(2, max_label + 1));
}

void normalize_features(std::vector<DataPoint>& points, std::size_t n_train) {
  double max_norm = 0.0;
  for (std::size_t i = 0; i < n_train && i < points.size(); ++i) {
    max_norm = std::max(max_norm, points[i].features.norm());
  }
  if (max_norm <= 0.0) return;
  for (auto& p : points) {
    p.features /= max_norm;
    const double norm = p.features.norm();
    if (norm > 1.0) p.features /= norm;
  }
}

DataPool load_pool(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path);
  return read_pool_csv(in, options);
}

void write_pool_csv(std::ostream& out, const DataPool& pool) {
  for (int j = 0; j < pool.dim(); ++j) out << 'f' << j << ',';
  out << "label\n";
  out << std::setprecision(17);
  for (const auto& p : pool.points()) {
    for (int j = 0; j < pool.dim(); ++j) out << p.features[j] << ',';
    out << p.label << '\n';
  }
}

Subset load_subset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(path + ": " + e.what());
  }
  if (!j.is_array()) throw IngestError(path + ": subset must be a JSON array");
  std::vector<std::size_t> indices;
  for (const auto& v : j) {
    if (!v.is_number_unsigned()) {
      throw IngestError(path + ": subset entries must be non-negative integers");
    }
    indices.push_back(v.get<std::size_t>());
  }
  return Subset::from_unsorted(std::move(indices));
}

void save_subset(const std::string& path, const Subset& subset) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write " + path);
  out << nlohmann::json(std::vector<std::size_t>(subset.begin(), subset.end())).dump()
      << '\n';
}

}  // namespace refit
