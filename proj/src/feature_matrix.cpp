#include "dspn/feature_matrix.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dspn {

FeatureMatrix::FeatureMatrix(std::vector<std::string> columns, std::vector<double> values,
                             std::vector<SeverityGrade> labels, std::vector<std::string> row_keys)
    : columns_(std::move(columns)), values_(std::move(values)), labels_(std::move(labels)), row_keys_(std::move(row_keys)) {
  if (values_.size() != labels_.size() * columns_.size())
    throw InvalidInput("feature matrix: value count does not match rows x columns");
  if (row_keys_.size() != labels_.size()) throw InvalidInput("feature matrix: one row key per row required");
  std::set<std::string> seen;
  for (const auto& c : columns_)
    if (!seen.insert(c).second) throw InvalidInput("feature matrix: duplicate column '" + c + "'");
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidInput("feature matrix: non-finite entry");
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = (*this)(r, c);
  return out;
}

std::size_t FeatureMatrix::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i] == name) return i;
  throw InvalidInput("feature matrix has no column '" + name + "'");
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> idx) const {
  std::vector<std::string> cols;
  for (auto i : idx) cols.push_back(columns_.at(i));
  std::vector<double> vals;
  vals.reserve(rows() * idx.size());
  for (std::size_t r = 0; r < rows(); ++r)
    for (auto i : idx) vals.push_back((*this)(r, i));
  return FeatureMatrix(std::move(cols), std::move(vals), labels_, row_keys_);
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::string> names) const {
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(column_index(n));
  return select_columns(idx);
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> idx) const {
  std::vector<double> vals;
  vals.reserve(idx.size() * cols());
  std::vector<SeverityGrade> labels;
  std::vector<std::string> keys;
  for (auto r : idx) {
    const auto rr = row(r);
    vals.insert(vals.end(), rr.begin(), rr.end());
    labels.push_back(labels_.at(r));
    keys.push_back(row_keys_.at(r));
  }
  return FeatureMatrix(columns_, std::move(vals), std::move(labels), std::move(keys));
}

void FeatureMatrix::append(const FeatureMatrix& other) {
  if (other.columns_ != columns_) throw InvalidInput("cannot append rows with a different schema");
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
  row_keys_.insert(row_keys_.end(), other.row_keys_.begin(), other.row_keys_.end());
}

std::array<std::size_t, kNumGrades> FeatureMatrix::class_counts() const {
  std::array<std::size_t, kNumGrades> c{};
  for (auto g : labels_) ++c[grade_index(g)];
  return c;
}

std::uint64_t schema_hash(std::span<const std::string> columns) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (const auto& c : columns) {
    for (unsigned char ch : c) feed(ch);
    feed(0x1f);
  }
  return h;
}

void write_feature_matrix_csv(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  std::string buf;
  for (const auto& c : m.columns()) buf += c + ",";
  buf += "label,trial_id\n";
  char num[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (double v : m.row(r)) {
      auto res = std::to_chars(num, num + sizeof(num), v);
      buf.append(num, res.ptr);
      buf.push_back(',');
    }
    buf += std::string(grade_name(m.labels()[r])) + "," + m.row_keys()[r] + "\n";
  }
  out << buf;
  if (!out) throw IoError("write failed for " + path.string());
}

FeatureMatrix read_feature_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) {
      if (!c.empty() && c.back() == '\r') c.pop_back();
      cells.push_back(c);
    }
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw LoadError(path.string() + ": empty feature matrix file");
  auto header = split(line);
  if (header.size() < 2 || header[header.size() - 2] != "label" || header.back() != "trial_id")
    throw LoadError(path.string() + ": header must end with label,trial_id");
  std::vector<std::string> cols(header.begin(), header.end() - 2);
  std::vector<double> vals;
  std::vector<SeverityGrade> labels;
  std::vector<std::string> keys;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size())
      throw LoadError(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
    for (std::size_t i = 0; i < cols.size(); ++i) {
      double v = 0.0;
      const auto& s = cells[i];
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw LoadError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + s + "'");
      vals.push_back(v);
    }
    labels.push_back(parse_grade(cells[cols.size()]));
    keys.push_back(cells.back());
  }
  try {
    return FeatureMatrix(std::move(cols), std::move(vals), std::move(labels), std::move(keys));
  } catch (const InvalidInput& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

}  // namespace dspn
