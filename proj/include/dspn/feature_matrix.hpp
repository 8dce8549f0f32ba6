#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dspn/core.hpp"

namespace dspn {

// Rows are samples (trials or segments), columns named features. Stored
// row-major. Labels and row keys run parallel to the rows.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> columns, std::vector<double> values, std::vector<SeverityGrade> labels,
                std::vector<std::string> row_keys);

  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return columns_.size(); }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * columns_.size() + c]; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols(), cols()}; }
  std::vector<double> column(std::size_t c) const;

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<SeverityGrade>& labels() const { return labels_; }
  const std::vector<std::string>& row_keys() const { return row_keys_; }

  std::size_t column_index(const std::string& name) const;

  FeatureMatrix select_columns(std::span<const std::size_t> idx) const;
  FeatureMatrix select_columns(std::span<const std::string> names) const;
  FeatureMatrix select_rows(std::span<const std::size_t> idx) const;

  // Appends rows with the same schema.
  void append(const FeatureMatrix& other);

  std::array<std::size_t, kNumGrades> class_counts() const;

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::vector<std::string> columns_;
  std::vector<double> values_;
  std::vector<SeverityGrade> labels_;
  std::vector<std::string> row_keys_;
};

// FNV-1a over the ordered column names.
std::uint64_t schema_hash(std::span<const std::string> columns);

// CSV: header = feature names + "label" + "trial_id"; values in shortest
// round-trip form.
void write_feature_matrix_csv(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_feature_matrix_csv(const std::filesystem::path& path);

}  // namespace dspn
