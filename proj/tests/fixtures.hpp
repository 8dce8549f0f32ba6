#pragma once

// Small matrix builders shared by the learn and selection tests.

#include <cstdio>
#include <string>
#include <vector>

#include "dspn/feature_matrix.hpp"
#include "dspn/rng.hpp"

namespace fixtures {

inline std::string row_key(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "r%05zu", i);
  return buf;
}

// rows[i] is one sample.
inline dspn::FeatureMatrix matrix(const std::vector<std::vector<double>>& rows,
                                  const std::vector<dspn::SeverityGrade>& labels) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < (rows.empty() ? 0 : rows[0].size()); ++j) names.push_back("f" + std::to_string(j));
  std::vector<double> vals;
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    vals.insert(vals.end(), rows[i].begin(), rows[i].end());
    keys.push_back(row_key(i));
  }
  return dspn::FeatureMatrix(names, vals, labels, keys);
}

// Gaussian blobs: class c centred at sep * e_c (first 4 coordinates), unit
// variance, `extra` noise columns appended.
inline dspn::FeatureMatrix blobs(std::vector<std::size_t> per_class, double sep, std::uint64_t seed,
                                 std::size_t extra = 0) {
  auto rng = dspn::make_rng(seed, {});
  std::vector<std::vector<double>> rows;
  std::vector<dspn::SeverityGrade> labels;
  for (std::size_t c = 0; c < per_class.size(); ++c)
    for (std::size_t i = 0; i < per_class[c]; ++i) {
      std::vector<double> r(4 + extra);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] = (j == c ? sep : 0.0) + dspn::normal01(rng);
      rows.push_back(r);
      labels.push_back(dspn::kAllGrades[c]);
    }
  return matrix(rows, labels);
}

}  // namespace fixtures
