#include "dspn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dspn/error.hpp"

namespace dspn {
namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

Confusion confusion_matrix(std::span<const SeverityGrade> truth, std::span<const SeverityGrade> predicted) {
  if (truth.size() != predicted.size()) throw InvalidInput("confusion matrix: label counts differ");
  Confusion c{};
  for (std::size_t i = 0; i < truth.size(); ++i) ++c[grade_index(truth[i])][grade_index(predicted[i])];
  return c;
}

Metrics metrics_from_confusion(const Confusion& c) {
  Metrics m;
  std::size_t total = 0, correct = 0;
  std::array<std::size_t, kNumGrades> row{}, col{};
  for (std::size_t t = 0; t < kNumGrades; ++t)
    for (std::size_t p = 0; p < kNumGrades; ++p) {
      total += c[t][p];
      row[t] += c[t][p];
      col[p] += c[t][p];
      if (t == p) correct += c[t][p];
    }
  if (total == 0) return m;
  m.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(total);

  std::size_t present = 0;
  for (std::size_t k = 0; k < kNumGrades; ++k) {
    const double tp = static_cast<double>(c[k][k]);
    const double fn = static_cast<double>(row[k]) - tp;
    const double fp = static_cast<double>(col[k]) - tp;
    const double tn = static_cast<double>(total) - tp - fn - fp;
    auto& r = m.per_class[k];
    r.sensitivity = 100.0 * ratio(tp, tp + fn);
    r.specificity = 100.0 * ratio(tn, tn + fp);
    r.precision = 100.0 * ratio(tp, tp + fp);
    r.f1 = ratio(2.0 * r.precision * r.sensitivity, r.precision + r.sensitivity);
    m.present[k] = row[k] + col[k] > 0;
    if (!m.present[k]) continue;
    ++present;
    m.sensitivity += r.sensitivity;
    m.specificity += r.specificity;
    m.precision += r.precision;
    m.f1 += r.f1;
  }
  const double n = static_cast<double>(present);
  m.sensitivity /= n;
  m.specificity /= n;
  m.precision /= n;
  m.f1 /= n;
  return m;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw InvalidInput("roc: score and label counts differ");
  const auto pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double neg = static_cast<double>(positive.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw InvalidInput("roc: need at least one positive and one negative");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> roc{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    const double s = scores[idx[i]];
    for (; i < idx.size() && scores[idx[i]] == s; ++i) (positive[idx[i]] ? tp : fp) += 1.0;
    roc.push_back({fp / neg, tp / pos, s});
  }
  return roc;
}

double auc_trapezoid(std::span<const RocPoint> roc) {
  double a = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i)
    a += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) * 0.5;
  return a;
}

MeanStd mean_std(std::span<const double> v) {
  MeanStd r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return r;
  double s = 0.0;
  for (double x : v) s += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(s / static_cast<double>(v.size() - 1));
  return r;
}

}  // namespace dspn
