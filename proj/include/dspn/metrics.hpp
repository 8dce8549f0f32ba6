#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dspn/core.hpp"

namespace dspn {

// confusion[true][predicted], indexed by grade_index.
using Confusion = std::array<std::array<std::size_t, kNumGrades>, kNumGrades>;

Confusion confusion_matrix(std::span<const SeverityGrade> truth, std::span<const SeverityGrade> predicted);

struct ClassRates {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

// All values in percent. Macro averages run over the classes that occur in
// the matrix (as a true label or a prediction); 0/0 counts as 0.
struct Metrics {
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  std::array<ClassRates, kNumGrades> per_class{};
  std::array<bool, kNumGrades> present{};
};

Metrics metrics_from_confusion(const Confusion& c);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

// One point per distinct score, descending threshold, from (0,0) to (1,1).
// Requires at least one positive and one negative.
std::vector<RocPoint> roc_curve(std::span<const double> scores, const std::vector<bool>& positive);
double auc_trapezoid(std::span<const RocPoint> roc);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample (n-1); 0 for a single value
};

MeanStd mean_std(std::span<const double> v);

// Cross-validated evaluation. Fold-level metrics give mean +- std; the
// pooled confusion gives the pooled figures. ROC/AUC are one-vs-rest for
// Absent on the pooled held-out scores.
struct MetricsReport {
  MeanStd accuracy, sensitivity, specificity, precision, f1;
  Metrics pooled;
  Confusion confusion{};
  double auc = 0.0;
  std::array<double, kNumGrades> class_auc{};
  std::array<bool, kNumGrades> class_auc_defined{};
  std::vector<RocPoint> roc;
  std::vector<Metrics> folds;
};

}  // namespace dspn
