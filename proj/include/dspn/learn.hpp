#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dspn/feature_matrix.hpp"
#include "dspn/metrics.hpp"

namespace dspn::learn {

using Posterior = std::array<double, kNumGrades>;

struct TreeParams {
  int max_splits = 71;
  int min_leaf = 1;                    // rows with positive weight per child
  std::optional<int> vars_per_split;   // empty = all features

  void validate() const;
  bool operator==(const TreeParams&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1;     // x <= threshold
  int right = -1;
  Posterior posterior{};

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;     // nodes[0] is the root
  std::vector<int> split_order;    // internal node ids in the order they were split

  const Posterior& posterior(std::span<const double> row) const;
  std::size_t splits() const { return split_order.size(); }
  bool operator==(const DecisionTree&) const = default;
};

// Column-major copy of a matrix with each feature's rows presorted once, so
// that repeated tree fits (boosting, bagging) skip the sort.
class TrainingData {
 public:
  explicit TrainingData(const FeatureMatrix& m);

  std::size_t rows() const { return n_; }
  std::size_t features() const { return p_; }
  double x(std::size_t row, std::size_t feature) const { return x_[feature * n_ + row]; }
  std::size_t y(std::size_t row) const { return y_[row]; }
  std::span<const std::uint32_t> sorted(std::size_t feature) const { return {&order_[feature * n_], n_}; }

 private:
  std::size_t n_ = 0, p_ = 0;
  std::vector<double> x_;
  std::vector<std::size_t> y_;
  std::vector<std::uint32_t> order_;
};

// Best-first CART on weighted Gini impurity. Rows with zero weight are
// ignored. Split ties go to the lower feature index, then the lower
// threshold.
DecisionTree train_tree(const TrainingData& data, std::span<const double> weights, const TreeParams& params,
                        std::uint64_t seed);
DecisionTree train_tree(const FeatureMatrix& m, std::span<const double> weights, const TreeParams& params,
                        std::uint64_t seed);

enum class Method { AdaBoostM2, Bag, KNN, LDA, GaussianNB };
std::string_view method_name(Method m);
Method parse_method(std::string_view s);

struct TrainerSpec {
  Method method = Method::AdaBoostM2;
  int cycles = 305;
  double learn_rate = 0.96;  // recorded but unused for Bag
  TreeParams tree;
  int knn_k = 5;

  static TrainerSpec adaboost_m2();  // 305 cycles, rate 0.96, 71 splits
  static TrainerSpec bag();          // 305 cycles, 430 splits, 5 vars per split
  void validate() const;
  bool operator==(const TrainerSpec&) const = default;
};

struct Model {
  Method method = Method::AdaBoostM2;
  std::vector<std::string> columns;
  std::uint64_t schema = 0;
  std::vector<SeverityGrade> classes;  // present in training, grade order

  // Ensembles.
  int n_cycles = 0;
  double learn_rate = 0.0;
  TreeParams tree;
  std::vector<DecisionTree> learners;
  std::vector<double> learner_weights;          // AdaBoost.M2 only
  std::vector<std::vector<std::uint32_t>> inbag;  // Bag only: bootstrap rows per tree; not serialized

  // KNN: standardized training rows.
  int knn_k = 0;
  std::vector<double> center, scale, train_x;
  std::vector<SeverityGrade> train_y;

  // LDA: score_c(x) = coef[c].x + intercept[c]; GaussianNB: means, variances, log priors.
  std::vector<std::vector<double>> coef, means, variances;
  std::vector<double> intercept, log_prior;
};

struct Predictions {
  std::vector<SeverityGrade> labels;
  std::vector<Posterior> scores;  // sum to 1 per row, indexed by grade
};

// Row schema must match the training columns exactly.
Predictions predict(const Model& model, const FeatureMatrix& rows);

struct AdaBoostTrace {
  std::vector<double> pseudo_loss;         // per retained learner
  std::vector<double> distribution_sum;    // after each update
  std::vector<bool> resampled;             // learner trained on a weighted bootstrap
  bool stopped_on_loss = false;            // a later learner reached pseudo-loss >= 0.5
};

Model train_adaboost_m2(const FeatureMatrix& m, int cycles, double learn_rate, const TreeParams& tree,
                        std::uint64_t seed, AdaBoostTrace* trace = nullptr);
Model train_bagged_forest(const FeatureMatrix& m, int cycles, const TreeParams& tree, std::uint64_t seed,
                          double recorded_learn_rate = 0.0);
Model train_knn(const FeatureMatrix& m, int k);
Model train_lda(const FeatureMatrix& m);
Model train_gaussian_nb(const FeatureMatrix& m);
Model train(const FeatureMatrix& m, const TrainerSpec& spec, std::uint64_t seed);

struct OobResult {
  std::vector<std::array<std::size_t, kNumGrades>> votes;  // per training row
  std::vector<std::optional<SeverityGrade>> labels;        // empty when never out of bag
  std::size_t covered = 0;
  double accuracy = 0.0;  // percent over covered rows
};

// Out-of-bag votes of a bagged forest on its own training matrix.
OobResult oob_predict(const Model& forest, const FeatureMatrix& training);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

// Oversamples every class to the majority count. Synthetic rows are appended
// after the originals with keys "smote:<base key>:<n>".
FeatureMatrix smote_balance(const FeatureMatrix& m, int k, std::uint64_t seed);

// Fold index per row. Rows are taken in row-key order, each class shuffled
// with the seed and dealt round-robin, continuing where the previous class
// stopped.
std::vector<int> stratified_kfold(std::span<const SeverityGrade> labels, std::span<const std::string> row_keys, int k,
                                  std::uint64_t seed);

struct CvConfig {
  int folds = 10;
  std::uint64_t seed = 0;
  bool smote = true;            // balance each training split
  bool smote_before_cv = false;  // balance the whole matrix first (leaks)
  int smote_k = 5;
};

MetricsReport evaluate_cv(const FeatureMatrix& m, const TrainerSpec& spec, const CvConfig& cfg);
MetricsReport evaluate_cv_serial(const FeatureMatrix& m, const TrainerSpec& spec, const CvConfig& cfg);

// Builds a report from held-out predictions. `fold` assigns each row.
MetricsReport summarize_predictions(std::span<const SeverityGrade> truth, const Predictions& pred,
                                    std::span<const int> fold, int folds);

}  // namespace dspn::learn
