#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "learn_internal.hpp"

namespace dspn::learn {
namespace {

constexpr double kRidge = 1e-6;
constexpr double kVarianceFloor = 1e-9;

void start(Model& model, const FeatureMatrix& m, Method method) {
  if (m.rows() == 0) throw TrainingError("cannot train on an empty matrix");
  model.method = method;
  model.columns = m.columns();
  model.schema = schema_hash(m.columns());
  const auto counts = m.class_counts();
  for (std::size_t c = 0; c < kNumGrades; ++c)
    if (counts[c] > 0) model.classes.push_back(kAllGrades[c]);
  if (model.classes.size() < 2)
    throw TrainingError("training data holds a single class (" + std::string(grade_name(model.classes[0])) + ")");

  // Features are standardized with training statistics; a constant column
  // keeps scale 1.
  const std::size_t p = m.cols(), n = m.rows();
  model.center.assign(p, 0.0);
  model.scale.assign(p, 1.0);
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += m(i, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (m(i, j) - mean) * (m(i, j) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    model.center[j] = mean;
    if (sd > 0.0) model.scale[j] = sd;
  }
}

std::vector<double> standardize(const Model& model, std::span<const double> row) {
  std::vector<double> z(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) z[j] = (row[j] - model.center[j]) / model.scale[j];
  return z;
}

Posterior softmax(const std::vector<double>& logits, const std::vector<SeverityGrade>& classes) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  Posterior s{};
  double sum = 0.0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const double e = std::exp(logits[c] - mx);
    s[grade_index(classes[c])] = e;
    sum += e;
  }
  for (double& v : s) v /= sum;
  return s;
}

}  // namespace

Model train_knn(const FeatureMatrix& m, int k) {
  if (k < 1) throw InvalidInput("knn k must be >= 1");
  Model model;
  start(model, m, Method::KNN);
  if (static_cast<std::size_t>(k) > m.rows()) throw TrainingError("knn k exceeds the number of training rows");
  model.knn_k = k;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto z = standardize(model, m.row(i));
    model.train_x.insert(model.train_x.end(), z.begin(), z.end());
  }
  model.train_y = m.labels();
  return model;
}

Model train_lda(const FeatureMatrix& m) {
  Model model;
  start(model, m, Method::LDA);
  const std::size_t n = m.rows(), p = m.cols(), k = model.classes.size();
  if (n <= k) throw TrainingError("LDA needs more rows than classes");

  std::vector<Eigen::VectorXd> mu(k, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p)));
  std::vector<std::size_t> count(k, 0);
  std::vector<std::size_t> slot(kNumGrades, 0);
  for (std::size_t c = 0; c < k; ++c) slot[grade_index(model.classes[c])] = c;
  std::vector<Eigen::VectorXd> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = standardize(model, m.row(i));
    z[i] = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(p));
    const auto c = slot[grade_index(m.labels()[i])];
    mu[c] += z[i];
    ++count[c];
  }
  for (std::size_t c = 0; c < k; ++c) mu[c] /= static_cast<double>(count[c]);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd d = z[i] - mu[slot[grade_index(m.labels()[i])]];
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(n - k);
  cov.diagonal().array() += kRidge;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw TrainingError("LDA pooled covariance is singular even after ridge");

  for (std::size_t c = 0; c < k; ++c) {
    const Eigen::VectorXd a = llt.solve(mu[c]);
    if (!a.allFinite()) throw TrainingError("LDA solve produced non-finite coefficients");
    model.coef.emplace_back(a.data(), a.data() + a.size());
    model.intercept.push_back(-0.5 * mu[c].dot(a) + std::log(static_cast<double>(count[c]) / static_cast<double>(n)));
  }
  return model;
}

Model train_gaussian_nb(const FeatureMatrix& m) {
  Model model;
  start(model, m, Method::GaussianNB);
  const std::size_t n = m.rows(), p = m.cols(), k = model.classes.size();
  model.means.assign(k, std::vector<double>(p, 0.0));
  model.variances.assign(k, std::vector<double>(p, 0.0));
  std::vector<std::size_t> count(k, 0), slot(kNumGrades, 0);
  for (std::size_t c = 0; c < k; ++c) slot[grade_index(model.classes[c])] = c;
  std::vector<std::vector<double>> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = standardize(model, m.row(i));
    const auto c = slot[grade_index(m.labels()[i])];
    ++count[c];
    for (std::size_t j = 0; j < p; ++j) model.means[c][j] += z[i][j];
  }
  for (std::size_t c = 0; c < k; ++c)
    for (auto& v : model.means[c]) v /= static_cast<double>(count[c]);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = slot[grade_index(m.labels()[i])];
    for (std::size_t j = 0; j < p; ++j) model.variances[c][j] += std::pow(z[i][j] - model.means[c][j], 2);
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (auto& v : model.variances[c]) v = std::max(v / static_cast<double>(count[c]), kVarianceFloor);
    model.log_prior.push_back(std::log(static_cast<double>(count[c]) / static_cast<double>(n)));
  }
  return model;
}

Posterior baseline_scores(const Model& model, std::span<const double> row) {
  const auto z = standardize(model, row);
  const std::size_t p = z.size();
  switch (model.method) {
    case Method::KNN: {
      const std::size_t n = model.train_y.size();
      std::vector<std::pair<double, std::size_t>> d(n);
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) s += std::pow(z[j] - model.train_x[i * p + j], 2);
        d[i] = {s, i};
      }
      const auto k = static_cast<std::size_t>(model.knn_k);
      std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
      Posterior s{};
      for (std::size_t i = 0; i < k; ++i) s[grade_index(model.train_y[d[i].second])] += 1.0 / static_cast<double>(k);
      return s;
    }
    case Method::LDA: {
      std::vector<double> logits;
      for (std::size_t c = 0; c < model.classes.size(); ++c) {
        double v = model.intercept[c];
        for (std::size_t j = 0; j < p; ++j) v += model.coef[c][j] * z[j];
        logits.push_back(v);
      }
      return softmax(logits, model.classes);
    }
    case Method::GaussianNB: {
      std::vector<double> logits;
      for (std::size_t c = 0; c < model.classes.size(); ++c) {
        double v = model.log_prior[c];
        for (std::size_t j = 0; j < p; ++j) {
          const double var = model.variances[c][j];
          v -= 0.5 * (std::log(2.0 * 3.141592653589793 * var) + std::pow(z[j] - model.means[c][j], 2) / var);
        }
        logits.push_back(v);
      }
      return softmax(logits, model.classes);
    }
    default:
      throw PredictionError("not a baseline model");
  }
}

}  // namespace dspn::learn
