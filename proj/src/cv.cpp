#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "dspn/learn.hpp"
#include "dspn/log.hpp"
#include "dspn/rng.hpp"

namespace dspn::learn {

FeatureMatrix smote_balance(const FeatureMatrix& m, int k, std::uint64_t seed) {
  if (k < 1) throw InvalidInput("SMOTE k must be >= 1");
  const auto counts = m.class_counts();
  const std::size_t target = *std::max_element(counts.begin(), counts.end());
  const std::size_t p = m.cols();

  std::vector<double> vals;
  std::vector<SeverityGrade> labels;
  std::vector<std::string> keys;
  for (std::size_t c = 0; c < kNumGrades; ++c) {
    const std::size_t nc = counts[c];
    if (nc == 0 || nc == target) continue;
    const auto grade = kAllGrades[c];
    if (nc == 1)
      throw CannotBalance("SMOTE: class " + std::string(grade_name(grade)) + " has a single row");
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), nc - 1);
    if (kk < static_cast<std::size_t>(k))
      log::warn("SMOTE: k clamped to " + std::to_string(kk) + " for class " + std::string(grade_name(grade)));

    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < m.rows(); ++r)
      if (m.labels()[r] == grade) rows.push_back(r);

    // k nearest same-class neighbours per row (Euclidean, ties by position).
    std::vector<std::vector<std::size_t>> nn(nc);
    for (std::size_t a = 0; a < nc; ++a) {
      std::vector<std::pair<double, std::size_t>> d;
      for (std::size_t b = 0; b < nc; ++b) {
        if (a == b) continue;
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) s += std::pow(m(rows[a], j) - m(rows[b], j), 2);
        d.push_back({s, b});
      }
      std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
      for (std::size_t i = 0; i < kk; ++i) nn[a].push_back(d[i].second);
    }

    auto rng = make_rng(seed, {c});
    for (std::size_t j = 0; j < target - nc; ++j) {
      const std::size_t a = j % nc;
      const std::size_t b = nn[a][uniform_index(rng, kk)];
      const double u = uniform01(rng);
      const auto xa = m.row(rows[a]);
      const auto xb = m.row(rows[b]);
      for (std::size_t f = 0; f < p; ++f) {
        const double v = xa[f] + u * (xb[f] - xa[f]);
        vals.push_back(std::clamp(v, std::min(xa[f], xb[f]), std::max(xa[f], xb[f])));
      }
      labels.push_back(grade);
      keys.push_back("smote:" + m.row_keys()[rows[a]] + ":" + std::to_string(j));
    }
  }
  FeatureMatrix out = m;
  if (!labels.empty()) out.append(FeatureMatrix(m.columns(), std::move(vals), std::move(labels), std::move(keys)));
  return out;
}

std::vector<int> stratified_kfold(std::span<const SeverityGrade> labels, std::span<const std::string> row_keys, int k,
                                  std::uint64_t seed) {
  if (k < 2) throw InvalidInput("k-fold needs k >= 2");
  if (labels.size() != row_keys.size()) throw InvalidInput("k-fold: one row key per label required");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row_keys[a] < row_keys[b]; });

  std::vector<int> fold(labels.size(), -1);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < kNumGrades; ++c) {
    std::vector<std::size_t> rows;
    for (auto r : order)
      if (grade_index(labels[r]) == c) rows.push_back(r);
    if (rows.empty()) continue;
    if (rows.size() < static_cast<std::size_t>(k))
      throw StratificationError("class " + std::string(grade_name(kAllGrades[c])) + " has " +
                                std::to_string(rows.size()) + " rows, fewer than " + std::to_string(k) + " folds");
    auto rng = make_rng(seed, {c});
    dspn::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t i = 0; i < rows.size(); ++i)
      fold[rows[i]] = static_cast<int>((offset + i) % static_cast<std::size_t>(k));
    offset = (offset + rows.size()) % static_cast<std::size_t>(k);
  }
  return fold;
}

MetricsReport summarize_predictions(std::span<const SeverityGrade> truth, const Predictions& pred,
                                    std::span<const int> fold, int folds) {
  const std::size_t n = truth.size();
  if (pred.labels.size() != n || pred.scores.size() != n || fold.size() != n)
    throw InvalidInput("summarize: prediction and label counts differ");
  MetricsReport rep;
  rep.confusion = confusion_matrix(truth, pred.labels);
  rep.pooled = metrics_from_confusion(rep.confusion);

  std::vector<double> acc, sens, spec, prec, f1;
  for (int f = 0; f < folds; ++f) {
    Confusion c{};
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      if (fold[i] == f) {
        ++c[grade_index(truth[i])][grade_index(pred.labels[i])];
        any = true;
      }
    if (!any) continue;
    const auto m = metrics_from_confusion(c);
    rep.folds.push_back(m);
    acc.push_back(m.accuracy);
    sens.push_back(m.sensitivity);
    spec.push_back(m.specificity);
    prec.push_back(m.precision);
    f1.push_back(m.f1);
  }
  rep.accuracy = mean_std(acc);
  rep.sensitivity = mean_std(sens);
  rep.specificity = mean_std(spec);
  rep.precision = mean_std(prec);
  rep.f1 = mean_std(f1);

  for (std::size_t c = 0; c < kNumGrades; ++c) {
    std::vector<double> s(n);
    std::vector<bool> pos(n);
    std::size_t npos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = pred.scores[i][c];
      pos[i] = grade_index(truth[i]) == c;
      npos += pos[i];
    }
    if (npos == 0 || npos == n) continue;
    auto roc = roc_curve(s, pos);
    rep.class_auc[c] = auc_trapezoid(roc);
    rep.class_auc_defined[c] = true;
    if (c == grade_index(SeverityGrade::Absent)) {
      rep.auc = rep.class_auc[c];
      rep.roc = std::move(roc);
    }
  }
  return rep;
}

namespace {

MetricsReport cross_validate(const FeatureMatrix& input, const TrainerSpec& spec, const CvConfig& cfg, bool parallel) {
  spec.validate();
  if (cfg.folds < 2) throw InvalidInput("cross-validation needs at least 2 folds");
  std::vector<std::size_t> order(input.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return input.row_keys()[a] < input.row_keys()[b]; });
  FeatureMatrix m = input.select_rows(order);
  if (cfg.smote_before_cv) m = smote_balance(m, cfg.smote_k, derive_seed(cfg.seed, {3}));

  const auto fold = stratified_kfold(m.labels(), m.row_keys(), cfg.folds, derive_seed(cfg.seed, {0}));
  const std::size_t n = m.rows();
  Predictions all;
  all.labels.resize(n);
  all.scores.resize(n);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.folds));
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int f = 0; f < cfg.folds; ++f) {
    try {
      std::vector<std::size_t> tr, te;
      for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? te : tr).push_back(i);
      FeatureMatrix train_m = m.select_rows(tr);
      if (cfg.smote && !cfg.smote_before_cv)
        train_m = smote_balance(train_m, cfg.smote_k, derive_seed(cfg.seed, {2, static_cast<std::uint64_t>(f)}));
      const auto model = train(train_m, spec, derive_seed(cfg.seed, {1, static_cast<std::uint64_t>(f)}));
      const auto pred = predict(model, m.select_rows(te));
      for (std::size_t i = 0; i < te.size(); ++i) {
        all.labels[te[i]] = pred.labels[i];
        all.scores[te[i]] = pred.scores[i];
      }
    } catch (...) {
      errors[static_cast<std::size_t>(f)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return summarize_predictions(m.labels(), all, fold, cfg.folds);
}

}  // namespace

MetricsReport evaluate_cv(const FeatureMatrix& m, const TrainerSpec& spec, const CvConfig& cfg) {
  return cross_validate(m, spec, cfg, true);
}

MetricsReport evaluate_cv_serial(const FeatureMatrix& m, const TrainerSpec& spec, const CvConfig& cfg) {
  return cross_validate(m, spec, cfg, false);
}

}  // namespace dspn::learn
