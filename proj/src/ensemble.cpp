#include <algorithm>
#include <cmath>
#include <exception>

#include "dspn/learn.hpp"
#include "learn_internal.hpp"
#include "dspn/log.hpp"
#include "dspn/rng.hpp"

namespace dspn::learn {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::AdaBoostM2: return "AdaBoostM2";
    case Method::Bag: return "Bag";
    case Method::KNN: return "KNN";
    case Method::LDA: return "LDA";
    case Method::GaussianNB: return "GaussianNB";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  for (auto m : {Method::AdaBoostM2, Method::Bag, Method::KNN, Method::LDA, Method::GaussianNB})
    if (method_name(m) == s) return m;
  throw InvalidInput("unknown learner method '" + std::string(s) + "'");
}

TrainerSpec TrainerSpec::adaboost_m2() {
  TrainerSpec s;
  s.method = Method::AdaBoostM2;
  s.cycles = 305;
  s.learn_rate = 0.96;
  s.tree.max_splits = 71;
  return s;
}

TrainerSpec TrainerSpec::bag() {
  TrainerSpec s;
  s.method = Method::Bag;
  s.cycles = 305;
  s.learn_rate = 0.96;
  s.tree.max_splits = 430;
  s.tree.vars_per_split = 5;
  return s;
}

void TrainerSpec::validate() const {
  if (method == Method::AdaBoostM2 || method == Method::Bag) {
    if (cycles < 1) throw InvalidInput("cycles must be >= 1");
    if (method == Method::AdaBoostM2 && !(learn_rate > 0.0 && learn_rate <= 1.0))
      throw InvalidInput("learn_rate must be in (0, 1]");
    tree.validate();
  }
  if (method == Method::KNN && knn_k < 1) throw InvalidInput("knn k must be >= 1");
}

namespace {

std::vector<SeverityGrade> present_classes(const FeatureMatrix& m) {
  const auto counts = m.class_counts();
  std::vector<SeverityGrade> out;
  for (std::size_t c = 0; c < kNumGrades; ++c)
    if (counts[c] > 0) out.push_back(kAllGrades[c]);
  return out;
}

void start_model(Model& model, const FeatureMatrix& m, Method method) {
  if (m.rows() == 0) throw TrainingError("cannot train on an empty matrix");
  model.method = method;
  model.columns = m.columns();
  model.schema = schema_hash(m.columns());
  model.classes = present_classes(m);
  if (model.classes.size() < 2)
    throw TrainingError("training data holds a single class (" + std::string(grade_name(model.classes[0])) + ")");
}

// Argmax in grade order; `tiebreak` decides between equal scores when given.
std::size_t argmax(const Posterior& s, const Posterior* tiebreak = nullptr) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumGrades; ++c) {
    if (s[c] > s[best] || (tiebreak && s[c] == s[best] && (*tiebreak)[c] > (*tiebreak)[best])) best = c;
  }
  return best;
}

constexpr double kMaxLogInvBeta = 23.025850929940457;  // ln(1e10)

}  // namespace

Model train_adaboost_m2(const FeatureMatrix& m, int cycles, double learn_rate, const TreeParams& tree,
                        std::uint64_t seed, AdaBoostTrace* trace) {
  if (cycles < 1) throw InvalidInput("cycles must be >= 1");
  if (!(learn_rate > 0.0 && learn_rate <= 1.0)) throw InvalidInput("learn_rate must be in (0, 1]");
  tree.validate();
  Model model;
  start_model(model, m, Method::AdaBoostM2);
  model.n_cycles = cycles;
  model.learn_rate = learn_rate;
  model.tree = tree;

  const TrainingData data(m);
  const std::size_t n = m.rows();
  std::vector<std::size_t> wrong;  // grade indices present in training
  for (auto g : model.classes) wrong.push_back(grade_index(g));
  const std::size_t k = wrong.size();

  // Distribution over (row, wrong label); D[i * 4 + l], zero on l == y_i.
  std::vector<double> dist(n * kNumGrades, 0.0);
  const double init = 1.0 / (static_cast<double>(n) * static_cast<double>(k - 1));
  for (std::size_t i = 0; i < n; ++i)
    for (auto l : wrong)
      if (l != data.y(i)) dist[i * kNumGrades + l] = init;

  std::vector<double> q(n), weights(n);
  std::vector<Posterior> h(n);
  bool resample = false;
  for (int t = 0; t < cycles; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = 0.0;
      for (auto l : wrong) q[i] += dist[i * kNumGrades + l];
    }
    if (resample) {
      // Weighted bootstrap of n draws from q.
      std::vector<double> cum(n);
      std::partial_sum(q.begin(), q.end(), cum.begin());
      auto rng = make_rng(seed, {static_cast<std::uint64_t>(t), 1});
      std::fill(weights.begin(), weights.end(), 0.0);
      for (std::size_t d = 0; d < n; ++d) {
        const double u = uniform01(rng) * cum.back();
        auto it = std::upper_bound(cum.begin(), cum.end(), u);
        if (it == cum.end()) --it;
        weights[static_cast<std::size_t>(it - cum.begin())] += 1.0;
      }
    } else {
      weights = q;
    }
    auto learner = train_tree(data, weights, tree, derive_seed(seed, {static_cast<std::uint64_t>(t), 0}));

    double eps = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = learner.posterior(m.row(i));
      const double hy = h[i][data.y(i)];
      for (auto l : wrong)
        if (l != data.y(i)) eps += dist[i * kNumGrades + l] * (1.0 - hy + h[i][l]);
    }
    eps *= 0.5;
    if (eps >= 0.5) {
      if (model.learners.empty())
        throw TrainingError("first weak learner has pseudo-loss " + std::to_string(eps) + " >= 0.5");
      if (trace) trace->stopped_on_loss = true;
      break;
    }
    const double log_inv_beta = eps > 0.0 ? std::min(std::log((1.0 - eps) / eps), kMaxLogInvBeta) : kMaxLogInvBeta;
    const double alpha = learn_rate * log_inv_beta;

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double hy = h[i][data.y(i)];
      for (auto l : wrong) {
        if (l == data.y(i)) continue;
        double& d = dist[i * kNumGrades + l];
        d *= std::exp(-alpha * 0.5 * (1.0 + hy - h[i][l]));
        sum += d;
      }
    }
    if (!(sum > 0.0)) throw TrainingError("boosting distribution collapsed at cycle " + std::to_string(t + 1));
    for (double& d : dist) d /= sum;

    if (trace) {
      double s = 0.0;
      for (double d : dist) s += d;
      trace->pseudo_loss.push_back(eps);
      trace->distribution_sum.push_back(s);
      trace->resampled.push_back(resample);
    }
    model.learners.push_back(std::move(learner));
    model.learner_weights.push_back(alpha);
    if (log_inv_beta >= kMaxLogInvBeta) resample = true;
  }
  return model;
}

Model train_bagged_forest(const FeatureMatrix& m, int cycles, const TreeParams& tree, std::uint64_t seed,
                          double recorded_learn_rate) {
  if (cycles < 1) throw InvalidInput("cycles must be >= 1");
  tree.validate();
  Model model;
  start_model(model, m, Method::Bag);
  model.n_cycles = cycles;
  model.learn_rate = recorded_learn_rate;
  model.tree = tree;
  if (tree.vars_per_split && static_cast<std::size_t>(*tree.vars_per_split) > m.cols()) {
    log::warn("vars_per_split " + std::to_string(*tree.vars_per_split) + " exceeds " + std::to_string(m.cols()) +
              " features; clamped to " + std::to_string(m.cols()));
    model.tree.vars_per_split = static_cast<int>(m.cols());
  }

  const TrainingData data(m);
  const std::size_t n = m.rows();
  model.learners.resize(static_cast<std::size_t>(cycles));
  model.inbag.resize(static_cast<std::size_t>(cycles));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cycles));
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < cycles; ++t) {
    try {
      auto rng = make_rng(seed, {static_cast<std::uint64_t>(t)});
      std::vector<double> w(n, 0.0);
      auto& bag = model.inbag[static_cast<std::size_t>(t)];
      bag.resize(n);
      for (std::size_t d = 0; d < n; ++d) {
        bag[d] = static_cast<std::uint32_t>(uniform_index(rng, n));
        w[bag[d]] += 1.0;
      }
      std::sort(bag.begin(), bag.end());
      model.learners[static_cast<std::size_t>(t)] =
          train_tree(data, w, model.tree, derive_seed(seed, {static_cast<std::uint64_t>(t), 1}));
    } catch (...) {
      errors[static_cast<std::size_t>(t)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return model;
}

OobResult oob_predict(const Model& forest, const FeatureMatrix& training) {
  if (forest.method != Method::Bag) throw PredictionError("out-of-bag estimates need a bagged forest");
  if (forest.inbag.size() != forest.learners.size()) throw PredictionError("forest carries no bootstrap record");
  if (training.columns() != forest.columns) throw PredictionError("feature schema does not match the model");
  const std::size_t n = training.rows();
  OobResult out;
  out.votes.assign(n, {});
  out.labels.assign(n, std::nullopt);
  std::vector<Posterior> sums(n, Posterior{});
  std::vector<char> in(n);
  for (std::size_t t = 0; t < forest.learners.size(); ++t) {
    std::fill(in.begin(), in.end(), 0);
    for (auto r : forest.inbag[t]) {
      if (r >= n) throw PredictionError("bootstrap record does not fit the training matrix");
      in[r] = 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (in[i]) continue;
      const auto& post = forest.learners[t].posterior(training.row(i));
      ++out.votes[i][argmax(post)];
      for (std::size_t c = 0; c < kNumGrades; ++c) sums[i][c] += post[c];
    }
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Posterior v{};
    std::size_t total = 0;
    for (std::size_t c = 0; c < kNumGrades; ++c) {
      v[c] = static_cast<double>(out.votes[i][c]);
      total += out.votes[i][c];
    }
    if (total == 0) continue;
    ++out.covered;
    out.labels[i] = kAllGrades[argmax(v, &sums[i])];
    correct += *out.labels[i] == training.labels()[i];
  }
  out.accuracy = out.covered ? 100.0 * static_cast<double>(correct) / static_cast<double>(out.covered) : 0.0;
  return out;
}

Predictions predict(const Model& model, const FeatureMatrix& rows) {
  if (rows.columns() != model.columns || schema_hash(rows.columns()) != model.schema)
    throw PredictionError("feature schema does not match the model (" + std::to_string(rows.cols()) + " columns vs " +
                          std::to_string(model.columns.size()) + ")");
  Predictions out;
  const std::size_t n = rows.rows();
  out.labels.resize(n);
  out.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = rows.row(i);
    Posterior s{};
    Posterior tiebreak{};
    bool use_tiebreak = false;
    switch (model.method) {
      case Method::AdaBoostM2: {
        double wsum = 0.0;
        for (std::size_t t = 0; t < model.learners.size(); ++t) {
          const auto& post = model.learners[t].posterior(x);
          for (std::size_t c = 0; c < kNumGrades; ++c) s[c] += model.learner_weights[t] * post[c];
          wsum += model.learner_weights[t];
        }
        for (double& v : s) v = wsum > 0.0 ? v / wsum : 0.0;
        break;
      }
      case Method::Bag: {
        for (const auto& tree : model.learners) {
          const auto& post = tree.posterior(x);
          s[argmax(post)] += 1.0;
          for (std::size_t c = 0; c < kNumGrades; ++c) tiebreak[c] += post[c];
        }
        for (double& v : s) v /= static_cast<double>(model.learners.size());
        use_tiebreak = true;
        break;
      }
      default:
        s = baseline_scores(model, x);
    }
    out.scores[i] = s;
    out.labels[i] = kAllGrades[argmax(s, use_tiebreak ? &tiebreak : nullptr)];
  }
  return out;
}

Model train(const FeatureMatrix& m, const TrainerSpec& spec, std::uint64_t seed) {
  spec.validate();
  switch (spec.method) {
    case Method::AdaBoostM2: return train_adaboost_m2(m, spec.cycles, spec.learn_rate, spec.tree, seed);
    case Method::Bag: return train_bagged_forest(m, spec.cycles, spec.tree, seed, spec.learn_rate);
    case Method::KNN: return train_knn(m, spec.knn_k);
    case Method::LDA: return train_lda(m);
    case Method::GaussianNB: return train_gaussian_nb(m);
  }
  throw InvalidInput("unknown learner method");
}

}  // namespace dspn::learn
