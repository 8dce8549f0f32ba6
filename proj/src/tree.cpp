#include <algorithm>
#include <cmath>
#include <numeric>

#include "dspn/learn.hpp"
#include "dspn/rng.hpp"

namespace dspn::learn {

void TreeParams::validate() const {
  if (max_splits < 1) throw InvalidInput("max_splits must be >= 1, got " + std::to_string(max_splits));
  if (min_leaf < 1) throw InvalidInput("min_leaf must be >= 1");
  if (vars_per_split && *vars_per_split < 1) throw InvalidInput("vars_per_split must be >= 1");
}

const Posterior& DecisionTree::posterior(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].posterior;
}

TrainingData::TrainingData(const FeatureMatrix& m) : n_(m.rows()), p_(m.cols()) {
  x_.resize(n_ * p_);
  y_.resize(n_);
  order_.resize(n_ * p_);
  for (std::size_t r = 0; r < n_; ++r) {
    y_[r] = grade_index(m.labels()[r]);
    for (std::size_t f = 0; f < p_; ++f) x_[f * n_ + r] = m(r, f);
  }
  for (std::size_t f = 0; f < p_; ++f) {
    auto* o = &order_[f * n_];
    std::iota(o, o + n_, 0u);
    const double* col = &x_[f * n_];
    std::stable_sort(o, o + n_, [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }
}

namespace {

using ClassWeights = std::array<double, kNumGrades>;

double impurity(const ClassWeights& w, double total) {
  if (total <= 0.0) return 0.0;
  double s = 0.0;
  for (double v : w) s += v * v;
  return total - s / total;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

struct Pending {
  int node = 0;
  std::size_t count = 0;
  std::vector<std::uint32_t> sorted;  // per feature, `count` rows in value order, features back to back
  ClassWeights w{};
  double total = 0.0;
  Split best;
};

class Builder {
 public:
  Builder(const TrainingData& d, std::span<const double> w, const TreeParams& p, std::uint64_t seed)
      : d_(d), w_(w), params_(p), seed_(seed), left_(d.rows(), 0) {
    vars_ = p.vars_per_split ? std::min<std::size_t>(static_cast<std::size_t>(*p.vars_per_split), d.features())
                             : d.features();
  }

  DecisionTree build() {
    Pending root;
    for (std::size_t r = 0; r < d_.rows(); ++r)
      if (w_[r] > 0.0) {
        root.w[d_.y(r)] += w_[r];
        ++root.count;
      }
    root.sorted.reserve(root.count * d_.features());
    for (std::size_t f = 0; f < d_.features(); ++f)
      for (auto r : d_.sorted(f))
        if (w_[r] > 0.0) root.sorted.push_back(r);
    root.node = add_node(root);
    evaluate(root);

    std::vector<Pending> open;
    open.push_back(std::move(root));
    while (static_cast<int>(tree_.split_order.size()) < params_.max_splits) {
      std::size_t pick = open.size();
      for (std::size_t i = 0; i < open.size(); ++i) {
        if (open[i].best.feature < 0) continue;
        if (pick == open.size() || open[i].best.gain > open[pick].best.gain ||
            (open[i].best.gain == open[pick].best.gain && open[i].node < open[pick].node))
          pick = i;
      }
      if (pick == open.size()) break;
      Pending parent = std::move(open[pick]);
      open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
      auto [l, r] = split(parent);
      open.push_back(std::move(l));
      open.push_back(std::move(r));
    }
    return std::move(tree_);
  }

 private:
  int add_node(const Pending& p) {
    TreeNode n;
    for (std::size_t c = 0; c < kNumGrades; ++c) n.posterior[c] = p.total > 0.0 ? p.w[c] / p.total : 0.0;
    tree_.nodes.push_back(n);
    return static_cast<int>(tree_.nodes.size()) - 1;
  }

  std::vector<std::size_t> candidate_features(int node) {
    std::vector<std::size_t> f(d_.features());
    std::iota(f.begin(), f.end(), 0);
    if (vars_ >= f.size()) return f;
    auto rng = make_rng(seed_, {static_cast<std::uint64_t>(node)});
    for (std::size_t i = 0; i < vars_; ++i) std::swap(f[i], f[i + uniform_index(rng, f.size() - i)]);
    f.resize(vars_);
    std::sort(f.begin(), f.end());
    return f;
  }

  void evaluate(Pending& p) {
    double total = 0.0;
    std::size_t classes = 0;
    for (double v : p.w) {
      total += v;
      classes += v > 0.0;
    }
    p.total = total;
    tree_.nodes[static_cast<std::size_t>(p.node)].posterior = posterior_of(p);
    if (classes < 2 || d_.features() == 0) return;
    const std::size_t count = p.count;
    if (count < 2 * static_cast<std::size_t>(params_.min_leaf)) return;

    const double parent = impurity(p.w, total);
    const double min_gain = 1e-12 * total;
    for (auto f : candidate_features(p.node)) {
      const std::uint32_t* rows = &p.sorted[f * count];
      ClassWeights lw{};
      double lt = 0.0;
      for (std::size_t i = 0; i + 1 < count; ++i) {
        const auto r = rows[i];
        lw[d_.y(r)] += w_[r];
        lt += w_[r];
        const double a = d_.x(r, f), b = d_.x(rows[i + 1], f);
        if (a == b) continue;
        if (i + 1 < static_cast<std::size_t>(params_.min_leaf) ||
            count - i - 1 < static_cast<std::size_t>(params_.min_leaf))
          continue;
        ClassWeights rw;
        for (std::size_t c = 0; c < kNumGrades; ++c) rw[c] = p.w[c] - lw[c];
        const double gain = parent - impurity(lw, lt) - impurity(rw, total - lt);
        if (gain > min_gain && gain > p.best.gain) {
          double thr = a + (b - a) * 0.5;
          if (!(thr >= a && thr < b)) thr = a;
          p.best = {static_cast<int>(f), thr, gain};
        }
      }
    }
  }

  Posterior posterior_of(const Pending& p) const {
    Posterior post{};
    for (std::size_t c = 0; c < kNumGrades; ++c) post[c] = p.total > 0.0 ? p.w[c] / p.total : 0.0;
    return post;
  }

  std::pair<Pending, Pending> split(Pending& parent) {
    const auto f = static_cast<std::size_t>(parent.best.feature);
    const std::size_t n = parent.count;
    Pending l, r;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = parent.sorted[f * n + i];
      const bool go_left = d_.x(row, f) <= parent.best.threshold;
      left_[row] = go_left;
      Pending& side = go_left ? l : r;
      side.w[d_.y(row)] += w_[row];
      ++side.count;
    }
    l.sorted.resize(l.count * d_.features());
    r.sorted.resize(r.count * d_.features());
    for (std::size_t g = 0; g < d_.features(); ++g) {
      std::uint32_t* lo = &l.sorted[g * l.count];
      std::uint32_t* ro = &r.sorted[g * r.count];
      const std::uint32_t* src = &parent.sorted[g * n];
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = src[i];
        if (left_[row]) *lo++ = row;
        else *ro++ = row;
      }
    }
    std::vector<std::uint32_t>().swap(parent.sorted);

    auto& node = tree_.nodes[static_cast<std::size_t>(parent.node)];
    node.feature = parent.best.feature;
    node.threshold = parent.best.threshold;
    tree_.split_order.push_back(parent.node);
    l.node = add_node(l);
    r.node = add_node(r);
    tree_.nodes[static_cast<std::size_t>(parent.node)].left = l.node;
    tree_.nodes[static_cast<std::size_t>(parent.node)].right = r.node;
    evaluate(l);
    evaluate(r);
    return {std::move(l), std::move(r)};
  }

  const TrainingData& d_;
  std::span<const double> w_;
  TreeParams params_;
  std::uint64_t seed_;
  std::size_t vars_ = 0;
  std::vector<char> left_;
  DecisionTree tree_;
};

}  // namespace

DecisionTree train_tree(const TrainingData& data, std::span<const double> weights, const TreeParams& params,
                        std::uint64_t seed) {
  params.validate();
  if (data.rows() == 0) throw InvalidInput("cannot train a tree on zero rows");
  if (weights.size() != data.rows()) throw InvalidInput("tree weights: one weight per row required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("tree weights must be finite and >= 0");
    total += w;
  }
  if (total <= 0.0) throw InvalidInput("tree weights are all zero");
  return Builder(data, weights, params, seed).build();
}

DecisionTree train_tree(const FeatureMatrix& m, std::span<const double> weights, const TreeParams& params,
                        std::uint64_t seed) {
  return train_tree(TrainingData(m), weights, params, seed);
}

}  // namespace dspn::learn
