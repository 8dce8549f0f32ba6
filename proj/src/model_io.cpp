#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dspn/learn.hpp"

namespace dspn::learn {
namespace {

using nlohmann::json;

constexpr int kModelVersion = 1;

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

json tree_to_json(const DecisionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    json a = {n.feature, n.threshold, n.left, n.right};
    for (double p : n.posterior) a.push_back(p);
    nodes.push_back(std::move(a));
  }
  return {{"nodes", nodes}, {"split_order", t.split_order}};
}

DecisionTree tree_from_json(const json& j) {
  DecisionTree t;
  for (const auto& a : j.at("nodes")) {
    if (a.size() != 4 + kNumGrades) throw LoadError("model: malformed tree node");
    TreeNode n;
    n.feature = a[0].get<int>();
    n.threshold = a[1].get<double>();
    n.left = a[2].get<int>();
    n.right = a[3].get<int>();
    for (std::size_t c = 0; c < kNumGrades; ++c) n.posterior[c] = a[4 + c].get<double>();
    t.nodes.push_back(n);
  }
  t.split_order = j.at("split_order").get<std::vector<int>>();
  const auto count = static_cast<int>(t.nodes.size());
  if (count == 0) throw LoadError("model: empty tree");
  for (const auto& n : t.nodes)
    if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count))
      throw LoadError("model: tree child index out of range");
  return t;
}

}  // namespace

void save_model(const Model& m, const std::filesystem::path& path) {
  json j;
  j["format"] = "dspn-model";
  j["version"] = kModelVersion;
  j["method"] = std::string(method_name(m.method));
  j["schema"] = {{"columns", m.columns}, {"hash", hex64(m.schema)}};
  json classes = json::array();
  for (auto g : m.classes) classes.push_back(std::string(grade_name(g)));
  j["classes"] = classes;
  switch (m.method) {
    case Method::AdaBoostM2:
    case Method::Bag: {
      j["n_cycles"] = m.n_cycles;
      j["learn_rate"] = m.learn_rate;
      j["tree_params"] = {{"max_splits", m.tree.max_splits}, {"min_leaf", m.tree.min_leaf}};
      if (m.tree.vars_per_split) j["tree_params"]["vars_per_split"] = *m.tree.vars_per_split;
      json learners = json::array();
      for (const auto& t : m.learners) learners.push_back(tree_to_json(t));
      j["learners"] = learners;
      if (m.method == Method::AdaBoostM2) j["learner_weights"] = m.learner_weights;
      break;
    }
    case Method::KNN:
      j["k"] = m.knn_k;
      j["train_x"] = m.train_x;
      {
        json y = json::array();
        for (auto g : m.train_y) y.push_back(std::string(grade_name(g)));
        j["train_y"] = y;
      }
      break;
    case Method::LDA:
      j["coef"] = m.coef;
      j["intercept"] = m.intercept;
      break;
    case Method::GaussianNB:
      j["means"] = m.means;
      j["variances"] = m.variances;
      j["log_prior"] = m.log_prior;
      break;
  }
  if (m.method == Method::KNN || m.method == Method::LDA || m.method == Method::GaussianNB) {
    j["center"] = m.center;
    j["scale"] = m.scale;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  try {
    const json j = json::parse(in);
    if (j.at("format") != "dspn-model") throw LoadError(path.string() + ": not a model file");
    if (j.at("version").get<int>() != kModelVersion)
      throw LoadError(path.string() + ": unsupported model version " + j.at("version").dump());
    Model m;
    m.method = parse_method(j.at("method").get<std::string>());
    m.columns = j.at("schema").at("columns").get<std::vector<std::string>>();
    m.schema = schema_hash(m.columns);
    if (hex64(m.schema) != j.at("schema").at("hash").get<std::string>())
      throw LoadError(path.string() + ": schema hash does not match the column list");
    for (const auto& g : j.at("classes")) m.classes.push_back(parse_grade(g.get<std::string>()));
    switch (m.method) {
      case Method::AdaBoostM2:
      case Method::Bag: {
        m.n_cycles = j.at("n_cycles").get<int>();
        m.learn_rate = j.at("learn_rate").get<double>();
        const auto& tp = j.at("tree_params");
        m.tree.max_splits = tp.at("max_splits").get<int>();
        m.tree.min_leaf = tp.at("min_leaf").get<int>();
        if (tp.contains("vars_per_split")) m.tree.vars_per_split = tp.at("vars_per_split").get<int>();
        for (const auto& t : j.at("learners")) m.learners.push_back(tree_from_json(t));
        if (m.method == Method::AdaBoostM2) {
          m.learner_weights = j.at("learner_weights").get<std::vector<double>>();
          if (m.learner_weights.size() != m.learners.size())
            throw LoadError(path.string() + ": one weight per learner required");
        }
        break;
      }
      case Method::KNN:
        m.knn_k = j.at("k").get<int>();
        m.train_x = j.at("train_x").get<std::vector<double>>();
        for (const auto& g : j.at("train_y")) m.train_y.push_back(parse_grade(g.get<std::string>()));
        break;
      case Method::LDA:
        m.coef = j.at("coef").get<std::vector<std::vector<double>>>();
        m.intercept = j.at("intercept").get<std::vector<double>>();
        break;
      case Method::GaussianNB:
        m.means = j.at("means").get<std::vector<std::vector<double>>>();
        m.variances = j.at("variances").get<std::vector<std::vector<double>>>();
        m.log_prior = j.at("log_prior").get<std::vector<double>>();
        break;
    }
    if (j.contains("center")) {
      m.center = j.at("center").get<std::vector<double>>();
      m.scale = j.at("scale").get<std::vector<double>>();
    }
    return m;
  } catch (const json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

}  // namespace dspn::learn
