#include "dspn/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "dspn/log.hpp"

namespace dspn::pipeline {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TrialSignals {
  std::vector<std::pair<seg::SegmentKey, std::vector<double>>> signals, envelopes;
  std::vector<std::pair<seg::SegmentKey, seg::SegmentSet>> segments;
  bool failed = false;
};

TrialSignals prepare_trial(const Trial& t, std::span<const ChannelKind> channels, const dsp::PreprocessConfig& pre,
                           const SegmentationConfig& segcfg) {
  TrialSignals out;
  std::vector<ChannelKind> grf;
  for (auto c : channels) {
    auto it = t.channels.find(c);
    if (it == t.channels.end()) continue;  // extraction reports the missing channel
    if (channel_family(c) == ChannelFamily::GRF) {
      grf.push_back(c);
      continue;
    }
    const auto p = dsp::preprocess_emg(it->second, pre);
    const seg::SegmentKey key{t.trial_id, c};
    seg::SegmentSet set{p.filtered.size(), {}};
    if (segcfg.whole_trial_emg) {
      set.segments.push_back({0, p.filtered.size(), c});
    } else {
      try {
        set.segments = seg::detect_emg_bursts(p.envelope, segcfg.burst, c);
      } catch (const NoActivity& e) {
        log::warn("trial '" + t.trial_id + "' " + std::string(channel_name(c)) + ": " + e.what());
        out.failed = true;
        continue;
      }
    }
    out.signals.emplace_back(key, p.filtered.samples());
    out.envelopes.emplace_back(key, p.envelope.samples());
    out.segments.emplace_back(key, std::move(set));
  }
  if (grf.empty()) return out;

  auto z = t.channels.find(ChannelKind::GRF_Z);
  if (z == t.channels.end()) {
    log::warn("trial '" + t.trial_id + "' has no GRF_Z to locate the stance");
    out.failed = true;
    return out;
  }
  seg::Segment stance;
  try {
    stance = seg::segment_stance(z->second, segcfg.change_point);
  } catch (const StanceNotFound& e) {
    log::warn("trial '" + t.trial_id + "': " + e.what());
    out.failed = true;
    return out;
  }
  std::vector<SignalTrace> targets;
  for (auto c : grf) targets.push_back(t.channels.at(c));
  const auto segs = seg::propagate_segment(stance, z->second.size(), targets, grf);
  for (std::size_t i = 0; i < grf.size(); ++i) {
    const seg::SegmentKey key{t.trial_id, grf[i]};
    out.signals.emplace_back(key, targets[i].samples());
    out.segments.emplace_back(key, seg::SegmentSet{targets[i].size(), {segs[i]}});
  }
  return out;
}

PreparedSignals prepare(const Dataset& d, std::span<const ChannelKind> channels, const dsp::PreprocessConfig& pre,
                        const SegmentationConfig& segcfg, bool parallel) {
  pre.validate();
  segcfg.change_point.validate();
  segcfg.burst.validate();
  const auto n = static_cast<std::ptrdiff_t>(d.trials.size());
  std::vector<TrialSignals> parts(d.trials.size());
  std::vector<std::exception_ptr> errors(d.trials.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      parts[u] = prepare_trial(d.trials[u], channels, pre, segcfg);
    } catch (...) {
      errors[u] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  PreparedSignals out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (auto& [k, v] : parts[i].signals) out.signals.emplace(k, std::move(v));
    for (auto& [k, v] : parts[i].envelopes) out.envelopes.emplace(k, std::move(v));
    for (auto& [k, v] : parts[i].segments) out.segments.emplace(k, std::move(v));
    if (parts[i].failed) out.failed_trials.push_back(d.trials[i].trial_id);
  }
  return out;
}

// ---- config ----

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InvalidInput(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      throw InvalidInput("unknown key '" + k + "' in " + where);
}

feat::Aggregation parse_aggregation(const std::string& s) {
  if (s == "mean") return feat::Aggregation::Mean;
  if (s == "per_segment") return feat::Aggregation::PerSegment;
  throw InvalidInput("aggregation must be 'mean' or 'per_segment', got '" + s + "'");
}

const char* aggregation_name(feat::Aggregation a) { return a == feat::Aggregation::Mean ? "mean" : "per_segment"; }

std::string combo_label(std::span<const ChannelKind> combo) {
  std::string s;
  for (auto c : combo) s += (s.empty() ? "" : "-") + std::string(channel_short_name(c));
  return s;
}

// ---- artifacts ----

json mean_std_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy},     {"sensitivity", m.sensitivity}, {"specificity", m.specificity},
          {"precision", m.precision},   {"f1", m.f1}};
}

json entry_json(const sel::SearchEntry& e) {
  const auto& r = e.metrics;
  return {{"k", e.k},
          {"features", e.features},
          {"accuracy", mean_std_json(r.accuracy)},
          {"sensitivity", mean_std_json(r.sensitivity)},
          {"specificity", mean_std_json(r.specificity)},
          {"precision", mean_std_json(r.precision)},
          {"f1", mean_std_json(r.f1)},
          {"auc", r.auc},
          {"pooled", metrics_json(r.pooled)}};
}

json report_json(const RunConfig& cfg, const RunResult& r, const PreparedSignals& prep) {
  json j;
  j["format"] = "dspn-report";
  j["version"] = kReportVersion;
  j["scheme"] = cfg.scheme;
  j["family"] = std::string(family_name(cfg.family));
  json combo = json::array();
  for (auto c : cfg.combo) combo.push_back(std::string(channel_name(c)));
  j["combo"] = combo;
  j["combo_label"] = combo_label(cfg.combo);
  j["trainer"] = {{"method", std::string(learn::method_name(cfg.trainer.method))},
                  {"cycles", cfg.trainer.cycles},
                  {"learn_rate", cfg.trainer.learn_rate},
                  {"max_splits", cfg.trainer.tree.max_splits},
                  {"min_leaf", cfg.trainer.tree.min_leaf},
                  {"vars_per_split", cfg.trainer.tree.vars_per_split ? json(*cfg.trainer.tree.vars_per_split) : json()},
                  {"knn_k", cfg.trainer.knn_k}};
  j["cv"] = {{"folds", cfg.cv.folds},
             {"seed", cfg.cv.seed},
             {"smote", cfg.cv.smote},
             {"smote_before_cv", cfg.cv.smote_before_cv},
             {"smote_k", cfg.cv.smote_k}};
  j["aggregation"] = aggregation_name(cfg.aggregation);

  const auto& m = r.study.extraction.matrix;
  j["rows"] = m.rows();
  json counts = json::object();
  const auto cc = m.class_counts();
  for (std::size_t c = 0; c < kNumGrades; ++c) counts[std::string(grade_name(kAllGrades[c]))] = cc[c];
  j["class_counts"] = counts;
  j["skipped_trials"] = r.study.extraction.skipped_trials;
  j["segmentation_failures"] = prep.failed_trials;
  j["degenerate_rows"] = r.study.extraction.degenerate_rows;
  j["columns_total"] = m.cols();
  j["columns_kept"] = r.study.pruned.cols();
  json pruned = json::array();
  for (const auto& p : r.study.ranking.pruned) pruned.push_back({{"name", p.name}, {"partner", p.partner}});
  j["pruned"] = pruned;
  json ranking = json::array();
  for (const auto& name : r.study.ranking.order)
    ranking.push_back({{"name", name}, {"weight", r.study.ranking.weights.at(name)}});
  j["ranking"] = ranking;

  json entries = json::array();
  for (const auto& e : r.search.entries) entries.push_back(entry_json(e));
  j["entries"] = entries;
  j["best_k"] = r.search.best_k;
  const auto& best = r.search.best();
  json b = entry_json(best);
  json conf = json::array();
  for (const auto& row : best.metrics.confusion) conf.push_back(row);
  b["confusion"] = conf;
  json cauc = json::object();
  for (std::size_t c = 0; c < kNumGrades; ++c)
    cauc[std::string(grade_name(kAllGrades[c]))] =
        best.metrics.class_auc_defined[c] ? json(best.metrics.class_auc[c]) : json();
  b["class_auc"] = cauc;
  j["best"] = b;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string ms(const MeanStd& m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f+-%.2f", m.mean, m.std);
  return buf;
}

void write_metrics_csv(const sel::SearchReport& s, const fs::path& path) {
  std::ostringstream os;
  os << "k,accuracy_mean,accuracy_std,sensitivity_mean,sensitivity_std,specificity_mean,specificity_std,"
        "precision_mean,precision_std,f1_mean,f1_std,auc,best,features\n";
  for (const auto& e : s.entries) {
    const auto& r = e.metrics;
    os << e.k;
    for (const auto* v : {&r.accuracy, &r.sensitivity, &r.specificity, &r.precision, &r.f1})
      os << ',' << format_double(v->mean) << ',' << format_double(v->std);
    os << ',' << format_double(r.auc) << ',' << (e.k == s.best_k ? 1 : 0) << ',';
    for (std::size_t i = 0; i < e.features.size(); ++i) os << (i ? ";" : "") << e.features[i];
    os << '\n';
  }
  write_text(path, os.str());
}

void write_roc_csv(const std::vector<RocPoint>& roc, const fs::path& path) {
  std::ostringstream os;
  os << "fpr,tpr,threshold\n";
  for (const auto& p : roc)
    os << format_double(p.fpr) << ',' << format_double(p.tpr) << ','
       << (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) << '\n';
  write_text(path, os.str());
}

template <class F>
auto stage(const std::string& name, const fs::path& out_dir, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream marker(out_dir / "FAILED");
    marker << name << ": " << e.what() << '\n';
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const LoadError*>(&e))
      throw StageError(name, e.what(), true);
    throw StageError(name, e.what(), false);
  }
}

}  // namespace

PreparedSignals prepare_signals(const Dataset& d, std::span<const ChannelKind> channels,
                                const dsp::PreprocessConfig& pre, const SegmentationConfig& segcfg) {
  return prepare(d, channels, pre, segcfg, true);
}

PreparedSignals prepare_signals_serial(const Dataset& d, std::span<const ChannelKind> channels,
                                       const dsp::PreprocessConfig& pre, const SegmentationConfig& segcfg) {
  return prepare(d, channels, pre, segcfg, false);
}

void RunConfig::validate() const {
  if (scheme.empty()) throw InvalidInput("config: scheme is required");
  if (combo.empty()) throw InvalidInput("config: channels must list at least one channel");
  std::set<ChannelKind> seen;
  for (auto c : combo) {
    if (channel_family(c) != family)
      throw InvalidInput("config: channel " + std::string(channel_name(c)) + " is not in family " +
                         std::string(family_name(family)) +
                         "; EMG and GRF channels are never mixed in one combination");
    if (!seen.insert(c).second) throw InvalidInput("config: duplicate channel " + std::string(channel_name(c)));
  }
  preprocess.validate();
  segmentation.change_point.validate();
  segmentation.burst.validate();
  features.validate();
  if (!(prune_threshold > 0.0 && prune_threshold <= 1.0))
    throw InvalidInput("config: prune_threshold must be in (0, 1]");
  if (k_neighbors < 1) throw InvalidInput("config: k_neighbors must be >= 1");
  trainer.validate();
  if (cv.folds < 2) throw InvalidInput("config: folds must be >= 2");
  if (cv.smote_k < 1) throw InvalidInput("config: smote_k must be >= 1");
  if (max_k && *max_k < 1) throw InvalidInput("config: max_k must be >= 1");
  if (out_dir.empty()) throw InvalidInput("config: out_dir is required");
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput("config " + path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  RunConfig c;
  try {
    check_keys(j, "config", {"format", "version", "dataset", "scheme", "family", "channels", "seed", "out_dir",
                             "preprocess", "segmentation", "features", "selection", "learner", "cv", "search",
                             "write_envelopes"});
    if (j.value("format", "") != "dspn-run") throw InvalidInput("config: format must be 'dspn-run'");
    if (j.value("version", 0) != 1) throw InvalidInput("config: unsupported version");
    if (!j.contains("seed") || !j.at("seed").is_number_unsigned())
      throw InvalidInput("config: 'seed' is mandatory and must be a nonnegative integer");
    c.cv.seed = j.at("seed").get<std::uint64_t>();
    c.dataset = resolve(j.at("dataset").get<std::string>());
    c.out_dir = resolve(j.at("out_dir").get<std::string>());
    c.scheme = j.at("scheme").get<std::string>();
    c.family = parse_family(j.at("family").get<std::string>());
    for (const auto& ch : j.at("channels")) c.combo.push_back(parse_channel(ch.get<std::string>()));
    take(j, "write_envelopes", c.write_envelopes);

    if (j.contains("preprocess")) {
      const auto& p = j.at("preprocess");
      check_keys(p, "preprocess", {"bp_lo_hz", "bp_hi_hz", "bp_order", "notch_fundamental_hz", "notch_q",
                                   "notch_max_harmonics", "env_cut_hz", "env_order", "zero_phase"});
      auto& q = c.preprocess;
      take(p, "bp_lo_hz", q.bp_lo_hz);
      take(p, "bp_hi_hz", q.bp_hi_hz);
      take(p, "bp_order", q.bp_order);
      take(p, "notch_fundamental_hz", q.notch_fundamental_hz);
      take(p, "notch_q", q.notch_q);
      take(p, "notch_max_harmonics", q.notch_max_harmonics);
      take(p, "env_cut_hz", q.env_cut_hz);
      take(p, "env_order", q.env_order);
      take(p, "zero_phase", q.zero_phase);
    }
    if (j.contains("segmentation")) {
      const auto& s = j.at("segmentation");
      check_keys(s, "segmentation", {"min_segment_len", "max_change_points", "penalty", "on_frac", "off_frac",
                                     "min_burst_len", "expected_bursts", "whole_trial_emg", "override"});
      auto& q = c.segmentation;
      take(s, "min_segment_len", q.change_point.min_segment_len);
      take(s, "max_change_points", q.change_point.max_change_points);
      if (s.contains("penalty") && !s.at("penalty").is_null()) q.change_point.penalty = s.at("penalty").get<double>();
      take(s, "on_frac", q.burst.on_frac);
      take(s, "off_frac", q.burst.off_frac);
      take(s, "min_burst_len", q.burst.min_burst_len);
      take(s, "expected_bursts", q.burst.expected_bursts);
      take(s, "whole_trial_emg", q.whole_trial_emg);
      if (s.contains("override") && !s.at("override").is_null())
        c.segment_override = resolve(s.at("override").get<std::string>());
    }
    if (j.contains("features")) {
      const auto& f = j.at("features");
      check_keys(f, "features", {"wamp_threshold", "ssc_threshold", "zc_threshold", "aggregation"});
      take(f, "wamp_threshold", c.features.wamp_threshold);
      take(f, "ssc_threshold", c.features.ssc_threshold);
      take(f, "zc_threshold", c.features.zc_threshold);
      if (f.contains("aggregation")) c.aggregation = parse_aggregation(f.at("aggregation").get<std::string>());
    }
    if (j.contains("selection")) {
      const auto& s = j.at("selection");
      check_keys(s, "selection", {"prune_threshold", "k_neighbors"});
      take(s, "prune_threshold", c.prune_threshold);
      take(s, "k_neighbors", c.k_neighbors);
    }
    if (j.contains("learner")) {
      const auto& l = j.at("learner");
      check_keys(l, "learner",
                 {"method", "cycles", "learn_rate", "max_splits", "min_leaf", "vars_per_split", "knn_k"});
      if (l.contains("method")) {
        const auto m = learn::parse_method(l.at("method").get<std::string>());
        if (m == learn::Method::Bag) c.trainer = learn::TrainerSpec::bag();
        c.trainer.method = m;
      }
      take(l, "cycles", c.trainer.cycles);
      take(l, "learn_rate", c.trainer.learn_rate);
      take(l, "max_splits", c.trainer.tree.max_splits);
      take(l, "min_leaf", c.trainer.tree.min_leaf);
      if (l.contains("vars_per_split"))
        c.trainer.tree.vars_per_split =
            l.at("vars_per_split").is_null() ? std::nullopt : std::optional<int>(l.at("vars_per_split").get<int>());
      take(l, "knn_k", c.trainer.knn_k);
    }
    if (j.contains("cv")) {
      const auto& v = j.at("cv");
      check_keys(v, "cv", {"folds", "smote", "smote_before_cv", "smote_k"});
      take(v, "folds", c.cv.folds);
      take(v, "smote", c.cv.smote);
      take(v, "smote_before_cv", c.cv.smote_before_cv);
      take(v, "smote_k", c.cv.smote_k);
    }
    if (j.contains("search")) {
      const auto& s = j.at("search");
      check_keys(s, "search", {"incremental", "max_k"});
      take(s, "incremental", c.incremental);
      if (s.contains("max_k") && !s.at("max_k").is_null()) c.max_k = s.at("max_k").get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw InvalidInput("config " + path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

RunResult run(const RunConfig& cfg) {
  cfg.validate();
  if (!fs::exists(cfg.dataset)) throw IoError("config: dataset " + cfg.dataset.string() + " does not exist");
  if (cfg.segment_override && !fs::exists(*cfg.segment_override))
    throw IoError("config: override " + cfg.segment_override->string() + " does not exist");
  const fs::path& out = cfg.out_dir;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  fs::remove(out / "FAILED", ec);

  const Dataset d = stage("load", out, [&] { return load_dataset(cfg.dataset); });
  if (std::find(d.manifest.schemes.begin(), d.manifest.schemes.end(), cfg.scheme) == d.manifest.schemes.end())
    throw InvalidInput("config: scheme '" + cfg.scheme + "' is not declared by the dataset");

  PreparedSignals prep = stage("preprocess", out, [&] {
    auto p = prepare_signals(d, cfg.combo, cfg.preprocess, cfg.segmentation);
    if (cfg.write_envelopes) {
      fs::create_directories(out / "envelopes");
      std::map<std::string, const Trial*> by_id;
      for (const auto& t : d.trials) by_id[t.trial_id] = &t;
      for (const auto& [key, env] : p.envelopes) {
        const double fs_hz = by_id.at(key.trial_id)->channels.at(key.channel).fs();
        write_signal_csv(SignalTrace(env, fs_hz, "V"),
                         out / "envelopes" / (key.trial_id + "_" + std::string(channel_name(key.channel)) + ".csv"));
      }
    }
    return p;
  });

  stage("segment", out, [&] {
    if (cfg.segment_override) prep.segments = seg::apply_override(prep.segments, *cfg.segment_override);
    seg::write_segments_csv(prep.segments, out / "segments.csv");
  });

  RunResult r;
  r.study = stage("select", out, [&] {
    sel::StudyConfig sc;
    sc.scheme = cfg.scheme;
    sc.features = cfg.features;
    sc.aggregation = cfg.aggregation;
    sc.prune_threshold = cfg.prune_threshold;
    sc.relief.k_neighbors = cfg.k_neighbors;
    auto study = sel::assemble_channel_study(d, cfg.family, cfg.combo, sc, prep.signals, prep.segments);
    write_feature_matrix_csv(study.extraction.matrix, out / "features.csv");
    sel::write_ranking_csv(study.ranking, out / "ranking.csv");
    return study;
  });

  r.search = stage("evaluate", out, [&] {
    auto eval = [&](const FeatureMatrix& m) { return learn::evaluate_cv(m, cfg.trainer, cfg.cv); };
    if (cfg.incremental) return sel::incremental_search(r.study.pruned, r.study.ranking, eval, cfg.max_k);
    sel::SearchReport s;
    const auto& order = r.study.ranking.order;
    const std::size_t k = cfg.max_k ? std::min(*cfg.max_k, order.size()) : order.size();
    std::vector<std::string> cols(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    s.entries.push_back({k, cols, eval(r.study.pruned.select_columns(std::span<const std::string>(cols)))});
    s.best_k = k;
    return s;
  });

  stage("report", out, [&] {
    write_metrics_csv(r.search, out / "metrics.csv");
    r.report_path = out / "report.json";
    write_text(r.report_path, report_json(cfg, r, prep).dump(2) + "\n");
    write_roc_csv(r.search.best().metrics.roc, out / "roc.csv");
  });

  stage("profiles", out, [&] {
    for (auto c : cfg.combo) {
      std::vector<seg::ProfileInput> inputs;
      for (const auto& t : d.trials) {
        auto g = t.grades.find(cfg.scheme);
        if (g == t.grades.end()) continue;
        const seg::SegmentKey key{t.trial_id, c};
        const auto& src = channel_family(c) == ChannelFamily::EMG ? prep.envelopes : prep.signals;
        auto it = src.find(key);
        if (it == src.end()) continue;
        inputs.push_back({t.trial_id, g->second, it->second});
      }
      const auto profiles = seg::class_profiles(std::move(inputs));
      seg::write_profiles_csv(profiles, out / ("profiles_" + std::string(channel_name(c)) + ".csv"));
    }
  });
  return r;
}

std::string format_summary(const RunConfig& cfg, const RunResult& r) {
  std::ostringstream os;
  os << family_name(cfg.family) << ' ' << combo_label(cfg.combo) << " | " << learn::method_name(cfg.trainer.method)
     << " | scheme " << cfg.scheme << " | " << r.study.extraction.matrix.cols() << " features, "
     << r.study.pruned.cols() << " after pruning\n";
  char line[256];
  std::snprintf(line, sizeof line, "%5s  %-14s %-14s %-14s %-14s %-14s %s\n", "K", "Accuracy", "Sensitivity",
                "Specificity", "Precision", "F1-score", "AUC");
  os << line;
  for (const auto& e : r.search.entries) {
    const auto& m = e.metrics;
    std::snprintf(line, sizeof line, "%c%4zu  %-14s %-14s %-14s %-14s %-14s %.3f\n", e.k == r.search.best_k ? '*' : ' ',
                  e.k, ms(m.accuracy).c_str(), ms(m.sensitivity).c_str(), ms(m.specificity).c_str(),
                  ms(m.precision).c_str(), ms(m.f1).c_str(), m.auc);
    os << line;
  }
  os << "best K = " << r.search.best_k << '\n';
  return os.str();
}

std::size_t merge_reports(std::span<const fs::path> reports, const fs::path& out_csv) {
  if (reports.empty()) throw InvalidInput("report: at least one report is required");
  struct Cell {
    double mean, std;
  };
  std::vector<std::string> labels;
  std::map<std::pair<std::string, std::string>, std::map<std::string, Cell>> rows;
  for (const auto& p : reports) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open report " + p.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw InvalidInput("report " + p.string() + ": " + e.what());
    }
    if (j.value("format", "") != "dspn-report") throw InvalidInput("report " + p.string() + ": not a run report");
    if (j.value("version", -1) != kReportVersion)
      throw InvalidInput("report " + p.string() + ": schema version " + j.value("version", json(-1)).dump() +
                         " does not match " + std::to_string(kReportVersion));
    const std::string label = j.at("scheme").get<std::string>() + "/" + j.at("trainer").at("method").get<std::string>();
    const auto key = std::make_pair(j.at("family").get<std::string>(), j.at("combo_label").get<std::string>());
    const auto& best = j.at("best").at("accuracy");
    if (!rows[key].emplace(label, Cell{best.at("mean").get<double>(), best.at("std").get<double>()}).second)
      throw InvalidInput("report: two runs for " + key.second + " under " + label);
    if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);
  }
  std::ostringstream os;
  os << "family,combo";
  for (const auto& l : labels) os << ',' << l << "_accuracy," << l << "_std";
  os << '\n';
  for (const auto& [key, cells] : rows) {
    os << key.first << ',' << key.second;
    for (const auto& l : labels) {
      auto it = cells.find(l);
      if (it == cells.end()) os << ",,";
      else os << ',' << format_double(it->second.mean) << ',' << format_double(it->second.std);
    }
    os << '\n';
  }
  write_text(out_csv, os.str());
  return rows.size();
}

}  // namespace dspn::pipeline
