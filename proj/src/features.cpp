#include "dspn/features.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "dspn/log.hpp"

namespace dspn::feat {
namespace {

constexpr std::array<std::string_view, kNumFeatures> kNames = {
    "LMAV", "NSV", "WL", "WAMP", "SSC", "ZC", "MOB", "COM", "SKW", "AR1",
    "AR2",  "AR3", "AR4", "M0",  "M2",  "M4", "M6",  "AC1", "AC2"};

constexpr std::array<FeatureKind, kNumFeatures> kKinds = {
    FeatureKind::LMAV, FeatureKind::NSV, FeatureKind::WL,  FeatureKind::WAMP, FeatureKind::SSC,
    FeatureKind::ZC,   FeatureKind::MOB, FeatureKind::COM, FeatureKind::SKW,  FeatureKind::AR1,
    FeatureKind::AR2,  FeatureKind::AR3, FeatureKind::AR4, FeatureKind::M0,   FeatureKind::M2,
    FeatureKind::M4,   FeatureKind::M6,  FeatureKind::AC1, FeatureKind::AC2};

double population_variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

std::vector<double> diff(std::span<const double> x) {
  std::vector<double> d(x.size() > 0 ? x.size() - 1 : 0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

void set(FeatureVector& f, FeatureKind k, double v) { f.values[static_cast<std::size_t>(k)] = v; }

}  // namespace

std::string_view feature_name(FeatureKind k) { return kNames[static_cast<std::size_t>(k)]; }
const std::array<FeatureKind, kNumFeatures>& all_features() { return kKinds; }

namespace td {

double mav(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

double waveform_length(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) s += std::abs(x[i + 1] - x[i]);
  return s;
}

std::size_t willison_amplitude(std::span<const double> x, double threshold) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) n += std::abs(x[i + 1] - x[i]) >= threshold;
  return n;
}

std::size_t slope_sign_changes(std::span<const double> x, double threshold) {
  std::size_t n = 0;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) n += (x[i] - x[i - 1]) * (x[i] - x[i + 1]) >= threshold;
  return n;
}

std::size_t zero_crossings(std::span<const double> x, double threshold) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    n += sign(x[i]) != sign(x[i + 1]) && std::abs(x[i] - x[i + 1]) >= threshold;
  return n;
}

double mobility(std::span<const double> x) {
  const double vx = population_variance(x);
  if (vx <= 0.0) return 0.0;
  return std::sqrt(population_variance(diff(x)) / vx);
}

double complexity(std::span<const double> x) {
  const double mx = mobility(x);
  if (mx <= 0.0) return 0.0;
  return mobility(diff(x)) / mx;
}

double skewness(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  const double sd = std::sqrt(population_variance(x));
  if (sd <= 0.0) return 0.0;
  double s = 0.0;
  for (double v : x) s += std::pow((v - m) / sd, 3);
  return s / static_cast<double>(x.size());
}

double difference_moment(std::span<const double> x, int k) {
  std::vector<double> d(x.begin(), x.end());
  for (int j = 0; j < k; ++j) d = diff(d);
  double s = 0.0;
  for (double v : d) s += v * v;
  return s;
}

double amplitude_change(std::span<const double> x, std::size_t lag) {
  if (x.size() <= lag) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i + lag < x.size(); ++i) s += std::abs(x[i + lag] - x[i]);
  return s / static_cast<double>(x.size() - lag);
}

}  // namespace td

double nsv_default(std::span<const double> x) {
  const double m = td::mav(x);
  if (m <= 0.0) return 0.0;
  double s = 0.0;
  for (double v : x) s += std::log1p(std::abs(v) / m);
  return s / static_cast<double>(x.size());
}

void FeatureConfig::validate() const {
  if (!(wamp_threshold >= 0.0 && ssc_threshold >= 0.0 && zc_threshold >= 0.0))
    throw InvalidInput("feature thresholds must be >= 0");
  if (!nsv) throw InvalidInput("no NSV formula configured");
}

std::vector<double> autoregressive(std::span<const double> x, std::size_t order) {
  const std::size_t n = x.size();
  std::vector<double> r(order + 1, 0.0);
  for (std::size_t k = 0; k <= order && k < n; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) s += x[i] * x[i + k];
    r[k] = s / static_cast<double>(n);
  }
  std::vector<double> a(order, 0.0);
  if (r[0] <= 0.0) return a;

  std::vector<double> prev(order, 0.0);
  double err = r[0];
  for (std::size_t m = 0; m < order; ++m) {
    double acc = r[m + 1];
    for (std::size_t j = 0; j < m; ++j) acc -= a[j] * r[m - j];
    const double k = acc / err;
    if (!std::isfinite(k) || std::abs(k) >= 1.0) break;  // numerically singular
    prev = a;
    a[m] = k;
    for (std::size_t j = 0; j < m; ++j) a[j] = prev[j] - k * prev[m - 1 - j];
    err *= 1.0 - k * k;
    if (err <= 0.0) break;
  }
  return a;
}

FeatureVector extract_features(std::span<const double> x, const FeatureConfig& cfg) {
  cfg.validate();
  const std::size_t n = x.size();
  if (n < kMinSegmentLength)
    throw SegmentTooShort("segment of " + std::to_string(n) + " samples; at least " +
                          std::to_string(kMinSegmentLength) + " required");
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidInput("segment contains a non-finite sample");

  FeatureVector f;
  using K = FeatureKind;
  const bool all_zero = std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
  if (all_zero) {
    f.degenerate = true;
    set(f, K::LMAV, std::log(kLogEpsilon));
    set(f, K::NSV, cfg.nsv(x));
    return f;
  }

  const double mav = td::mav(x);
  const double rms = td::rms(x);
  const double wl = td::waveform_length(x);
  set(f, K::LMAV, std::log(mav + kLogEpsilon));
  set(f, K::NSV, cfg.nsv(x));
  set(f, K::WL, wl);
  set(f, K::WAMP, static_cast<double>(td::willison_amplitude(x, cfg.wamp_threshold * rms)));
  set(f, K::SSC, static_cast<double>(td::slope_sign_changes(x, cfg.ssc_threshold * rms * rms)));
  set(f, K::ZC, static_cast<double>(td::zero_crossings(x, cfg.zc_threshold * rms)));
  set(f, K::MOB, td::mobility(x));
  set(f, K::COM, td::complexity(x));
  set(f, K::SKW, td::skewness(x));
  const auto ar = autoregressive(x, 4);
  set(f, K::AR1, ar[0]);
  set(f, K::AR2, ar[1]);
  set(f, K::AR3, ar[2]);
  set(f, K::AR4, ar[3]);
  set(f, K::M0, td::difference_moment(x, 0));
  set(f, K::M2, td::difference_moment(x, 1));
  set(f, K::M4, td::difference_moment(x, 2));
  set(f, K::M6, td::difference_moment(x, 3));
  set(f, K::AC1, wl / static_cast<double>(n - 1));
  set(f, K::AC2, td::amplitude_change(x, 2));

  for (double v : f.values)
    if (!std::isfinite(v)) throw InvalidInput("feature extraction produced a non-finite value");
  return f;
}

std::vector<std::string> feature_columns(std::span<const ChannelKind> channels) {
  std::vector<std::string> cols;
  for (auto c : channels)
    for (auto k : kKinds) cols.push_back(std::string(channel_short_name(c)) + "." + std::string(feature_name(k)));
  return cols;
}

namespace {

struct TrialRows {
  std::vector<double> values;  // rows x (19*channels)
  std::vector<std::string> keys;
  SeverityGrade grade = SeverityGrade::Absent;
  bool skipped = false;
  bool degenerate = false;
};

TrialRows extract_trial(const Trial& t, std::span<const ChannelKind> channels, const std::string& scheme,
                        const FeatureConfig& cfg, const ProcessedSignals& signals, const seg::SegmentTable& segments,
                        Aggregation agg) {
  TrialRows out;
  auto g = t.grades.find(scheme);
  if (g == t.grades.end()) {
    log::warn("trial '" + t.trial_id + "' has no grade under scheme '" + scheme + "'; skipped");
    out.skipped = true;
    return out;
  }
  out.grade = g->second;

  std::vector<std::vector<FeatureVector>> per_channel;
  for (auto c : channels) {
    const seg::SegmentKey key{t.trial_id, c};
    auto sig = signals.find(key);
    auto segs = segments.find(key);
    if (sig == signals.end() || segs == segments.end() || segs->second.segments.empty()) {
      log::warn("trial '" + t.trial_id + "' lacks channel " + std::string(channel_name(c)) + "; skipped");
      out.skipped = true;
      return out;
    }
    std::vector<FeatureVector> vecs;
    for (const auto& s : segs->second.segments) {
      if (s.end > sig->second.size() || s.length() < kMinSegmentLength) {
        log::warn("trial '" + t.trial_id + "' " + std::string(channel_name(c)) + ": segment [" +
                  std::to_string(s.start) + "," + std::to_string(s.end) + ") unusable; dropped");
        continue;
      }
      vecs.push_back(extract_features(std::span<const double>(sig->second).subspan(s.start, s.length()), cfg));
    }
    if (vecs.empty()) {
      log::warn("trial '" + t.trial_id + "' " + std::string(channel_name(c)) + ": no usable segments; skipped");
      out.skipped = true;
      return out;
    }
    per_channel.push_back(std::move(vecs));
  }

  if (agg == Aggregation::Mean) {
    for (const auto& vecs : per_channel) {
      std::array<double, kNumFeatures> mean{};
      for (const auto& v : vecs) {
        for (std::size_t k = 0; k < kNumFeatures; ++k) mean[k] += v.values[k];
        out.degenerate |= v.degenerate;
      }
      for (double& m : mean) m /= static_cast<double>(vecs.size());
      out.values.insert(out.values.end(), mean.begin(), mean.end());
    }
    out.keys.push_back(t.trial_id);
  } else {
    std::size_t rows = SIZE_MAX;
    for (const auto& vecs : per_channel) rows = std::min(rows, vecs.size());
    for (std::size_t r = 0; r < rows; ++r) {
      for (const auto& vecs : per_channel) {
        out.values.insert(out.values.end(), vecs[r].values.begin(), vecs[r].values.end());
        out.degenerate |= vecs[r].degenerate;
      }
      out.keys.push_back(t.trial_id + "#" + std::to_string(r));
    }
  }
  return out;
}

ExtractReport gather(std::vector<TrialRows>&& parts, const Dataset& d, std::span<const ChannelKind> channels) {
  ExtractReport rep;
  std::vector<double> vals;
  std::vector<SeverityGrade> labels;
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    auto& p = parts[i];
    if (p.skipped) {
      rep.skipped_trials.push_back(d.trials[i].trial_id);
      continue;
    }
    vals.insert(vals.end(), p.values.begin(), p.values.end());
    for (auto& k : p.keys) {
      if (p.degenerate) rep.degenerate_rows.push_back(k);
      labels.push_back(p.grade);
      keys.push_back(std::move(k));
    }
  }
  rep.matrix = FeatureMatrix(feature_columns(channels), std::move(vals), std::move(labels), std::move(keys));
  return rep;
}

void check_channels(std::span<const ChannelKind> channels) {
  if (channels.empty()) throw InvalidInput("no channels requested");
  for (std::size_t i = 0; i < channels.size(); ++i)
    for (std::size_t j = i + 1; j < channels.size(); ++j)
      if (channels[i] == channels[j]) throw InvalidInput("channel listed twice: " + std::string(channel_name(channels[i])));
}

}  // namespace

ExtractReport extract_matrix_serial(const Dataset& d, std::span<const ChannelKind> channels, const std::string& scheme,
                                    const FeatureConfig& cfg, const ProcessedSignals& signals,
                                    const seg::SegmentTable& segments, Aggregation agg) {
  check_channels(channels);
  cfg.validate();
  std::vector<TrialRows> parts;
  parts.reserve(d.trials.size());
  for (const auto& t : d.trials) parts.push_back(extract_trial(t, channels, scheme, cfg, signals, segments, agg));
  return gather(std::move(parts), d, channels);
}

ExtractReport extract_matrix(const Dataset& d, std::span<const ChannelKind> channels, const std::string& scheme,
                             const FeatureConfig& cfg, const ProcessedSignals& signals,
                             const seg::SegmentTable& segments, Aggregation agg) {
  check_channels(channels);
  cfg.validate();
  std::vector<TrialRows> parts(d.trials.size());
  std::optional<std::string> failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < d.trials.size(); ++i) {
    try {
      parts[i] = extract_trial(d.trials[i], channels, scheme, cfg, signals, segments, agg);
    } catch (const std::exception& e) {
#pragma omp critical(dspn_extract_failure)
      if (!failure) failure = "trial '" + d.trials[i].trial_id + "': " + e.what();
    }
  }
  if (failure) throw InvalidInput(*failure);
  return gather(std::move(parts), d, channels);
}

}  // namespace dspn::feat
