#pragma once

#include <array>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dspn/core.hpp"
#include "dspn/feature_matrix.hpp"
#include "dspn/segmentation.hpp"

namespace dspn::feat {

enum class FeatureKind {
  LMAV, NSV, WL, WAMP, SSC, ZC, MOB, COM, SKW,
  AR1, AR2, AR3, AR4,
  M0, M2, M4, M6,
  AC1, AC2
};

inline constexpr std::size_t kNumFeatures = 19;
std::string_view feature_name(FeatureKind k);
// Column order of every matrix follows this enumeration.
const std::array<FeatureKind, kNumFeatures>& all_features();

// Time-domain primitives, valid for any length >= 1 unless noted.
namespace td {
double mav(std::span<const double> x);
double rms(std::span<const double> x);
double waveform_length(std::span<const double> x);
std::size_t willison_amplitude(std::span<const double> x, double threshold);
std::size_t slope_sign_changes(std::span<const double> x, double threshold);
std::size_t zero_crossings(std::span<const double> x, double threshold);
double mobility(std::span<const double> x);
double complexity(std::span<const double> x);
double skewness(std::span<const double> x);
// Sum of squares of the k-th difference (k = 0 gives the energy).
double difference_moment(std::span<const double> x, int k);
// Mean |x[i+lag] - x[i]|.
double amplitude_change(std::span<const double> x, std::size_t lag);
}  // namespace td

using NsvFormula = std::function<double(std::span<const double>)>;

// Default NSV: mean of ln(1 + |x|/MAV); zero for an all-zero segment.
double nsv_default(std::span<const double> x);

struct FeatureConfig {
  // Thresholds are fractions of the segment RMS (RMS^2 for SSC, whose
  // statistic is a product of two differences).
  double wamp_threshold = 0.1;
  double ssc_threshold = 0.01;
  double zc_threshold = 0.01;
  NsvFormula nsv = nsv_default;

  void validate() const;
};

struct FeatureVector {
  std::array<double, kNumFeatures> values{};
  bool degenerate = false;  // all-zero segment

  double operator[](FeatureKind k) const { return values[static_cast<std::size_t>(k)]; }
};

inline constexpr std::size_t kMinSegmentLength = 16;
inline constexpr double kLogEpsilon = 1e-12;

FeatureVector extract_features(std::span<const double> x, const FeatureConfig& cfg);

// Order-p autocorrelation-method AR fit (Levinson-Durbin), convention
// x[i] ~ sum_k a[k] x[i-k].
std::vector<double> autoregressive(std::span<const double> x, std::size_t order);

enum class Aggregation {
  Mean,        // one row per trial, mean of its segment vectors
  PerSegment,  // one row per segment index shared by all channels
};

// Per (trial, channel) signal the features are computed from.
using ProcessedSignals = std::map<seg::SegmentKey, std::vector<double>>;

struct ExtractReport {
  FeatureMatrix matrix;
  std::vector<std::string> skipped_trials;
  std::vector<std::string> degenerate_rows;
};

// Columns "<channel>.<feature>", 19 per channel in channel then feature order.
std::vector<std::string> feature_columns(std::span<const ChannelKind> channels);

ExtractReport extract_matrix(const Dataset& d, std::span<const ChannelKind> channels, const std::string& scheme,
                             const FeatureConfig& cfg, const ProcessedSignals& signals,
                             const seg::SegmentTable& segments, Aggregation agg = Aggregation::Mean);
// Single-threaded reference for extract_matrix.
ExtractReport extract_matrix_serial(const Dataset& d, std::span<const ChannelKind> channels, const std::string& scheme,
                                    const FeatureConfig& cfg, const ProcessedSignals& signals,
                                    const seg::SegmentTable& segments, Aggregation agg = Aggregation::Mean);

}  // namespace dspn::feat
