#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dspn/core.hpp"
#include "dspn/dsp.hpp"

namespace dspn::seg {

// Half-open sample range [start, end).
struct Segment {
  std::size_t start = 0;
  std::size_t end = 0;
  ChannelKind source_channel = ChannelKind::GRF_Z;

  std::size_t length() const { return end - start; }
  bool operator==(const Segment&) const = default;
};

struct ChangePointConfig {
  std::size_t min_segment_len = 200;
  std::size_t max_change_points = 4;
  // Residual-reduction threshold a split must beat. Empty means
  // 2*ln(N)*sigma^2 with sigma estimated from second differences.
  std::optional<double> penalty;

  void validate() const;
};

struct BurstConfig {
  double on_frac = 0.15;
  double off_frac = 0.10;
  std::size_t min_burst_len = 50;
  std::size_t expected_bursts = 4;

  void validate() const;
};

struct ClassProfile {
  SeverityGrade grade = SeverityGrade::Absent;
  std::vector<double> mean_curve;
  std::vector<double> std_curve;
  std::size_t n_trials = 0;
};

// Residual sum of squares of the least-squares line through x[a, b).
// Exposed for tests and the benchmark.
class LinearCost {
 public:
  explicit LinearCost(std::span<const double> x);
  double rss(std::size_t a, std::size_t b) const;
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  std::vector<long double> s_t_, s_tt_, s_x_, s_tx_, s_xx_;
};

// Binary segmentation under a piecewise-linear least-squares model.
std::vector<std::size_t> detect_change_points(const SignalTrace& x, const ChangePointConfig& cfg);

Segment segment_stance(const SignalTrace& grfz, const ChangePointConfig& cfg);

std::vector<Segment> propagate_segment(const Segment& seg, std::size_t source_length,
                                       std::span<const SignalTrace> targets,
                                       std::span<const ChannelKind> target_kinds);

// Hysteresis burst detection on an envelope. Each returned segment runs
// from one burst onset to the next (the last one to the end of the signal).
std::vector<Segment> detect_emg_bursts(const SignalTrace& envelope, const BurstConfig& cfg,
                                       ChannelKind channel = ChannelKind::EMG_GM);

struct SegmentKey {
  std::string trial_id;
  ChannelKind channel;
  auto operator<=>(const SegmentKey&) const = default;
};

struct SegmentSet {
  std::size_t signal_length = 0;
  std::vector<Segment> segments;
  bool operator==(const SegmentSet&) const = default;
};

using SegmentTable = std::map<SegmentKey, SegmentSet>;

// Override CSV rows: trial_id,channel,segment_index,start,end.
SegmentTable apply_override(const SegmentTable& table, const std::filesystem::path& override_path);

void write_segments_csv(const SegmentTable& table, const std::filesystem::path& path);
SegmentTable read_segments_csv(const std::filesystem::path& path);

struct ProfileInput {
  std::string trial_id;
  SeverityGrade grade;
  std::vector<double> curve;
};

std::vector<double> resample_linear(std::span<const double> x, std::size_t length);

// Per-grade pointwise mean and sample std of RMS-normalised, resampled
// curves. Inputs are reduced in trial_id order.
std::vector<ClassProfile> class_profiles(std::vector<ProfileInput> inputs, std::size_t length = 1000);

// Dataset convenience: EMG channels use the preprocessed envelope, GRF
// channels the raw force.
std::vector<ClassProfile> class_profiles(const Dataset& d, ChannelKind channel, const std::string& scheme,
                                         const dsp::PreprocessConfig& pre, std::size_t length = 1000);

void write_profiles_csv(std::span<const ClassProfile> profiles, const std::filesystem::path& path);

}  // namespace dspn::seg
