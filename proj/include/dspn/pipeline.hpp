#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dspn/dsp.hpp"
#include "dspn/features.hpp"
#include "dspn/learn.hpp"
#include "dspn/segmentation.hpp"
#include "dspn/selection.hpp"

namespace dspn::pipeline {

struct SegmentationConfig {
  seg::ChangePointConfig change_point;
  seg::BurstConfig burst;
  // One segment spanning the whole EMG trace instead of burst segments.
  bool whole_trial_emg = false;
};

struct PreparedSignals {
  feat::ProcessedSignals signals;  // EMG: filtered trace; GRF: raw force
  feat::ProcessedSignals envelopes;  // EMG only
  seg::SegmentTable segments;
  std::vector<std::string> failed_trials;  // segmentation failed; no segments recorded
};

// Preprocess and segment `channels` for every trial. GRF channels are cut
// by the stance found on GRF_Z, which is loaded even when not requested.
PreparedSignals prepare_signals(const Dataset& d, std::span<const ChannelKind> channels,
                                const dsp::PreprocessConfig& pre, const SegmentationConfig& segcfg);
PreparedSignals prepare_signals_serial(const Dataset& d, std::span<const ChannelKind> channels,
                                       const dsp::PreprocessConfig& pre, const SegmentationConfig& segcfg);

// Failure inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, bool io)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)), io_(io) {}
  const std::string& stage() const { return stage_; }
  // The underlying failure was a read or write error.
  bool io() const { return io_; }

 private:
  std::string stage_;
  bool io_;
};

struct RunConfig {
  std::filesystem::path dataset;
  std::string scheme;
  ChannelFamily family = ChannelFamily::EMG;
  std::vector<ChannelKind> combo;
  dsp::PreprocessConfig preprocess;
  SegmentationConfig segmentation;
  std::optional<std::filesystem::path> segment_override;
  feat::FeatureConfig features;
  feat::Aggregation aggregation = feat::Aggregation::Mean;
  double prune_threshold = 0.9;
  int k_neighbors = 10;
  learn::TrainerSpec trainer = learn::TrainerSpec::adaboost_m2();
  learn::CvConfig cv;
  bool incremental = true;
  std::optional<std::size_t> max_k;
  bool write_envelopes = false;
  std::filesystem::path out_dir;

  // Family rule, value ranges, trainer and CV parameters. Paths are checked
  // by run().
  void validate() const;
};

// JSON config (docs/formats.md). Relative paths resolve against the config
// file's directory. The seed is mandatory.
RunConfig load_run_config(const std::filesystem::path& path);

inline constexpr int kReportVersion = 1;

struct RunResult {
  sel::ChannelStudy study;
  sel::SearchReport search;
  std::filesystem::path report_path;
};

// Runs every stage and writes the artifacts into cfg.out_dir. Stage
// failures surface as StageError after a FAILED marker is written.
RunResult run(const RunConfig& cfg);

// Per-K summary table in the layout of the published result tables.
std::string format_summary(const RunConfig& cfg, const RunResult& r);

// Side-by-side accuracy per combo across reports; returns rows written.
std::size_t merge_reports(std::span<const std::filesystem::path> reports, const std::filesystem::path& out_csv);

}  // namespace dspn::pipeline
