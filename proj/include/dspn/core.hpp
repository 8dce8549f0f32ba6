#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dspn/error.hpp"

namespace dspn {

enum class SeverityGrade { Absent = 0, Mild = 1, Moderate = 2, Severe = 3 };

inline constexpr std::size_t kNumGrades = 4;
inline constexpr std::array<SeverityGrade, kNumGrades> kAllGrades = {
    SeverityGrade::Absent, SeverityGrade::Mild, SeverityGrade::Moderate,
    SeverityGrade::Severe};

constexpr std::size_t grade_index(SeverityGrade g) { return static_cast<std::size_t>(g); }
std::string_view grade_name(SeverityGrade g);
SeverityGrade parse_grade(std::string_view name);

// Neuropathy degree score; nonnegative and finite by construction.
class FuzzyScore {
 public:
  explicit FuzzyScore(double value);
  double value() const { return value_; }

 private:
  double value_;
};

// Absent x <= 2.5, Mild 2.5 < x < 5, Moderate 5 <= x < 8, Severe x >= 8.
SeverityGrade grade_from_fuzzy_score(FuzzyScore score);
SeverityGrade grade_from_fuzzy_score(double score);

enum class ChannelKind { EMG_GM, EMG_TA, EMG_VL, GRF_X, GRF_Y, GRF_Z };
enum class ChannelFamily { EMG, GRF };

inline constexpr std::array<ChannelKind, 6> kAllChannels = {
    ChannelKind::EMG_GM, ChannelKind::EMG_TA, ChannelKind::EMG_VL,
    ChannelKind::GRF_X,  ChannelKind::GRF_Y,  ChannelKind::GRF_Z};

std::string_view channel_name(ChannelKind c);
// Short label used to qualify feature columns ("GM", "GRFx", ...).
std::string_view channel_short_name(ChannelKind c);
ChannelKind parse_channel(std::string_view name);
ChannelFamily channel_family(ChannelKind c);
std::string_view family_name(ChannelFamily f);
ChannelFamily parse_family(std::string_view name);

// Uniformly sampled scalar series. Invariants (fs > 0, nonempty, finite)
// are checked on construction.
class SignalTrace {
 public:
  SignalTrace(std::vector<double> samples, double fs, std::string unit = "V");

  const std::vector<double>& samples() const { return samples_; }
  double fs() const { return fs_; }
  const std::string& unit() const { return unit_; }
  std::size_t size() const { return samples_.size(); }
  double duration() const { return static_cast<double>(samples_.size()) / fs_; }

  // Same fs/unit, new samples.
  SignalTrace with_samples(std::vector<double> samples) const;

  bool operator==(const SignalTrace&) const = default;

 private:
  std::vector<double> samples_;
  double fs_;
  std::string unit_;
};

struct Trial {
  std::string subject_id;
  std::string trial_id;
  std::map<std::string, SeverityGrade> grades;
  std::map<ChannelKind, SignalTrace> channels;
  std::optional<double> fuzzy_score;

  bool operator==(const Trial&) const = default;
};

struct SubjectInfo {
  std::string id;
  std::map<std::string, std::string> demographics;

  bool operator==(const SubjectInfo&) const = default;
};

struct Manifest {
  std::vector<std::string> schemes;
  std::vector<SubjectInfo> subjects;

  bool operator==(const Manifest&) const = default;
};

struct Dataset {
  std::vector<Trial> trials;
  Manifest manifest;

  bool operator==(const Dataset&) const = default;
  // Trial counts per grade under `scheme`.
  std::array<std::size_t, kNumGrades> class_counts(const std::string& scheme) const;
};

struct ValidationIssue {
  enum class Kind { DuplicateTrialId, LengthMismatch, MissingGrade, UnknownScheme, NoChannels };
  Kind kind;
  std::string trial_id;
  std::string detail;
};

// Lists every invariant violation; empty means valid.
std::vector<ValidationIssue> validate_dataset(const Dataset& d);

// Signal CSV: "# fs=<Hz> unit=<V|N>" then one value per line.
SignalTrace read_signal_csv(const std::filesystem::path& path);
void write_signal_csv(const SignalTrace& s, const std::filesystem::path& path);

// Manifest JSON (see docs/formats.md). Paths inside are relative to the
// manifest's directory.
Dataset load_dataset(const std::filesystem::path& manifest_path);
// Writes manifest.json plus signals/ under `dir`; returns the manifest path.
std::filesystem::path write_dataset(const Dataset& d, const std::filesystem::path& dir);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace dspn
