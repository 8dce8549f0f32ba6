#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "dspn/core.hpp"

namespace dspn::synth {

inline constexpr const char* kTruthScheme = "synthetic-truth";
// Grades re-derived from a jittered fuzzy score; disagrees with the truth
// near the interval boundaries. Gives the report merge a second scheme.
inline constexpr const char* kPerturbedScheme = "perturbed";

struct ClassEffect {
  double peak_delay_ms = 0.0;
  double amplitude_factor = 1.0;
  double noise_level = 0.02;  // additive white noise, relative to a unit burst / body weight
};

struct SynthSpec {
  std::array<std::size_t, kNumGrades> subjects_per_class{29, 18, 16, 14};
  std::array<std::size_t, kNumGrades> trials_per_class{142, 93, 85, 72};
  double fs = 2000.0;
  double duration_s = 1.5;
  std::array<ClassEffect, kNumGrades> class_effects{
      ClassEffect{0.0, 1.0, 0.02}, ClassEffect{15.0, 0.9, 0.025}, ClassEffect{30.0, 0.8, 0.03},
      ClassEffect{50.0, 0.65, 0.037}};
  std::uint64_t seed = 0;

  void validate() const;
  // Shrinks every grade's departure from Absent by `s` (0 = no class
  // signal, 1 = unchanged).
  SynthSpec with_effect_scale(double s) const;
};

// Muscle burst timing used by the generator (seconds from trial start).
struct BurstTiming {
  double first_onset_s;
  double period_s;
  double width_s;  // Gaussian window sigma
};
BurstTiming burst_timing(ChannelKind muscle);
inline constexpr std::size_t kBurstsPerTrial = 4;

Dataset generate_dataset(const SynthSpec& spec);
Dataset generate_dataset_serial(const SynthSpec& spec);

// Same as write_dataset; returns the manifest path.
std::filesystem::path write_fixture(const Dataset& d, const std::filesystem::path& dir);

}  // namespace dspn::synth
