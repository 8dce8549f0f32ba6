#include "dspn/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <exception>
#include <numbers>

#include "dspn/dsp.hpp"
#include "dspn/rng.hpp"

namespace dspn::synth {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEmgScale = 1e-3;  // unit burst = 1 mV RMS
constexpr std::array<double, kBurstsPerTrial> kBurstWeights{1.0, 0.85, 0.75, 0.7};
constexpr std::array<ChannelKind, 3> kMuscles{ChannelKind::EMG_GM, ChannelKind::EMG_TA, ChannelKind::EMG_VL};

struct SubjectEffects {
  std::array<double, 3> emg_gain;
  double timing_s;
  double body_weight_n;
  double stance_start_s;
  double hump_pos;     // offset of the first GRFz hump, stance fraction
  double hump_gain;
  double shear_phase;  // GRFx oscillation offset, stance fraction
};

struct TrialPlan {
  std::size_t index;
  std::size_t subject;
  SeverityGrade grade;
};

double gauss(double t, double mu, double sigma) {
  const double z = (t - mu) / sigma;
  return std::exp(-0.5 * z * z);
}

std::vector<double> band_noise(Rng& rng, std::size_t n, const dsp::FilterSpec& band) {
  const std::size_t warm = 400;
  std::vector<double> w(n + warm);
  for (double& v : w) v = normal01(rng);
  auto y = dsp::sosfilt(band.sections, w);
  y.erase(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(warm));
  double ss = 0.0;
  for (double v : y) ss += v * v;
  const double r = std::sqrt(ss / static_cast<double>(n));
  for (double& v : y) v /= r;
  return y;
}

double fuzzy_for(SeverityGrade g, double u) {
  switch (g) {
    case SeverityGrade::Absent: return 2.5 * u;
    case SeverityGrade::Mild: return 2.5 + 2.5 * (0.02 + 0.96 * u);
    case SeverityGrade::Moderate: return 5.0 + 3.0 * 0.98 * u;
    case SeverityGrade::Severe: return 8.0 + 6.0 * u;
  }
  return 0.0;
}

Trial make_trial(const SynthSpec& spec, const TrialPlan& plan, const SubjectEffects& subj,
                 const dsp::FilterSpec& band) {
  auto rng = make_rng(spec.seed, {2, plan.index});
  const auto& fx = spec.class_effects[grade_index(plan.grade)];
  const std::size_t n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.fs));
  const double dt = 1.0 / spec.fs;

  Trial t;
  char buf[32];
  std::snprintf(buf, sizeof buf, "t%04zu", plan.index);
  t.trial_id = buf;
  std::snprintf(buf, sizeof buf, "s%03zu", plan.subject);
  t.subject_id = buf;
  t.grades[kTruthScheme] = plan.grade;
  const double score = fuzzy_for(plan.grade, uniform01(rng));
  t.fuzzy_score = score;
  t.grades[kPerturbedScheme] = grade_from_fuzzy_score(std::max(0.0, score + 0.75 * normal01(rng)));

  const double delay = fx.peak_delay_ms * 1e-3 + subj.timing_s + 0.004 * normal01(rng);

  for (std::size_t m = 0; m < kMuscles.size(); ++m) {
    const auto timing = burst_timing(kMuscles[m]);
    const double gain = subj.emg_gain[m] * std::exp(0.035 * normal01(rng)) * fx.amplitude_factor;
    const auto carrier = band_noise(rng, n, band);
    const double floor = fx.noise_level * std::exp(0.15 * normal01(rng));
    const double hum_amp = 0.05 * (0.5 + uniform01(rng));
    const double hum_phase = 2.0 * kPi * uniform01(rng);
    const double drift = 0.4 * (uniform01(rng) - 0.5);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double ti = static_cast<double>(i) * dt;
      double w = 0.0;
      for (std::size_t k = 0; k < kBurstsPerTrial; ++k)
        w += kBurstWeights[k] *
             gauss(ti, timing.first_onset_s + static_cast<double>(k) * timing.period_s + delay, timing.width_s);
      x[i] = kEmgScale * (gain * w * carrier[i] + floor * normal01(rng) +
                          hum_amp * std::sin(2.0 * kPi * 60.0 * ti + hum_phase) + drift * ti / spec.duration_s);
    }
    t.channels.emplace(kMuscles[m], SignalTrace(std::move(x), spec.fs, "V"));
  }

  // Stance templates on a body-weight scale, zero outside stance.
  const double bw = subj.body_weight_n * std::exp(0.01 * normal01(rng));
  const double s0 = subj.stance_start_s + 0.01 * normal01(rng);
  const double dur = 0.65 * std::exp(0.03 * normal01(rng));
  const double shift = fx.peak_delay_ms * 1e-3 / dur;
  const double hump_pos = subj.hump_pos + 0.03 * normal01(rng);
  const double shear_phase = subj.shear_phase + 0.03 * normal01(rng);
  const double f = fx.amplitude_factor;
  const double noise = fx.noise_level * bw * 0.01 * std::exp(0.3 * normal01(rng));
  std::vector<double> gx(n), gy(n), gz(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = (static_cast<double>(i) * dt - s0) / dur;
    double x = 0.0, y = 0.0, z = 0.0;
    if (tau > 0.0 && tau < 1.0) {
      const double base = std::sin(kPi * tau);
      const double humps = gauss(tau, 0.25 + shift + hump_pos, 0.1) + gauss(tau, 0.75, 0.1);
      z = bw * (0.8 * base + 0.45 * f * subj.hump_gain * humps * std::pow(base, 0.3));
      y = -bw * 0.22 * f * std::sin(2.0 * kPi * (tau - 0.5 * shift)) * base;
      x = bw * 0.05 * f * (0.8 * base + 0.5 * std::sin(3.0 * kPi * (tau - shift - shear_phase))) * base;
    }
    gx[i] = x + noise * normal01(rng);
    gy[i] = y + noise * normal01(rng);
    gz[i] = z + noise * normal01(rng);
  }
  t.channels.emplace(ChannelKind::GRF_X, SignalTrace(std::move(gx), spec.fs, "N"));
  t.channels.emplace(ChannelKind::GRF_Y, SignalTrace(std::move(gy), spec.fs, "N"));
  t.channels.emplace(ChannelKind::GRF_Z, SignalTrace(std::move(gz), spec.fs, "N"));
  return t;
}

struct Plan {
  std::vector<SubjectEffects> subjects;
  std::vector<TrialPlan> trials;
  Manifest manifest;
};

Plan make_plan(const SynthSpec& spec) {
  spec.validate();
  Plan p;
  p.manifest.schemes = {kTruthScheme, kPerturbedScheme};
  std::size_t subject = 0, trial = 0;
  for (std::size_t c = 0; c < kNumGrades; ++c) {
    const std::size_t first = subject;
    for (std::size_t s = 0; s < spec.subjects_per_class[c]; ++s, ++subject) {
      auto rng = make_rng(spec.seed, {1, subject});
      SubjectEffects e;
      for (double& g : e.emg_gain) g = std::exp(0.05 * normal01(rng));
      e.timing_s = 0.008 * normal01(rng);
      e.body_weight_n = 700.0 * std::exp(0.12 * normal01(rng));
      e.stance_start_s = 0.35 + 0.02 * normal01(rng);
      e.hump_pos = 0.04 * normal01(rng);
      e.hump_gain = std::exp(0.08 * normal01(rng));
      e.shear_phase = 0.05 * normal01(rng);
      p.subjects.push_back(e);
      char buf[32];
      std::snprintf(buf, sizeof buf, "s%03zu", subject);
      p.manifest.subjects.push_back({buf, {{"generating_grade", std::string(grade_name(kAllGrades[c]))}}});
    }
    for (std::size_t k = 0; k < spec.trials_per_class[c]; ++k)
      p.trials.push_back({trial++, first + k % spec.subjects_per_class[c], kAllGrades[c]});
  }
  return p;
}

Dataset generate(const SynthSpec& spec, bool parallel) {
  const Plan plan = make_plan(spec);
  const auto band = dsp::design_butterworth(dsp::FilterKind::Bandpass, 2, std::array{20.0, 450.0}, spec.fs);
  Dataset d;
  d.manifest = plan.manifest;
  const auto n = static_cast<std::ptrdiff_t>(plan.trials.size());
  std::vector<std::optional<Trial>> trials(plan.trials.size());
  std::vector<std::exception_ptr> errors(plan.trials.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& tp = plan.trials[static_cast<std::size_t>(i)];
    try {
      trials[static_cast<std::size_t>(i)] = make_trial(spec, tp, plan.subjects[tp.subject], band);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (auto& t : trials) d.trials.push_back(std::move(*t));
  return d;
}

}  // namespace

void SynthSpec::validate() const {
  if (!(fs >= 1000.0) || !std::isfinite(fs))
    throw SpecError("fs must be >= 1000 Hz to carry 450 Hz EMG content, got " + format_double(fs));
  for (std::size_t c = 0; c < kNumGrades; ++c) {
    const std::string g(grade_name(kAllGrades[c]));
    if (subjects_per_class[c] < 1 || trials_per_class[c] < 1)
      throw SpecError("subject and trial counts must be >= 1 (" + g + ")");
    const auto& e = class_effects[c];
    if (!(e.amplitude_factor > 0.0)) throw SpecError("amplitude_factor must be > 0 (" + g + ")");
    if (!(e.peak_delay_ms >= 0.0)) throw SpecError("peak_delay_ms must be >= 0 (" + g + ")");
    if (!(e.noise_level >= 0.0)) throw SpecError("noise_level must be >= 0 (" + g + ")");
  }
  const auto& a = class_effects[0];
  if (a.peak_delay_ms != 0.0 || a.amplitude_factor != 1.0)
    throw SpecError("Absent effects must be the identity (delay 0, factor 1)");
  // Last GM burst plus delay and 4 sigma of its window must fit.
  const auto gm = burst_timing(ChannelKind::EMG_GM);
  double max_delay = 0.0;
  for (const auto& e : class_effects) max_delay = std::max(max_delay, e.peak_delay_ms * 1e-3);
  const double need = gm.first_onset_s + 3.0 * gm.period_s + max_delay + 4.0 * gm.width_s;
  if (!(duration_s >= need))
    throw SpecError("duration_s must be >= " + format_double(need) + " s for the burst layout");
}

SynthSpec SynthSpec::with_effect_scale(double s) const {
  SynthSpec out = *this;
  const auto& a = class_effects[0];
  for (auto& e : out.class_effects) {
    e.peak_delay_ms = a.peak_delay_ms + s * (e.peak_delay_ms - a.peak_delay_ms);
    e.amplitude_factor = a.amplitude_factor + s * (e.amplitude_factor - a.amplitude_factor);
    e.noise_level = a.noise_level + s * (e.noise_level - a.noise_level);
  }
  return out;
}

BurstTiming burst_timing(ChannelKind muscle) {
  switch (muscle) {
    case ChannelKind::EMG_TA: return {0.10, 0.33, 0.035};
    case ChannelKind::EMG_VL: return {0.16, 0.33, 0.035};
    case ChannelKind::EMG_GM: return {0.22, 0.33, 0.035};
    default: throw InvalidInput("burst_timing: not a muscle channel");
  }
}

Dataset generate_dataset(const SynthSpec& spec) { return generate(spec, true); }
Dataset generate_dataset_serial(const SynthSpec& spec) { return generate(spec, false); }

std::filesystem::path write_fixture(const Dataset& d, const std::filesystem::path& dir) {
  return write_dataset(d, dir);
}

}  // namespace dspn::synth
