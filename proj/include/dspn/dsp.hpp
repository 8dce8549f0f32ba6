#pragma once

#include <complex>
#include <span>
#include <vector>

#include "dspn/core.hpp"

namespace dspn::dsp {

enum class FilterKind { Lowpass, Highpass, Bandpass, Bandstop };

// One biquad, normalized so a0 = 1. First-order sections carry b2 = a2 = 0.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;

  std::complex<double> response(double omega) const;
};

struct FilterSpec {
  FilterKind kind = FilterKind::Lowpass;
  int order = 1;
  std::vector<double> cutoffs_hz;
  double fs_hz = 1.0;
  std::vector<Biquad> sections;

  // Complex response of the cascade at `freq_hz`.
  std::complex<double> response(double freq_hz) const;
  double gain_db(double freq_hz) const;
};

struct PreprocessConfig {
  double bp_lo_hz = 4.0;
  double bp_hi_hz = 500.0;
  int bp_order = 4;
  double notch_fundamental_hz = 60.0;
  double notch_q = 35.0;
  int notch_max_harmonics = 5;
  double env_cut_hz = 5.0;
  int env_order = 6;
  bool zero_phase = true;

  void validate() const;
};

SignalTrace detrend_linear(const SignalTrace& x);

// Digital Butterworth via analog prototype, frequency transform and the
// prewarped bilinear map. `order` is the prototype order, so band filters
// carry 2*order poles.
FilterSpec design_butterworth(FilterKind kind, int order, std::span<const double> cutoffs_hz,
                              double fs_hz);

// Second-order IIR notch at f0 with quality factor q.
Biquad design_notch(double f0_hz, double q, double fs_hz);

// Cascaded biquad filtering (transposed direct form II) with zero initial state.
std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x);

// Forward-backward filtering with odd-reflection edge padding and
// steady-state initial conditions.
std::vector<double> sosfiltfilt(std::span<const Biquad> sections, std::span<const double> x);

SignalTrace apply_filter(const FilterSpec& spec, const SignalTrace& x, bool zero_phase);

// Notch centre frequencies actually used for a given rate.
std::vector<double> notch_frequencies(double fundamental_hz, int max_harmonics, double fs_hz);

SignalTrace notch_powerline(const SignalTrace& x, double fundamental_hz, double q, int max_harmonics,
                            bool zero_phase = true);

SignalTrace rectify(const SignalTrace& x);

// Zero-pads, low-passes and strips the padding. Input must be rectified.
SignalTrace envelope_lowpass(const SignalTrace& x, const PreprocessConfig& cfg);

struct Preprocessed {
  SignalTrace filtered;
  SignalTrace envelope;
};

Preprocessed preprocess_emg(const SignalTrace& x, const PreprocessConfig& cfg);

}  // namespace dspn::dsp
