#include "dspn/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dspn/log.hpp"

namespace dspn::dsp {
namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

std::string hz(double v) { return format_double(v) + " Hz"; }

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

double prewarp(double f_hz, double fs) { return 2.0 * fs * std::tan(kPi * f_hz / fs); }

// Groups conjugate pairs and real poles into denominator sections.
std::vector<Biquad> poles_to_sections(const std::vector<cplx>& poles) {
  constexpr double kImagTol = 1e-12;
  std::vector<Biquad> out;
  std::vector<double> reals;
  for (const auto& p : poles) {
    if (std::abs(p.imag()) <= kImagTol * std::max(1.0, std::abs(p))) {
      reals.push_back(p.real());
    } else if (p.imag() > 0) {
      Biquad q;
      q.a1 = -2.0 * p.real();
      q.a2 = std::norm(p);
      out.push_back(q);
    }
  }
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    Biquad q;
    q.a1 = -(reals[i] + reals[i + 1]);
    q.a2 = reals[i] * reals[i + 1];
    out.push_back(q);
  }
  if (reals.size() % 2 == 1) {
    Biquad q;
    q.a1 = -reals.back();
    q.a2 = 0.0;
    out.push_back(q);
  }
  return out;
}

bool is_stable(const Biquad& q) {
  // Jury conditions for z^2 + a1 z + a2.
  return std::abs(q.a2) < 1.0 && std::abs(q.a1) < 1.0 + q.a2;
}

void check_fs(const FilterSpec& spec, const SignalTrace& x) {
  if (std::abs(spec.fs_hz - x.fs()) > 1e-9 * std::max(spec.fs_hz, x.fs()))
    throw InvalidInput("filter designed for fs " + hz(spec.fs_hz) + " applied to signal at " +
                       hz(x.fs()));
}

// Steady-state transposed-DF2 state of each section for a constant input.
std::vector<std::array<double, 2>> steady_state(std::span<const Biquad> sections, double level) {
  std::vector<std::array<double, 2>> zi(sections.size());
  for (std::size_t k = 0; k < sections.size(); ++k) {
    const auto& q = sections[k];
    const double den = 1.0 + q.a1 + q.a2;
    const double y = std::abs(den) < 1e-300 ? 0.0 : level * (q.b0 + q.b1 + q.b2) / den;
    zi[k][1] = q.b2 * level - q.a2 * y;
    zi[k][0] = q.b1 * level - q.a1 * y + zi[k][1];
    level = y;
  }
  return zi;
}

void run_sections(std::span<const Biquad> sections, std::vector<double>& x,
                  std::vector<std::array<double, 2>> state) {
  for (std::size_t k = 0; k < sections.size(); ++k) {
    const auto& q = sections[k];
    double z1 = state[k][0], z2 = state[k][1];
    for (double& v : x) {
      const double in = v;
      const double y = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * y + z2;
      z2 = q.b2 * in - q.a2 * y;
      v = y;
    }
  }
}

}  // namespace

cplx Biquad::response(double omega) const {
  const cplx z1 = std::polar(1.0, -omega);
  const cplx z2 = z1 * z1;
  return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

cplx FilterSpec::response(double freq_hz) const {
  const double omega = 2.0 * kPi * freq_hz / fs_hz;
  cplx h = 1.0;
  for (const auto& s : sections) h *= s.response(omega);
  return h;
}

double FilterSpec::gain_db(double freq_hz) const {
  return 20.0 * std::log10(std::max(std::abs(response(freq_hz)), 1e-300));
}

void PreprocessConfig::validate() const {
  if (!(bp_lo_hz > 0.0 && bp_lo_hz < bp_hi_hz))
    throw InvalidInput("bandpass edges must satisfy 0 < lo < hi");
  if (!(env_cut_hz > 0.0)) throw InvalidInput("envelope cutoff must be > 0");
  if (!(notch_q > 0.0)) throw InvalidInput("notch Q must be > 0");
  if (bp_order < 1 || env_order < 1) throw InvalidInput("filter orders must be >= 1");
  if (notch_max_harmonics < 0) throw InvalidInput("notch harmonic count must be >= 0");
}

SignalTrace detrend_linear(const SignalTrace& x) {
  const auto& v = x.samples();
  const std::size_t n = v.size();
  if (n < 2) throw InvalidInput("detrend needs at least 2 samples");
  // Centered abscissa keeps the normal equations well conditioned.
  const double tc = 0.5 * static_cast<double>(n - 1);
  double mean = 0.0;
  for (double s : v) mean += s;
  mean /= static_cast<double>(n);
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) - tc;
    stt += t * t;
    sty += t * (v[i] - mean);
  }
  const double slope = sty / stt;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = v[i] - mean - slope * (static_cast<double>(i) - tc);
  return x.with_samples(std::move(out));
}

FilterSpec design_butterworth(FilterKind kind, int order, std::span<const double> cutoffs_hz,
                              double fs_hz) {
  if (order < 1 || order > 12) throw InvalidInput("Butterworth order must be in 1..12");
  if (!(fs_hz > 0.0)) throw InvalidInput("sampling rate must be > 0");
  const bool band = kind == FilterKind::Bandpass || kind == FilterKind::Bandstop;
  if (cutoffs_hz.size() != (band ? 2u : 1u))
    throw InvalidInput(band ? "band filters need two cutoffs" : "this filter kind needs one cutoff");
  const double nyq = fs_hz / 2.0;
  for (double c : cutoffs_hz) {
    if (!(c > 0.0)) throw DesignError("cutoff " + hz(c) + " must be > 0");
    if (c >= nyq)
      throw DesignError("cutoff " + hz(c) + " is at or above Nyquist (" + hz(nyq) + ")");
  }
  if (band && !(cutoffs_hz[0] < cutoffs_hz[1]))
    throw DesignError("band edges must be increasing: " + hz(cutoffs_hz[0]) + ", " + hz(cutoffs_hz[1]));

  std::vector<cplx> proto(order);
  for (int k = 0; k < order; ++k)
    proto[k] = std::polar(1.0, kPi * (2.0 * k + order + 1) / (2.0 * order));

  std::vector<cplx> analog;
  double ref_omega = 0.0;  // digital frequency where the gain is normalised to 1
  const double w1 = prewarp(cutoffs_hz[0], fs_hz);
  switch (kind) {
    case FilterKind::Lowpass:
      for (auto p : proto) analog.push_back(w1 * p);
      ref_omega = 0.0;
      break;
    case FilterKind::Highpass:
      for (auto p : proto) analog.push_back(w1 / p);
      ref_omega = kPi;
      break;
    case FilterKind::Bandpass:
    case FilterKind::Bandstop: {
      const double w2 = prewarp(cutoffs_hz[1], fs_hz);
      const double w0 = std::sqrt(w1 * w2);
      const double bw = w2 - w1;
      for (auto p : proto) {
        const cplx c = kind == FilterKind::Bandpass ? p * bw : bw / p;
        const cplx disc = std::sqrt(c * c - 4.0 * w0 * w0);
        analog.push_back((c + disc) / 2.0);
        analog.push_back((c - disc) / 2.0);
      }
      ref_omega = kind == FilterKind::Bandpass ? 2.0 * std::atan(w0 / (2.0 * fs_hz)) : 0.0;
      break;
    }
  }

  std::vector<cplx> digital;
  digital.reserve(analog.size());
  for (auto s : analog) digital.push_back(bilinear(s, fs_hz));

  FilterSpec spec;
  spec.kind = kind;
  spec.order = order;
  spec.cutoffs_hz.assign(cutoffs_hz.begin(), cutoffs_hz.end());
  spec.fs_hz = fs_hz;
  spec.sections = poles_to_sections(digital);

  double notch_cos = 0.0;
  if (kind == FilterKind::Bandstop) {
    const double w0 = std::sqrt(w1 * prewarp(cutoffs_hz[1], fs_hz));
    notch_cos = std::cos(2.0 * std::atan(w0 / (2.0 * fs_hz)));
  }
  for (auto& q : spec.sections) {
    const bool first_order = q.a2 == 0.0 && kind != FilterKind::Bandpass && kind != FilterKind::Bandstop;
    switch (kind) {
      case FilterKind::Lowpass:
        if (first_order) q.b0 = 1, q.b1 = 1, q.b2 = 0;
        else q.b0 = 1, q.b1 = 2, q.b2 = 1;
        break;
      case FilterKind::Highpass:
        if (first_order) q.b0 = 1, q.b1 = -1, q.b2 = 0;
        else q.b0 = 1, q.b1 = -2, q.b2 = 1;
        break;
      case FilterKind::Bandpass:
        q.b0 = 1, q.b1 = 0, q.b2 = -1;
        break;
      case FilterKind::Bandstop:
        q.b0 = 1, q.b1 = -2.0 * notch_cos, q.b2 = 1;
        break;
    }
  }

  for (const auto& q : spec.sections)
    if (!is_stable(q)) throw DesignError("designed section is unstable (cutoffs too close to 0 or Nyquist)");

  // Spread the normalising gain evenly over the sections.
  cplx h = 1.0;
  for (const auto& q : spec.sections) h *= q.response(ref_omega);
  const double g = std::pow(1.0 / std::abs(h), 1.0 / static_cast<double>(spec.sections.size()));
  for (auto& q : spec.sections) {
    q.b0 *= g;
    q.b1 *= g;
    q.b2 *= g;
  }
  return spec;
}

Biquad design_notch(double f0_hz, double q, double fs_hz) {
  if (!(f0_hz > 0.0) || f0_hz >= fs_hz / 2.0)
    throw DesignError("notch frequency " + hz(f0_hz) + " must lie in (0, Nyquist=" + hz(fs_hz / 2) + ")");
  if (!(q > 0.0)) throw InvalidInput("notch Q must be > 0");
  const double w0 = 2.0 * kPi * f0_hz / fs_hz;
  const double bw = w0 / q;
  const double g = 1.0 / (1.0 + std::tan(bw / 2.0));
  Biquad b;
  b.b0 = g;
  b.b1 = -2.0 * g * std::cos(w0);
  b.b2 = g;
  b.a1 = -2.0 * g * std::cos(w0);
  b.a2 = 2.0 * g - 1.0;
  return b;
}

std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  run_sections(sections, y, std::vector<std::array<double, 2>>(sections.size(), {0.0, 0.0}));
  return y;
}

std::vector<double> sosfiltfilt(std::span<const Biquad> sections, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t want = 3 * (2 * sections.size() + 1);
  const std::size_t pad = std::min(want, n - 1);

  // Odd reflection about both end samples.
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  run_sections(sections, ext, steady_state(sections, ext.front()));
  std::reverse(ext.begin(), ext.end());
  run_sections(sections, ext, steady_state(sections, ext.front()));
  std::reverse(ext.begin(), ext.end());
  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

SignalTrace apply_filter(const FilterSpec& spec, const SignalTrace& x, bool zero_phase) {
  check_fs(spec, x);
  return x.with_samples(zero_phase ? sosfiltfilt(spec.sections, x.samples())
                                   : sosfilt(spec.sections, x.samples()));
}

std::vector<double> notch_frequencies(double fundamental_hz, int max_harmonics, double fs_hz) {
  if (!(fundamental_hz > 0.0) || fundamental_hz >= fs_hz / 2.0)
    throw DesignError("power-line fundamental " + hz(fundamental_hz) + " is at or above Nyquist (" +
                      hz(fs_hz / 2.0) + ")");
  std::vector<double> out;
  for (int k = 1; k <= max_harmonics; ++k) {
    const double f = k * fundamental_hz;
    if (f >= fs_hz / 2.0) break;
    out.push_back(f);
  }
  return out;
}

SignalTrace notch_powerline(const SignalTrace& x, double fundamental_hz, double q, int max_harmonics,
                            bool zero_phase) {
  std::vector<Biquad> sections;
  for (double f : notch_frequencies(fundamental_hz, max_harmonics, x.fs()))
    sections.push_back(design_notch(f, q, x.fs()));
  if (sections.empty()) return x;
  return x.with_samples(zero_phase ? sosfiltfilt(sections, x.samples()) : sosfilt(sections, x.samples()));
}

SignalTrace rectify(const SignalTrace& x) {
  std::vector<double> out(x.samples());
  for (double& v : out) v = std::abs(v);
  return x.with_samples(std::move(out));
}

SignalTrace envelope_lowpass(const SignalTrace& x, const PreprocessConfig& cfg) {
  const auto& v = x.samples();
  double peak = 0.0, lowest = 0.0;
  for (double s : v) {
    peak = std::max(peak, std::abs(s));
    lowest = std::min(lowest, s);
  }
  if (lowest < -1e-9 * std::max(1.0, peak))
    throw InvalidInput("envelope input must be rectified (found sample " + format_double(lowest) + ")");

  const double cut = std::min(cfg.env_cut_hz, 0.45 * x.fs());
  const auto spec = design_butterworth(FilterKind::Lowpass, cfg.env_order, std::array{cut}, x.fs());
  const auto pad = static_cast<std::size_t>(std::ceil(3.0 * cfg.env_order / cut * x.fs()));

  std::vector<double> padded(v.size() + 2 * pad, 0.0);
  std::copy(v.begin(), v.end(), padded.begin() + static_cast<std::ptrdiff_t>(pad));
  padded = sosfilt(spec.sections, padded);
  if (cfg.zero_phase) {
    std::reverse(padded.begin(), padded.end());
    padded = sosfilt(spec.sections, padded);
    std::reverse(padded.begin(), padded.end());
  }
  std::vector<double> out(padded.begin() + static_cast<std::ptrdiff_t>(pad),
                          padded.begin() + static_cast<std::ptrdiff_t>(pad + v.size()));
  // Butterworth ringing can dip below zero after sharp offsets.
  for (double& s : out) s = std::max(s, 0.0);
  return x.with_samples(std::move(out));
}

Preprocessed preprocess_emg(const SignalTrace& x, const PreprocessConfig& cfg_in) {
  PreprocessConfig cfg = cfg_in;
  cfg.validate();
  if (x.fs() <= 2.0 * cfg.bp_hi_hz) {
    const double clamped = 0.45 * x.fs();
    log::warn("bandpass upper edge " + hz(cfg.bp_hi_hz) + " >= Nyquist at fs " + hz(x.fs()) +
              "; clamped to " + hz(clamped));
    cfg.bp_hi_hz = clamped;
    if (!(cfg.bp_lo_hz < cfg.bp_hi_hz))
      throw DesignError("bandpass lower edge " + hz(cfg.bp_lo_hz) + " exceeds clamped upper edge");
  }
  const std::array edges{cfg.bp_lo_hz, cfg.bp_hi_hz};
  const auto bp = design_butterworth(FilterKind::Bandpass, cfg.bp_order, edges, x.fs());

  SignalTrace filtered = apply_filter(bp, detrend_linear(x), cfg.zero_phase);
  filtered = notch_powerline(filtered, cfg.notch_fundamental_hz, cfg.notch_q, cfg.notch_max_harmonics,
                             cfg.zero_phase);
  SignalTrace envelope = envelope_lowpass(rectify(filtered), cfg);
  return {std::move(filtered), std::move(envelope)};
}

}  // namespace dspn::dsp
