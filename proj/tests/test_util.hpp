#pragma once

// Test-only oracles and fixtures. Nothing here calls into the code paths
// it is used to check.

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace testutil {

inline constexpr double kPi = std::numbers::pi;

// Amplitude of the f-Hz component via a direct DFT bin over [begin, end).
// Callers pick windows holding an integer number of periods.
inline double tone_amplitude(std::span<const double> x, double fs, double f, std::size_t begin = 0,
                             std::size_t end = 0) {
  if (end == 0) end = x.size();
  double re = 0.0, im = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double ph = 2.0 * kPi * f * static_cast<double>(i) / fs;
    re += x[i] * std::cos(ph);
    im -= x[i] * std::sin(ph);
  }
  return 2.0 * std::hypot(re, im) / static_cast<double>(end - begin);
}

inline std::vector<double> sine(double f, double fs, std::size_t n, double amp = 1.0, double phase = 0.0) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = amp * std::sin(2.0 * kPi * f * static_cast<double>(i) / fs + phase);
  return v;
}

inline double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Pearson correlation computed the textbook two-pass way.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("dspn_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil

