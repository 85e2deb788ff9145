#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ringkit/dsp/filter.hpp"

namespace ringkit::dsp {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

/// Median absolute deviation (unscaled).
inline double mad(const std::vector<double>& v) {
  const double m = median(v);
  std::vector<double> d;
  d.reserve(v.size());
  for (double x : v) d.push_back(std::abs(x - m));
  return median(std::move(d));
}

struct PeakParams {
  double k = 2.5;        // required prominence in units of rolling MAD
  double window_s = 4.0; // rolling statistics window, centred
  double refractory_s = 0.25;
};

/// A detected maximum; `position` is the parabolic-interpolated sample index.
struct Peak {
  std::size_t index = 0;
  double position = 0;
  double value = 0;
  double prominence = 0;
};

/// Height of x[i] above the higher of the two minima reached before the
/// signal climbs above x[i] again on each side.
inline double prominence(std::span<const double> x, std::size_t i) {
  double left = x[i];
  for (std::size_t j = i; j-- > 0 && x[j] <= x[i];) left = std::min(left, x[j]);
  double right = x[i];
  for (std::size_t j = i + 1; j < x.size() && x[j] <= x[i]; ++j) right = std::min(right, x[j]);
  return x[i] - std::max(left, right);
}

/// Local maxima above the rolling median whose prominence is at least
/// k times the rolling MAD. Inside the refractory period only the larger of
/// two candidates survives.
inline std::vector<Peak> detect_peaks(std::span<const double> x, double fs, const PeakParams& p = {}) {
  std::vector<Peak> out;
  const std::size_t n = x.size();
  if (n < 3) return out;
  const auto half = static_cast<std::size_t>(p.window_s * fs / 2);
  const auto refractory = p.refractory_s * fs;

  // Rolling statistics are refreshed every `stride` samples and held between.
  const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(fs / 10));
  std::vector<double> level(n), spread(n);
  std::vector<double> buf;
  for (std::size_t c = 0; c < n; c += stride) {
    const std::size_t lo = c > half ? c - half : 0;
    const std::size_t hi = std::min(n, c + half + 1);
    buf.assign(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(hi));
    const double m = median(buf);
    const double d = mad(buf);
    for (std::size_t j = c; j < std::min(n, c + stride); ++j) {
      level[j] = m;
      spread[j] = d;
    }
  }

  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(x[i] > x[i - 1] && x[i] >= x[i + 1] && x[i] > level[i])) continue;
    const double prom = prominence(x, i);
    if (spread[i] <= 0 || prom < p.k * spread[i]) continue;
    const double l = x[i - 1], c = x[i], r = x[i + 1];
    const double den = l - 2 * c + r;
    const double delta = den != 0 ? 0.5 * (l - r) / den : 0.0;
    Peak pk{i, static_cast<double>(i) + delta, c, prom};
    if (!out.empty() && pk.position - out.back().position < refractory) {
      if (pk.value > out.back().value) out.back() = pk;
      continue;
    }
    out.push_back(pk);
  }
  return out;
}

inline constexpr double kMinHrBpm = 30.0;
inline constexpr double kMaxHrBpm = 240.0;
inline constexpr double kHrWindowS = 8.0;
inline constexpr std::size_t kMinPeaks = 3;

struct HrEstimate {
  std::int64_t window_start_us = 0;
  std::int64_t window_end_us = 0;
  double bpm = 0;
  double confidence = 0;

  std::int64_t midpoint_us() const noexcept { return window_start_us + (window_end_us - window_start_us) / 2; }
};

/// Heart rate from one window of raw PPG. Withheld (nullopt) with fewer than
/// three peaks or a rate outside [30, 240] BPM.
inline std::optional<HrEstimate> estimate_hr(std::span<const double> window, double fs, std::int64_t start_us = 0,
                                             const PeakParams& p = {}) {
  const auto filtered = bandpass(window, fs);
  const auto peaks = detect_peaks(filtered, fs, p);
  if (peaks.size() < kMinPeaks) return std::nullopt;
  std::vector<double> intervals;
  for (std::size_t i = 1; i < peaks.size(); ++i) intervals.push_back((peaks[i].position - peaks[i - 1].position) / fs);
  const double med = median(intervals);
  if (med <= 0) return std::nullopt;
  const double bpm = 60.0 / med;
  if (bpm < kMinHrBpm || bpm > kMaxHrBpm) return std::nullopt;
  HrEstimate e;
  e.window_start_us = start_us;
  e.window_end_us = start_us + static_cast<std::int64_t>(std::llround(static_cast<double>(window.size()) / fs * 1e6));
  e.bpm = bpm;
  e.confidence = std::clamp(1.0 - mad(intervals) / med, 0.0, 1.0);
  return e;
}

}  // namespace ringkit::dsp
