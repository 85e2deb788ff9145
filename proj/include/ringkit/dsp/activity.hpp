#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ringkit/dsp/filter.hpp"

namespace ringkit::dsp {

inline constexpr double kActivityBandLowHz = 0.5;
inline constexpr double kActivityBandHighHz = 3.0;
inline constexpr double kActivityHysteresisG = 0.05;

/// Rising threshold crossings of band-passed (|a| - 1 g), with a Schmitt
/// trigger at +/-0.05 g. Input rows are accelerometer x, y, z in g.
inline std::size_t activity_counts(std::span<const std::array<double, 3>> accel, double fs) {
  if (accel.size() < 3) return 0;
  std::vector<double> mag;
  mag.reserve(accel.size());
  for (const auto& a : accel) mag.push_back(std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]) - 1.0);
  const auto f = filtfilt(BandPass(kActivityBandLowHz, kActivityBandHighHz, fs), mag, static_cast<std::size_t>(2 * fs));
  std::size_t count = 0;
  bool high = false;
  for (double v : f) {
    if (!high && v > kActivityHysteresisG) {
      high = true;
      ++count;
    } else if (high && v < -kActivityHysteresisG) {
      high = false;
    }
  }
  return count;
}

}  // namespace ringkit::dsp
