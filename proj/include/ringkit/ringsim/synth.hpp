#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "ringkit/proto/config.hpp"
#include "ringkit/proto/sample.hpp"
#include "ringkit/ringsim/noise.hpp"
#include "ringkit/ringsim/scenario.hpp"

namespace ringkit::ringsim {

// ---------------------------------------------------------------------------
// PPG
// ---------------------------------------------------------------------------

inline constexpr double kPpgDarkCounts = 2000.0;
inline constexpr double kPpgCountsPerCode = 40000.0;  // at the reference pulse width
inline constexpr double kPpgRefPulseWidthUs = 100.0;
inline constexpr std::array<double, 3> kPerfusion{0.02, 0.01, 0.015};  // AC/DC per channel

namespace detail {

constexpr double kSystolicPhase = 0.2;
constexpr double kSystolicWidth = 0.06;
constexpr double kDicroticPhase = 0.45;
constexpr double kDicroticWidth = 0.09;
constexpr double kDicroticAmp = 0.45;

inline double wrapped_gauss(double phase, double centre, double width) {
  double d = phase - centre;
  d -= std::floor(d + 0.5);  // nearest periodic image
  return std::exp(-0.5 * (d / width) * (d / width));
}

inline double raw_template(double phase) {
  return wrapped_gauss(phase, kSystolicPhase, kSystolicWidth) +
         kDicroticAmp * wrapped_gauss(phase, kDicroticPhase, kDicroticWidth);
}

struct TemplateStats {
  double mean = 0;
  double variance = 0;
};

inline const TemplateStats& template_stats() {
  static const TemplateStats stats = [] {
    constexpr int n = 4096;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
      const double v = raw_template(static_cast<double>(i) / n);
      sum += v;
      sq += v * v;
    }
    const double mean = sum / n;
    return TemplateStats{mean, sq / n - mean * mean};
  }();
  return stats;
}

}  // namespace detail

/// Zero-mean two-Gaussian pulse (systolic + dicrotic) over one beat; phase in beats.
inline double pulse_template(double phase) { return detail::raw_template(phase) - detail::template_stats().mean; }

/// DC level for an LED drive setting; code 0 leaves only the dark-current floor.
inline double ppg_dc(std::uint8_t led_code, std::uint16_t pulse_width_us) {
  return kPpgDarkCounts + kPpgCountsPerCode * led_code * (pulse_width_us / kPpgRefPulseWidthUs);
}

/// Pulse amplitude for one channel (scales with the optical part of DC).
inline double ppg_ac(int channel, std::uint8_t led_code, std::uint16_t pulse_width_us) {
  return kPerfusion[static_cast<std::size_t>(channel)] * (ppg_dc(led_code, pulse_width_us) - kPpgDarkCounts);
}

/// Noise standard deviation (counts) giving the scenario SNR against pulse power.
inline double ppg_noise_sigma(const Scenario& scn, double ac) {
  return std::sqrt(detail::template_stats().variance * ac * ac / std::pow(10.0, scn.snr_db / 10.0));
}

inline constexpr double kWalkVerticalG = 0.3;
inline constexpr double kWalkLateralG = 0.1;
inline constexpr double kAccelNoiseG = 0.005;
inline constexpr double kGyroNoiseDps = 0.3;

/// Three PPG channel counts at scenario time t (microseconds since origin).
inline std::array<std::uint32_t, 3> ppg_synth(const Scenario& scn, std::int64_t t_us, const proto::PpgConfig& led) {
  const double phase = scn.beats_at(t_us);
  const double t_s = static_cast<double>(t_us) * 1e-6;
  const auto& seg = scn.segment_at(t_us);

  double motion = 0;  // in units of pulse amplitude
  switch (seg.motion) {
    case Motion::Rest: break;
    case Motion::Walk: motion = scn.artifact_ratio * std::sin(2.0 * std::numbers::pi * scn.gait_hz * t_s); break;
    case Motion::Scripted: {
      if (const auto* row = seg.trace->find(t_us - seg.start_us)) {
        const auto& v = row->values;
        const double mag = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        motion = scn.artifact_ratio * (mag - 1.0) / kWalkVerticalG;
      }
      break;
    }
  }

  std::array<std::uint32_t, 3> out{};
  for (int ch = 0; ch < 3; ++ch) {
    const auto code = led.led_code[static_cast<std::size_t>(ch)];
    const double dc = ppg_dc(code, led.pulse_width_us);
    const double ac = ppg_ac(ch, code, led.pulse_width_us);
    double v = dc + ac * (pulse_template(phase) + motion);
    if (scn.noise && ac > 0)
      v += ppg_noise_sigma(scn, ac) * noise_gaussian(scn.seed, kStreamPpg0 + static_cast<std::uint64_t>(ch),
                                                     static_cast<std::uint64_t>(t_us));
    out[static_cast<std::size_t>(ch)] =
        static_cast<std::uint32_t>(std::clamp(std::llround(v), 0LL, static_cast<long long>(proto::kPpgMax)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// IMU
// ---------------------------------------------------------------------------

inline std::array<double, 6> imu_physical(const Scenario& scn, std::int64_t t_us) {
  const auto idx = scn.segment_index(t_us);
  const auto& seg = scn.segments[idx];
  std::array<double, 6> v{0, 0, 1.0, 0, 0, 0};
  const double t_s = static_cast<double>(t_us) * 1e-6;
  const double w = 2.0 * std::numbers::pi * scn.gait_hz * t_s;
  switch (seg.motion) {
    case Motion::Rest: break;
    case Motion::Walk:
      // Vertical bounce at the gait frequency; lateral sway and wrist swing follow it.
      v[0] = kWalkLateralG * std::sin(w + 1.0);
      v[2] = 1.0 + kWalkVerticalG * std::sin(w);
      v[3] = 30.0 * std::cos(w);
      v[4] = 15.0 * std::sin(w);
      v[5] = 5.0 * std::sin(w + 0.5);
      break;
    case Motion::Scripted: v = seg.trace->at(t_us - seg.start_us).values; break;
  }
  return v;
}

/// Six IMU words (accel x/y/z at 2048 LSB/g, gyro x/y/z at 8.192 LSB/dps).
/// Throws TraceExhausted when a scripted trace has run out.
inline std::array<std::int16_t, 6> imu_synth(const Scenario& scn, std::int64_t t_us) {
  auto v = imu_physical(scn, t_us);
  std::array<std::int16_t, 6> out{};
  for (std::size_t axis = 0; axis < 6; ++axis) {
    const bool accel = axis < 3;
    double x = v[axis];
    if (scn.noise)
      x += (accel ? kAccelNoiseG : kGyroNoiseDps) *
           noise_gaussian(scn.seed, (accel ? kStreamAccel0 : kStreamGyro0) + axis % 3, static_cast<std::uint64_t>(t_us));
    const double lsb = accel ? proto::kAccelLsbPerG : proto::kGyroLsbPerDps;
    out[axis] = static_cast<std::int16_t>(std::clamp(std::llround(x * lsb), -32768LL, 32767LL));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Temperature
// ---------------------------------------------------------------------------

inline constexpr double kSkinTempC = 33.0;
inline constexpr double kSkinTauS = 300.0;
inline constexpr double kOuterTauS = 60.0;
inline constexpr double kInnerOffsetC = 0.05;  // second inner sensor sits slightly cooler
inline constexpr double kTempNoiseC = 0.05;
inline constexpr double kTempNoiseClampC = 0.1;

/// Noise-free temperatures in degrees C: two inner points relaxing toward skin
/// temperature, one outer point lagging the ambient temperature.
inline std::array<double, 3> temp_physical(const Scenario& scn, std::int64_t t_us) {
  const double t_s = static_cast<double>(t_us) * 1e-6;
  const double start = scn.segments.front().ambient_c;
  const double inner = kSkinTempC + (start - kSkinTempC) * std::exp(-t_s / kSkinTauS);

  double outer = start;
  const auto idx = scn.segment_index(t_us);
  for (std::size_t i = 0; i <= idx; ++i) {
    const double from = static_cast<double>(scn.segments[i].start_us) * 1e-6;
    const double to = i == idx ? t_s : static_cast<double>(scn.segments[i + 1].start_us) * 1e-6;
    const double amb = scn.segments[i].ambient_c;
    outer = amb + (outer - amb) * std::exp(-(to - from) / kOuterTauS);
  }
  return {inner, inner - kInnerOffsetC, outer};
}

/// Three temperatures in centi-degrees C.
inline std::array<std::int16_t, 3> temp_synth(const Scenario& scn, std::int64_t t_us) {
  const auto v = temp_physical(scn, t_us);
  std::array<std::int16_t, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    double x = v[i];
    if (scn.noise)
      x += std::clamp(kTempNoiseC * noise_gaussian(scn.seed, kStreamTemp0 + i, static_cast<std::uint64_t>(t_us)),
                      -kTempNoiseClampC, kTempNoiseClampC);
    out[i] = static_cast<std::int16_t>(std::clamp(std::llround(x * 100.0), -32768LL, 32767LL));
  }
  return out;
}

}  // namespace ringkit::ringsim
