#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>

#include "ringkit/proto/config.hpp"

namespace ringkit::ringsim {

// Linear supply-current model. The reference configuration (PPG and IMU at
// 100 Hz, temperature at 25 Hz, LED code 128) draws 15 mAh / 8 h = 1.875 mA.
inline constexpr double kBatteryCapacityMah = 15.0;
inline constexpr double kBaseCurrentMa = 0.3;
inline constexpr double kImuCurrentAt1kHzMa = 0.88;
inline constexpr double kTempCurrentMa = 0.05;
inline constexpr double kReferenceCurrentMa = kBatteryCapacityMah / 8.0;
inline constexpr double kPpgReferenceCurrentMa =
    kReferenceCurrentMa - kBaseCurrentMa - kImuCurrentAt1kHzMa * 0.1 - kTempCurrentMa;  // 1.437
inline constexpr double kPpgReferenceRateHz = 100.0;
inline constexpr double kReferenceLedCode = 128.0;

/// Supply current in mA. Sensors only draw while acquiring.
inline double supply_current_ma(const proto::SensorConfig& c, bool acquiring) {
  double i = kBaseCurrentMa;
  if (!acquiring) return i;
  if (c.imu.enabled) i += kImuCurrentAt1kHzMa * (c.imu.rate_hz / 1000.0);
  if (c.temp.enabled) i += kTempCurrentMa;
  if (c.ppg.enabled) {
    const double mean_code = (c.ppg.led_code[0] + c.ppg.led_code[1] + c.ppg.led_code[2]) / 3.0;
    i += kPpgReferenceCurrentMa * (c.ppg.rate_hz / kPpgReferenceRateHz) * (mean_code / kReferenceLedCode);
  }
  return i;
}

inline constexpr double kMicrosPerHour = 3.6e9;

struct BatteryState {
  double capacity_mah = kBatteryCapacityMah;
  double level_mah = kBatteryCapacityMah;

  /// Drains level by current * dt, clamping at zero.
  BatteryState step(double current_ma, std::chrono::microseconds dt) const {
    BatteryState next = *this;
    next.level_mah = std::max(0.0, level_mah - current_ma * static_cast<double>(dt.count()) / kMicrosPerHour);
    return next;
  }

  bool empty() const noexcept { return level_mah <= 0.0; }
  double fraction() const noexcept { return capacity_mah > 0 ? level_mah / capacity_mah : 0.0; }
  std::uint8_t percent() const noexcept {
    return static_cast<std::uint8_t>(std::clamp(std::lround(fraction() * 100.0), 0L, 100L));
  }
};

/// Hours until empty from a full charge at a constant draw.
inline double lifetime_hours(double capacity_mah, double current_ma) { return capacity_mah / current_ma; }

}  // namespace ringkit::ringsim
