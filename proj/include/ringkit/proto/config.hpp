#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "ringkit/error.hpp"
#include "ringkit/proto/bytes.hpp"

namespace ringkit::proto {

enum class Modality : std::uint8_t { Ppg = 0, Imu = 1, Temp = 2 };

inline constexpr std::array<Modality, 3> kModalities{Modality::Ppg, Modality::Imu, Modality::Temp};

constexpr std::uint8_t presence_bit(Modality m) noexcept { return static_cast<std::uint8_t>(1U << static_cast<unsigned>(m)); }
inline constexpr std::uint8_t kAllPresent = 0x07;

constexpr std::string_view to_string(Modality m) noexcept {
  switch (m) {
    case Modality::Ppg: return "ppg";
    case Modality::Imu: return "imu";
    case Modality::Temp: return "temp";
  }
  return "?";
}

inline constexpr std::array<std::uint16_t, 3> kPpgRates{25, 50, 100};
inline constexpr std::array<std::uint16_t, 3> kImuRates{25, 50, 100};
inline constexpr std::array<std::uint16_t, 3> kTempRates{1, 5, 25};

inline constexpr std::uint16_t kMinPulseWidthUs = 10;
inline constexpr std::uint16_t kMaxPulseWidthUs = 500;
inline constexpr double kLedFullScaleMa = 200.0;

/// LED drive current for an 8-bit code (0..255 spans 0..200 mA).
constexpr double led_current_ma(std::uint8_t code) noexcept { return kLedFullScaleMa * code / 255.0; }

struct PpgConfig {
  bool enabled = true;
  std::uint16_t rate_hz = 100;
  std::array<std::uint8_t, 3> led_code{128, 128, 128};
  std::uint16_t pulse_width_us = 100;
  bool operator==(const PpgConfig&) const = default;
};

struct ImuConfig {
  bool enabled = true;
  std::uint16_t rate_hz = 100;
  bool operator==(const ImuConfig&) const = default;
};

struct TempConfig {
  bool enabled = true;
  std::uint16_t rate_hz = 25;
  bool operator==(const TempConfig&) const = default;
};

constexpr std::span<const std::uint16_t> allowed_rates(Modality m) noexcept {
  switch (m) {
    case Modality::Ppg: return kPpgRates;
    case Modality::Imu: return kImuRates;
    case Modality::Temp: return kTempRates;
  }
  return {};
}

constexpr bool is_allowed_rate(Modality m, std::uint16_t hz) noexcept {
  const auto r = allowed_rates(m);
  return std::find(r.begin(), r.end(), hz) != r.end();
}

/// Remotely configurable acquisition state. The default is the reference
/// configuration: everything on at its highest rate, LED code 128.
struct SensorConfig {
  PpgConfig ppg;
  ImuConfig imu;
  TempConfig temp;

  bool enabled(Modality m) const noexcept {
    switch (m) {
      case Modality::Ppg: return ppg.enabled;
      case Modality::Imu: return imu.enabled;
      case Modality::Temp: return temp.enabled;
    }
    return false;
  }
  std::uint16_t rate(Modality m) const noexcept {
    switch (m) {
      case Modality::Ppg: return ppg.rate_hz;
      case Modality::Imu: return imu.rate_hz;
      case Modality::Temp: return temp.rate_hz;
    }
    return 0;
  }
  void set_enabled(Modality m, bool on) noexcept {
    switch (m) {
      case Modality::Ppg: ppg.enabled = on; break;
      case Modality::Imu: imu.enabled = on; break;
      case Modality::Temp: temp.enabled = on; break;
    }
  }
  void set_rate(Modality m, std::uint16_t hz) {
    if (!is_allowed_rate(m, hz))
      throw Error(Errc::BadArgument, std::string(to_string(m)) + " rate " + std::to_string(hz) + " Hz not allowed");
    switch (m) {
      case Modality::Ppg: ppg.rate_hz = hz; break;
      case Modality::Imu: imu.rate_hz = hz; break;
      case Modality::Temp: temp.rate_hz = hz; break;
    }
  }

  void validate() const {
    for (auto m : kModalities)
      if (!is_allowed_rate(m, rate(m)))
        throw Error(Errc::BadArgument, std::string(to_string(m)) + " rate " + std::to_string(rate(m)) + " Hz not allowed");
    if (ppg.pulse_width_us < kMinPulseWidthUs || ppg.pulse_width_us > kMaxPulseWidthUs)
      throw Error(Errc::BadArgument, "pulse width out of range");
  }

  bool operator==(const SensorConfig&) const = default;
};

inline constexpr std::size_t kSensorConfigWireSize = 14;

inline void write_config(ByteWriter& w, const SensorConfig& c) {
  w.u8(c.ppg.enabled).u16(c.ppg.rate_hz);
  for (auto code : c.ppg.led_code) w.u8(code);
  w.u16(c.ppg.pulse_width_us);
  w.u8(c.imu.enabled).u16(c.imu.rate_hz);
  w.u8(c.temp.enabled).u16(c.temp.rate_hz);
}

inline SensorConfig read_config(ByteReader& r) {
  auto flag = [](std::uint8_t v) {
    if (v > 1) throw Error(Errc::MalformedPayload, "boolean field out of range");
    return v == 1;
  };
  SensorConfig c;
  c.ppg.enabled = flag(r.u8());
  c.ppg.rate_hz = r.u16();
  for (auto& code : c.ppg.led_code) code = r.u8();
  c.ppg.pulse_width_us = r.u16();
  c.imu.enabled = flag(r.u8());
  c.imu.rate_hz = r.u16();
  c.temp.enabled = flag(r.u8());
  c.temp.rate_hz = r.u16();
  return c;
}

}  // namespace ringkit::proto
