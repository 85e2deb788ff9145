#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ringkit/proto/response.hpp"
#include "ringkit/transport/environment.hpp"

namespace ringkit::hostkit {

enum class Health { Ok, Warn, Fault };

constexpr std::string_view to_string(Health h) noexcept {
  switch (h) {
    case Health::Ok: return "Ok";
    case Health::Warn: return "Warn";
    case Health::Fault: return "Fault";
  }
  return "?";
}

inline constexpr int kWarnBatteryPct = 20;

constexpr Health health_of(std::uint8_t fault_flags, int battery_pct) noexcept {
  if (fault_flags != 0) return Health::Fault;
  if (battery_pct < kWarnBatteryPct) return Health::Warn;
  return Health::Ok;
}

struct SensorInfo {
  proto::Modality modality = proto::Modality::Ppg;
  bool enabled = false;
  std::uint16_t rate_hz = 0;
  bool faulted = false;
};

struct Dashboard {
  MacAddress mac;
  proto::DeviceMode mode = proto::DeviceMode::Idle;
  std::vector<SensorInfo> sensors;
  proto::SensorConfig config;
  std::uint64_t flash_capacity = 0;
  std::uint64_t flash_free = 0;
  std::uint16_t file_count = 0;
  int battery_pct = 0;
  std::string fw_version;
  std::int64_t device_time_us = 0;
  std::uint8_t fault_flags = 0;
  Health health = Health::Ok;
};

inline Dashboard to_dashboard(const MacAddress& mac, const proto::StatusReport& s) {
  Dashboard d;
  d.mac = mac;
  d.mode = s.mode;
  d.config = s.config;
  for (auto m : proto::kModalities) {
    const bool faulted = (s.fault_flags & (1U << static_cast<unsigned>(m))) != 0;
    d.sensors.push_back({m, s.config.enabled(m), s.config.rate(m), faulted});
  }
  d.flash_capacity = s.flash_capacity;
  d.flash_free = s.flash_free();
  d.file_count = s.file_count;
  d.battery_pct = s.battery_pct;
  d.fw_version = s.firmware;
  d.device_time_us = s.device_time_us;
  d.fault_flags = s.fault_flags;
  d.health = health_of(s.fault_flags, s.battery_pct);
  return d;
}

/// GetStatus mapped onto the dashboard view.
inline Dashboard device_info(transport::Link& link) {
  const auto r = link.request(proto::cmd::GetStatus{});
  r.expect_ok();
  return to_dashboard(link.mac(), r.get<proto::StatusReport>());
}

}  // namespace ringkit::hostkit
