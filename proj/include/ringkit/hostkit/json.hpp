#pragma once

#include <json.hpp>

#include "ringkit/hostkit/calibration.hpp"
#include "ringkit/hostkit/dashboard.hpp"
#include "ringkit/hostkit/discovery.hpp"
#include "ringkit/hostkit/offline.hpp"
#include "ringkit/hostkit/render.hpp"
#include "ringkit/hostkit/session.hpp"

namespace ringkit::hostkit {

using Json = nlohmann::json;

inline Json to_json(const proto::SensorConfig& c) {
  return Json{{"ppg",
               {{"enabled", c.ppg.enabled},
                {"rate_hz", c.ppg.rate_hz},
                {"led_code", c.ppg.led_code},
                {"pulse_width_us", c.ppg.pulse_width_us}}},
              {"imu", {{"enabled", c.imu.enabled}, {"rate_hz", c.imu.rate_hz}}},
              {"temp", {{"enabled", c.temp.enabled}, {"rate_hz", c.temp.rate_hz}}}};
}

inline proto::SensorConfig config_from_json(const Json& j) {
  proto::SensorConfig c;
  try {
    if (j.contains("ppg")) {
      const auto& p = j.at("ppg");
      c.ppg.enabled = p.value("enabled", c.ppg.enabled);
      c.ppg.rate_hz = p.value("rate_hz", c.ppg.rate_hz);
      if (p.contains("led_code")) c.ppg.led_code = p.at("led_code").get<std::array<std::uint8_t, 3>>();
      c.ppg.pulse_width_us = p.value("pulse_width_us", c.ppg.pulse_width_us);
    }
    if (j.contains("imu")) {
      c.imu.enabled = j.at("imu").value("enabled", c.imu.enabled);
      c.imu.rate_hz = j.at("imu").value("rate_hz", c.imu.rate_hz);
    }
    if (j.contains("temp")) {
      c.temp.enabled = j.at("temp").value("enabled", c.temp.enabled);
      c.temp.rate_hz = j.at("temp").value("rate_hz", c.temp.rate_hz);
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::ParseError, std::string("sensor config: ") + e.what());
  }
  c.validate();
  return c;
}

inline Json to_json(const CalibrationReport& r) {
  Json its = Json::array();
  for (const auto& i : r.iterations)
    its.push_back({{"host_send_us", i.host_send_us},
                   {"device_time_us", i.device_time_us},
                   {"rtt_us", i.rtt_us},
                   {"offset_estimate_us", i.offset_estimate_us},
                   {"trimmed", i.trimmed}});
  return Json{{"iterations", its}, {"final_offset_us", r.final_offset_us}, {"converged", r.converged}};
}

inline CalibrationReport calibration_from_json(const Json& j) {
  CalibrationReport r;
  for (const auto& i : j.at("iterations"))
    r.iterations.push_back({i.at("host_send_us").get<std::int64_t>(), i.at("device_time_us").get<std::int64_t>(),
                            i.at("rtt_us").get<std::int64_t>(), i.at("offset_estimate_us").get<std::int64_t>(),
                            i.at("trimmed").get<bool>()});
  r.final_offset_us = j.at("final_offset_us").get<std::int64_t>();
  r.converged = j.at("converged").get<bool>();
  return r;
}

inline Json to_json(const proto::LogFileEntry& e) {
  return Json{{"file_id", e.file_id}, {"start_time_s", e.start_time_s}, {"size", e.size}, {"crc", e.crc}};
}

inline proto::LogFileEntry entry_from_json(const Json& j) {
  return proto::LogFileEntry{j.at("file_id").get<std::uint16_t>(), j.at("start_time_s").get<std::uint32_t>(),
                             j.at("size").get<std::uint32_t>(), j.at("crc").get<std::uint32_t>()};
}

inline Json to_json(const DeviceSummary& a) {
  return Json{{"name", a.name},
              {"mac", a.mac.to_string()},
              {"rssi_dbm", a.rssi_dbm},
              {"battery_pct", a.battery_pct},
              {"fw_version", a.fw_version}};
}

inline Json to_json(const Dashboard& d) {
  Json sensors = Json::array();
  for (const auto& s : d.sensors)
    sensors.push_back({{"modality", proto::to_string(s.modality)},
                       {"enabled", s.enabled},
                       {"rate_hz", s.rate_hz},
                       {"faulted", s.faulted}});
  return Json{{"mac", d.mac.to_string()},
              {"mode", proto::to_string(d.mode)},
              {"sensors", sensors},
              {"config", to_json(d.config)},
              {"flash_capacity", d.flash_capacity},
              {"flash_free", d.flash_free},
              {"file_count", d.file_count},
              {"battery_pct", d.battery_pct},
              {"fw_version", d.fw_version},
              {"device_time_us", d.device_time_us},
              {"fault_flags", d.fault_flags},
              {"health", to_string(d.health)}};
}

inline Json to_json(const RenderFrame& f) {
  Json ch = Json::array();
  for (const auto& c : f.channels)
    ch.push_back({{"id", c.id}, {"unit", c.unit}, {"min", c.min}, {"max", c.max}, {"samples", c.samples}});
  return Json{{"index", f.index}, {"t_start_us", f.t_start_us}, {"t_end_us", f.t_end_us}, {"channels", ch}};
}

inline Json to_json(const HrUpdate& u) {
  return Json{{"window_start_us", u.window_start_us},
              {"window_end_us", u.window_end_us},
              {"bpm", u.bpm ? Json(*u.bpm) : Json(nullptr)},
              {"confidence", u.confidence},
              {"activity_count", u.activity_count}};
}

inline Json to_json(const Annotation& a) { return Json{{"device_time_us", a.device_time_us}, {"tag", a.tag}}; }

inline Json to_json(const OfflinePlanInfo& p) {
  return Json{{"start_delay_s", p.start_delay_s}, {"total_s", p.total_s},     {"segment_s", p.segment_s},
              {"segments", p.segments},           {"armed_at_us", p.armed_at_us}, {"ends_at_us", p.ends_at_us}};
}

inline Json to_json(const FetchProgress& p) {
  return Json{{"file_id", p.file_id}, {"bytes", p.bytes}, {"total", p.total}, {"at_us", p.at_us},
              {"percent", 100.0 * p.fraction()}};
}

}  // namespace ringkit::hostkit
