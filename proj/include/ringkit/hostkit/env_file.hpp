#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ringkit/hostkit/offline.hpp"
#include "ringkit/ringsim/scenario.hpp"
#include "ringkit/transport/environment.hpp"

namespace ringkit::hostkit {

struct RingSpec {
  ringsim::RingOptions options;
  double rssi_dbm = -60.0;
  std::uint8_t faults = 0;
};

/// Offline run performed while the environment is built, so later commands
/// find files on flash.
struct Preload {
  MacAddress mac;
  std::uint32_t total_s = 0;
  std::uint32_t segment_s = 0;
};

struct EnvSpec {
  std::uint64_t seed = 1;
  std::int64_t start_us = transport::kDefaultStartUs;
  std::optional<transport::LinkParams> link;
  std::vector<RingSpec> rings;
  std::vector<Preload> preloads;
};

namespace detail {

inline bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw Error(Errc::ParseError, "expected a boolean, got '" + v + "'");
}

inline std::uint8_t parse_faults(const std::string& v) {
  std::uint8_t f = 0;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "ppg") f |= proto::kFaultPpg;
    else if (item == "imu") f |= proto::kFaultImu;
    else if (item == "temp") f |= proto::kFaultTemp;
    else if (item != "none") throw Error(Errc::ParseError, "unknown fault '" + item + "'");
  }
  return f;
}

}  // namespace detail

// Text format, one directive per line ('#' starts a comment):
//   seed <u64>
//   start_epoch <unix seconds>
//   link <profile path>
//   ring key=value ...      keys: mac name scenario hr motion noise rssi rtc_offset_ms
//                           drift_ppm battery_pct bench_power jitter firmware fault
//   preload <mac> total_s=<n> segment_s=<n>
inline EnvSpec parse_env(std::istream& in, const std::filesystem::path& base_dir = {}) {
  EnvSpec spec;
  std::string line;
  int lineno = 0;
  auto fail = [&lineno](const std::string& msg) {
    return Error(Errc::ParseError, "environment line " + std::to_string(lineno) + ": " + msg);
  };
  auto resolve = [&base_dir](std::filesystem::path p) {
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return p;
  };
  auto kv = [&fail](std::istringstream& ss) {
    std::map<std::string, std::string> out;
    std::string tok;
    while (ss >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0) throw fail("expected key=value, got '" + tok + "'");
      out[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return out;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    try {
      if (key == "seed") {
        if (!(ss >> spec.seed)) throw fail("seed needs an integer");
      } else if (key == "start_epoch") {
        std::int64_t s = 0;
        if (!(ss >> s) || s < 0) throw fail("start_epoch needs non-negative seconds");
        spec.start_us = s * 1'000'000;
      } else if (key == "link") {
        std::string p;
        if (!(ss >> p)) throw fail("link needs a profile path");
        spec.link = transport::LinkParams::load(resolve(p));
      } else if (key == "ring") {
        RingSpec r;
        auto& o = r.options;
        o.mac = MacAddress::from_index(static_cast<std::uint16_t>(spec.rings.size() + 1));
        std::optional<double> hr;
        std::optional<ringsim::Motion> motion;
        std::optional<bool> noise;
        for (const auto& [k, v] : kv(ss)) {
          if (k == "mac") o.mac = MacAddress::parse(v);
          else if (k == "name") o.name = v;
          else if (k == "scenario") o.scenario = ringsim::Scenario::load(resolve(v));
          else if (k == "hr") hr = std::stod(v);
          else if (k == "motion") {
            if (v == "rest") motion = ringsim::Motion::Rest;
            else if (v == "walk") motion = ringsim::Motion::Walk;
            else throw fail("motion must be rest or walk");
          } else if (k == "noise") noise = detail::parse_bool(v);
          else if (k == "rssi") r.rssi_dbm = std::stod(v);
          else if (k == "rtc_offset_ms") o.rtc_offset_us = std::stoll(v) * 1000;
          else if (k == "drift_ppm") o.rtc_drift_ppm = std::stod(v);
          else if (k == "battery_pct") {
            const double pct = std::stod(v);
            if (pct < 0 || pct > 100) throw fail("battery_pct outside [0, 100]");
            o.battery_level_mah = o.battery_capacity_mah * pct / 100.0;
          } else if (k == "bench_power") o.bench_power = detail::parse_bool(v);
          else if (k == "jitter") o.jitter = detail::parse_bool(v);
          else if (k == "firmware") o.firmware = v;
          else if (k == "fault") r.faults = detail::parse_faults(v);
          else throw fail("unknown ring key '" + k + "'");
        }
        // Inline scenario keys override a loaded file's first segment.
        if (hr) o.scenario.segments.front().hr_bpm = *hr;
        if (motion) o.scenario.segments.front().motion = *motion;
        if (noise) o.scenario.noise = *noise;
        if (o.name == "tau-ring") o.name = "tau-ring-" + std::to_string(spec.rings.size() + 1);
        o.scenario.validate();
        spec.rings.push_back(std::move(r));
      } else if (key == "preload") {
        std::string mac;
        if (!(ss >> mac)) throw fail("preload needs a mac");
        Preload p{MacAddress::parse(mac), 0, 0};
        for (const auto& [k, v] : kv(ss)) {
          if (k == "total_s") p.total_s = static_cast<std::uint32_t>(std::stoul(v));
          else if (k == "segment_s") p.segment_s = static_cast<std::uint32_t>(std::stoul(v));
          else throw fail("unknown preload key '" + k + "'");
        }
        if (p.total_s == 0 || p.segment_s == 0) throw fail("preload needs total_s and segment_s");
        spec.preloads.push_back(p);
      } else {
        throw fail("unknown directive '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw fail("bad number");
    } catch (const std::out_of_range&) {
      throw fail("number out of range");
    } catch (const Error& e) {
      if (e.code() == Errc::ParseError && std::string(e.what()).find("environment line") != std::string::npos) throw;
      throw fail(e.what());
    }
  }
  return spec;
}

inline EnvSpec load_env(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open environment " + path.string());
  return parse_env(in, path.parent_path());
}

/// Builds the environment: rings, default link profile, then preloads.
inline std::unique_ptr<transport::Environment> build_env(const EnvSpec& spec) {
  auto env = std::make_unique<transport::Environment>(spec.seed, spec.start_us);
  if (spec.link) env->set_default_params(*spec.link);
  for (const auto& r : spec.rings) {
    auto& ring = env->add_ring(r.options, r.rssi_dbm);
    if (r.faults) ring.inject_fault(r.faults);
  }
  for (const auto& p : spec.preloads) {
    auto link = env->connect(p.mac);
    const auto plan = configure_offline(link, std::chrono::seconds(p.total_s), std::chrono::seconds(p.segment_s));
    await_offline(link, plan);
    link.close();
  }
  return env;
}

}  // namespace ringkit::hostkit
