#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ringkit/error.hpp"

namespace ringkit::ringsim {

inline constexpr double kMinScenarioHr = 40.0;
inline constexpr double kMaxScenarioHr = 200.0;

enum class Motion { Rest, Walk, Scripted };

inline std::string_view to_string(Motion m) {
  switch (m) {
    case Motion::Rest: return "rest";
    case Motion::Walk: return "walk";
    case Motion::Scripted: return "trace";
  }
  return "?";
}

/// One row of a scripted IMU trace: accel in g, gyro in dps.
struct ImuRow {
  std::int64_t t_us = 0;
  std::array<double, 6> values{};
};

/// Timestamped 6-axis rows replayed by the IMU model (CSV:
/// t_us,ax,ay,az,gx,gy,gz). Rows must be strictly increasing in time.
class ImuTrace {
 public:
  ImuTrace() = default;
  explicit ImuTrace(std::vector<ImuRow> rows) : rows_(std::move(rows)) { validate(); }

  static ImuTrace parse(std::istream& in) {
    std::vector<ImuRow> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#' || line == "\r") continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      ImuRow row;
      if (!(ss >> row.t_us)) {
        if (rows.empty()) continue;  // header row
        throw Error(Errc::ParseError, "trace line " + std::to_string(lineno) + ": bad timestamp");
      }
      for (auto& v : row.values)
        if (!(ss >> v)) throw Error(Errc::ParseError, "trace line " + std::to_string(lineno) + ": expected 6 axes");
      rows.push_back(row);
    }
    return ImuTrace(std::move(rows));
  }

  static ImuTrace load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open trace " + path.string());
    return parse(in);
  }

  const std::vector<ImuRow>& rows() const noexcept { return rows_; }
  bool empty() const noexcept { return rows_.empty(); }

  /// Row covering t (relative to the trace start), or nullptr once the trace
  /// has run past its last row plus one row interval.
  const ImuRow* find(std::int64_t t_us) const noexcept {
    if (rows_.empty() || t_us < 0) return nullptr;
    const auto rel = t_us + rows_.front().t_us;
    const auto last_gap = rows_.size() > 1 ? rows_.back().t_us - rows_[rows_.size() - 2].t_us : 1;
    if (rel >= rows_.back().t_us + last_gap) return nullptr;
    auto it = std::upper_bound(rows_.begin(), rows_.end(), rel,
                               [](std::int64_t t, const ImuRow& r) { return t < r.t_us; });
    return &*std::prev(it);
  }

  const ImuRow& at(std::int64_t t_us) const {
    if (const auto* row = find(t_us)) return *row;
    throw Error(Errc::TraceExhausted, "scripted IMU trace ended");
  }

 private:
  void validate() const {
    for (std::size_t i = 1; i < rows_.size(); ++i)
      if (rows_[i].t_us <= rows_[i - 1].t_us) throw Error(Errc::ParseError, "trace timestamps not increasing");
  }

  std::vector<ImuRow> rows_;
};

/// Piece of the ground-truth script, active from start_us until the next one.
struct ScenarioSegment {
  std::int64_t start_us = 0;  // relative to the scenario origin
  double hr_bpm = 70.0;
  Motion motion = Motion::Rest;
  double ambient_c = 25.0;
  std::shared_ptr<const ImuTrace> trace;  // Scripted only
};

/// Deterministic ground truth driving all synthetic sensors. Times are
/// relative to the scenario origin (the ring's power-on instant).
struct Scenario {
  std::string id = "default";
  std::uint64_t seed = 1;
  bool noise = true;
  double snr_db = 30.0;          // additive PPG noise vs. pulse power
  double gait_hz = 2.0;          // Walk cadence
  double artifact_ratio = 0.3;   // motion artifact amplitude / pulse amplitude
  std::vector<ScenarioSegment> segments{ScenarioSegment{}};

  static Scenario constant(double hr_bpm, Motion motion = Motion::Rest, std::uint64_t seed = 1, bool noise = false) {
    Scenario s;
    s.seed = seed;
    s.noise = noise;
    s.segments = {ScenarioSegment{0, hr_bpm, motion, 25.0, nullptr}};
    return s;
  }

  void validate() const {
    if (segments.empty()) throw Error(Errc::BadArgument, "scenario has no segments");
    if (segments.front().start_us != 0) throw Error(Errc::BadArgument, "first segment must start at 0");
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& s = segments[i];
      if (s.hr_bpm < kMinScenarioHr || s.hr_bpm > kMaxScenarioHr)
        throw Error(Errc::BadArgument, "heart rate outside [40, 200] BPM");
      if (i > 0 && s.start_us <= segments[i - 1].start_us)
        throw Error(Errc::BadArgument, "segments not strictly increasing");
      if (s.motion == Motion::Scripted && !s.trace) throw Error(Errc::BadArgument, "scripted segment without trace");
    }
    if (gait_hz <= 0) throw Error(Errc::BadArgument, "gait frequency must be positive");
  }

  std::size_t segment_index(std::int64_t t_us) const noexcept {
    auto it = std::upper_bound(segments.begin(), segments.end(), t_us,
                               [](std::int64_t t, const ScenarioSegment& s) { return t < s.start_us; });
    return it == segments.begin() ? 0 : static_cast<std::size_t>(std::distance(segments.begin(), it) - 1);
  }
  const ScenarioSegment& segment_at(std::int64_t t_us) const noexcept { return segments[segment_index(t_us)]; }

  double hr_at(std::int64_t t_us) const noexcept { return segment_at(t_us).hr_bpm; }
  Motion motion_at(std::int64_t t_us) const noexcept { return segment_at(t_us).motion; }
  double ambient_at(std::int64_t t_us) const noexcept { return segment_at(t_us).ambient_c; }

  /// Cardiac phase in beats: the integral of hr(t)/60 from 0 to t.
  double beats_at(std::int64_t t_us) const noexcept {
    double beats = 0;
    const auto idx = segment_index(t_us);
    for (std::size_t i = 0; i < idx; ++i)
      beats += segments[i].hr_bpm / 60.0 * static_cast<double>(segments[i + 1].start_us - segments[i].start_us) * 1e-6;
    beats += segments[idx].hr_bpm / 60.0 * static_cast<double>(t_us - segments[idx].start_us) * 1e-6;
    return beats;
  }

  // Text format, one directive per line ('#' starts a comment):
  //   id <name> | seed <u64> | noise on|off | snr_db <x> | gait_hz <x> | artifact <x>
  //   segment <start_s> <hr_bpm> rest|walk|trace:<csv> <ambient_c>
  static Scenario parse(std::istream& in, const std::filesystem::path& base_dir = {}) {
    Scenario s;
    s.segments.clear();
    std::string line;
    int lineno = 0;
    auto fail = [&lineno](const std::string& msg) {
      return Error(Errc::ParseError, "scenario line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      std::string key;
      if (!(ss >> key)) continue;
      if (key == "id") {
        if (!(ss >> s.id)) throw fail("id needs a value");
      } else if (key == "seed") {
        if (!(ss >> s.seed)) throw fail("seed needs an integer");
      } else if (key == "noise") {
        std::string v;
        ss >> v;
        if (v != "on" && v != "off") throw fail("noise must be on or off");
        s.noise = v == "on";
      } else if (key == "snr_db") {
        if (!(ss >> s.snr_db)) throw fail("snr_db needs a number");
      } else if (key == "gait_hz") {
        if (!(ss >> s.gait_hz)) throw fail("gait_hz needs a number");
      } else if (key == "artifact") {
        if (!(ss >> s.artifact_ratio)) throw fail("artifact needs a number");
      } else if (key == "segment") {
        double start_s = 0;
        ScenarioSegment seg;
        std::string motion;
        if (!(ss >> start_s >> seg.hr_bpm >> motion >> seg.ambient_c)) throw fail("segment <start_s> <hr> <motion> <ambient>");
        seg.start_us = static_cast<std::int64_t>(std::llround(start_s * 1e6));
        if (motion == "rest") {
          seg.motion = Motion::Rest;
        } else if (motion == "walk") {
          seg.motion = Motion::Walk;
        } else if (motion.rfind("trace:", 0) == 0) {
          seg.motion = Motion::Scripted;
          std::filesystem::path p = motion.substr(6);
          if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
          seg.trace = std::make_shared<const ImuTrace>(ImuTrace::load(p));
        } else {
          throw fail("unknown motion '" + motion + "'");
        }
        s.segments.push_back(std::move(seg));
      } else {
        throw fail("unknown directive '" + key + "'");
      }
    }
    if (s.segments.empty()) s.segments.push_back(ScenarioSegment{});
    s.validate();
    return s;
  }

  static Scenario load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open scenario " + path.string());
    return parse(in, path.parent_path());
  }
};

}  // namespace ringkit::ringsim
