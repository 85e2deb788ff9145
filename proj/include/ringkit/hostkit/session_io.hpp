#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ringkit/hostkit/json.hpp"

namespace ringkit::hostkit {

enum class ExportFormat { Csv, Binary };

inline constexpr std::string_view kSessionSchema = "ringkit.session/1";
inline constexpr std::string_view kMetadataFile = "session.json";
inline constexpr std::string_view kRecordsFile = "records.bin";

constexpr std::string_view to_string(ExportFormat f) noexcept { return f == ExportFormat::Csv ? "csv" : "bin"; }

inline ExportFormat parse_export_format(std::string_view s) {
  if (s == "csv") return ExportFormat::Csv;
  if (s == "bin") return ExportFormat::Binary;
  throw Error(Errc::BadArgument, "export format must be csv or bin, got '" + std::string(s) + "'");
}

namespace detail {

struct Table {
  std::string_view file;
  proto::Modality modality;
  std::vector<std::string_view> columns;
};

inline const std::vector<Table>& tables() {
  static const std::vector<Table> t{
      {"ppg.csv", proto::Modality::Ppg, {"ppg0", "ppg1", "ppg2"}},
      {"imu.csv", proto::Modality::Imu, {"ax", "ay", "az", "gx", "gy", "gz"}},
      {"temp.csv", proto::Modality::Temp, {"temp0_centi", "temp1_centi", "temp2_centi"}},
  };
  return t;
}

inline void write_file(const std::filesystem::path& p, std::string_view data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + p.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(Errc::IoError, "short write to " + p.string());
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
T parse_int(std::string_view s, const std::string& where) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw Error(Errc::ParseError, where + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

inline Json metadata_json(const SessionData& d, ExportFormat fmt) {
  Json ann = Json::array();
  for (const auto& a : d.annotations) ann.push_back(to_json(a));
  Json gaps = Json::array();
  for (const auto& g : d.gaps) gaps.push_back({{"first", g.first}, {"last", g.last}});
  Json files = Json::array();
  for (const auto& f : d.files) files.push_back(to_json(f));
  Json tables = Json::array();
  if (fmt == ExportFormat::Csv) {
    for (const auto& t : detail::tables())
      if (d.config.enabled(t.modality) || d.count(t.modality)) tables.push_back(t.file);
  } else {
    tables.push_back(kRecordsFile);
  }
  return Json{{"schema", kSessionSchema},
              {"session_id", d.session_id},
              {"source", d.source},
              {"device", {{"mac", d.mac.to_string()}}},
              {"config", to_json(d.config)},
              {"start_us", d.start_us},
              {"end_us", d.end_us},
              {"packets", d.packets},
              {"record_count", d.samples.size()},
              {"counts",
               {{"ppg", d.count(proto::Modality::Ppg)},
                {"imu", d.count(proto::Modality::Imu)},
                {"temp", d.count(proto::Modality::Temp)}}},
              {"gaps", gaps},
              {"annotations", ann},
              {"calibration", d.calibration ? to_json(*d.calibration) : Json(nullptr)},
              {"files", files},
              {"samples", {{"format", to_string(fmt)}, {"files", tables}}}};
}

/// Writes `dir/session.json` plus per-modality CSV tables or one file of
/// 38-byte records. Output is a pure function of the session data.
inline void export_session(const SessionData& d, const std::filesystem::path& dir, ExportFormat fmt) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
  detail::write_file(dir / kMetadataFile, metadata_json(d, fmt).dump(2) + "\n");
  if (fmt == ExportFormat::Binary) {
    const auto bytes = proto::encode_records(d.samples);
    detail::write_file(dir / kRecordsFile, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    return;
  }
  for (const auto& t : detail::tables()) {
    if (!d.config.enabled(t.modality) && !d.count(t.modality)) continue;
    std::string out = "timestamp_us";
    for (auto c : t.columns) (out += ',') += c;
    out += '\n';
    for (const auto& r : d.samples) {
      if (!r.has(t.modality)) continue;
      out += std::to_string(r.timestamp_us);
      switch (t.modality) {
        case proto::Modality::Ppg:
          for (auto v : r.ppg) (out += ',') += std::to_string(v);
          break;
        case proto::Modality::Imu:
          for (auto v : r.imu) (out += ',') += std::to_string(v);
          break;
        case proto::Modality::Temp:
          for (auto v : r.temp_centi) (out += ',') += std::to_string(v);
          break;
      }
      out += '\n';
    }
    detail::write_file(dir / t.file, out);
  }
}

inline SessionData import_session(const std::filesystem::path& dir) {
  Json j;
  try {
    j = Json::parse(detail::read_file(dir / kMetadataFile));
  } catch (const Json::exception& e) {
    throw Error(Errc::ParseError, (dir / kMetadataFile).string() + ": " + e.what());
  }
  SessionData d;
  ExportFormat fmt;
  try {
    if (j.at("schema").get<std::string>() != kSessionSchema)
      throw Error(Errc::ParseError, "unsupported schema " + j.at("schema").get<std::string>());
    d.session_id = j.at("session_id").get<std::string>();
    d.source = j.at("source").get<std::string>();
    d.mac = MacAddress::parse(j.at("device").at("mac").get<std::string>());
    d.config = config_from_json(j.at("config"));
    d.start_us = j.at("start_us").get<std::int64_t>();
    d.end_us = j.at("end_us").get<std::int64_t>();
    d.packets = j.at("packets").get<std::uint64_t>();
    for (const auto& g : j.at("gaps")) d.gaps.push_back({g.at("first").get<std::uint32_t>(), g.at("last").get<std::uint32_t>()});
    for (const auto& a : j.at("annotations"))
      d.annotations.push_back({a.at("device_time_us").get<std::int64_t>(), a.at("tag").get<std::string>()});
    if (!j.at("calibration").is_null()) d.calibration = calibration_from_json(j.at("calibration"));
    for (const auto& f : j.at("files")) d.files.push_back(entry_from_json(f));
    fmt = parse_export_format(j.at("samples").at("format").get<std::string>());
  } catch (const Json::exception& e) {
    throw Error(Errc::ParseError, std::string("session metadata: ") + e.what());
  }

  if (fmt == ExportFormat::Binary) {
    const auto raw = detail::read_file(dir / kRecordsFile);
    d.samples = proto::decode_records(proto::ByteView(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
  } else {
    std::map<std::int64_t, proto::SampleRecord> merged;
    for (const auto& t : detail::tables()) {
      const auto path = dir / t.file;
      if (!std::filesystem::exists(path)) continue;
      std::istringstream in(detail::read_file(path));
      std::string line;
      std::getline(in, line);  // header
      std::size_t lineno = 1;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path.filename().string() + ":" + std::to_string(lineno);
        std::vector<std::string_view> f;
        std::string_view rest(line);
        for (auto pos = rest.find(','); pos != std::string_view::npos; pos = rest.find(',')) {
          f.push_back(rest.substr(0, pos));
          rest.remove_prefix(pos + 1);
        }
        f.push_back(rest);
        if (f.size() != t.columns.size() + 1) throw Error(Errc::ParseError, where + ": wrong column count");
        const auto ts = detail::parse_int<std::int64_t>(f[0], where);
        auto& r = merged[ts];
        r.timestamp_us = ts;
        r.presence |= proto::presence_bit(t.modality);
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
          switch (t.modality) {
            case proto::Modality::Ppg: r.ppg[i] = detail::parse_int<std::uint32_t>(f[i + 1], where); break;
            case proto::Modality::Imu: r.imu[i] = detail::parse_int<std::int16_t>(f[i + 1], where); break;
            case proto::Modality::Temp: r.temp_centi[i] = detail::parse_int<std::int16_t>(f[i + 1], where); break;
          }
        }
      }
    }
    d.samples.reserve(merged.size());
    for (auto& [_, r] : merged) d.samples.push_back(r);
  }
  return d;
}

/// Session view of downloaded offline segments, in start-time order.
inline SessionData offline_session(const MacAddress& mac, const proto::SensorConfig& config,
                                   const std::vector<FetchedFile>& files) {
  SessionData d;
  d.mac = mac;
  d.config = config;
  d.source = "offline";
  for (const auto& f : files) {
    d.files.push_back(f.entry);
    d.samples.insert(d.samples.end(), f.records.begin(), f.records.end());
  }
  if (!d.samples.empty()) {
    d.start_us = d.samples.front().timestamp_us;
    d.end_us = d.samples.back().timestamp_us;
  } else if (!files.empty()) {
    d.start_us = d.end_us = static_cast<std::int64_t>(files.front().entry.start_time_s) * 1'000'000;
  }
  d.session_id = make_session_id(mac, d.start_us);
  return d;
}

}  // namespace ringkit::hostkit
