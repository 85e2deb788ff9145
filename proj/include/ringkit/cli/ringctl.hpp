#pragma once

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ringkit/dsp/eval.hpp"
#include "ringkit/gateway.hpp"
#include "ringkit/hostkit.hpp"

namespace ringkit::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitDevice = 3, kExitIntegrity = 4 };

constexpr int exit_code_for(Errc c) noexcept {
  if (is_integrity_error(c)) return kExitIntegrity;
  if (c == Errc::BadArgument || c == Errc::ParseError) return kExitUsage;
  return kExitDevice;
}

/// One line, `key=value` fields, the message JSON-quoted.
inline void print_error(std::ostream& err, std::string_view code, int exit_code, const std::string& message) {
  err << "error code=" << code << " exit=" << exit_code << " message=" << hostkit::Json(message).dump() << '\n';
}

/// Aligned plain-text table, or tab-separated with `tsv`.
struct Table {
  std::vector<std::string> head;
  std::vector<std::vector<std::string>> rows;

  void print(std::ostream& out, bool tsv) const {
    if (tsv) {
      auto line = [&out](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "\t" : "") << r[i];
        out << '\n';
      };
      line(head);
      for (const auto& r : rows) line(r);
      return;
    }
    std::vector<std::size_t> w(head.size());
    for (std::size_t i = 0; i < head.size(); ++i) w[i] = head[i].size();
    for (const auto& r : rows)
      for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
    auto line = [&](const std::vector<std::string>& r) {
      std::string s;
      for (std::size_t i = 0; i < r.size(); ++i) {
        s += r[i];
        if (i + 1 < r.size()) s += std::string(w[i] - r[i].size() + 2, ' ');
      }
      out << s << '\n';
    };
    line(head);
    for (const auto& r : rows) line(r);
  }
};

inline std::string fixed(double v, int prec) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

inline std::string hex32(std::uint32_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(8) << std::setfill('0') << v;
  return s.str();
}

struct CliConfig {
  std::string env_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  int verbosity = 0;
  bool tsv = false;
  std::string link_profile;
};

namespace detail {

inline std::atomic<bool> g_interrupted{false};

inline void on_signal(int) { g_interrupted = true; }

inline hostkit::EnvSpec env_spec(const CliConfig& c) {
  hostkit::EnvSpec spec;
  if (!c.env_path.empty()) {
    spec = hostkit::load_env(c.env_path);
  } else {
    hostkit::RingSpec r;
    r.options.name = "tau-ring-1";
    spec.rings.push_back(r);
  }
  if (c.seed) spec.seed = *c.seed;
  if (!c.link_profile.empty()) spec.link = transport::LinkParams::load(c.link_profile);
  return spec;
}

inline proto::SensorConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open config " + path);
  hostkit::Json j;
  try {
    j = hostkit::Json::parse(in);
  } catch (const hostkit::Json::exception& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
  return hostkit::config_from_json(j);
}

inline std::string opt_bpm(const std::optional<double>& v) { return v ? fixed(*v, 1) : "-"; }

}  // namespace detail

/// Parses argv, runs one subcommand and returns the process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, std::istream& in) {
  CLI::App app{"Operate simulated tau-Ring devices: discovery, calibration, streaming, offline logging.", "ringctl"};
  app.require_subcommand(1);
  app.fallthrough();
  CliConfig cfg;
  std::string format = "table";
  app.add_option("--env", cfg.env_path, "Environment file (rings, link profile, preloads)");
  app.add_option("--seed", cfg.seed, "Override the environment seed");
  app.add_option("--out", cfg.out_dir, "Output directory");
  app.add_option("--link", cfg.link_profile, "Link profile applied to every connection");
  app.add_option("--format", format, "Table format")->check(CLI::IsMember({"table", "tsv"}));
  app.add_flag("-v,--verbose", cfg.verbosity, "More diagnostics on stderr");

  std::string mac_text;
  auto add_mac = [&mac_text](CLI::App* sc) { sc->add_option("mac", mac_text, "Device MAC address")->required(); };

  // sim
  auto* sim = app.add_subcommand("sim", "Spawn virtual rings from scenario files and run them");
  std::size_t sim_count = 0;
  std::vector<std::string> sim_scenarios;
  std::string sim_write_env;
  double sim_duration = -1, sim_speed = 1.0;
  sim->add_option("--count", sim_count, "Number of rings (default: one per scenario, or 1)");
  sim->add_option("--scenario", sim_scenarios, "Scenario file; repeat to cycle through several");
  sim->add_option("--write-env", sim_write_env, "Write an environment file describing the rings");
  sim->add_option("--duration", sim_duration, "Simulated seconds to run (default: until interrupted)");
  sim->add_option("--speed", sim_speed, "Simulated seconds per wall-clock second")->check(CLI::PositiveNumber);

  // scan
  auto* scan = app.add_subcommand("scan", "List advertising rings");
  int scan_ms = 1000;
  std::string scan_sort = "rssi";
  scan->add_option("--duration-ms", scan_ms, "Scan window")->check(CLI::PositiveNumber);
  scan->add_option("--sort", scan_sort, "Sort key")->check(CLI::IsMember({"rssi", "battery", "name"}));

  auto* info = app.add_subcommand("info", "Device dashboard");
  add_mac(info);
  auto* calib = app.add_subcommand("calibrate", "Synchronize the device clock");
  add_mac(calib);

  // stream
  auto* stream = app.add_subcommand("stream", "Record a live session and export it");
  double stream_duration = 10;
  std::string stream_config, stream_export = "csv";
  std::vector<std::string> stream_marks;
  bool stream_calibrate = false;
  add_mac(stream);
  stream->add_option("--duration", stream_duration, "Seconds")->check(CLI::PositiveNumber);
  stream->add_option("--config", stream_config, "Sensor configuration JSON");
  stream->add_option("--export", stream_export, "Export format")->check(CLI::IsMember({"csv", "bin"}));
  stream->add_option("--mark", stream_marks, "Annotation as <seconds>:<tag>, relative to session start");
  stream->add_flag("--calibrate", stream_calibrate, "Calibrate before streaming");

  // annotate
  auto* annotate = app.add_subcommand("annotate", "Stream while reading annotation tags from stdin");
  double ann_duration = 60, ann_speed = 1.0;
  std::string ann_config, ann_export = "csv";
  add_mac(annotate);
  annotate->add_option("--duration", ann_duration, "Seconds")->check(CLI::PositiveNumber);
  annotate->add_option("--config", ann_config, "Sensor configuration JSON");
  annotate->add_option("--export", ann_export, "Export format")->check(CLI::IsMember({"csv", "bin"}));
  annotate->add_option("--speed", ann_speed, "Simulated seconds per wall-clock second; 0 reads all input first")
      ->check(CLI::NonNegativeNumber);

  // offline
  auto* offline = app.add_subcommand("offline", "Run an offline logging plan and list the segments");
  std::int64_t off_total = 0, off_segment = 0, off_delay = 0;
  bool off_fetch = false;
  std::string off_export = "csv";
  add_mac(offline);
  offline->add_option("--total", off_total, "Total seconds")->required();
  offline->add_option("--segment", off_segment, "Segment seconds")->required();
  offline->add_option("--delay", off_delay, "Start delay seconds");
  offline->add_flag("--fetch", off_fetch, "Download every segment and export the session to --out");
  offline->add_option("--export", off_export, "Export format")->check(CLI::IsMember({"csv", "bin"}));

  auto* files = app.add_subcommand("files", "List logged segments");
  add_mac(files);

  // fetch
  auto* fetch = app.add_subcommand("fetch", "Download one segment and export it");
  int fetch_id = 0;
  bool fetch_resume = false;
  std::string fetch_export = "bin";
  add_mac(fetch);
  fetch->add_option("id", fetch_id, "File id")->required()->check(CLI::Range(0, 65535));
  fetch->add_flag("--resume", fetch_resume, "Continue from <out>/<id>.part");
  fetch->add_option("--export", fetch_export, "Export format")->check(CLI::IsMember({"csv", "bin"}));

  // hr-eval
  auto* hreval = app.add_subcommand("hr-eval", "Score the heart-rate pipeline on synthetic scenarios");
  std::vector<std::string> hr_scenarios;
  std::string hr_noise = "file";
  std::size_t hr_suite = 20;
  std::uint64_t hr_seed = 7;
  int hr_duration = 60;
  hreval->add_option("--scenario", hr_scenarios, "Scenario file (default: the seeded suite)");
  hreval->add_option("--noise", hr_noise, "on: noisy suite / force noise; off: clean; file: as written")
      ->check(CLI::IsMember({"on", "off", "file"}));
  hreval->add_option("--suite", hr_suite, "Suite size when no scenario is given");
  hreval->add_option("--suite-seed", hr_seed, "Suite seed");
  hreval->add_option("--duration", hr_duration, "Seconds per scenario")->check(CLI::Range(10, 3600));

  // gateway
  auto* gw = app.add_subcommand("gateway", "Serve the HTTP/streaming API");
  int gw_port = -1;
  std::string gw_host = "127.0.0.1", gw_static;
  double gw_speed = 1.0, gw_exit_after = 0;
  gw->add_option("--port", gw_port, std::string("Port (default: $") + gateway::kPortEnvVar + " or 8765)")
      ->check(CLI::Range(0, 65535));
  gw->add_option("--host", gw_host, "Bind address");
  gw->add_option("--speed", gw_speed, "Simulated seconds per wall-clock second")->check(CLI::PositiveNumber);
  gw->add_option("--static", gw_static, "Directory served at /");
  gw->add_option("--exit-after", gw_exit_after, "Stop after this many wall-clock seconds")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    if (code != 0) print_error(err, "Usage", kExitUsage, er.str().empty() ? e.what() : er.str().substr(0, er.str().find('\n')));
    return code == 0 ? kExitOk : kExitUsage;
  }
  cfg.tsv = format == "tsv";

  auto log = [&](int level, const std::string& msg) {
    if (cfg.verbosity >= level) err << msg << '\n';
  };

  try {
    const auto spec = detail::env_spec(cfg);
    auto env = hostkit::build_env(spec);
    auto connect = [&] { return env->connect(MacAddress::parse(mac_text)); };
    const std::filesystem::path out_dir = cfg.out_dir;

    if (sim->parsed()) {
      hostkit::EnvSpec s = spec;
      s.rings.clear();
      s.preloads.clear();
      const std::size_t n = sim_count ? sim_count : std::max<std::size_t>(1, sim_scenarios.size());
      for (std::size_t i = 0; i < n; ++i) {
        hostkit::RingSpec r;
        r.options.mac = MacAddress::from_index(static_cast<std::uint16_t>(i + 1));
        r.options.name = "tau-ring-" + std::to_string(i + 1);
        if (!sim_scenarios.empty()) r.options.scenario = ringsim::Scenario::load(sim_scenarios[i % sim_scenarios.size()]);
        r.rssi_dbm = -50.0 - 5.0 * static_cast<double>(i % 8);
        s.rings.push_back(r);
      }
      env = hostkit::build_env(s);
      Table t{{"name", "mac", "scenario", "rssi_dbm"}, {}};
      for (std::size_t i = 0; i < s.rings.size(); ++i)
        t.rows.push_back({s.rings[i].options.name, s.rings[i].options.mac.to_string(), s.rings[i].options.scenario.id,
                          fixed(s.rings[i].rssi_dbm, 0)});
      t.print(out, cfg.tsv);
      if (!sim_write_env.empty()) {
        std::ofstream f(sim_write_env);
        if (!f) throw Error(Errc::IoError, "cannot write " + sim_write_env);
        f << "seed " << s.seed << '\n';
        for (std::size_t i = 0; i < s.rings.size(); ++i) {
          const auto& o = s.rings[i].options;
          f << "ring mac=" << o.mac.to_string() << " name=" << o.name << " rssi=" << fixed(s.rings[i].rssi_dbm, 0);
          if (!sim_scenarios.empty())
            f << " scenario=" << std::filesystem::absolute(sim_scenarios[i % sim_scenarios.size()]).string();
          f << '\n';
        }
      }
      if (sim_duration == 0) return kExitOk;
      detail::g_interrupted = false;
      std::signal(SIGINT, detail::on_signal);
      std::signal(SIGTERM, detail::on_signal);
      const auto t0 = env->now();
      const auto w0 = std::chrono::steady_clock::now();
      while (!detail::g_interrupted) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - w0).count();
        double sim_s = wall * sim_speed;
        if (sim_duration > 0 && sim_s >= sim_duration) sim_s = sim_duration;
        env->run_until(t0 + static_cast<std::int64_t>(sim_s * 1e6));
        if (sim_duration > 0 && sim_s >= sim_duration) break;
      }
      out << "simulated " << fixed(static_cast<double>(env->now() - t0) * 1e-6, 3) << " s\n";
      return kExitOk;
    }

    if (scan->parsed()) {
      auto key = scan_sort == "battery" ? hostkit::SortKey::Battery
                 : scan_sort == "name"  ? hostkit::SortKey::Name
                                        : hostkit::SortKey::Rssi;
      Table t{{"name", "mac", "rssi_dbm", "battery_pct", "fw_version"}, {}};
      for (const auto& d : hostkit::discover(*env, std::chrono::milliseconds(scan_ms), key))
        t.rows.push_back({d.name, d.mac.to_string(), std::to_string(d.rssi_dbm), std::to_string(d.battery_pct), d.fw_version});
      t.print(out, cfg.tsv);
      return kExitOk;
    }

    if (info->parsed()) {
      auto link = connect();
      const auto d = hostkit::device_info(link);
      Table t{{"field", "value"}, {}};
      t.rows = {{"mac", d.mac.to_string()},
                {"mode", std::string(proto::to_string(d.mode))},
                {"health", std::string(hostkit::to_string(d.health))},
                {"battery_pct", std::to_string(d.battery_pct)},
                {"fw_version", d.fw_version},
                {"device_time_us", std::to_string(d.device_time_us)},
                {"flash_capacity", std::to_string(d.flash_capacity)},
                {"flash_free", std::to_string(d.flash_free)},
                {"file_count", std::to_string(d.file_count)},
                {"fault_flags", std::to_string(d.fault_flags)}};
      for (const auto& s : d.sensors)
        t.rows.push_back({std::string(proto::to_string(s.modality)),
                          std::string(s.enabled ? "on " : "off ") + std::to_string(s.rate_hz) + " Hz" +
                              (s.faulted ? " FAULT" : "")});
      t.print(out, cfg.tsv);
      return kExitOk;
    }

    if (calib->parsed()) {
      auto link = connect();
      hostkit::CalibrationReport rep;
      std::optional<Error> failure;
      try {
        hostkit::calibrate(link, &rep);
      } catch (const Error& e) {
        if (e.code() != Errc::NotConverged) throw;
        failure = e;
      }
      Table t{{"iteration", "host_send_us", "device_time_us", "rtt_us", "offset_us", "trimmed"}, {}};
      for (std::size_t i = 0; i < rep.iterations.size(); ++i) {
        const auto& it = rep.iterations[i];
        t.rows.push_back({std::to_string(i + 1), std::to_string(it.host_send_us), std::to_string(it.device_time_us),
                          std::to_string(it.rtt_us), std::to_string(it.offset_estimate_us), it.trimmed ? "yes" : "no"});
      }
      t.print(out, cfg.tsv);
      out << (cfg.tsv ? "" : "\n");
      Table s{{"final_offset_us", "iterations", "converged"},
              {{std::to_string(rep.final_offset_us), std::to_string(rep.iterations.size()), rep.converged ? "yes" : "no"}}};
      s.print(out, cfg.tsv);
      if (failure) throw *failure;
      return kExitOk;
    }

    auto session_table = [&](const hostkit::SessionData& d, const std::optional<double>& hr, const std::string& dir) {
      Table t{{"field", "value"}, {}};
      t.rows = {{"session_id", d.session_id},
                {"start_us", std::to_string(d.start_us)},
                {"end_us", std::to_string(d.end_us)},
                {"packets", std::to_string(d.packets)},
                {"gaps", std::to_string(d.gaps.size())},
                {"ppg_records", std::to_string(d.count(proto::Modality::Ppg))},
                {"imu_records", std::to_string(d.count(proto::Modality::Imu))},
                {"temp_records", std::to_string(d.count(proto::Modality::Temp))},
                {"annotations", std::to_string(d.annotations.size())},
                {"last_hr_bpm", detail::opt_bpm(hr)},
                {"export", dir}};
      t.print(out, cfg.tsv);
    };

    if (stream->parsed()) {
      std::vector<std::pair<double, std::string>> marks;
      for (const auto& m : stream_marks) {
        const auto colon = m.find(':');
        if (colon == std::string::npos || colon + 1 == m.size())
          throw Error(Errc::BadArgument, "--mark expects <seconds>:<tag>, got '" + m + "'");
        double at = 0;
        try {
          at = std::stod(m.substr(0, colon));
        } catch (const std::exception&) {
          throw Error(Errc::BadArgument, "--mark time is not a number: '" + m + "'");
        }
        if (at < 0 || at > stream_duration) throw Error(Errc::BadArgument, "--mark time outside the session: '" + m + "'");
        marks.emplace_back(at, m.substr(colon + 1));
      }
      std::stable_sort(marks.begin(), marks.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      auto link = connect();
      hostkit::SessionOptions so;
      if (stream_calibrate) so.calibration = hostkit::calibrate(link);
      auto s = hostkit::start_session(link, detail::load_config(stream_config), so);
      std::optional<double> last_hr;
      s->on_hr([&](const hostkit::HrUpdate& u) {
        if (u.bpm) last_hr = u.bpm;
        log(1, "hr " + std::to_string(u.window_end_us) + " " + detail::opt_bpm(u.bpm));
      });
      const auto t0 = env->now();
      for (const auto& [at, tag] : marks) {
        env->run_until(t0 + static_cast<std::int64_t>(at * 1e6));
        s->annotate(tag);
      }
      env->run_until(t0 + static_cast<std::int64_t>(stream_duration * 1e6));
      s->stop();
      const auto d = s->snapshot();
      hostkit::export_session(d, out_dir, hostkit::parse_export_format(stream_export));
      session_table(d, last_hr, out_dir.string());
      return kExitOk;
    }

    if (annotate->parsed()) {
      auto link = connect();
      auto s = hostkit::start_session(link, detail::load_config(ann_config));
      std::optional<double> last_hr;
      s->on_hr([&](const hostkit::HrUpdate& u) {
        if (u.bpm) last_hr = u.bpm;
      });
      std::mutex mu;
      std::deque<std::string> pending;
      std::atomic<bool> eof{false};
      auto read_all = [&] {
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          std::lock_guard lk(mu);
          pending.push_back(line);
        }
        eof = true;
      };
      std::thread reader;
      if (ann_speed == 0) read_all();
      else reader = std::thread(read_all);
      // "@<seconds> tag" places the tag at a session offset; a bare tag means now.
      std::vector<std::pair<std::int64_t, std::string>> scheduled;
      const auto t0 = env->now();
      const auto end = t0 + static_cast<std::int64_t>(ann_duration * 1e6);
      auto take = [&] {
        std::lock_guard lk(mu);
        while (!pending.empty()) {
          auto line = std::move(pending.front());
          pending.pop_front();
          if (line == "quit") {
            scheduled.emplace_back(-1, "");
            continue;
          }
          std::int64_t at = env->now();
          if (line[0] == '@') {
            const auto sp = line.find(' ');
            if (sp == std::string::npos) continue;
            try {
              at = t0 + static_cast<std::int64_t>(std::stod(line.substr(1, sp - 1)) * 1e6);
            } catch (const std::exception&) {
              print_error(err, "BadArgument", kExitUsage, "ignored line: " + line);
              continue;
            }
            line = line.substr(sp + 1);
          }
          scheduled.emplace_back(std::max(at, env->now()), line);
        }
        std::stable_sort(scheduled.begin(), scheduled.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      };
      const auto w0 = std::chrono::steady_clock::now();
      bool quit = false;
      while (env->now() < end && !quit) {
        take();
        std::int64_t target = end;
        if (ann_speed > 0) {
          std::this_thread::sleep_for(std::chrono::milliseconds(10));
          const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - w0).count();
          target = std::min(end, t0 + static_cast<std::int64_t>(wall * ann_speed * 1e6));
        }
        while (!scheduled.empty() && scheduled.front().first <= target) {
          auto [at, tag] = scheduled.front();
          scheduled.erase(scheduled.begin());
          if (at < 0) {
            quit = true;
            break;
          }
          env->run_until(at);
          const auto a = s->annotate(tag);
          out << "ack\t" << a.device_time_us << '\t' << a.tag << '\n';
        }
        if (!quit) env->run_until(target);
      }
      s->stop();
      if (reader.joinable()) {
        if (!eof) reader.detach();  // still blocked on an interactive terminal
        else reader.join();
      }
      const auto d = s->snapshot();
      hostkit::export_session(d, out_dir, hostkit::parse_export_format(ann_export));
      session_table(d, last_hr, out_dir.string());
      return kExitOk;
    }

    auto file_table = [&](const std::vector<proto::LogFileEntry>& entries) {
      Table t{{"file_id", "start_time_s", "size", "records", "crc"}, {}};
      for (const auto& e : entries)
        t.rows.push_back({std::to_string(e.file_id), std::to_string(e.start_time_s), std::to_string(e.size),
                          std::to_string(e.size / proto::kRecordSize), hex32(e.crc)});
      t.print(out, cfg.tsv);
    };

    if (offline->parsed()) {
      auto link = connect();
      const auto plan = hostkit::configure_offline(link, std::chrono::seconds(off_total), std::chrono::seconds(off_segment),
                                                   std::chrono::seconds(off_delay));
      log(1, "armed: " + std::to_string(plan.segments) + " segments");
      const auto done = hostkit::await_offline(link, plan);
      if (!done) throw Error(Errc::Timeout, "device did not report the end of logging");
      const auto entries = hostkit::list_files(link);
      file_table(entries);
      if (off_fetch) {
        std::vector<hostkit::FetchedFile> got;
        for (const auto& e : entries) got.push_back(hostkit::fetch_file(link, e.file_id));
        auto d = hostkit::offline_session(link.mac(), proto::SensorConfig{}, got);
        hostkit::export_session(d, out_dir, hostkit::parse_export_format(off_export));
        log(1, "exported " + std::to_string(d.samples.size()) + " records to " + out_dir.string());
      }
      return kExitOk;
    }

    if (files->parsed()) {
      auto link = connect();
      file_table(hostkit::list_files(link));
      return kExitOk;
    }

    if (fetch->parsed()) {
      auto link = connect();
      const auto id = static_cast<std::uint16_t>(fetch_id);
      std::filesystem::create_directories(out_dir);
      const auto part = out_dir / (std::to_string(id) + ".part");
      proto::Bytes prefix;
      if (fetch_resume && std::filesystem::exists(part)) {
        std::ifstream f(part, std::ios::binary);
        prefix.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
        log(1, "resuming at byte " + std::to_string(prefix.size()));
      }
      hostkit::FetchedFile file;
      try {
        file = hostkit::fetch_file(link, id, std::move(prefix), [&](const hostkit::FetchProgress& p) {
          if (cfg.verbosity >= 2) err << "progress " << p.bytes << '/' << p.total << '\n';
        });
      } catch (const hostkit::FetchInterrupted& e) {
        std::ofstream f(part, std::ios::binary | std::ios::trunc);
        f.write(reinterpret_cast<const char*>(e.partial().data()), static_cast<std::streamsize>(e.partial().size()));
        throw Error(Errc::Disconnected, std::string(e.what()) + "; " + std::to_string(e.resume_from()) +
                                            " bytes kept in " + part.string() + ", rerun with --resume");
      }
      std::filesystem::remove(part);
      auto d = hostkit::offline_session(link.mac(), proto::SensorConfig{}, {file});
      hostkit::export_session(d, out_dir, hostkit::parse_export_format(fetch_export));
      Table t{{"file_id", "bytes", "records", "crc", "transfer_s"},
              {{std::to_string(id), std::to_string(file.payload.size()), std::to_string(file.records.size()),
                hex32(file.entry.crc), fixed(static_cast<double>(file.finished_us - file.started_us) * 1e-6, 3)}}};
      t.print(out, cfg.tsv);
      return kExitOk;
    }

    if (hreval->parsed()) {
      std::vector<ringsim::Scenario> scns;
      if (hr_scenarios.empty()) {
        scns = dsp::hr_suite(hr_suite, hr_seed, hr_noise == "on");
      } else {
        for (const auto& p : hr_scenarios) {
          auto s = ringsim::Scenario::load(p);
          if (hr_noise != "file") s.noise = hr_noise == "on";
          scns.push_back(std::move(s));
        }
      }
      std::vector<dsp::EvalResult> rows;
      Table t{{"scenario", "noise", "snr_db", "motion", "windows", "withheld", "mae_bpm"}, {}};
      double sum = 0, worst = 0;
      for (const auto& s : scns) {
        rows.push_back(dsp::evaluate(s, std::chrono::seconds(hr_duration)));
        const auto& r = rows.back();
        t.rows.push_back({r.scenario_id, r.noise ? "on" : "off", fixed(r.snr_db, 1), r.motion, std::to_string(r.windows),
                          std::to_string(r.withheld), fixed(r.mae_bpm, 3)});
        sum += r.mae_bpm;
        worst = std::max(worst, r.mae_bpm);
      }
      t.print(out, cfg.tsv);
      if (!rows.empty()) {
        out << (cfg.tsv ? "" : "\n");
        Table s{{"scenarios", "mean_mae_bpm", "worst_mae_bpm"},
                {{std::to_string(rows.size()), fixed(sum / static_cast<double>(rows.size()), 3), fixed(worst, 3)}}};
        s.print(out, cfg.tsv);
      }
      return kExitOk;
    }

    if (gw->parsed()) {
      gateway::GatewayOptions o;
      o.host = gw_host;
      o.port = gw_port >= 0 ? gw_port : gateway::default_port();
      o.speed = gw_speed;
      o.static_dir = gw_static;
      gateway::Gateway server(std::move(env), o);
      const int port = server.start();
      out << "listening on http://" << gw_host << ':' << port << std::endl;
      detail::g_interrupted = false;
      std::signal(SIGINT, detail::on_signal);
      std::signal(SIGTERM, detail::on_signal);
      const auto w0 = std::chrono::steady_clock::now();
      while (!detail::g_interrupted) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        if (gw_exit_after > 0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - w0).count() >= gw_exit_after)
          break;
      }
      server.stop();
      return kExitOk;
    }
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    print_error(err, to_string(e.code()), code, e.what());
    return code;
  } catch (const std::exception& e) {
    print_error(err, "Internal", kExitDevice, e.what());
    return kExitDevice;
  }
  return kExitUsage;
}

}  // namespace ringkit::cli
