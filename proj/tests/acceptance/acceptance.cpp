// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "ringkit/dsp/eval.hpp"
#include "ringkit/hostkit.hpp"

using namespace ringkit;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

// Stream framing
constexpr std::int64_t kStreamSeconds = 600;
constexpr std::uint64_t kExpectedPackets = 12'000;
constexpr std::size_t kRecordsPerPacket = 5;
constexpr double kStreamWallLimitS = 10.0;

// Calibration
constexpr int kCalibTrials = 100;
constexpr std::int64_t kMaxInjectedOffsetUs = 60'000'000;
constexpr std::int64_t kLatencyLoUs = 10'000, kLatencyHiUs = 40'000;
constexpr std::int64_t kLatencyJitterUs = 5'000;
constexpr std::size_t kMaxCalibIterations = 3;
constexpr std::int64_t kResidualBoundUs = 1'000'000;
constexpr std::int64_t kAsymUpUs = 10'000, kAsymDownUs = 50'000;
constexpr std::int64_t kAsymBiasUs = 20'000, kAsymToleranceUs = 5'000;
constexpr int kAsymTrials = 25;

// Offline
constexpr std::uint32_t kOfflineTotalS = 2 * 3600, kOfflineSegmentS = 30 * 60;
constexpr std::size_t kOfflineEntries = 4;
constexpr std::uint64_t kTimedFileBytes = 160'000;
constexpr double kTimedFileMinS = 10.0;

// Capacity and battery
constexpr double kFlashFillHours = 9.81;
constexpr std::uint32_t kCapacitySegmentS = 30 * 60;
constexpr double kBatteryHours = 8.00;
constexpr double kBatteryTolerance = 0.01;

// Integrity
constexpr int kBitFlips = 10'000;

// Heart rate
constexpr std::size_t kHrScenarios = 20;
constexpr std::uint64_t kHrSeed = 7;
constexpr auto kHrDuration = 60s;
constexpr double kCleanMaeBpm = 1.0;
constexpr double kNoisyMaeBpm = 5.18;
constexpr double kHrWallLimitS = 30.0;

constexpr std::int64_t kBoot = 1'767'225'600'000'000;
constexpr std::int64_t kSec = 1'000'000;

struct Verdict {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ringsim::RingOptions ring_options(std::uint64_t scenario_seed) {
  ringsim::RingOptions o;
  o.scenario = ringsim::Scenario::constant(72.0, ringsim::Motion::Walk, scenario_seed, true);
  o.bench_power = true;
  return o;
}

std::int64_t median(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  return v.empty() ? 0 : v[v.size() / 2];
}

std::map<std::string, std::size_t> as_multiset(const std::vector<proto::SampleRecord>& rs) {
  std::map<std::string, std::size_t> m;
  for (const auto& r : rs) {
    proto::Bytes b;
    proto::ByteWriter w(b);
    proto::write_record(w, r);
    ++m[std::string(b.begin(), b.end())];
  }
  return m;
}

Verdict stream_framing() {
  const auto t0 = std::chrono::steady_clock::now();
  transport::Environment env(101);
  const auto o = ring_options(3);
  env.add_ring(o);
  auto link = env.connect(o.mac, transport::LinkParams::symmetric(15'000));
  std::uint64_t packets = 0, short_packets = 0, seq_breaks = 0;
  link.subscribe([&](const transport::Notification& n) {
    if (const auto* pk = std::get_if<proto::StreamPacket>(&n.what)) {
      if (pk->seq != packets) ++seq_breaks;
      ++packets;
      if (pk->records.size() != kRecordsPerPacket) ++short_packets;
    }
  });
  hostkit::SessionOptions so;
  so.duration_ms = kStreamSeconds * 1000;
  auto s = hostkit::start_session(link, proto::SensorConfig{}, so);
  env.run_for(std::chrono::seconds(kStreamSeconds + 1));
  const auto d = s->snapshot();
  const double wall = seconds_since(t0);

  const proto::SensorConfig cfg;
  const auto expect = [&](proto::Modality m) { return static_cast<std::size_t>(kStreamSeconds * cfg.rate(m)); };
  const bool seq_ok = d.gaps.empty() && seq_breaks == 0;
  Verdict v;
  v.pass = packets == kExpectedPackets && d.packets == kExpectedPackets && short_packets == 0 && seq_ok &&
           d.count(proto::Modality::Ppg) == expect(proto::Modality::Ppg) &&
           d.count(proto::Modality::Imu) == expect(proto::Modality::Imu) &&
           d.count(proto::Modality::Temp) == expect(proto::Modality::Temp) && expect(proto::Modality::Ppg) == 60'000 &&
           expect(proto::Modality::Imu) == 60'000 && wall < kStreamWallLimitS;
  v.detail = fmt("packets=%llu records/packet!=5:%llu seq_breaks=%llu gaps=%zu ppg=%zu imu=%zu temp=%zu(25 Hz max) wall=%.2fs",
                 static_cast<unsigned long long>(packets), static_cast<unsigned long long>(short_packets),
                 static_cast<unsigned long long>(seq_breaks), d.gaps.size(),
                 d.count(proto::Modality::Ppg), d.count(proto::Modality::Imu), d.count(proto::Modality::Temp), wall);
  return v;
}

Verdict calibration() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::int64_t> offset(-kMaxInjectedOffsetUs, kMaxInjectedOffsetUs);
  std::uniform_int_distribution<std::int64_t> latency(kLatencyLoUs, kLatencyHiUs);
  std::vector<std::int64_t> residuals;
  std::size_t worst_iters = 0, failed = 0;
  std::int64_t worst_residual = 0;
  for (int t = 0; t < kCalibTrials; ++t) {
    transport::Environment env(static_cast<std::uint64_t>(t) + 1);
    auto o = ring_options(1);
    o.rtc_offset_us = offset(rng);
    env.add_ring(o);
    auto link = env.connect(o.mac, transport::LinkParams::symmetric(latency(rng), kLatencyJitterUs));
    try {
      const auto rep = hostkit::calibrate(link);
      worst_iters = std::max(worst_iters, rep.iterations.size());
      if (rep.iterations.size() > kMaxCalibIterations) ++failed;
    } catch (const Error&) {
      ++failed;
      worst_iters = std::max<std::size_t>(worst_iters, hostkit::kMaxCalibIterations);
      continue;
    }
    const std::int64_t r = std::llabs(env.ring(o.mac).device_time_us() - env.now());
    residuals.push_back(r);
    worst_residual = std::max(worst_residual, r);
  }
  const auto med = median(residuals);

  std::vector<std::int64_t> asym;
  for (int t = 0; t < kAsymTrials; ++t) {
    transport::Environment env(static_cast<std::uint64_t>(t) + 500);
    auto o = ring_options(1);
    o.rtc_offset_us = offset(rng);
    env.add_ring(o);
    transport::LinkParams p;
    p.up = {kAsymUpUs, 0};
    p.down = {kAsymDownUs, 0};
    auto link = env.connect(o.mac, p);
    try {
      hostkit::calibrate(link);
      asym.push_back(static_cast<std::int64_t>(std::llabs(env.ring(o.mac).device_time_us() - env.now())));
    } catch (const Error&) {
      ++failed;
    }
  }
  const auto asym_med = median(asym);

  Verdict v;
  v.pass = failed == 0 && worst_iters <= kMaxCalibIterations && worst_residual <= kResidualBoundUs &&
           med <= 2 * kLatencyJitterUs && std::llabs(asym_med - kAsymBiasUs) <= kAsymToleranceUs;
  v.detail = fmt("trials=%d failed=%zu max_iterations=%zu max_residual=%lldus median=%lldus (bound %lldus) "
                 "asym_median=%lldus",
                 kCalibTrials, failed, worst_iters, static_cast<long long>(worst_residual), static_cast<long long>(med),
                 static_cast<long long>(2 * kLatencyJitterUs), static_cast<long long>(asym_med));
  return v;
}

std::vector<proto::SampleRecord> online_records(std::uint32_t seconds) {
  transport::Environment env(55);
  env.add_ring(ring_options(9));
  auto link = env.connect(ringsim::RingOptions{}.mac, transport::LinkParams::symmetric(10'000));
  env.run_for(1s);
  std::vector<proto::SampleRecord> recs;
  link.subscribe([&recs](const transport::Notification& n) {
    if (const auto* pk = std::get_if<proto::StreamPacket>(&n.what)) recs.insert(recs.end(), pk->records.begin(), pk->records.end());
  });
  link.request(proto::cmd::SetMode{proto::DeviceMode::Streaming, seconds * 1000}).expect_ok();
  env.run_for(std::chrono::seconds(seconds + 1));
  return recs;
}

Verdict offline_path() {
  transport::Environment env(55);
  env.add_ring(ring_options(9));
  auto link = env.connect(ringsim::RingOptions{}.mac, transport::LinkParams::symmetric(10'000));
  env.run_for(1s);
  const auto plan = hostkit::configure_offline(link, std::chrono::seconds(kOfflineTotalS), std::chrono::seconds(kOfflineSegmentS));
  const auto done = hostkit::await_offline(link, plan);
  const auto entries = hostkit::list_files(link);
  std::vector<hostkit::FetchedFile> got;
  std::size_t crc_failures = 0;
  for (const auto& e : entries) {
    try {
      got.push_back(hostkit::fetch_file(link, e.file_id));
    } catch (const Error&) {
      ++crc_failures;
    }
  }
  const auto offline = hostkit::offline_session(link.mac(), proto::SensorConfig{}, got).samples;
  const auto online = online_records(kOfflineTotalS);
  const bool same = !online.empty() && as_multiset(online) == as_multiset(offline);

  // Smallest whole-record file of at least 160 000 B, produced by a full flash.
  const std::uint64_t records = (kTimedFileBytes + proto::kRecordSize - 1) / proto::kRecordSize;
  transport::Environment env2(56);
  auto o = ring_options(9);
  o.flash_capacity = records * proto::kRecordSize + 20;
  env2.add_ring(o);
  auto link2 = env2.connect(o.mac);
  const auto plan2 = hostkit::configure_offline(link2, 120s, 120s);
  hostkit::await_offline(link2, plan2);
  const auto files2 = hostkit::list_files(link2);
  double transfer_s = 0;
  std::uint64_t timed_size = 0;
  if (files2.size() == 1) {
    const auto f = hostkit::fetch_file(link2, files2[0].file_id);
    timed_size = f.payload.size();
    transfer_s = static_cast<double>(f.finished_us - f.started_us) * 1e-6;
  }

  Verdict v;
  v.pass = done && entries.size() == kOfflineEntries && crc_failures == 0 && same && timed_size >= kTimedFileBytes &&
           transfer_s >= kTimedFileMinS;
  v.detail = fmt("entries=%zu crc_failures=%zu offline_records=%zu online_records=%zu multiset_equal=%s "
                 "file=%lluB transfer=%.3fs",
                 entries.size(), crc_failures, offline.size(), online.size(), same ? "yes" : "no",
                 static_cast<unsigned long long>(timed_size), transfer_s);
  return v;
}

Verdict capacity_and_battery() {
  // Fill time from the layout arithmetic: capacity over bytes per second at the reference rates.
  const double bytes_per_s = static_cast<double>(proto::kRecordSize) * 100.0;
  const double oracle_h = static_cast<double>(ringsim::kFlashCapacity) / bytes_per_s / 3600.0;

  auto o = ring_options(4);
  ringsim::Ring ring(o, kBoot);
  ring.apply_command(proto::cmd::ScheduleOffline{0, 12 * 3600, kCapacitySegmentS}).expect_ok();
  std::vector<ringsim::Emission> em;
  std::optional<std::int64_t> full_at;
  for (std::int64_t h = 1; h <= 12 && !full_at; ++h) {
    em.clear();
    ring.advance_to(kBoot + h * 3600 * kSec, em);
    for (const auto& e : em)
      if (const auto* ev = std::get_if<proto::DeviceEvent>(&e.what))
        if (ev->code == proto::EventCode::FlashFull) full_at = e.at_us;
  }
  const double fill_h = full_at ? static_cast<double>(*full_at - kBoot) / 3.6e9 : -1;

  auto b = ring_options(4);
  b.bench_power = false;
  ringsim::Ring batt(b, kBoot);
  batt.apply_command(proto::cmd::SetMode{proto::DeviceMode::Streaming, 0}).expect_ok();
  std::optional<std::int64_t> empty_at;
  for (std::int64_t h = 1; h <= 10 && !empty_at; ++h) {
    em.clear();
    batt.advance_to(kBoot + h * 3600 * kSec, em);
    for (const auto& e : em)
      if (const auto* ev = std::get_if<proto::DeviceEvent>(&e.what))
        if (ev->code == proto::EventCode::BatteryEmpty) empty_at = e.at_us;
  }
  const double empty_h = empty_at ? static_cast<double>(*empty_at - kBoot) / 3.6e9 : -1;

  const double seg_h = kCapacitySegmentS / 3600.0;
  Verdict v;
  v.pass = full_at && std::abs(fill_h - kFlashFillHours) <= seg_h && std::abs(oracle_h - kFlashFillHours) < 0.005 &&
           empty_at && std::abs(empty_h - kBatteryHours) <= kBatteryHours * kBatteryTolerance;
  v.detail = fmt("flash_full=%.4fh (layout %.4fh, ±%.2fh) battery_empty=%.4fh (±%.2fh)", fill_h, oracle_h, seg_h, empty_h,
                 kBatteryHours * kBatteryTolerance);
  return v;
}

Verdict integrity() {
  std::mt19937_64 rng(77);
  // Real frames and segments from a short run.
  ringsim::Ring ring(ring_options(6), kBoot);
  ring.apply_command(proto::cmd::SetMode{proto::DeviceMode::Streaming, 2000}).expect_ok();
  std::vector<ringsim::Emission> em;
  ring.advance_to(kBoot + 3 * kSec, em);
  std::vector<proto::Bytes> frames;
  for (const auto& e : em) {
    if (const auto* pk = std::get_if<proto::StreamPacket>(&e.what)) frames.push_back(proto::encode_frame(proto::packet_frame(*pk)));
    if (const auto* ev = std::get_if<proto::DeviceEvent>(&e.what)) frames.push_back(proto::encode_frame(proto::event_frame(*ev)));
  }
  ring.apply_command(proto::cmd::ScheduleOffline{0, 30, 10}).expect_ok();
  ring.advance_to(kBoot + 40 * kSec, em);
  const auto& segments = ring.flash().segments();

  int frame_trials = 0, frame_detected = 0, seg_trials = 0, seg_detected = 0;
  for (int i = 0; i < kBitFlips; ++i) {
    if (i % 2 == 0) {
      auto f = frames[rng() % frames.size()];
      const auto bit = rng() % (f.size() * 8);
      f[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      ++frame_trials;
      try {
        proto::decode_frame(f);
      } catch (const Error&) {
        ++frame_detected;
      }
    } else {
      const auto& seg = segments[rng() % segments.size()];
      auto p = seg.payload;
      const auto bit = rng() % (p.size() * 8);
      p[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      ++seg_trials;
      if (proto::crc32(p) != seg.entry.crc) ++seg_detected;
    }
  }
  Verdict v;
  v.pass = !frames.empty() && segments.size() == 3 && frame_detected == frame_trials && seg_detected == seg_trials;
  v.detail = fmt("frames %d/%d detected, segments %d/%d detected", frame_detected, frame_trials, seg_detected, seg_trials);
  return v;
}

struct SuiteScore {
  double mae = 0;
  double worst = 0;
  std::size_t windows = 0;
  std::string report;
};

SuiteScore score_suite(bool noisy) {
  SuiteScore s;
  std::vector<dsp::EvalResult> rows;
  double sum = 0;
  for (const auto& scn : dsp::hr_suite(kHrScenarios, kHrSeed, noisy)) {
    rows.push_back(dsp::evaluate(scn, kHrDuration));
    for (double e : rows.back().errors) sum += std::abs(e);
    s.windows += rows.back().errors.size();
    s.worst = std::max(s.worst, rows.back().mae_bpm);
  }
  s.mae = s.windows ? sum / static_cast<double>(s.windows) : std::nan("");
  std::ostringstream out;
  dsp::write_report(out, rows);
  s.report = out.str();
  return s;
}

Verdict heart_rate() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto clean = score_suite(false);
  const auto noisy = score_suite(true);
  const double wall = seconds_since(t0);
  Verdict v;
  v.pass = clean.mae <= kCleanMaeBpm && noisy.mae <= kNoisyMaeBpm && wall < kHrWallLimitS;
  v.detail = fmt("clean_mae=%.3f noisy_mae=%.3f (worst scenario %.3f) windows=%zu+%zu wall=%.2fs", clean.mae, noisy.mae,
                 noisy.worst, clean.windows, noisy.windows, wall);
  return v;
}

// Every byte an acceptance-style run exports: a calibrated live session, an
// offline download and an HR report.
std::string export_bytes(const fs::path& dir) {
  fs::remove_all(dir);
  std::string all;
  transport::Environment env(31);
  env.add_ring(ring_options(12));
  auto link = env.connect(ringsim::RingOptions{}.mac, transport::LinkParams::symmetric(20'000, 5'000));
  hostkit::SessionOptions so;
  so.calibration = hostkit::calibrate(link);
  so.duration_ms = 30'000;
  auto s = hostkit::start_session(link, proto::SensorConfig{}, so);
  env.run_for(10s);
  s->annotate("marker");
  env.run_for(21s);
  const auto plan = hostkit::configure_offline(link, 60s, 20s);
  hostkit::await_offline(link, plan);
  std::vector<hostkit::FetchedFile> got;
  for (const auto& e : hostkit::list_files(link)) got.push_back(hostkit::fetch_file(link, e.file_id));
  const auto live = s->snapshot();
  const auto off = hostkit::offline_session(link.mac(), proto::SensorConfig{}, got);
  for (auto fmt : {hostkit::ExportFormat::Csv, hostkit::ExportFormat::Binary}) {
    const auto tag = fmt == hostkit::ExportFormat::Csv ? "csv" : "bin";
    hostkit::export_session(live, dir / "live" / tag, fmt);
    hostkit::export_session(off, dir / "offline" / tag, fmt);
  }
  std::vector<fs::path> paths;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) all += fs::relative(p, dir).string() + '\n' + hostkit::detail::read_file(p);
  std::vector<dsp::EvalResult> rows;
  for (const auto& scn : dsp::hr_suite(3, kHrSeed, true)) rows.push_back(dsp::evaluate(scn, 20s));
  std::ostringstream report;
  dsp::write_report(report, rows);
  return all + report.str();
}

Verdict determinism() {
  const auto base = fs::temp_directory_path() / ("ringkit-acceptance-" + std::to_string(::getpid()));
  const auto a = export_bytes(base / "a");
  const auto b = export_bytes(base / "b");
  fs::remove_all(base);
  Verdict v;
  v.pass = !a.empty() && a == b;
  v.detail = fmt("%zu bytes per run, identical=%s", a.size(), a == b ? "yes" : "no");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"stream-framing", stream_framing}, {"calibration", calibration},     {"offline-path", offline_path},
      {"capacity-battery", capacity_and_battery}, {"integrity", integrity}, {"heart-rate", heart_rate},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
