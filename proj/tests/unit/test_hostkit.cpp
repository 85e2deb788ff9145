#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ringkit/hostkit.hpp"

using namespace ringkit;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

ringsim::RingOptions ring_opts(std::uint16_t index, double hr = 72.0) {
  ringsim::RingOptions o;
  o.mac = MacAddress::from_index(index);
  o.name = "ring-" + std::to_string(index);
  o.scenario = ringsim::Scenario::constant(hr, ringsim::Motion::Rest, index, false);
  o.bench_power = true;
  return o;
}

transport::LinkParams fixed_latency(std::int64_t up_us, std::int64_t down_us) {
  transport::LinkParams p;
  p.up = {up_us, 0};
  p.down = {down_us, 0};
  return p;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ringkit_test_" + name);
  fs::remove_all(p);
  return p;
}

std::multiset<proto::SampleRecord> as_multiset(const std::vector<proto::SampleRecord>& v) { return {v.begin(), v.end()}; }

}  // namespace

// --- discovery / dashboard ------------------------------------------------------

TEST(Discover, SortedByRssiDescending) {
  transport::Environment env(3);
  env.add_ring(ring_opts(1), -80);
  env.add_ring(ring_opts(2), -40);
  env.add_ring(ring_opts(3), -60);
  const auto list = hostkit::discover(env);
  ASSERT_EQ(list.size(), 3u);
  EXPECT_EQ(list[0].mac, MacAddress::from_index(2));
  EXPECT_EQ(list[1].mac, MacAddress::from_index(3));
  EXPECT_EQ(list[2].mac, MacAddress::from_index(1));
  for (std::size_t i = 1; i < list.size(); ++i) EXPECT_GE(list[i - 1].rssi_dbm, list[i].rssi_dbm);
}

TEST(Discover, EmptyEnvironment) {
  transport::Environment env;
  EXPECT_TRUE(hostkit::discover(env).empty());
}

TEST(Discover, OrderMatchesRssiOracleAndIsStable) {
  transport::Environment env(17);
  for (std::uint16_t i = 1; i <= 12; ++i) env.add_ring(ring_opts(i), -90.0 + 5.0 * (i % 4));
  const auto list = hostkit::discover(env, 1s);
  for (std::size_t i = 1; i < list.size(); ++i) {
    EXPECT_GE(list[i - 1].rssi_dbm, list[i].rssi_dbm);
    if (list[i - 1].rssi_dbm == list[i].rssi_dbm) {
      EXPECT_LT(list[i - 1].mac, list[i].mac);
    }
  }
}

TEST(Dashboard, HealthRule) {
  EXPECT_EQ(hostkit::health_of(0, 100), hostkit::Health::Ok);
  EXPECT_EQ(hostkit::health_of(0, 20), hostkit::Health::Ok);
  EXPECT_EQ(hostkit::health_of(0, 19), hostkit::Health::Warn);
  EXPECT_EQ(hostkit::health_of(proto::kFaultImu, 100), hostkit::Health::Fault);
  EXPECT_EQ(hostkit::health_of(proto::kFaultPpg, 5), hostkit::Health::Fault);
}

TEST(Dashboard, LowBatteryWarns) {
  transport::Environment env;
  auto o = ring_opts(1);
  o.bench_power = false;
  o.battery_level_mah = o.battery_capacity_mah * 0.15;
  env.add_ring(o);
  auto link = env.connect(o.mac, fixed_latency(5000, 5000));
  const auto d = hostkit::device_info(link);
  EXPECT_EQ(d.battery_pct, 15);
  EXPECT_EQ(d.health, hostkit::Health::Warn);
  EXPECT_EQ(d.mac, o.mac);
  EXPECT_EQ(d.fw_version, ringsim::kFirmwareVersion);
  ASSERT_EQ(d.sensors.size(), 3u);
  EXPECT_EQ(d.sensors[0].rate_hz, 100);
}

TEST(Dashboard, FaultBeatsBattery) {
  transport::Environment env;
  auto& ring = env.add_ring(ring_opts(1));
  ring.inject_fault(proto::kFaultPpg);
  auto link = env.connect(ring.mac(), fixed_latency(5000, 5000));
  const auto d = hostkit::device_info(link);
  EXPECT_EQ(d.health, hostkit::Health::Fault);
  EXPECT_TRUE(d.sensors[0].faulted);
  EXPECT_FALSE(d.sensors[1].faulted);
}

TEST(Dashboard, FlashFreeMatchesSimulator) {
  transport::Environment env;
  auto& ring = env.add_ring(ring_opts(1));
  auto link = env.connect(ring.mac(), fixed_latency(5000, 5000));
  const auto plan = hostkit::configure_offline(link, 20s, 10s);
  ASSERT_TRUE(hostkit::await_offline(link, plan));
  const auto d = hostkit::device_info(link);
  EXPECT_EQ(d.flash_free, ring.flash().capacity() - ring.flash().used());
  EXPECT_GT(ring.flash().used(), 0u);
  EXPECT_EQ(d.file_count, 2);
}

// --- calibration -------------------------------------------------------------------

TEST(Calibrate, FiveSecondOffsetTakesTwoIterations) {
  transport::Environment env;
  auto o = ring_opts(1);
  o.rtc_offset_us = 5'000'000;
  env.add_ring(o);
  auto link = env.connect(o.mac, fixed_latency(15'000, 15'000));
  const auto rep = hostkit::calibrate(link);
  ASSERT_EQ(rep.iterations.size(), 2u);
  EXPECT_TRUE(rep.converged);
  EXPECT_NEAR(static_cast<double>(rep.iterations[0].offset_estimate_us), 5e6, 1.0);
  EXPECT_TRUE(rep.iterations[0].trimmed);
  EXPECT_EQ(rep.iterations[0].rtt_us, 30'000);
  EXPECT_LT(std::llabs(rep.iterations[1].offset_estimate_us), 1000);
  EXPECT_FALSE(rep.iterations[1].trimmed);
  // True residual: the device clock against the environment clock.
  EXPECT_LT(std::llabs(env.ring(o.mac).device_time_us() - env.now()), 1000);
}

TEST(Calibrate, AlreadySynchronized) {
  transport::Environment env;
  env.add_ring(ring_opts(1));
  auto link = env.connect(MacAddress::from_index(1), fixed_latency(15'000, 15'000));
  const auto rep = hostkit::calibrate(link);
  ASSERT_EQ(rep.iterations.size(), 1u);
  EXPECT_TRUE(rep.converged);
  EXPECT_FALSE(rep.iterations[0].trimmed);
  EXPECT_EQ(rep.final_offset_us, 0);
}

TEST(Calibrate, AsymmetricLatencyBiasIsHalfTheDifference) {
  transport::Environment env;
  env.add_ring(ring_opts(1));
  auto link = env.connect(MacAddress::from_index(1), fixed_latency(10'000, 50'000));
  const auto rep = hostkit::calibrate(link);
  EXPECT_TRUE(rep.converged);
  ASSERT_EQ(rep.iterations.size(), 1u);
  // Device reads 10 ms after send; the midpoint guess is 30 ms.
  EXPECT_EQ(rep.final_offset_us, -(50'000 - 10'000) / 2);
}

TEST(Calibrate, AsymmetricTrimLeavesTwentyMillisecondResidual) {
  transport::Environment env;
  auto o = ring_opts(1);
  o.rtc_offset_us = -30'000'000;
  env.add_ring(o);
  auto link = env.connect(o.mac, fixed_latency(10'000, 50'000));
  const auto rep = hostkit::calibrate(link);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations.size(), 2u);
  EXPECT_EQ(env.ring(o.mac).device_time_us() - env.now(), 20'000);
}

TEST(Calibrate, LargeOffsetsConvergeInThreeIterations) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::int64_t> off(-(std::int64_t{1} << 31), std::int64_t{1} << 31);
  for (int trial = 0; trial < 25; ++trial) {
    transport::Environment env(static_cast<std::uint64_t>(trial) + 1);
    auto o = ring_opts(1);
    o.rtc_offset_us = off(rng);
    env.add_ring(o);
    auto link = env.connect(o.mac, transport::LinkParams::symmetric(20'000, 10'000));
    const auto rep = hostkit::calibrate(link);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.iterations.size(), 3u);
    EXPECT_LE(std::llabs(env.ring(o.mac).device_time_us() - env.now()), 1'000'000);
  }
}

// A retransmitted trim carries a stale target, so loss can cost extra rounds.
TEST(Calibrate, ConvergesUnderLoss) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::int64_t> off(-(std::int64_t{1} << 31), std::int64_t{1} << 31);
  for (int trial = 0; trial < 25; ++trial) {
    transport::Environment env(static_cast<std::uint64_t>(trial) + 1);
    auto o = ring_opts(1);
    o.rtc_offset_us = off(rng);
    env.add_ring(o);
    auto p = transport::LinkParams::symmetric(20'000, 10'000);
    p.loss_rate = 0.3;
    p.max_attempts = 20;
    auto link = env.connect(o.mac, p);
    const auto rep = hostkit::calibrate(link);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(std::llabs(env.ring(o.mac).device_time_us() - env.now()), 1'000'000);
  }
}

TEST(Calibrate, RunawayClockDoesNotConverge) {
  transport::Environment env;
  auto o = ring_opts(1);
  o.rtc_offset_us = 10'000'000;
  o.rtc_drift_ppm = 1e8;  // the device clock runs 100x fast
  env.add_ring(o);
  auto link = env.connect(o.mac, fixed_latency(15'000, 15'000));
  hostkit::CalibrationReport rep;
  try {
    hostkit::calibrate(link, &rep);
    FAIL() << "expected NotConverged";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotConverged);
  }
  EXPECT_EQ(rep.iterations.size(), 8u);
  EXPECT_FALSE(rep.converged);
}

// --- online sessions -----------------------------------------------------------------

TEST(Session, SixtySecondsNoLoss) {
  transport::Environment env;
  env.add_ring(ring_opts(1));
  auto link = env.connect(MacAddress::from_index(1), transport::LinkParams::symmetric(15'000, 5'000));
  proto::SensorConfig cfg;
  auto s = hostkit::start_session(link, cfg);
  env.run_for(60s);
  s->stop();
  const auto d = s->snapshot();
  EXPECT_EQ(d.count(proto::Modality::Ppg), 6000u);
  EXPECT_EQ(d.count(proto::Modality::Imu), 6000u);
  EXPECT_EQ(d.count(proto::Modality::Temp), 1500u);
  EXPECT_TRUE(d.gaps.empty());
  EXPECT_GE(d.packets, 1200u);
  EXPECT_TRUE(std::is_sorted(d.samples.begin(), d.samples.end(),
                             [](const auto& a, const auto& b) { return a.timestamp_us < b.timestamp_us; }));
  EXPECT_FALSE(s->active());
}

TEST(Session, LossProducesGapsAndNoInventedRecords) {
  transport::Environment env(21);
  env.add_ring(ring_opts(1));
  auto p = transport::LinkParams::symmetric(15'000, 5'000);
  p.loss_rate = 0.10;
  auto link = env.connect(MacAddress::from_index(1), p);
  // A parallel observer records exactly what the transport delivered.
  std::vector<proto::SampleRecord> delivered;
  std::uint32_t last_seq = 0;
  link.subscribe([&](const transport::Notification& n) {
    if (const auto* pk = std::get_if<proto::StreamPacket>(&n.what)) {
      delivered.insert(delivered.end(), pk->records.begin(), pk->records.end());
      last_seq = pk->seq;
    }
  });
  auto s = hostkit::start_session(link, proto::SensorConfig{});
  env.run_for(30s);
  s->stop();
  const auto d = s->snapshot();
  EXPECT_FALSE(d.gaps.empty());
  EXPECT_EQ(d.samples, delivered);
  std::uint64_t missing = 0;
  for (const auto& g : d.gaps) {
    ASSERT_LE(g.first, g.last);
    missing += g.last - g.first + 1;
  }
  // Losses after the last delivered packet are invisible to the host.
  EXPECT_EQ(d.packets + missing, last_seq + 1u);
  EXPECT_LE(d.packets + missing, link.stats().notify_sent);
}

TEST(Session, RenderStreamAtThirtyHertz) {
  transport::Environment env;
  env.add_ring(ring_opts(1));
  auto link = env.connect(MacAddress::from_index(1), fixed_latency(10'000, 10'000));
  auto s = hostkit::start_session(link, proto::SensorConfig{}, {10'000, std::nullopt});
  std::vector<hostkit::RenderFrame> frames;
  s->on_render([&frames](const hostkit::RenderFrame& f) { frames.push_back(f); });
  env.run_for(11s);
  s->stop();
  EXPECT_NEAR(static_cast<double>(frames.size()), 300.0, 1.0);
  for (std::size_t i = 0; i < frames.size(); ++i) EXPECT_EQ(frames[i].index, i);
  // Each frame summarises at least three 100 Hz samples per PPG channel.
  for (const auto& f : frames) {
    ASSERT_FALSE(f.channels.empty());
    EXPECT_EQ(f.channels[0].id, "ppg0");
    EXPECT_GE(f.channels[0].samples, 3u);
  }
}

TEST(Session, LiveHeartRateTracksScenario) {
  transport::Environment env;
  env.add_ring(ring_opts(1, 84.0));
  auto link = env.connect(MacAddress::from_index(1), fixed_latency(10'000, 10'000));
  std::vector<hostkit::HrUpdate> ups;
  auto s = hostkit::start_session(link, proto::SensorConfig{});
  s->on_hr([&ups](const hostkit::HrUpdate& u) { ups.push_back(u); });
  env.run_for(20s);
  s->stop();
  ASSERT_GE(ups.size(), 11u);
  for (const auto& u : ups) {
    ASSERT_TRUE(u.bpm) << u.window_start_us;
    EXPECT_NEAR(*u.bpm, 84.0, 1.0);
    EXPECT_EQ(u.window_end_us - u.window_start_us, 8'000'000);
    EXPECT_EQ(u.activity_count, 0u);
  }
  ASSERT_TRUE(s->live().hr_bpm);
}

TEST(Session, AnnotationsInBoundsOrderedAndIndexable) {
  transport::Environment env;
  env.add_ring(ring_opts(1));
  auto link = env.connect(MacAddress::from_index(1), fixed_latency(10'000, 10'000));
  auto s = hostkit::start_session(link, proto::SensorConfig{});
  env.run_for(5s);
  const auto a = s->annotate("walking");
  env.run_for(1234ms);
  const auto b = s->annotate("sitting");
  env.run_for(3s);
  s->stop();
  EXPECT_THROW(s->annotate("late"), Error);
  const auto d = s->snapshot();
  ASSERT_EQ(d.annotations.size(), 2u);
  EXPECT_EQ(d.annotations[0].tag, "walking");
  EXPECT_EQ(d.annotations[1].tag, "sitting");
  for (const auto& x : {a, b}) {
    EXPECT_GE(x.device_time_us, d.start_us);
    EXPECT_LE(x.device_time_us, d.end_us);
    const auto idx = d.nearest_sample_index(x.device_time_us);
    ASSERT_TRUE(idx);
    EXPECT_LE(std::llabs(d.samples[*idx].timestamp_us - x.device_time_us), 10'000);
  }
  EXPECT_LT(a.device_time_us, b.device_time_us);
}

TEST(Session, NearestSampleIndexOracle) {
  hostkit::SessionData d;
  for (std::int64_t t : {100, 200, 300}) {
    proto::SampleRecord r;
    r.timestamp_us = t;
    d.samples.push_back(r);
  }
  EXPECT_EQ(*d.nearest_sample_index(0), 0u);
  EXPECT_EQ(*d.nearest_sample_index(149), 0u);
  EXPECT_EQ(*d.nearest_sample_index(150), 0u);
  EXPECT_EQ(*d.nearest_sample_index(151), 1u);
  EXPECT_EQ(*d.nearest_sample_index(1000), 2u);
  EXPECT_FALSE(hostkit::SessionData{}.nearest_sample_index(5));
}

TEST(Session, CalibratedAnnotationUsesDeviceTime) {
  transport::Environment env;
  auto o = ring_opts(1);
  o.rtc_offset_us = 500'000;  // under the trim threshold, so left in place
  env.add_ring(o);
  auto link = env.connect(o.mac, fixed_latency(10'000, 10'000));
  const auto rep = hostkit::calibrate(link);
  ASSERT_EQ(rep.iterations.size(), 1u);
  hostkit::SessionOptions so;
  so.calibration = rep;
  auto s = hostkit::start_session(link, proto::SensorConfig{}, so);
  env.run_for(3s);
  const auto a = s->annotate("mark");
  EXPECT_EQ(a.device_time_us, env.ring(o.mac).device_time_us());
  s->stop();
}

TEST(Session, StartRejectedWhileArmed) {
  transport::Environment env;
  env.add_ring(ring_opts(1));
  auto link = env.connect(MacAddress::from_index(1), fixed_latency(5000, 5000));
  hostkit::configure_offline(link, 60s, 30s, 10s);
  try {
    hostkit::start_session(link, proto::SensorConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidTransition);
  }
}

TEST(Render, DecimatorEnvelopeBoundsEverySample) {
  hostkit::RenderDecimator dec(1'000'000);
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::uint32_t> u(0, 1 << 20);
  std::vector<proto::SampleRecord> recs;
  for (int i = 0; i < 1000; ++i) {
    proto::SampleRecord r;
    r.timestamp_us = 1'000'000 + i * 10'000;
    r.presence = proto::presence_bit(proto::Modality::Ppg);
    r.ppg = {u(rng), u(rng), u(rng)};
    recs.push_back(r);
  }
  std::vector<hostkit::RenderFrame> frames;
  for (const auto& r : recs)
    for (auto& f : dec.push(r)) frames.push_back(std::move(f));
  for (auto& f : dec.flush_until(11'000'000)) frames.push_back(std::move(f));
  ASSERT_EQ(frames.size(), 300u);
  std::size_t covered = 0;
  for (const auto& f : frames) {
    ASSERT_EQ(f.channels.size(), 3u);
    for (const auto& r : recs) {
      if (r.timestamp_us < f.t_start_us || r.timestamp_us >= f.t_end_us) continue;
      for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_LE(f.channels[c].min, r.ppg[c]);
        EXPECT_GE(f.channels[c].max, r.ppg[c]);
      }
      ++covered;
    }
    EXPECT_GE(f.channels[0].samples, 3u);
  }
  EXPECT_EQ(covered, recs.size());
}

TEST(Render, IdleStreamGivesHeartbeats) {
  hostkit::RenderDecimator dec(0);
  const auto frames = dec.flush_until(1'000'000);
  ASSERT_EQ(frames.size(), 30u);
  for (const auto& f : frames) EXPECT_TRUE(f.channels.empty());
  EXPECT_EQ(frames.back().t_end_us, 1'000'000);
}

// --- offline ---------------------------------------------------------------------------

TEST(Offline, PlanArithmeticAndValidation) {
  transport::Environment env;
  env.add_ring(ring_opts(1));
  auto link = env.connect(MacAddress::from_index(1), fixed_latency(5000, 5000));
  EXPECT_EQ(hostkit::OfflinePlanInfo::segment_count(8 * 3600, 1800), 16u);
  EXPECT_EQ(hostkit::OfflinePlanInfo::segment_count(3600, 3600), 1u);
  try {
    hostkit::configure_offline(link, 60s, 120s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadArgument);
  }
  EXPECT_THROW(hostkit::configure_offline(link, 0s, 0s), Error);
  const auto plan = hostkit::configure_offline(link, 8h, 30min);
  EXPECT_EQ(plan.segments, 16u);
  // Radio asleep: everything is refused until logging completes.
  const auto r = link.request(proto::cmd::GetStatus{});
  EXPECT_EQ(r.status, proto::Status::InvalidTransition);
}

TEST(Offline, TwoSegmentRunListsContiguousEntries) {
  transport::Environment env;
  auto& ring = env.add_ring(ring_opts(1));
  auto link = env.connect(ring.mac(), fixed_latency(5000, 5000));
  EXPECT_TRUE(hostkit::list_files(link).empty());
  const auto plan = hostkit::configure_offline(link, 60s, 30s);
  const auto done = hostkit::await_offline(link, plan);
  ASSERT_TRUE(done);
  EXPECT_EQ(*done, 2u);
  const auto files = hostkit::list_files(link);
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[1].start_time_s, files[0].start_time_s + 30);
  std::uint64_t total = 0;
  for (const auto& f : files) total += f.size;
  EXPECT_EQ(total, ring.flash().used());
  // Contiguous, non-overlapping record time ranges.
  const auto a = hostkit::fetch_file(link, files[0].file_id);
  const auto b = hostkit::fetch_file(link, files[1].file_id);
  EXPECT_LT(a.records.back().timestamp_us, b.records.front().timestamp_us);
  EXPECT_EQ(b.records.front().timestamp_us - a.records.back().timestamp_us, 10'000);
}

TEST(Offline, ListPagesBeyondOnePage) {
  transport::Environment env;
  env.add_ring(ring_opts(1));
  auto link = env.connect(MacAddress::from_index(1), fixed_latency(1000, 1000));
  const auto plan = hostkit::configure_offline(link, 70s, 1s);
  ASSERT_TRUE(hostkit::await_offline(link, plan));
  const auto files = hostkit::list_files(link);
  ASSERT_EQ(files.size(), 70u);
  std::set<std::uint16_t> ids;
  for (const auto& f : files) ids.insert(f.file_id);
  EXPECT_EQ(ids.size(), 70u);
  EXPECT_TRUE(std::is_sorted(files.begin(), files.end(),
                             [](const auto& x, const auto& y) { return x.start_time_s < y.start_time_s; }));
}

TEST(Offline, CleanFetchVerifies) {
  transport::Environment env;
  env.add_ring(ring_opts(1));
  auto link = env.connect(MacAddress::from_index(1), fixed_latency(5000, 5000));
  ASSERT_TRUE(hostkit::await_offline(link, hostkit::configure_offline(link, 10s, 10s)));
  const auto files = hostkit::list_files(link);
  ASSERT_EQ(files.size(), 1u);
  std::vector<hostkit::FetchProgress> prog;
  const auto f = hostkit::fetch_file(link, files[0].file_id, {}, [&prog](const auto& p) { prog.push_back(p); });
  EXPECT_EQ(proto::crc32(f.payload), files[0].crc);
  EXPECT_EQ(f.records.size(), files[0].size / proto::kRecordSize);
  ASSERT_FALSE(prog.empty());
  EXPECT_DOUBLE_EQ(prog.back().fraction(), 1.0);
  for (std::size_t i = 1; i < prog.size(); ++i) EXPECT_GT(prog[i].bytes, prog[i - 1].bytes);
  // Device is idle again afterwards.
  EXPECT_EQ(hostkit::device_info(link).mode, proto::DeviceMode::Idle);
}

TEST(Offline, CorruptChunkIsCrcMismatch) {
  transport::Environment env;
  env.add_ring(ring_opts(1));
  auto p = fixed_latency(5000, 5000);
  auto link = env.connect(MacAddress::from_index(1), p);
  ASSERT_TRUE(hostkit::await_offline(link, hostkit::configure_offline(link, 10s, 10s)));
  const auto files = hostkit::list_files(link);
  link.params().bulk_corrupt_chunk = 3;
  try {
    hostkit::fetch_file(link, files[0].file_id);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CrcMismatch);
  }
  // A retry without the fault succeeds.
  EXPECT_NO_THROW(hostkit::fetch_file(link, files[0].file_id));
}

TEST(Offline, DisconnectAndResumeGivesIdenticalPayload) {
  transport::Environment env;
  env.add_ring(ring_opts(1));
  auto link = env.connect(MacAddress::from_index(1), fixed_latency(5000, 5000));
  ASSERT_TRUE(hostkit::await_offline(link, hostkit::configure_offline(link, 10s, 10s)));
  const auto files = hostkit::list_files(link);
  const auto clean = hostkit::fetch_file(link, files[0].file_id);

  link.params().bulk_disconnect_at = 19'000;
  proto::Bytes partial;
  try {
    hostkit::fetch_file(link, files[0].file_id);
    FAIL();
  } catch (const hostkit::FetchInterrupted& e) {
    EXPECT_EQ(e.code(), Errc::Disconnected);
    EXPECT_EQ(e.resume_from(), 19'000u);
    partial = e.partial();
  }
  EXPECT_FALSE(link.connected());
  auto again = env.connect(MacAddress::from_index(1), fixed_latency(5000, 5000));
  const auto resumed = hostkit::fetch_file(again, files[0].file_id, partial);
  EXPECT_EQ(resumed.payload, clean.payload);
  EXPECT_EQ(again.stats().bulk_bytes, files[0].size - 19'000u);
}

TEST(Offline, UnknownFile) {
  transport::Environment env;
  env.add_ring(ring_opts(1));
  auto link = env.connect(MacAddress::from_index(1), fixed_latency(5000, 5000));
  try {
    hostkit::fetch_file(link, 42);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoSuchFile);
  }
}

TEST(Offline, OfflineRecordsEqualOnlineRecords) {
  auto run = [](bool offline) {
    transport::Environment env(5);
    env.add_ring(ring_opts(1, 66.0));
    auto link = env.connect(MacAddress::from_index(1), fixed_latency(10'000, 10'000));
    env.run_for(1s);
    if (offline) {
      link.request(proto::cmd::ScheduleOffline{0, 60, 20}).expect_ok();
      env.run_for(61s);
      std::vector<hostkit::FetchedFile> got;
      for (const auto& e : hostkit::list_files(link)) got.push_back(hostkit::fetch_file(link, e.file_id));
      return hostkit::offline_session(link.mac(), proto::SensorConfig{}, got).samples;
    }
    std::vector<proto::SampleRecord> recs;
    link.subscribe([&recs](const transport::Notification& n) {
      if (const auto* pk = std::get_if<proto::StreamPacket>(&n.what)) recs.insert(recs.end(), pk->records.begin(), pk->records.end());
    });
    link.request(proto::cmd::SetMode{proto::DeviceMode::Streaming, 60'000}).expect_ok();
    env.run_for(61s);
    return recs;
  };
  const auto online = run(false), offline = run(true);
  ASSERT_EQ(online.size(), 60u * 100u);
  EXPECT_EQ(as_multiset(online), as_multiset(offline));
}

// --- export / import -------------------------------------------------------------------

namespace {

hostkit::SessionData recorded_session() {
  transport::Environment env(9);
  auto o = ring_opts(1);
  o.config.temp.rate_hz = 5;
  env.add_ring(o);
  auto link = env.connect(o.mac, transport::LinkParams::symmetric(10'000, 3000));
  const auto rep = hostkit::calibrate(link);
  hostkit::SessionOptions so;
  so.calibration = rep;
  proto::SensorConfig cfg;
  cfg.temp.rate_hz = 5;
  cfg.ppg.led_code = {100, 120, 140};
  auto s = hostkit::start_session(link, cfg, so);
  env.run_for(2s);
  s->annotate("a, with comma");
  env.run_for(2s);
  s->annotate("b");
  env.run_for(1s);
  s->stop();
  return s->snapshot();
}

void expect_same(const hostkit::SessionData& a, const hostkit::SessionData& b) {
  EXPECT_EQ(a.session_id, b.session_id);
  EXPECT_EQ(a.mac, b.mac);
  EXPECT_EQ(a.config, b.config);
  EXPECT_EQ(a.start_us, b.start_us);
  EXPECT_EQ(a.end_us, b.end_us);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.annotations, b.annotations);
  EXPECT_EQ(a.gaps, b.gaps);
  EXPECT_EQ(a.packets, b.packets);
  ASSERT_EQ(a.calibration.has_value(), b.calibration.has_value());
  if (a.calibration) {
    EXPECT_EQ(a.calibration->final_offset_us, b.calibration->final_offset_us);
    EXPECT_EQ(a.calibration->iterations.size(), b.calibration->iterations.size());
  }
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string l;
  while (std::getline(in, l)) ++n;
  return n;
}

}  // namespace

TEST(Export, CsvRoundTrip) {
  const auto d = recorded_session();
  ASSERT_EQ(d.annotations.size(), 2u);
  const auto dir = scratch("csv");
  hostkit::export_session(d, dir, hostkit::ExportFormat::Csv);
  EXPECT_EQ(line_count(dir / "ppg.csv"), d.count(proto::Modality::Ppg) + 1);
  EXPECT_EQ(line_count(dir / "imu.csv"), d.count(proto::Modality::Imu) + 1);
  EXPECT_EQ(line_count(dir / "temp.csv"), d.count(proto::Modality::Temp) + 1);
  expect_same(d, hostkit::import_session(dir));
  fs::remove_all(dir);
}

TEST(Export, BinaryRoundTrip) {
  const auto d = recorded_session();
  const auto dir = scratch("bin");
  hostkit::export_session(d, dir, hostkit::ExportFormat::Binary);
  EXPECT_EQ(fs::file_size(dir / "records.bin"), d.samples.size() * proto::kRecordSize);
  expect_same(d, hostkit::import_session(dir));
  fs::remove_all(dir);
}

TEST(Export, BinaryCrcEqualsSegmentCrc) {
  transport::Environment env;
  env.add_ring(ring_opts(1));
  auto link = env.connect(MacAddress::from_index(1), fixed_latency(5000, 5000));
  ASSERT_TRUE(hostkit::await_offline(link, hostkit::configure_offline(link, 15s, 15s)));
  const auto files = hostkit::list_files(link);
  const auto f = hostkit::fetch_file(link, files[0].file_id);
  const auto d = hostkit::offline_session(link.mac(), proto::SensorConfig{}, {f});
  const auto dir = scratch("seg");
  hostkit::export_session(d, dir, hostkit::ExportFormat::Binary);
  std::ifstream in(dir / "records.bin", std::ios::binary);
  const proto::Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(proto::crc32(bytes), files[0].crc);
  const auto back = hostkit::import_session(dir);
  EXPECT_EQ(back.files, d.files);
  EXPECT_EQ(back.source, "offline");
  fs::remove_all(dir);
}

TEST(Export, DeterministicBytes) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  hostkit::export_session(recorded_session(), a, hostkit::ExportFormat::Csv);
  hostkit::export_session(recorded_session(), b, hostkit::ExportFormat::Csv);
  for (const auto* name : {"session.json", "ppg.csv", "imu.csv", "temp.csv"}) {
    std::ifstream x(a / name), y(b / name);
    std::stringstream sx, sy;
    sx << x.rdbuf();
    sy << y.rdbuf();
    EXPECT_EQ(sx.str(), sy.str()) << name;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Export, ImportRejectsGarbage) {
  const auto dir = scratch("bad");
  fs::create_directories(dir);
  std::ofstream(dir / "session.json") << "{not json";
  try {
    hostkit::import_session(dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ParseError);
  }
  EXPECT_THROW(hostkit::import_session(scratch("missing")), Error);
  fs::remove_all(dir);
}

// --- environment files --------------------------------------------------------------------

TEST(EnvFile, ParsesRingsAndPreloads) {
  std::istringstream in(R"(# two rings
seed 77
start_epoch 1767225600
ring mac=02:00:00:00:00:01 name=alpha hr=60 rssi=-50 rtc_offset_ms=5000
ring mac=02:00:00:00:00:02 motion=walk noise=on battery_pct=15 fault=imu bench_power=false
preload 02:00:00:00:00:01 total_s=60 segment_s=30
)");
  const auto spec = hostkit::parse_env(in);
  EXPECT_EQ(spec.seed, 77u);
  ASSERT_EQ(spec.rings.size(), 2u);
  EXPECT_EQ(spec.rings[0].options.name, "alpha");
  EXPECT_EQ(spec.rings[0].options.rtc_offset_us, 5'000'000);
  EXPECT_EQ(spec.rings[1].options.name, "tau-ring-2");
  EXPECT_EQ(spec.rings[1].faults, proto::kFaultImu);
  EXPECT_EQ(spec.rings[1].options.scenario.segments.front().motion, ringsim::Motion::Walk);
  ASSERT_EQ(spec.preloads.size(), 1u);

  auto env = hostkit::build_env(spec);
  auto link = env->connect(MacAddress::parse("02:00:00:00:00:01"));
  EXPECT_EQ(hostkit::list_files(link).size(), 2u);
  auto other = env->connect(MacAddress::parse("02:00:00:00:00:02"));
  EXPECT_EQ(hostkit::device_info(other).health, hostkit::Health::Fault);
}

TEST(EnvFile, ErrorsCarryLineNumbers) {
  for (const char* text : {"seed\n", "ring colour=red\n", "bogus 1\n", "ring hr=abc\n", "\n\npreload 02:00:00:00:00:01\n"}) {
    std::istringstream in(text);
    try {
      hostkit::parse_env(in);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::ParseError) << text;
      EXPECT_NE(std::string(e.what()).find("environment line"), std::string::npos) << e.what();
    }
  }
}
