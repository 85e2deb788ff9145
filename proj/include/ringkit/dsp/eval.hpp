#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ringkit/dsp/heart_rate.hpp"
#include "ringkit/ringsim/ring.hpp"

namespace ringkit::dsp {

struct HrPoint {
  std::int64_t t_us = 0;
  double bpm = 0;
};

/// Mean absolute difference of two equally long series.
inline double mae(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::BadArgument, "series lengths differ");
  if (a.empty()) throw Error(Errc::BadArgument, "empty series");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

/// Each estimate is compared with the reference point nearest its window midpoint.
inline std::vector<double> aligned_errors(std::span<const HrEstimate> est, std::span<const HrPoint> ref) {
  if (ref.empty()) throw Error(Errc::BadArgument, "empty reference");
  std::vector<double> err;
  err.reserve(est.size());
  for (const auto& e : est) {
    const auto mid = e.midpoint_us();
    const auto* best = &ref[0];
    for (const auto& r : ref)
      if (std::llabs(r.t_us - mid) < std::llabs(best->t_us - mid)) best = &r;
    err.push_back(e.bpm - best->bpm);
  }
  return err;
}

inline double mae(std::span<const HrEstimate> est, std::span<const HrPoint> ref) {
  const auto err = aligned_errors(est, ref);
  if (err.empty()) throw Error(Errc::BadArgument, "no estimates");
  double s = 0;
  for (double e : err) s += std::abs(e);
  return s / static_cast<double>(err.size());
}

struct SlidingResult {
  std::vector<HrEstimate> estimates;
  std::size_t windows = 0;
  std::size_t withheld = 0;
};

/// 8 s windows stepped by `hop_s` over a uniformly sampled PPG channel.
inline SlidingResult sliding_hr(std::span<const double> ppg, double fs, std::int64_t start_us,
                                double window_s = kHrWindowS, double hop_s = 1.0, const PeakParams& p = {}) {
  SlidingResult out;
  const auto w = static_cast<std::size_t>(window_s * fs);
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(hop_s * fs));
  for (std::size_t s = 0; s + w <= ppg.size(); s += hop) {
    ++out.windows;
    const auto t0 = start_us + static_cast<std::int64_t>(std::llround(static_cast<double>(s) / fs * 1e6));
    if (auto e = estimate_hr(ppg.subspan(s, w), fs, t0, p)) out.estimates.push_back(*e);
    else ++out.withheld;
  }
  return out;
}

struct EvalResult {
  std::string scenario_id;
  bool noise = false;
  double snr_db = 0;
  std::string motion;
  std::size_t windows = 0;
  std::size_t withheld = 0;
  double mae_bpm = 0;
  std::vector<double> errors;
};

/// Streams `duration` of the scenario out of a virtual ring (PPG channel 0 at
/// 100 Hz) and scores sliding estimates against the scenario's heart rate.
inline EvalResult evaluate(const ringsim::Scenario& scn, std::chrono::seconds duration, const PeakParams& p = {}) {
  constexpr std::int64_t boot = 1'767'225'600'000'000;
  ringsim::RingOptions o;
  o.scenario = scn;
  o.bench_power = true;
  o.config.imu.enabled = false;
  o.config.temp.enabled = false;
  ringsim::Ring ring(o, boot);
  ring.apply_command(proto::cmd::SetMode{proto::DeviceMode::Streaming, 0}).expect_ok();
  std::vector<double> ppg;
  std::vector<ringsim::Emission> em;
  ring.advance_to(boot + std::chrono::duration_cast<std::chrono::microseconds>(duration).count(), em);
  for (const auto& e : em)
    if (const auto* pk = std::get_if<proto::StreamPacket>(&e.what))
      for (const auto& r : pk->records) ppg.push_back(static_cast<double>(r.ppg[0]));

  constexpr double fs = 100.0;
  const auto sliding = sliding_hr(ppg, fs, 0, kHrWindowS, 1.0, p);
  std::vector<HrPoint> ref;
  for (const auto& e : sliding.estimates) ref.push_back({e.midpoint_us(), scn.hr_at(e.midpoint_us())});

  EvalResult r;
  r.scenario_id = scn.id;
  r.noise = scn.noise;
  r.snr_db = scn.snr_db;
  r.motion = std::string(ringsim::to_string(scn.segments.front().motion));
  r.windows = sliding.windows;
  r.withheld = sliding.withheld;
  if (!sliding.estimates.empty()) {
    r.errors = aligned_errors(sliding.estimates, ref);
    r.mae_bpm = mae(sliding.estimates, ref);
  } else {
    r.mae_bpm = std::nan("");
  }
  return r;
}

/// Seeded benchmark scenarios: constant HR uniform in [50, 150] BPM. The
/// noisy variant walks and adds PPG noise at 10 dB SNR.
inline std::vector<ringsim::Scenario> hr_suite(std::size_t count, std::uint64_t seed, bool noisy) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> hr(50.0, 150.0);
  std::vector<ringsim::Scenario> out;
  for (std::size_t i = 0; i < count; ++i) {
    auto s = ringsim::Scenario::constant(hr(rng), noisy ? ringsim::Motion::Walk : ringsim::Motion::Rest, seed * 1000 + i, noisy);
    s.id = (noisy ? "noisy-" : "clean-") + std::to_string(i);
    if (noisy) s.snr_db = 10.0;
    out.push_back(std::move(s));
  }
  return out;
}

/// Tab-separated evaluation table, one row per scenario.
inline void write_report(std::ostream& out, std::span<const EvalResult> rows) {
  out << "scenario\tnoise\tsnr_db\tmotion\twindows\twithheld\tmae_bpm\n";
  for (const auto& r : rows) {
    out << r.scenario_id << '\t' << (r.noise ? "on" : "off") << '\t' << std::fixed << std::setprecision(1)
        << r.snr_db << '\t' << r.motion << '\t' << r.windows << '\t' << r.withheld << '\t' << std::setprecision(3)
        << r.mae_bpm << '\n';
  }
  out.unsetf(std::ios::fixed);
}

}  // namespace ringkit::dsp
