#pragma once

#include <cstdint>
#include <cstdlib>
#include <vector>

#include "ringkit/proto/response.hpp"
#include "ringkit/transport/environment.hpp"

namespace ringkit::hostkit {

inline constexpr std::int64_t kCalibThresholdUs = 1'000'000;
inline constexpr int kMaxCalibIterations = 8;

struct CalibIteration {
  std::int64_t host_send_us = 0;
  std::int64_t device_time_us = 0;
  std::int64_t rtt_us = 0;
  std::int64_t offset_estimate_us = 0;  // device minus host at the probe's midpoint
  bool trimmed = false;
};

struct CalibrationReport {
  std::vector<CalibIteration> iterations;
  std::int64_t final_offset_us = 0;
  bool converged = false;
};

/// Half-RTT offset estimate for one probe exchange.
constexpr std::int64_t half_rtt_offset(std::int64_t host_send, std::int64_t host_recv, std::int64_t device) noexcept {
  return device - (host_send + (host_recv - host_send) / 2);
}

/// Probe, trim while |offset| > 1 s, re-probe. The host clock is the
/// environment's clock. Throws NotConverged after eight iterations (the
/// report is still reachable through `out` when given).
inline CalibrationReport calibrate(transport::Link& link, CalibrationReport* out = nullptr) {
  auto& env = link.env();
  CalibrationReport rep;
  for (int i = 0; i < kMaxCalibIterations; ++i) {
    CalibIteration it;
    it.host_send_us = env.now();
    const auto r = link.request(proto::cmd::CalibProbe{proto::EpochTime::from_us(it.host_send_us)});
    r.expect_ok();
    const auto host_recv = env.now();
    it.device_time_us = r.get<proto::EpochTime>().to_us();
    it.rtt_us = host_recv - it.host_send_us;
    it.offset_estimate_us = half_rtt_offset(it.host_send_us, host_recv, it.device_time_us);
    rep.final_offset_us = it.offset_estimate_us;
    if (std::llabs(it.offset_estimate_us) <= kCalibThresholdUs) {
      rep.iterations.push_back(it);
      rep.converged = true;
      break;
    }
    // Trim to our best guess of the instant the device will receive the command.
    const auto target = env.now() + it.rtt_us / 2;
    link.request(proto::cmd::CalibTrim{proto::EpochTime::from_us(target)}).expect_ok();
    it.trimmed = true;
    rep.iterations.push_back(it);
  }
  if (out) *out = rep;
  if (!rep.converged)
    throw Error(Errc::NotConverged, "offset still " + std::to_string(rep.final_offset_us) + " us after " +
                                        std::to_string(kMaxCalibIterations) + " iterations");
  return rep;
}

}  // namespace ringkit::hostkit
