#pragma once

#include <cmath>
#include <cstdint>

#include "ringkit/proto/command.hpp"

namespace ringkit::ringsim {

/// Device real-time clock against true time:
///   device(t) = t + offset_us + drift_ppm * 1e-6 * (t - reference_us)
struct RtcState {
  std::int64_t offset_us = 0;
  double drift_ppm = 0.0;
  std::int64_t reference_us = 0;

  std::int64_t read_us(std::int64_t true_us) const noexcept {
    return true_us + offset_us +
           static_cast<std::int64_t>(std::llround(drift_ppm * 1e-6 * static_cast<double>(true_us - reference_us)));
  }

  proto::EpochTime read(std::int64_t true_us) const { return proto::EpochTime::from_us(read_us(true_us)); }

  /// Sets the clock so that it reads `epoch_us` at true time `true_us`.
  void trim(std::int64_t true_us, std::int64_t epoch_us) noexcept {
    offset_us = epoch_us - true_us;
    reference_us = true_us;
  }

  /// Current error against true time.
  std::int64_t error_us(std::int64_t true_us) const noexcept { return read_us(true_us) - true_us; }
};

}  // namespace ringkit::ringsim
