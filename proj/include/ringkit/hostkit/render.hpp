#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ringkit/proto/sample.hpp"

namespace ringkit::hostkit {

inline constexpr int kRenderFps = 30;

struct ChannelSpec {
  std::string_view id;
  std::string_view unit;
};

inline constexpr std::array<ChannelSpec, 12> kRenderChannels{{
    {"ppg0", "counts"}, {"ppg1", "counts"}, {"ppg2", "counts"},
    {"ax", "g"},        {"ay", "g"},        {"az", "g"},
    {"gx", "dps"},      {"gy", "dps"},      {"gz", "dps"},
    {"temp0", "degC"},  {"temp1", "degC"},  {"temp2", "degC"},
}};

struct ChannelEnvelope {
  std::string id;
  std::string unit;
  double min = 0;
  double max = 0;
  std::uint32_t samples = 0;
};

/// One display frame: per-channel min/max over [t_start, t_end) in device
/// time. A frame with no channels is a heartbeat.
struct RenderFrame {
  std::uint64_t index = 0;
  std::int64_t t_start_us = 0;
  std::int64_t t_end_us = 0;
  std::vector<ChannelEnvelope> channels;
};

/// Physical channel values of a record, nullopt where the modality is absent.
inline std::array<std::optional<double>, 12> channel_values(const proto::SampleRecord& r) {
  std::array<std::optional<double>, 12> v{};
  if (r.has(proto::Modality::Ppg))
    for (std::size_t i = 0; i < 3; ++i) v[i] = static_cast<double>(r.ppg[i]);
  if (r.has(proto::Modality::Imu)) {
    for (std::size_t i = 0; i < 3; ++i) v[3 + i] = r.imu[i] / proto::kAccelLsbPerG;
    for (std::size_t i = 0; i < 3; ++i) v[6 + i] = r.imu[3 + i] / proto::kGyroLsbPerDps;
  }
  if (r.has(proto::Modality::Temp))
    for (std::size_t i = 0; i < 3; ++i) v[9 + i] = r.temp_centi[i] / 100.0;
  return v;
}

/// Min/max decimation onto a fixed 30 Hz grid anchored at `origin_us`,
/// independent of the sensor rates. Records must arrive in time order.
class RenderDecimator {
 public:
  explicit RenderDecimator(std::int64_t origin_us, int fps = kRenderFps) : origin_(origin_us), fps_(fps) {}

  std::int64_t frame_start(std::uint64_t k) const noexcept {
    return origin_ + static_cast<std::int64_t>(k * 1'000'000ULL / static_cast<std::uint64_t>(fps_));
  }

  /// Adds one record; returns frames completed by it.
  std::vector<RenderFrame> push(const proto::SampleRecord& r) {
    std::vector<RenderFrame> out;
    if (r.timestamp_us < frame_start(k_)) return out;  // before the grid origin
    close_until(r.timestamp_us, out);
    const auto v = channel_values(r);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i]) continue;
      auto& a = acc_[i];
      if (a.samples == 0) {
        a.min = a.max = *v[i];
      } else {
        a.min = std::min(a.min, *v[i]);
        a.max = std::max(a.max, *v[i]);
      }
      ++a.samples;
    }
    return out;
  }

  /// Emits every frame whose end is at or before `t_us`, heartbeats included.
  std::vector<RenderFrame> flush_until(std::int64_t t_us) {
    std::vector<RenderFrame> out;
    close_until(t_us, out);
    return out;
  }

  std::uint64_t frames_emitted() const noexcept { return k_; }

 private:
  void close_until(std::int64_t t_us, std::vector<RenderFrame>& out) {
    while (frame_start(k_ + 1) <= t_us) {
      RenderFrame f;
      f.index = k_;
      f.t_start_us = frame_start(k_);
      f.t_end_us = frame_start(k_ + 1);
      for (std::size_t i = 0; i < acc_.size(); ++i) {
        if (acc_[i].samples == 0) continue;
        auto e = acc_[i];
        e.id = std::string(kRenderChannels[i].id);
        e.unit = std::string(kRenderChannels[i].unit);
        f.channels.push_back(std::move(e));
      }
      acc_ = {};
      out.push_back(std::move(f));
      ++k_;
    }
  }

  std::int64_t origin_;
  int fps_;
  std::uint64_t k_ = 0;
  std::array<ChannelEnvelope, 12> acc_{};
};

}  // namespace ringkit::hostkit
