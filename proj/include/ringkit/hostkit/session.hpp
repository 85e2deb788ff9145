#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ringkit/dsp/activity.hpp"
#include "ringkit/dsp/heart_rate.hpp"
#include "ringkit/hostkit/calibration.hpp"
#include "ringkit/hostkit/render.hpp"
#include "ringkit/proto/response.hpp"
#include "ringkit/transport/environment.hpp"

namespace ringkit::hostkit {

struct Annotation {
  std::int64_t device_time_us = 0;
  std::string tag;
  bool operator==(const Annotation&) const = default;
};

/// Inclusive range of sequence numbers that never arrived.
struct SeqGap {
  std::uint32_t first = 0;
  std::uint32_t last = 0;
  bool operator==(const SeqGap&) const = default;
};

struct HrUpdate {
  std::int64_t window_start_us = 0;
  std::int64_t window_end_us = 0;
  std::optional<double> bpm;  // empty when withheld
  double confidence = 0;
  std::size_t activity_count = 0;
};

struct LiveMetrics {
  std::optional<double> hr_bpm;
  double hr_confidence = 0;
  std::size_t activity_count = 0;
  std::int64_t updated_us = 0;
};

/// Everything a session records; also what export/import round-trips.
struct SessionData {
  std::string session_id;
  MacAddress mac;
  proto::SensorConfig config;
  std::string source = "online";  // or "offline"
  std::int64_t start_us = 0;      // device-time estimate
  std::int64_t end_us = 0;
  std::vector<proto::SampleRecord> samples;
  std::vector<Annotation> annotations;
  std::vector<SeqGap> gaps;
  std::uint64_t packets = 0;
  std::vector<proto::LogFileEntry> files;  // offline origin
  std::optional<CalibrationReport> calibration;

  std::size_t count(proto::Modality m) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [m](const auto& r) { return r.has(m); }));
  }

  /// Index of the stored record nearest to device time t (ties go earlier).
  std::optional<std::size_t> nearest_sample_index(std::int64_t t_us) const {
    if (samples.empty()) return std::nullopt;
    auto it = std::lower_bound(samples.begin(), samples.end(), t_us,
                               [](const proto::SampleRecord& r, std::int64_t t) { return r.timestamp_us < t; });
    if (it == samples.end()) return samples.size() - 1;
    const auto i = static_cast<std::size_t>(it - samples.begin());
    if (i > 0 && t_us - samples[i - 1].timestamp_us <= it->timestamp_us - t_us) return i - 1;
    return i;
  }
};

struct SessionOptions {
  std::uint32_t duration_ms = 0;  // 0: until stop()
  std::optional<CalibrationReport> calibration;
  double hr_window_s = dsp::kHrWindowS;
  double hr_hop_s = 1.0;
};

class Session;
using SessionPtr = std::shared_ptr<Session>;

/// A live streaming session. Packet handling runs on the environment's loop;
/// observers and accessors may be used from other threads.
class Session : public std::enable_shared_from_this<Session> {
 public:
  using RenderObserver = std::function<void(const RenderFrame&)>;
  using HrObserver = std::function<void(const HrUpdate&)>;
  using EventObserver = std::function<void(const proto::DeviceEvent&)>;

  static SessionPtr start(transport::Link& link, const proto::SensorConfig& config, SessionOptions opts = {});

  void on_render(RenderObserver f) {
    std::lock_guard lk(obs_mu_);
    render_obs_.push_back(std::move(f));
  }
  void on_hr(HrObserver f) {
    std::lock_guard lk(obs_mu_);
    hr_obs_.push_back(std::move(f));
  }
  void on_event(EventObserver f) {
    std::lock_guard lk(obs_mu_);
    event_obs_.push_back(std::move(f));
  }

  /// Current device-time estimate: host clock plus the calibrated offset.
  std::int64_t device_now() const { return link_.env().now() + offset_us_; }

  Annotation annotate(std::string tag) {
    std::lock_guard lk(mu_);
    if (!active_) throw Error(Errc::InvalidTransition, "session " + data_.session_id + " is not active");
    if (tag.empty()) throw Error(Errc::BadArgument, "empty annotation tag");
    Annotation a{std::max(device_now(), data_.start_us), std::move(tag)};
    data_.annotations.push_back(a);
    return a;
  }

  /// Stops the device stream, drains in-flight notifications and seals the session.
  void stop() {
    if (!active()) return;
    auto& env = link_.env();
    if (link_.connected()) {
      link_.request(proto::cmd::SetMode{proto::DeviceMode::Idle, 0}).expect_ok();
      const auto& d = link_.params().down;
      env.run_until(env.now() + d.mean_us + d.jitter_us + 1);
      link_.unsubscribe(token_);
    }
    std::vector<RenderFrame> frames;
    {
      std::lock_guard lk(mu_);
      active_ = false;
      data_.end_us = std::max(data_.start_us, device_now());
      if (data_.annotations.size() && data_.annotations.back().device_time_us > data_.end_us)
        data_.end_us = data_.annotations.back().device_time_us;
      if (last_window_end_) frames = render_.flush_until(*last_window_end_);
    }
    publish(frames, {});
  }

  bool active() const {
    std::lock_guard lk(mu_);
    return active_;
  }
  bool device_stopped() const {
    std::lock_guard lk(mu_);
    return device_stopped_;
  }

  SessionData snapshot() const {
    std::lock_guard lk(mu_);
    return data_;
  }
  LiveMetrics live() const {
    std::lock_guard lk(mu_);
    return live_;
  }
  std::string id() const {
    std::lock_guard lk(mu_);
    return data_.session_id;
  }
  std::uint64_t render_frames() const {
    std::lock_guard lk(mu_);
    return render_.frames_emitted();
  }

 private:
  Session(transport::Link link, SessionData data, SessionOptions opts)
      : link_(std::move(link)), data_(std::move(data)), opts_(std::move(opts)), render_(0) {
    offset_us_ = opts_.calibration ? opts_.calibration->final_offset_us : 0;
  }

  void on_notification(const transport::Notification& n) {
    std::vector<RenderFrame> frames;
    std::vector<HrUpdate> updates;
    if (const auto* ev = std::get_if<proto::DeviceEvent>(&n.what)) {
      {
        std::lock_guard lk(mu_);
        if (ev->code == proto::EventCode::StreamStopped) device_stopped_ = true;
      }
      std::vector<EventObserver> obs;
      {
        std::lock_guard lk(obs_mu_);
        obs = event_obs_;
      }
      for (auto& f : obs) f(*ev);
      return;
    }
    const auto& pk = std::get<proto::StreamPacket>(n.what);
    {
      std::lock_guard lk(mu_);
      if (!active_) return;
      if (pk.seq > expected_seq_) data_.gaps.push_back({expected_seq_, pk.seq - 1});
      if (pk.seq >= expected_seq_) expected_seq_ = pk.seq + 1;
      ++data_.packets;
      if (!render_started_) {
        render_ = RenderDecimator(pk.base_timestamp_us);
        render_started_ = true;
      }
      for (const auto& r : pk.records) {
        data_.samples.push_back(r);
        for (auto& f : render_.push(r)) frames.push_back(std::move(f));
        feed_dsp(r, updates);
      }
      last_window_end_ = pk.base_timestamp_us + proto::kPacketWindowUs;
      for (auto& f : render_.flush_until(*last_window_end_)) frames.push_back(std::move(f));
    }
    publish(frames, updates);
  }

  void feed_dsp(const proto::SampleRecord& r, std::vector<HrUpdate>& updates) {
    const auto window = static_cast<std::int64_t>(opts_.hr_window_s * 1e6);
    const auto hop = static_cast<std::int64_t>(opts_.hr_hop_s * 1e6);
    if (!next_eval_us_) next_eval_us_ = r.timestamp_us + window;
    while (r.timestamp_us >= *next_eval_us_) {
      updates.push_back(evaluate(*next_eval_us_ - window, *next_eval_us_));
      *next_eval_us_ += hop;
    }
    if (r.has(proto::Modality::Ppg)) ppg_.push_back({r.timestamp_us, static_cast<double>(r.ppg[0])});
    if (r.has(proto::Modality::Imu))
      accel_.push_back({r.timestamp_us,
                        {r.imu[0] / proto::kAccelLsbPerG, r.imu[1] / proto::kAccelLsbPerG, r.imu[2] / proto::kAccelLsbPerG}});
    const auto horizon = r.timestamp_us - window;
    while (!ppg_.empty() && ppg_.front().t < horizon) ppg_.pop_front();
    while (!accel_.empty() && accel_.front().t < horizon) accel_.pop_front();
  }

  HrUpdate evaluate(std::int64_t from, std::int64_t to) {
    HrUpdate u{from, to, std::nullopt, 0, 0};
    std::vector<double> ppg;
    for (const auto& s : ppg_)
      if (s.t >= from && s.t < to) ppg.push_back(s.v);
    std::vector<std::array<double, 3>> acc;
    for (const auto& s : accel_)
      if (s.t >= from && s.t < to) acc.push_back(s.v);
    const double span_s = static_cast<double>(to - from) * 1e-6;
    // Too many lost packets in the window: withhold rather than guess.
    const double ppg_rate = data_.config.ppg.rate_hz;
    if (data_.config.ppg.enabled && static_cast<double>(ppg.size()) >= 0.9 * ppg_rate * span_s) {
      if (auto e = dsp::estimate_hr(ppg, ppg_rate, from)) {
        u.bpm = e->bpm;
        u.confidence = e->confidence;
      }
    }
    const double imu_rate = data_.config.imu.rate_hz;
    if (data_.config.imu.enabled && acc.size() >= 3) u.activity_count = dsp::activity_counts(acc, imu_rate);
    live_ = LiveMetrics{u.bpm, u.confidence, u.activity_count, to};
    return u;
  }

  void publish(const std::vector<RenderFrame>& frames, const std::vector<HrUpdate>& updates) {
    if (frames.empty() && updates.empty()) return;
    std::vector<RenderObserver> ro;
    std::vector<HrObserver> ho;
    {
      std::lock_guard lk(obs_mu_);
      ro = render_obs_;
      ho = hr_obs_;
    }
    for (const auto& f : frames)
      for (auto& o : ro) o(f);
    for (const auto& u : updates)
      for (auto& o : ho) o(u);
  }

  struct PpgSample {
    std::int64_t t;
    double v;
  };
  struct AccelSample {
    std::int64_t t;
    std::array<double, 3> v;
  };

  transport::Link link_;
  mutable std::mutex mu_;
  SessionData data_;
  SessionOptions opts_;
  std::int64_t offset_us_ = 0;
  int token_ = -1;
  bool active_ = true;
  bool device_stopped_ = false;
  std::uint32_t expected_seq_ = 0;
  RenderDecimator render_;
  bool render_started_ = false;
  std::optional<std::int64_t> last_window_end_;
  std::optional<std::int64_t> next_eval_us_;
  std::deque<PpgSample> ppg_;
  std::deque<AccelSample> accel_;
  LiveMetrics live_;

  std::mutex obs_mu_;
  std::vector<RenderObserver> render_obs_;
  std::vector<HrObserver> hr_obs_;
  std::vector<EventObserver> event_obs_;
};

/// Pushes the full sensor configuration to an idle device.
inline void push_config(transport::Link& link, const proto::SensorConfig& c) {
  c.validate();
  for (auto m : proto::kModalities) {
    link.request(proto::cmd::SetRate{m, c.rate(m)}).expect_ok();
    link.request(proto::cmd::SensorEnable{m, c.enabled(m)}).expect_ok();
  }
  link.request(proto::cmd::SetLed{c.ppg.led_code, c.ppg.pulse_width_us}).expect_ok();
}

inline std::string make_session_id(const MacAddress& mac, std::int64_t device_us) {
  auto m = mac.to_string();
  std::erase(m, ':');
  return m + "-" + std::to_string(device_us / 1'000'000);
}

inline SessionPtr Session::start(transport::Link& link, const proto::SensorConfig& config, SessionOptions opts) {
  push_config(link, config);
  SessionData d;
  d.mac = link.mac();
  d.config = config;
  const auto offset = opts.calibration ? opts.calibration->final_offset_us : 0;
  d.calibration = opts.calibration;
  d.start_us = link.env().now() + offset;
  d.session_id = make_session_id(d.mac, d.start_us);
  SessionPtr s(new Session(link, std::move(d), std::move(opts)));
  std::weak_ptr<Session> weak = s;
  s->token_ = link.subscribe([weak](const transport::Notification& n) {
    if (auto p = weak.lock()) p->on_notification(n);
  });
  try {
    link.request(proto::cmd::SetMode{proto::DeviceMode::Streaming, s->opts_.duration_ms}).expect_ok();
  } catch (...) {
    link.unsubscribe(s->token_);
    throw;
  }
  return s;
}

/// start_session: configure, enter Streaming and subscribe.
inline SessionPtr start_session(transport::Link& link, const proto::SensorConfig& config, SessionOptions opts = {}) {
  return Session::start(link, config, std::move(opts));
}

}  // namespace ringkit::hostkit
