#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ringkit/error.hpp"
#include "ringkit/mac.hpp"
#include "ringkit/proto/wire.hpp"
#include "ringkit/ringsim/flash.hpp"
#include "ringkit/ringsim/noise.hpp"
#include "ringkit/ringsim/power.hpp"
#include "ringkit/ringsim/rtc.hpp"
#include "ringkit/ringsim/scenario.hpp"
#include "ringkit/ringsim/synth.hpp"

namespace ringkit::ringsim {

using proto::DeviceMode;
using proto::Opcode;

inline constexpr std::int64_t kTickUs = 10'000;  // scheduler base period; every allowed rate divides 100 Hz
inline constexpr std::int64_t kJitterCapUs = 8;
inline constexpr const char* kFirmwareVersion = "1.4.2";

struct RingOptions {
  std::string name = "tau-ring";
  MacAddress mac = MacAddress::from_index(1);
  std::string firmware = kFirmwareVersion;
  Scenario scenario;
  std::int64_t rtc_offset_us = 0;
  double rtc_drift_ppm = 0.0;
  double battery_capacity_mah = kBatteryCapacityMah;
  double battery_level_mah = kBatteryCapacityMah;
  bool bench_power = false;  // external supply: the battery never drains
  bool jitter = false;       // per-modality acquisition jitter in [0, 8] us
  std::uint64_t flash_capacity = kFlashCapacity;
  proto::SensorConfig config;
};

/// A single (start delay, total duration, segment length) logging task.
struct OfflinePlan {
  std::int64_t armed_at_us = 0;
  std::int64_t start_delay_us = 0;
  std::int64_t total_us = 0;
  std::int64_t segment_us = 0;

  std::int64_t start_at() const noexcept { return armed_at_us + start_delay_us; }
  std::int64_t end_at() const noexcept { return start_at() + total_us; }
  std::size_t segment_count() const noexcept {
    return static_cast<std::size_t>((total_us + segment_us - 1) / segment_us);
  }
};

/// Result of one scheduler tick. acquired_at holds the true acquisition
/// instant per modality (tick edge plus optional jitter).
struct Acquisition {
  proto::SampleRecord record;
  std::array<std::int64_t, 3> acquired_at_us{};
  bool trace_exhausted = false;
};

/// Something the device produced while time advanced. at_us is true time.
struct Emission {
  std::int64_t at_us = 0;
  std::variant<proto::StreamPacket, proto::LogFileEntry, proto::DeviceEvent> what;
};

/// The virtual ring: firmware state machine, polling scheduler, synthetic
/// sensors, flash, battery and RTC, all on a virtual clock in UNIX-epoch
/// microseconds. Not thread-safe; one owner drives it.
class Ring {
 public:
  Ring(RingOptions opts, std::int64_t boot_us)
      : opts_(std::move(opts)),
        boot_us_(boot_us),
        now_us_(boot_us),
        config_(opts_.config),
        flash_(opts_.flash_capacity),
        base_level_mah_(opts_.battery_level_mah),
        epoch_us_(boot_us) {
    opts_.scenario.validate();
    config_.validate();
    rtc_.offset_us = opts_.rtc_offset_us;
    rtc_.drift_ppm = opts_.rtc_drift_ppm;
    rtc_.reference_us = boot_us;
    current_ma_ = supply_current_ma(config_, false);
    powered_ = opts_.bench_power || base_level_mah_ > 0;
  }

  // --- observation ---------------------------------------------------------

  const RingOptions& options() const noexcept { return opts_; }
  const std::string& name() const noexcept { return opts_.name; }
  const MacAddress& mac() const noexcept { return opts_.mac; }
  std::int64_t now_us() const noexcept { return now_us_; }
  std::int64_t boot_us() const noexcept { return boot_us_; }
  DeviceMode mode() const noexcept { return mode_; }
  const proto::SensorConfig& config() const noexcept { return config_; }
  const RtcState& rtc() const noexcept { return rtc_; }
  const FlashStore& flash() const noexcept { return flash_; }
  const std::optional<OfflinePlan>& plan() const noexcept { return plan_; }
  bool powered() const noexcept { return powered_; }
  std::uint8_t fault_flags() const noexcept { return faults_; }
  std::uint32_t next_seq() const noexcept { return seq_; }
  double supply_current() const noexcept { return current_ma_; }

  BatteryState battery() const noexcept {
    return BatteryState{opts_.battery_capacity_mah, level_at(now_us_)};
  }

  /// rtc_read: device epoch at a true instant.
  proto::EpochTime rtc_read(std::int64_t true_us) const { return rtc_.read(true_us); }
  std::int64_t device_time_us() const noexcept { return rtc_.read_us(now_us_); }

  /// Sets sensor fault flags (test and operator hook); faulted sensors stop producing data.
  void inject_fault(std::uint8_t flags) noexcept { faults_ |= flags; }
  void clear_faults() noexcept { faults_ = 0; }
  void set_rtc(const RtcState& rtc) noexcept { rtc_ = rtc; }

  /// Mode/opcode transition table. Offline logging keeps the radio asleep, so
  /// nothing is accepted while armed or logging.
  static bool command_allowed(DeviceMode mode, Opcode op) noexcept {
    switch (mode) {
      case DeviceMode::Idle: return op != Opcode::ReadChunk && op != Opcode::CloseFile;
      case DeviceMode::Streaming:
        return op == Opcode::SetMode || op == Opcode::CalibProbe || op == Opcode::GetStatus ||
               op == Opcode::GetFileList;
      case DeviceMode::OfflineArmed:
      case DeviceMode::Logging: return false;
      case DeviceMode::Downloading:
        return op == Opcode::CalibProbe || op == Opcode::GetStatus || op == Opcode::GetFileList ||
               op == Opcode::OpenFile || op == Opcode::ReadChunk || op == Opcode::CloseFile;
    }
    return false;
  }

  // --- commands -------------------------------------------------------------

  /// Applies one decoded command at the current instant.
  proto::Response apply_command(const proto::Command& c) {
    if (!powered_) throw Error(Errc::BatteryEmpty, opts_.name + " is powered off");
    const auto op = proto::opcode_of(c);
    if (!command_allowed(mode_, op)) return proto::Response::error(op, proto::Status::InvalidTransition);
    try {
      return std::visit([this](const auto& a) { return handle(a); }, c);
    } catch (const Error& e) {
      switch (e.code()) {
        case Errc::BadArgument: return proto::Response::error(op, proto::Status::BadArgument);
        case Errc::NoSuchFile: return proto::Response::error(op, proto::Status::NoSuchFile);
        case Errc::FlashFull: return proto::Response::error(op, proto::Status::FlashFull);
        case Errc::InvalidTransition: return proto::Response::error(op, proto::Status::InvalidTransition);
        default: throw;
      }
    }
  }

  /// Firmware receive path: bytes in, reply bytes out. Frames that fail to
  /// decode are dropped without a reply, as the radio stack would.
  std::optional<proto::Bytes> handle_frame(proto::ByteView bytes) {
    proto::Frame f;
    try {
      f = proto::decode_frame(bytes);
    } catch (const Error&) {
      return std::nullopt;
    }
    if (f.kind != proto::FrameKind::Command) return std::nullopt;
    return proto::encode_frame(proto::encode_response(apply_command(proto::decode_command(f.payload))));
  }

  /// Bulk-channel read of an open file; same rules as ReadChunk.
  proto::Chunk read_chunk(std::uint16_t file_id, std::uint32_t offset, std::size_t length) const {
    if (mode_ != DeviceMode::Downloading || !open_file_ || *open_file_ != file_id)
      throw Error(Errc::NoSuchFile, "file " + std::to_string(file_id) + " is not open");
    const auto* seg = flash_.find(file_id);
    if (!seg) throw Error(Errc::NoSuchFile, "file " + std::to_string(file_id));
    if (length == 0 || length > proto::kChunkDataSize || offset >= seg->payload.size())
      throw Error(Errc::BadArgument, "chunk outside file");
    const auto end = std::min<std::size_t>(seg->payload.size(), offset + length);
    return proto::Chunk{file_id, offset, proto::Bytes(seg->payload.begin() + offset, seg->payload.begin() + static_cast<std::ptrdiff_t>(end))};
  }

  // --- time -----------------------------------------------------------------

  /// Runs the scheduler over [now, now + dt).
  std::vector<Emission> advance(std::chrono::microseconds dt) {
    if (dt.count() <= 0) throw Error(Errc::BadArgument, "advance needs dt > 0");
    std::vector<Emission> out;
    advance_to(now_us_ + dt.count(), out);
    return out;
  }

  void advance_to(std::int64_t end_us, std::vector<Emission>& out) {
    out.insert(out.end(), std::make_move_iterator(pending_.begin()), std::make_move_iterator(pending_.end()));
    pending_.clear();
    if (end_us < now_us_) throw Error(Errc::BadArgument, "time cannot run backwards");

    while (powered_) {
      const auto next = next_event(end_us);
      if (!next) break;
      now_us_ = next->at;
      switch (next->kind) {
        case EventKind::Close: on_close(out); break;
        case EventKind::Stop: on_stop(out); break;
        case EventKind::Death: on_death(out); break;
        case EventKind::StartLogging: on_start_logging(out); break;
        case EventKind::Tick: on_tick(out); break;
      }
    }
    now_us_ = end_us;
  }

  /// Next instant at which the device will emit something (packet, segment
  /// close, stop, logging start, power loss). Ticks are not boundaries.
  std::optional<std::int64_t> next_boundary() const {
    std::optional<std::int64_t> best;
    auto take = [&best](std::int64_t t) {
      if (!best || t < *best) best = t;
    };
    if (!powered_) return std::nullopt;
    if (acq_) {
      take(close_time());
      if (acq_->stop_us) take(*acq_->stop_us);
    }
    if (mode_ == DeviceMode::OfflineArmed && plan_) take(plan_->start_at());
    if (auto e = empty_time()) take(*e);
    return best;
  }

  // --- acquisition ----------------------------------------------------------

  /// Sensors due at scheduler tick k of the current acquisition.
  std::uint8_t due_mask(std::int64_t tick) const noexcept {
    std::uint8_t due = 0;
    for (auto m : proto::kModalities) {
      if (!config_.enabled(m)) continue;
      const std::int64_t every = 100 / config_.rate(m);
      if (tick % every == 0) due |= proto::presence_bit(m);
    }
    return due;
  }

  /// Samples every sensor in `due` at true time t. Co-due sensors share the
  /// record timestamp; with jitter enabled each modality's acquisition instant
  /// is offset by a draw in [0, 8] us.
  Acquisition sample_all(std::int64_t t_us, std::uint8_t due) const {
    Acquisition a;
    auto& r = a.record;
    r.timestamp_us = device_stamp(t_us);
    const std::int64_t rel = t_us - boot_us_;
    const auto& scn = opts_.scenario;
    due &= static_cast<std::uint8_t>(~faults_);

    for (auto m : proto::kModalities) {
      const auto i = static_cast<std::size_t>(m);
      a.acquired_at_us[i] = t_us;
      if (opts_.jitter)
        a.acquired_at_us[i] += static_cast<std::int64_t>(
            noise_uniform(scn.seed, kStreamJitter0 + i, static_cast<std::uint64_t>(rel)) * (kJitterCapUs + 1));
    }
    if (due & proto::presence_bit(Modality::Ppg)) {
      r.ppg = ppg_synth(scn, rel, config_.ppg);
      r.presence |= proto::presence_bit(Modality::Ppg);
    }
    if (due & proto::presence_bit(Modality::Imu)) {
      try {
        r.imu = imu_synth(scn, rel);
        r.presence |= proto::presence_bit(Modality::Imu);
      } catch (const Error& e) {
        if (e.code() != Errc::TraceExhausted) throw;
        a.trace_exhausted = true;
      }
    }
    if (due & proto::presence_bit(Modality::Temp)) {
      r.temp_centi = temp_synth(scn, rel);
      r.presence |= proto::presence_bit(Modality::Temp);
    }
    return a;
  }

 private:
  using Modality = proto::Modality;

  enum class EventKind { Close = 0, Stop = 1, Death = 2, StartLogging = 3, Tick = 4 };
  struct Next {
    std::int64_t at;
    EventKind kind;
  };

  struct Acq {
    bool logging = false;
    std::int64_t start_us = 0;      // true time of tick 0
    std::int64_t start_dev_us = 0;  // device time of tick 0
    std::int64_t tick = 0;          // next tick index
    std::optional<std::int64_t> stop_us;
    std::int64_t window = 0;  // streaming: index of the open 50 ms window
    std::vector<proto::SampleRecord> buffer;
    std::int64_t segment_us = 0;  // logging
    std::int64_t segment = 0;     // logging: index of the open segment
    std::uint32_t segments_written = 0;
  };

  std::int64_t device_stamp(std::int64_t t_us) const noexcept {
    // Records are stamped from the sample clock so cadence stays exact.
    return acq_ ? acq_->start_dev_us + (t_us - acq_->start_us) : rtc_.read_us(t_us);
  }

  std::int64_t close_time() const noexcept {
    if (acq_->logging) {
      const auto t = acq_->start_us + (acq_->segment + 1) * acq_->segment_us;
      return acq_->stop_us ? std::min(t, *acq_->stop_us) : t;
    }
    return acq_->start_us + (acq_->window + 1) * proto::kPacketWindowUs;
  }

  std::optional<Next> next_event(std::int64_t end_us) const {
    std::optional<Next> best;
    auto consider = [&](std::int64_t t, EventKind k, bool inclusive) {
      if (inclusive ? t > end_us : t >= end_us) return;
      if (!best || t < best->at || (t == best->at && k < best->kind)) best = Next{t, k};
    };
    if (acq_) {
      // A logging segment that ends with the plan is sealed by Stop.
      if (!acq_->logging || !acq_->stop_us || close_time() < *acq_->stop_us)
        consider(close_time(), EventKind::Close, true);
      if (acq_->stop_us) consider(*acq_->stop_us, EventKind::Stop, true);
      consider(acq_->start_us + acq_->tick * kTickUs, EventKind::Tick, false);
    }
    if (mode_ == DeviceMode::OfflineArmed && plan_) consider(plan_->start_at(), EventKind::StartLogging, true);
    if (auto e = empty_time()) consider(*e, EventKind::Death, true);
    return best;
  }

  // Battery: consumption is folded at every power-state change so the level at
  // any instant is independent of how time was stepped.
  double level_at(std::int64_t t_us) const noexcept {
    if (opts_.bench_power) return base_level_mah_;
    return std::max(0.0, base_level_mah_ - current_ma_ * static_cast<double>(t_us - epoch_us_) / kMicrosPerHour);
  }
  std::optional<std::int64_t> empty_time() const noexcept {
    if (opts_.bench_power || current_ma_ <= 0) return std::nullopt;
    return epoch_us_ + static_cast<std::int64_t>(std::ceil(base_level_mah_ / current_ma_ * kMicrosPerHour));
  }
  template <typename F>
  void power_change(F&& change) {
    base_level_mah_ = level_at(now_us_);
    epoch_us_ = now_us_;
    change();
    current_ma_ = supply_current_ma(config_, acq_.has_value());
  }

  void emit_event(std::vector<Emission>& out, proto::EventCode code, std::uint32_t value) {
    out.push_back(Emission{now_us_, proto::DeviceEvent{code, rtc_.read_us(now_us_), value}});
  }

  void start_acquisition(bool logging, std::optional<std::int64_t> stop_us) {
    power_change([&] {
      Acq a;
      a.logging = logging;
      a.start_us = now_us_;
      a.start_dev_us = rtc_.read_us(now_us_);
      a.stop_us = stop_us;
      acq_ = std::move(a);
    });
  }

  void end_acquisition(DeviceMode next) {
    power_change([&] {
      acq_.reset();
      mode_ = next;
    });
  }

  void on_tick(std::vector<Emission>& out) {
    const auto due = due_mask(acq_->tick);
    const auto t = now_us_;
    ++acq_->tick;
    if (due == 0) return;
    auto a = sample_all(t, due);
    if (a.trace_exhausted && !(faults_ & proto::kFaultImu)) {
      faults_ |= proto::kFaultImu;
      emit_event(out, proto::EventCode::SensorFault, faults_);
    }
    if (a.record.presence == 0) return;
    if (!acq_->logging) {
      acq_->buffer.push_back(a.record);
      return;
    }
    try {
      flash_.write(a.record);
    } catch (const Error& e) {
      if (e.code() != Errc::FlashFull) throw;
      std::uint32_t last_id = 0;
      if (auto entry = flash_.close_segment()) {
        out.push_back(Emission{now_us_, *entry});
        last_id = entry->file_id;
      }
      emit_event(out, proto::EventCode::FlashFull, last_id);
      plan_.reset();
      end_acquisition(DeviceMode::Idle);
    }
  }

  void on_close(std::vector<Emission>& out) {
    if (!acq_->logging) {
      const auto base = acq_->start_dev_us + acq_->window * proto::kPacketWindowUs;
      out.push_back(Emission{now_us_, proto::pack_samples(std::move(acq_->buffer), seq_++, base)});
      acq_->buffer.clear();
      ++acq_->window;
      return;
    }
    if (auto entry = flash_.close_segment()) {
      ++acq_->segments_written;
      out.push_back(Emission{now_us_, *entry});
      emit_event(out, proto::EventCode::SegmentClosed, entry->file_id);
    }
    ++acq_->segment;
    if (!acq_->stop_us || now_us_ < *acq_->stop_us) open_segment_at(now_us_);
  }

  void on_stop(std::vector<Emission>& out) {
    if (acq_->logging) {
      if (auto entry = flash_.close_segment()) {
        ++acq_->segments_written;
        out.push_back(Emission{now_us_, *entry});
      }
      emit_event(out, proto::EventCode::LoggingComplete, acq_->segments_written);
      plan_.reset();
    } else {
      emit_event(out, proto::EventCode::StreamStopped, seq_);
    }
    end_acquisition(DeviceMode::Idle);
  }

  void on_death(std::vector<Emission>& out) {
    if (acq_ && acq_->logging) {
      if (auto entry = flash_.close_segment()) out.push_back(Emission{now_us_, *entry});
    }
    emit_event(out, proto::EventCode::BatteryEmpty, 0);
    plan_.reset();
    open_file_.reset();
    end_acquisition(DeviceMode::Idle);
    base_level_mah_ = 0;
    powered_ = false;
  }

  void on_start_logging(std::vector<Emission>& out) {
    const auto plan = *plan_;
    if (!flash_.can_fit_record()) {
      emit_event(out, proto::EventCode::FlashFull, 0);
      plan_.reset();
      power_change([&] { mode_ = DeviceMode::Idle; });
      return;
    }
    start_acquisition(true, now_us_ + plan.total_us);
    acq_->segment_us = plan.segment_us;
    mode_ = DeviceMode::Logging;
    open_segment_at(now_us_);
  }

  void open_segment_at(std::int64_t t_us) {
    const auto dev = device_stamp(t_us);
    flash_.open_segment(static_cast<std::uint32_t>(dev / 1'000'000));
  }

  void stop_streaming() {
    pending_.push_back(Emission{now_us_, proto::DeviceEvent{proto::EventCode::StreamStopped, rtc_.read_us(now_us_), seq_}});
    end_acquisition(DeviceMode::Idle);
  }

  // --- command handlers -----------------------------------------------------

  proto::Response handle(const proto::cmd::SetMode& a) {
    if (a.mode == DeviceMode::Idle) {
      if (mode_ == DeviceMode::Streaming) stop_streaming();
      return proto::Response::ack(Opcode::SetMode);
    }
    if (a.mode != DeviceMode::Streaming) throw Error(Errc::BadArgument, "SetMode target must be Idle or Streaming");
    if (mode_ != DeviceMode::Idle) throw Error(Errc::InvalidTransition, "already streaming");
    if (a.duration_ms % 50 != 0) throw Error(Errc::BadArgument, "duration must be a whole number of 50 ms windows");
    seq_ = 0;
    std::optional<std::int64_t> stop;
    if (a.duration_ms > 0) stop = now_us_ + static_cast<std::int64_t>(a.duration_ms) * 1000;
    start_acquisition(false, stop);
    mode_ = DeviceMode::Streaming;
    return proto::Response::ack(Opcode::SetMode);
  }

  proto::Response handle(const proto::cmd::SensorEnable& a) {
    config_.set_enabled(a.modality, a.enabled);
    return proto::Response::ack(Opcode::SensorEnable);
  }

  proto::Response handle(const proto::cmd::SetRate& a) {
    config_.set_rate(a.modality, a.rate_hz);
    return proto::Response::ack(Opcode::SetRate);
  }

  proto::Response handle(const proto::cmd::SetLed& a) {
    if (a.pulse_width_us < proto::kMinPulseWidthUs || a.pulse_width_us > proto::kMaxPulseWidthUs)
      throw Error(Errc::BadArgument, "pulse width out of range");
    config_.ppg.led_code = a.led_code;
    config_.ppg.pulse_width_us = a.pulse_width_us;
    return proto::Response::ack(Opcode::SetLed);
  }

  proto::Response handle(const proto::cmd::CalibProbe&) {
    return proto::Response{Opcode::CalibProbe, proto::Status::Ok, rtc_.read(now_us_)};
  }

  proto::Response handle(const proto::cmd::CalibTrim& a) {
    rtc_.trim(now_us_, a.epoch.to_us());
    return proto::Response{Opcode::CalibTrim, proto::Status::Ok, rtc_.read(now_us_)};
  }

  proto::Response handle(const proto::cmd::ScheduleOffline& a) {
    if (a.total_s == 0 || a.segment_s == 0 || a.segment_s > a.total_s)
      throw Error(Errc::BadArgument, "need 0 < segment <= total");
    if (!flash_.can_fit_record()) throw Error(Errc::FlashFull, "no free flash");
    plan_ = OfflinePlan{now_us_, static_cast<std::int64_t>(a.start_delay_s) * 1'000'000,
                        static_cast<std::int64_t>(a.total_s) * 1'000'000,
                        static_cast<std::int64_t>(a.segment_s) * 1'000'000};
    mode_ = DeviceMode::OfflineArmed;
    return proto::Response::ack(Opcode::ScheduleOffline);
  }

  proto::Response handle(const proto::cmd::GetStatus&) {
    proto::StatusReport s;
    s.mode = mode_;
    s.config = config_;
    const auto b = battery();
    s.battery_pct = b.percent();
    s.battery_uah = static_cast<std::uint32_t>(std::lround(b.level_mah * 1000.0));
    s.flash_capacity = flash_.capacity();
    s.flash_used = flash_.used();
    s.fault_flags = faults_;
    s.file_count = static_cast<std::uint16_t>(flash_.segments().size());
    s.device_time_us = rtc_.read_us(now_us_);
    s.firmware = opts_.firmware;
    return proto::Response{Opcode::GetStatus, proto::Status::Ok, std::move(s)};
  }

  proto::Response handle(const proto::cmd::GetFileList& a) {
    const auto& segs = flash_.segments();
    if (a.first_index > segs.size()) throw Error(Errc::BadArgument, "file list index past end");
    proto::FileListPage page;
    page.total = static_cast<std::uint16_t>(segs.size());
    page.first_index = a.first_index;
    const auto last = std::min(segs.size(), static_cast<std::size_t>(a.first_index) + proto::kMaxEntriesPerPage);
    for (std::size_t i = a.first_index; i < last; ++i) page.entries.push_back(segs[i].entry);
    return proto::Response{Opcode::GetFileList, proto::Status::Ok, std::move(page)};
  }

  proto::Response handle(const proto::cmd::OpenFile& a) {
    const auto* seg = flash_.find(a.file_id);
    if (!seg) throw Error(Errc::NoSuchFile, "file " + std::to_string(a.file_id));
    open_file_ = a.file_id;
    mode_ = DeviceMode::Downloading;
    return proto::Response{Opcode::OpenFile, proto::Status::Ok, proto::FileInfo{seg->entry}};
  }

  proto::Response handle(const proto::cmd::ReadChunk& a) {
    return proto::Response{Opcode::ReadChunk, proto::Status::Ok, read_chunk(a.file_id, a.offset, a.length)};
  }

  proto::Response handle(const proto::cmd::CloseFile& a) {
    if (!open_file_ || *open_file_ != a.file_id) throw Error(Errc::NoSuchFile, "file is not open");
    open_file_.reset();
    mode_ = DeviceMode::Idle;
    return proto::Response::ack(Opcode::CloseFile);
  }

  RingOptions opts_;
  std::int64_t boot_us_;
  std::int64_t now_us_;
  DeviceMode mode_ = DeviceMode::Idle;
  proto::SensorConfig config_;
  RtcState rtc_;
  FlashStore flash_;
  std::optional<OfflinePlan> plan_;
  std::optional<Acq> acq_;
  std::optional<std::uint16_t> open_file_;
  std::vector<Emission> pending_;
  std::uint32_t seq_ = 0;
  std::uint8_t faults_ = 0;
  bool powered_ = true;

  double base_level_mah_;
  std::int64_t epoch_us_;
  double current_ma_ = 0;
};

}  // namespace ringkit::ringsim
