#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "ringkit/error.hpp"
#include "ringkit/proto/bytes.hpp"
#include "ringkit/proto/config.hpp"
#include "ringkit/proto/frame.hpp"
#include "ringkit/proto/logfile.hpp"

namespace ringkit::proto {

enum class Opcode : std::uint8_t {
  SetMode = 0x10,
  SensorEnable = 0x11,
  SetRate = 0x12,
  SetLed = 0x13,
  CalibProbe = 0x14,
  CalibTrim = 0x15,
  ScheduleOffline = 0x16,
  GetStatus = 0x17,
  GetFileList = 0x18,
  OpenFile = 0x19,
  ReadChunk = 0x1A,
  CloseFile = 0x1B,
};

inline constexpr std::array<Opcode, 12> kOpcodes{
    Opcode::SetMode,   Opcode::SensorEnable,    Opcode::SetRate,   Opcode::SetLed,
    Opcode::CalibProbe, Opcode::CalibTrim,      Opcode::ScheduleOffline, Opcode::GetStatus,
    Opcode::GetFileList, Opcode::OpenFile,      Opcode::ReadChunk, Opcode::CloseFile};

constexpr std::string_view to_string(Opcode op) noexcept {
  switch (op) {
    case Opcode::SetMode: return "SetMode";
    case Opcode::SensorEnable: return "SensorEnable";
    case Opcode::SetRate: return "SetRate";
    case Opcode::SetLed: return "SetLed";
    case Opcode::CalibProbe: return "CalibProbe";
    case Opcode::CalibTrim: return "CalibTrim";
    case Opcode::ScheduleOffline: return "ScheduleOffline";
    case Opcode::GetStatus: return "GetStatus";
    case Opcode::GetFileList: return "GetFileList";
    case Opcode::OpenFile: return "OpenFile";
    case Opcode::ReadChunk: return "ReadChunk";
    case Opcode::CloseFile: return "CloseFile";
  }
  return "?";
}

enum class DeviceMode : std::uint8_t { Idle = 0, Streaming = 1, OfflineArmed = 2, Logging = 3, Downloading = 4 };

inline constexpr std::array<DeviceMode, 5> kDeviceModes{DeviceMode::Idle, DeviceMode::Streaming,
                                                        DeviceMode::OfflineArmed, DeviceMode::Logging,
                                                        DeviceMode::Downloading};

constexpr std::string_view to_string(DeviceMode m) noexcept {
  switch (m) {
    case DeviceMode::Idle: return "Idle";
    case DeviceMode::Streaming: return "Streaming";
    case DeviceMode::OfflineArmed: return "OfflineArmed";
    case DeviceMode::Logging: return "Logging";
    case DeviceMode::Downloading: return "Downloading";
  }
  return "?";
}

/// Wall-clock instant as carried by calibration commands: 32-bit UNIX
/// seconds plus a 32-bit microsecond part.
struct EpochTime {
  std::uint32_t seconds = 0;
  std::uint32_t micros = 0;

  static EpochTime from_us(std::int64_t us) {
    if (us < 0 || us / 1'000'000 > 0xFFFFFFFFLL) throw Error(Errc::BadArgument, "epoch outside 32-bit seconds");
    return {static_cast<std::uint32_t>(us / 1'000'000), static_cast<std::uint32_t>(us % 1'000'000)};
  }
  std::int64_t to_us() const noexcept { return static_cast<std::int64_t>(seconds) * 1'000'000 + micros; }
  bool operator==(const EpochTime&) const = default;
};

namespace cmd {

// SetMode only accepts Idle or Streaming; offline logging is entered through
// ScheduleOffline and downloads through OpenFile. A non-zero duration makes
// the device stop streaming on its own after that many milliseconds.
struct SetMode {
  DeviceMode mode = DeviceMode::Idle;
  std::uint32_t duration_ms = 0;
  bool operator==(const SetMode&) const = default;
};
struct SensorEnable {
  Modality modality = Modality::Ppg;
  bool enabled = true;
  bool operator==(const SensorEnable&) const = default;
};
struct SetRate {
  Modality modality = Modality::Ppg;
  std::uint16_t rate_hz = 100;
  bool operator==(const SetRate&) const = default;
};
struct SetLed {
  std::array<std::uint8_t, 3> led_code{128, 128, 128};
  std::uint16_t pulse_width_us = 100;
  bool operator==(const SetLed&) const = default;
};
struct CalibProbe {
  EpochTime host_time;
  bool operator==(const CalibProbe&) const = default;
};
struct CalibTrim {
  EpochTime epoch;
  bool operator==(const CalibTrim&) const = default;
};
struct ScheduleOffline {
  std::uint32_t start_delay_s = 0;
  std::uint32_t total_s = 0;
  std::uint32_t segment_s = 0;
  bool operator==(const ScheduleOffline&) const = default;
};
struct GetStatus {
  bool operator==(const GetStatus&) const = default;
};
struct GetFileList {
  std::uint16_t first_index = 0;
  bool operator==(const GetFileList&) const = default;
};
struct OpenFile {
  std::uint16_t file_id = 0;
  bool operator==(const OpenFile&) const = default;
};
struct ReadChunk {
  std::uint16_t file_id = 0;
  std::uint32_t offset = 0;
  std::uint16_t length = 0;
  bool operator==(const ReadChunk&) const = default;
};
struct CloseFile {
  std::uint16_t file_id = 0;
  bool operator==(const CloseFile&) const = default;
};

}  // namespace cmd

using Command = std::variant<cmd::SetMode, cmd::SensorEnable, cmd::SetRate, cmd::SetLed, cmd::CalibProbe,
                             cmd::CalibTrim, cmd::ScheduleOffline, cmd::GetStatus, cmd::GetFileList, cmd::OpenFile,
                             cmd::ReadChunk, cmd::CloseFile>;

// Variant index order matches kOpcodes.
inline Opcode opcode_of(const Command& c) noexcept { return kOpcodes[c.index()]; }

/// Fixed argument size per opcode.
constexpr std::size_t arg_size(Opcode op) noexcept {
  switch (op) {
    case Opcode::SetMode: return 5;
    case Opcode::SensorEnable: return 2;
    case Opcode::SetRate: return 3;
    case Opcode::SetLed: return 5;
    case Opcode::CalibProbe: return 8;
    case Opcode::CalibTrim: return 8;
    case Opcode::ScheduleOffline: return 12;
    case Opcode::GetStatus: return 0;
    case Opcode::GetFileList: return 2;
    case Opcode::OpenFile: return 2;
    case Opcode::ReadChunk: return 8;
    case Opcode::CloseFile: return 2;
  }
  return 0;
}

constexpr bool is_known_opcode(std::uint8_t v) noexcept { return v >= 0x10 && v <= 0x1B; }

inline Bytes encode_command(const Command& c) {
  Bytes out;
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(opcode_of(c)));
  std::visit(
      [&w](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, cmd::SetMode>) {
          w.u8(static_cast<std::uint8_t>(a.mode)).u32(a.duration_ms);
        } else if constexpr (std::is_same_v<T, cmd::SensorEnable>) {
          w.u8(static_cast<std::uint8_t>(a.modality)).u8(a.enabled);
        } else if constexpr (std::is_same_v<T, cmd::SetRate>) {
          w.u8(static_cast<std::uint8_t>(a.modality)).u16(a.rate_hz);
        } else if constexpr (std::is_same_v<T, cmd::SetLed>) {
          for (auto code : a.led_code) w.u8(code);
          w.u16(a.pulse_width_us);
        } else if constexpr (std::is_same_v<T, cmd::CalibProbe>) {
          w.u32(a.host_time.seconds).u32(a.host_time.micros);
        } else if constexpr (std::is_same_v<T, cmd::CalibTrim>) {
          w.u32(a.epoch.seconds).u32(a.epoch.micros);
        } else if constexpr (std::is_same_v<T, cmd::ScheduleOffline>) {
          w.u32(a.start_delay_s).u32(a.total_s).u32(a.segment_s);
        } else if constexpr (std::is_same_v<T, cmd::GetStatus>) {
        } else if constexpr (std::is_same_v<T, cmd::GetFileList>) {
          w.u16(a.first_index);
        } else if constexpr (std::is_same_v<T, cmd::OpenFile> || std::is_same_v<T, cmd::CloseFile>) {
          w.u16(a.file_id);
        } else if constexpr (std::is_same_v<T, cmd::ReadChunk>) {
          w.u16(a.file_id).u32(a.offset).u16(a.length);
        }
      },
      c);
  return out;
}

inline Command decode_command(ByteView payload) {
  if (payload.empty()) throw Error(Errc::MalformedPayload, "command without opcode");
  if (!is_known_opcode(payload[0])) throw Error(Errc::UnknownOpcode, "opcode " + std::to_string(payload[0]));
  const auto op = static_cast<Opcode>(payload[0]);
  if (payload.size() - 1 != arg_size(op))
    throw Error(Errc::MalformedPayload, std::string(to_string(op)) + " argument size mismatch");

  ByteReader r(payload.subspan(1));
  auto modality = [](std::uint8_t v) {
    if (v > 2) throw Error(Errc::MalformedPayload, "unknown modality");
    return static_cast<Modality>(v);
  };
  auto flag = [](std::uint8_t v) {
    if (v > 1) throw Error(Errc::MalformedPayload, "boolean field out of range");
    return v == 1;
  };
  switch (op) {
    case Opcode::SetMode: {
      const auto m = r.u8();
      if (m > 4) throw Error(Errc::MalformedPayload, "unknown device mode");
      return cmd::SetMode{static_cast<DeviceMode>(m), r.u32()};
    }
    case Opcode::SensorEnable: {
      const auto m = modality(r.u8());
      return cmd::SensorEnable{m, flag(r.u8())};
    }
    case Opcode::SetRate: {
      const auto m = modality(r.u8());
      return cmd::SetRate{m, r.u16()};
    }
    case Opcode::SetLed: {
      cmd::SetLed a;
      for (auto& code : a.led_code) code = r.u8();
      a.pulse_width_us = r.u16();
      return a;
    }
    case Opcode::CalibProbe: {
      EpochTime t;
      t.seconds = r.u32();
      t.micros = r.u32();
      if (t.micros >= 1'000'000) throw Error(Errc::MalformedPayload, "microsecond field out of range");
      return cmd::CalibProbe{t};
    }
    case Opcode::CalibTrim: {
      EpochTime t;
      t.seconds = r.u32();
      t.micros = r.u32();
      if (t.micros >= 1'000'000) throw Error(Errc::MalformedPayload, "microsecond field out of range");
      return cmd::CalibTrim{t};
    }
    case Opcode::ScheduleOffline: {
      cmd::ScheduleOffline a;
      a.start_delay_s = r.u32();
      a.total_s = r.u32();
      a.segment_s = r.u32();
      return a;
    }
    case Opcode::GetStatus: return cmd::GetStatus{};
    case Opcode::GetFileList: return cmd::GetFileList{r.u16()};
    case Opcode::OpenFile: return cmd::OpenFile{r.u16()};
    case Opcode::ReadChunk: {
      cmd::ReadChunk a;
      a.file_id = r.u16();
      a.offset = r.u32();
      a.length = r.u16();
      return a;
    }
    case Opcode::CloseFile: return cmd::CloseFile{r.u16()};
  }
  throw Error(Errc::UnknownOpcode);
}

inline Frame command_frame(const Command& c) { return Frame{FrameKind::Command, encode_command(c)}; }

}  // namespace ringkit::proto
