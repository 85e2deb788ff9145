#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "ringkit/error.hpp"
#include "ringkit/proto/bytes.hpp"
#include "ringkit/proto/command.hpp"
#include "ringkit/proto/config.hpp"
#include "ringkit/proto/frame.hpp"
#include "ringkit/proto/logfile.hpp"

namespace ringkit::proto {

enum class Status : std::uint8_t {
  Ok = 0,
  InvalidTransition = 1,
  BadArgument = 2,
  NoSuchFile = 3,
  FlashFull = 4,
};

constexpr std::string_view to_string(Status s) noexcept {
  switch (s) {
    case Status::Ok: return "Ok";
    case Status::InvalidTransition: return "InvalidTransition";
    case Status::BadArgument: return "BadArgument";
    case Status::NoSuchFile: return "NoSuchFile";
    case Status::FlashFull: return "FlashFull";
  }
  return "?";
}

constexpr Errc to_errc(Status s) noexcept {
  switch (s) {
    case Status::InvalidTransition: return Errc::InvalidTransition;
    case Status::BadArgument: return Errc::BadArgument;
    case Status::NoSuchFile: return Errc::NoSuchFile;
    case Status::FlashFull: return Errc::FlashFull;
    case Status::Ok: break;
  }
  return Errc::MalformedPayload;
}

// Sensor fault flags reported in StatusReport::fault_flags (bit per modality).
inline constexpr std::uint8_t kFaultPpg = 0x01;
inline constexpr std::uint8_t kFaultImu = 0x02;
inline constexpr std::uint8_t kFaultTemp = 0x04;

struct StatusReport {
  DeviceMode mode = DeviceMode::Idle;
  SensorConfig config;
  std::uint8_t battery_pct = 0;
  std::uint32_t battery_uah = 0;
  std::uint64_t flash_capacity = 0;
  std::uint64_t flash_used = 0;
  std::uint8_t fault_flags = 0;
  std::uint16_t file_count = 0;
  std::int64_t device_time_us = 0;
  std::string firmware;

  std::uint64_t flash_free() const noexcept { return flash_capacity - flash_used; }
  bool operator==(const StatusReport&) const = default;
};

struct FileInfo {
  LogFileEntry entry;
  bool operator==(const FileInfo&) const = default;
};

/// Device reply to one command. The frame kind follows from the body:
/// FileListPage travels as a FileList frame and Chunk as a Chunk frame; all
/// other bodies (and every error) use a Response frame.
struct Response {
  using Body = std::variant<std::monostate, StatusReport, EpochTime, FileListPage, FileInfo, Chunk>;

  Opcode opcode = Opcode::GetStatus;
  Status status = Status::Ok;
  Body body;

  bool ok() const noexcept { return status == Status::Ok; }

  static Response ack(Opcode op) { return Response{op, Status::Ok, std::monostate{}}; }
  static Response error(Opcode op, Status s) { return Response{op, s, std::monostate{}}; }

  /// Throws the matching Error unless status is Ok.
  const Response& expect_ok() const {
    if (!ok())
      throw Error(to_errc(status), std::string(to_string(opcode)) + " rejected by device");
    return *this;
  }

  template <typename T>
  const T& get() const {
    if (const auto* p = std::get_if<T>(&body)) return *p;
    throw Error(Errc::MalformedPayload, std::string(to_string(opcode)) + " reply has unexpected body");
  }

  bool operator==(const Response&) const = default;
};

namespace detail {

inline void write_status(ByteWriter& w, const StatusReport& s) {
  w.u8(static_cast<std::uint8_t>(s.mode));
  write_config(w, s.config);
  w.u8(s.battery_pct).u32(s.battery_uah).u64(s.flash_capacity).u64(s.flash_used).u8(s.fault_flags);
  w.u16(s.file_count).i64(s.device_time_us).str8(s.firmware);
}

inline StatusReport read_status(ByteReader& r) {
  StatusReport s;
  const auto m = r.u8();
  if (m > 4) throw Error(Errc::MalformedPayload, "unknown device mode");
  s.mode = static_cast<DeviceMode>(m);
  s.config = read_config(r);
  s.battery_pct = r.u8();
  s.battery_uah = r.u32();
  s.flash_capacity = r.u64();
  s.flash_used = r.u64();
  s.fault_flags = r.u8();
  s.file_count = r.u16();
  s.device_time_us = r.i64();
  s.firmware = r.str8();
  if (s.battery_pct > 100 || s.flash_used > s.flash_capacity)
    throw Error(Errc::MalformedPayload, "status fields out of range");
  return s;
}

}  // namespace detail

inline Frame encode_response(const Response& resp) {
  if (const auto* page = std::get_if<FileListPage>(&resp.body)) return Frame{FrameKind::FileList, encode_file_list(*page)};
  if (const auto* chunk = std::get_if<Chunk>(&resp.body)) return Frame{FrameKind::Chunk, encode_chunk(*chunk)};

  Bytes out;
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(resp.opcode)).u8(static_cast<std::uint8_t>(resp.status));
  std::visit(
      [&w](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, StatusReport>) {
          detail::write_status(w, b);
        } else if constexpr (std::is_same_v<T, EpochTime>) {
          w.u32(b.seconds).u32(b.micros);
        } else if constexpr (std::is_same_v<T, FileInfo>) {
          write_entry(w, b.entry);
        }
      },
      resp.body);
  return Frame{FrameKind::Response, std::move(out)};
}

inline Response decode_response_payload(ByteView payload) {
  ByteReader r(payload);
  const auto op_raw = r.u8();
  if (!is_known_opcode(op_raw)) throw Error(Errc::UnknownOpcode, "response opcode " + std::to_string(op_raw));
  const auto st_raw = r.u8();
  if (st_raw > 4) throw Error(Errc::MalformedPayload, "unknown status");
  Response resp{static_cast<Opcode>(op_raw), static_cast<Status>(st_raw), std::monostate{}};
  if (resp.ok()) {
    switch (resp.opcode) {
      case Opcode::GetStatus: resp.body = detail::read_status(r); break;
      case Opcode::CalibProbe:
      case Opcode::CalibTrim: {
        EpochTime t;
        t.seconds = r.u32();
        t.micros = r.u32();
        resp.body = t;
        break;
      }
      case Opcode::OpenFile: resp.body = FileInfo{read_entry(r)}; break;
      case Opcode::GetFileList:
      case Opcode::ReadChunk:
        throw Error(Errc::MalformedPayload, "successful reply must use its own frame kind");
      default: break;
    }
  }
  r.expect_end("response");
  return resp;
}

/// Interprets a reply frame (Response, FileList or Chunk kind).
inline Response decode_response(const Frame& f) {
  switch (f.kind) {
    case FrameKind::Response: return decode_response_payload(f.payload);
    case FrameKind::FileList: return Response{Opcode::GetFileList, Status::Ok, decode_file_list(f.payload)};
    case FrameKind::Chunk: return Response{Opcode::ReadChunk, Status::Ok, decode_chunk(f.payload)};
    default: throw Error(Errc::MalformedPayload, "frame is not a reply");
  }
}

}  // namespace ringkit::proto
