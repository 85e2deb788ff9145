#pragma once

#include <cstdint>
#include <string_view>

#include "ringkit/error.hpp"
#include "ringkit/proto/bytes.hpp"
#include "ringkit/proto/crc32.hpp"

namespace ringkit::proto {

// Frame layout (all integers little-endian):
//
//   +------+-----------+-----------------+-----------+
//   | kind | length u16|  payload[length] | crc32 u32 |
//   +------+-----------+-----------------+-----------+
//
// The CRC covers kind + payload. The length field is not under the CRC but is
// redundant with the buffer size, so a disagreement is reported as BadCrc.
inline constexpr std::size_t kMtu = 1024;
inline constexpr std::size_t kFrameHeaderSize = 3;
inline constexpr std::size_t kFrameTrailerSize = 4;
inline constexpr std::size_t kFrameOverhead = kFrameHeaderSize + kFrameTrailerSize;
inline constexpr std::size_t kMaxPayload = kMtu - kFrameOverhead;

enum class FrameKind : std::uint8_t {
  Command = 0x01,
  Response = 0x02,
  StreamData = 0x03,
  FileList = 0x04,
  Chunk = 0x05,
  Event = 0x06,
};

constexpr bool is_known_kind(std::uint8_t k) noexcept { return k >= 0x01 && k <= 0x06; }

constexpr std::string_view to_string(FrameKind k) noexcept {
  switch (k) {
    case FrameKind::Command: return "Command";
    case FrameKind::Response: return "Response";
    case FrameKind::StreamData: return "StreamData";
    case FrameKind::FileList: return "FileList";
    case FrameKind::Chunk: return "Chunk";
    case FrameKind::Event: return "Event";
  }
  return "?";
}

struct Frame {
  FrameKind kind = FrameKind::Command;
  Bytes payload;

  std::uint32_t crc() const {
    Crc32 c;
    c.update(static_cast<std::uint8_t>(kind));
    c.update(payload);
    return c.value();
  }

  bool operator==(const Frame&) const = default;
};

inline Bytes encode_frame(const Frame& frame) {
  if (frame.payload.size() > kMaxPayload)
    throw Error(Errc::OversizedPayload,
                std::to_string(frame.payload.size() + kFrameOverhead) + " bytes exceeds MTU");
  Bytes out;
  out.reserve(frame.payload.size() + kFrameOverhead);
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(frame.kind))
      .u16(static_cast<std::uint16_t>(frame.payload.size()))
      .bytes(frame.payload)
      .u32(frame.crc());
  return out;
}

/// Structural decode of exactly one frame: size, checksum, length field, kind.
/// Payload schemas are checked by decode_frame in wire.hpp.
inline Frame parse_frame(ByteView bytes) {
  if (bytes.size() < kFrameOverhead)
    throw Error(Errc::Truncated, std::to_string(bytes.size()) + " bytes is shorter than a frame");
  if (bytes.size() > kMtu) throw Error(Errc::OversizedPayload, "input larger than MTU");

  const std::size_t implied = bytes.size() - kFrameOverhead;
  const std::size_t declared = static_cast<std::size_t>(bytes[1]) | (static_cast<std::size_t>(bytes[2]) << 8);
  const auto payload = bytes.subspan(kFrameHeaderSize, implied);

  Crc32 c;
  c.update(bytes[0]).update(payload);
  const auto trailer = bytes.subspan(bytes.size() - kFrameTrailerSize);
  const std::uint32_t stored = static_cast<std::uint32_t>(trailer[0]) | (static_cast<std::uint32_t>(trailer[1]) << 8) |
                               (static_cast<std::uint32_t>(trailer[2]) << 16) |
                               (static_cast<std::uint32_t>(trailer[3]) << 24);

  if (c.value() != stored) {
    // A short read leaves the declared length pointing past the buffer.
    if (declared > implied) throw Error(Errc::Truncated, "declared length exceeds received bytes");
    throw Error(Errc::BadCrc, "checksum mismatch");
  }
  if (declared != implied) throw Error(Errc::BadCrc, "length field disagrees with checksummed content");
  if (!is_known_kind(bytes[0])) throw Error(Errc::UnknownOpcode, "unknown frame kind");

  return Frame{static_cast<FrameKind>(bytes[0]), Bytes(payload.begin(), payload.end())};
}

}  // namespace ringkit::proto
