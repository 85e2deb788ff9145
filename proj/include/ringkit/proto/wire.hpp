#pragma once

// Umbrella header for the device <-> host wire format.

#include "ringkit/proto/bytes.hpp"
#include "ringkit/proto/command.hpp"
#include "ringkit/proto/config.hpp"
#include "ringkit/proto/crc32.hpp"
#include "ringkit/proto/event.hpp"
#include "ringkit/proto/frame.hpp"
#include "ringkit/proto/logfile.hpp"
#include "ringkit/proto/response.hpp"
#include "ringkit/proto/sample.hpp"
#include "ringkit/proto/stream.hpp"

namespace ringkit::proto {

/// Checks that a structurally valid frame also carries a well-formed payload
/// for its kind (known opcode, exact argument schema, record invariants).
inline void validate_payload(const Frame& f) {
  switch (f.kind) {
    case FrameKind::Command: (void)decode_command(f.payload); break;
    case FrameKind::Response: (void)decode_response_payload(f.payload); break;
    case FrameKind::StreamData: (void)decode_packet(f.payload); break;
    case FrameKind::FileList: (void)decode_file_list(f.payload); break;
    case FrameKind::Chunk: (void)decode_chunk(f.payload); break;
    case FrameKind::Event: (void)decode_event(f.payload); break;
  }
}

/// Total decoder: returns the frame or throws Truncated, BadCrc,
/// UnknownOpcode or MalformedPayload. Never reads out of bounds.
inline Frame decode_frame(ByteView bytes) {
  Frame f = parse_frame(bytes);
  validate_payload(f);
  return f;
}

inline Frame packet_frame(const StreamPacket& p) { return Frame{FrameKind::StreamData, encode_packet(p)}; }
inline Frame event_frame(const DeviceEvent& e) { return Frame{FrameKind::Event, encode_event(e)}; }

}  // namespace ringkit::proto
