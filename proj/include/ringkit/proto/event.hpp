#pragma once

#include <cstdint>
#include <string_view>

#include "ringkit/error.hpp"
#include "ringkit/proto/bytes.hpp"

namespace ringkit::proto {

enum class EventCode : std::uint8_t {
  SegmentClosed = 1,    // value = file id
  LoggingComplete = 2,  // value = segments written
  FlashFull = 3,        // value = file id of the short final segment
  BatteryEmpty = 4,
  SensorFault = 5,      // value = fault flags
  StreamStopped = 6,    // value = packets sent in the session
};

constexpr std::string_view to_string(EventCode c) noexcept {
  switch (c) {
    case EventCode::SegmentClosed: return "SegmentClosed";
    case EventCode::LoggingComplete: return "LoggingComplete";
    case EventCode::FlashFull: return "FlashFull";
    case EventCode::BatteryEmpty: return "BatteryEmpty";
    case EventCode::SensorFault: return "SensorFault";
    case EventCode::StreamStopped: return "StreamStopped";
  }
  return "?";
}

/// Unsolicited device notification (Event frame payload, 13 bytes).
struct DeviceEvent {
  EventCode code = EventCode::SegmentClosed;
  std::int64_t device_time_us = 0;
  std::uint32_t value = 0;

  bool operator==(const DeviceEvent&) const = default;
};

inline Bytes encode_event(const DeviceEvent& e) {
  Bytes out;
  ByteWriter(out).u8(static_cast<std::uint8_t>(e.code)).i64(e.device_time_us).u32(e.value);
  return out;
}

inline DeviceEvent decode_event(ByteView payload) {
  ByteReader r(payload);
  const auto c = r.u8();
  if (c < 1 || c > 6) throw Error(Errc::MalformedPayload, "unknown event code");
  DeviceEvent e;
  e.code = static_cast<EventCode>(c);
  e.device_time_us = r.i64();
  e.value = r.u32();
  r.expect_end("event");
  return e;
}

}  // namespace ringkit::proto
