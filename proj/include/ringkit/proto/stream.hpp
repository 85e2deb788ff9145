#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "ringkit/error.hpp"
#include "ringkit/proto/bytes.hpp"
#include "ringkit/proto/frame.hpp"
#include "ringkit/proto/sample.hpp"

namespace ringkit::proto {

inline constexpr std::int64_t kPacketWindowUs = 50'000;
inline constexpr std::size_t kPacketHeaderSize = 14;  // seq u32, base u64, count u16

/// One 50 ms window of records. An empty packet is a keep-alive and still
/// consumes a sequence number.
struct StreamPacket {
  std::uint32_t seq = 0;
  std::int64_t base_timestamp_us = 0;
  std::vector<SampleRecord> records;

  /// OR of the presence masks of every record.
  std::uint8_t presence() const noexcept {
    std::uint8_t p = 0;
    for (const auto& r : records) p |= r.presence;
    return p;
  }
  std::size_t count(Modality m) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [m](const SampleRecord& r) { return r.has(m); }));
  }

  bool operator==(const StreamPacket&) const = default;
};

inline constexpr std::size_t kMaxRecordsPerPacket = (kMaxPayload - kPacketHeaderSize) / kRecordSize;

/// Packs records into the window [base, base + 50 ms). Records must already be
/// time ordered; anything outside the window is a WindowViolation.
inline StreamPacket pack_samples(std::vector<SampleRecord> records, std::uint32_t seq, std::int64_t base_us) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto t = records[i].timestamp_us;
    if (t < base_us || t >= base_us + kPacketWindowUs)
      throw Error(Errc::WindowViolation, "record at " + std::to_string(t) + " outside window starting " +
                                             std::to_string(base_us));
    if (i > 0 && t < records[i - 1].timestamp_us) throw Error(Errc::WindowViolation, "records not time ordered");
  }
  if (records.size() > kMaxRecordsPerPacket) throw Error(Errc::OversizedPayload, "too many records for one packet");
  return StreamPacket{seq, base_us, std::move(records)};
}

inline Bytes encode_packet(const StreamPacket& p) {
  Bytes out;
  out.reserve(kPacketHeaderSize + p.records.size() * kRecordSize);
  ByteWriter w(out);
  w.u32(p.seq).i64(p.base_timestamp_us).u16(static_cast<std::uint16_t>(p.records.size()));
  for (const auto& r : p.records) write_record(w, r);
  return out;
}

inline StreamPacket decode_packet(ByteView payload) {
  ByteReader r(payload);
  StreamPacket p;
  p.seq = r.u32();
  p.base_timestamp_us = r.i64();
  const auto n = r.u16();
  if (r.remaining() != static_cast<std::size_t>(n) * kRecordSize)
    throw Error(Errc::MalformedPayload, "record count disagrees with payload length");
  p.records.reserve(n);
  for (std::uint16_t i = 0; i < n; ++i) p.records.push_back(read_record(r));
  // Re-validate the window so a decoded packet satisfies the same invariants.
  return pack_samples(std::move(p.records), p.seq, p.base_timestamp_us);
}

}  // namespace ringkit::proto
