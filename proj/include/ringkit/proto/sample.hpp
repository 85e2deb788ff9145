#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <vector>

#include "ringkit/error.hpp"
#include "ringkit/proto/bytes.hpp"
#include "ringkit/proto/config.hpp"

namespace ringkit::proto {

inline constexpr std::uint32_t kPpgMax = (1U << 24) - 1;
inline constexpr std::uint32_t kPpgAbsent = 0xFFFFFFFFU;
inline constexpr std::int16_t kInt16Absent = -1;  // all-ones

// Full-scale conversions for the 16-bit IMU words.
inline constexpr double kAccelFullScaleG = 16.0;
inline constexpr double kGyroFullScaleDps = 4000.0;
inline constexpr double kAccelLsbPerG = 32768.0 / kAccelFullScaleG;     // 2048
inline constexpr double kGyroLsbPerDps = 32768.0 / kGyroFullScaleDps;   // 8.192

// The 64-bit timestamp word carries the presence mask in its top byte, so the
// device-epoch timestamp must fit in 56 bits (about 2284 years of microseconds).
inline constexpr std::int64_t kMaxTimestampUs = (std::int64_t{1} << 56) - 1;

/// One synchronized acquisition tick. Modalities that were not sampled carry
/// all-ones sentinels and have their presence bit clear.
struct SampleRecord {
  std::int64_t timestamp_us = 0;  // device epoch
  std::uint8_t presence = 0;
  std::array<std::uint32_t, 3> ppg{kPpgAbsent, kPpgAbsent, kPpgAbsent};
  std::array<std::int16_t, 6> imu{kInt16Absent, kInt16Absent, kInt16Absent,
                                  kInt16Absent, kInt16Absent, kInt16Absent};
  std::array<std::int16_t, 3> temp_centi{kInt16Absent, kInt16Absent, kInt16Absent};

  bool has(Modality m) const noexcept { return (presence & presence_bit(m)) != 0; }

  auto operator<=>(const SampleRecord&) const = default;
};

/// Record size on the wire and on flash.
inline constexpr std::size_t kRecordSize = 38;

inline void write_record(ByteWriter& w, const SampleRecord& r) {
  if (r.timestamp_us < 0 || r.timestamp_us > kMaxTimestampUs)
    throw Error(Errc::BadArgument, "timestamp outside the 56-bit device epoch range");
  if ((r.presence & ~kAllPresent) != 0) throw Error(Errc::BadArgument, "unknown presence bits");
  w.u64(static_cast<std::uint64_t>(r.timestamp_us) | (static_cast<std::uint64_t>(r.presence) << 56));
  for (auto v : r.ppg) w.u32(v);
  for (auto v : r.imu) w.i16(v);
  for (auto v : r.temp_centi) w.i16(v);
}

inline SampleRecord read_record(ByteReader& r) {
  SampleRecord s;
  const std::uint64_t word = r.u64();
  s.presence = static_cast<std::uint8_t>(word >> 56);
  s.timestamp_us = static_cast<std::int64_t>(word & static_cast<std::uint64_t>(kMaxTimestampUs));
  for (auto& v : s.ppg) v = r.u32();
  for (auto& v : s.imu) v = r.i16();
  for (auto& v : s.temp_centi) v = r.i16();

  if ((s.presence & ~kAllPresent) != 0) throw Error(Errc::MalformedPayload, "unknown presence bits");
  if (s.has(Modality::Ppg)) {
    for (auto v : s.ppg)
      if (v > kPpgMax) throw Error(Errc::MalformedPayload, "PPG count exceeds 24 bits");
  } else {
    for (auto v : s.ppg)
      if (v != kPpgAbsent) throw Error(Errc::MalformedPayload, "absent PPG without sentinel");
  }
  if (!s.has(Modality::Imu))
    for (auto v : s.imu)
      if (v != kInt16Absent) throw Error(Errc::MalformedPayload, "absent IMU without sentinel");
  if (!s.has(Modality::Temp))
    for (auto v : s.temp_centi)
      if (v != kInt16Absent) throw Error(Errc::MalformedPayload, "absent temperature without sentinel");
  return s;
}

inline Bytes encode_records(std::span<const SampleRecord> records) {
  Bytes out;
  out.reserve(records.size() * kRecordSize);
  ByteWriter w(out);
  for (const auto& r : records) write_record(w, r);
  return out;
}

/// Parses a flat run of 38-byte records (a log segment payload).
inline std::vector<SampleRecord> decode_records(ByteView bytes) {
  if (bytes.size() % kRecordSize != 0)
    throw Error(Errc::MalformedPayload, "payload is not a whole number of records");
  std::vector<SampleRecord> out;
  out.reserve(bytes.size() / kRecordSize);
  ByteReader r(bytes);
  while (!r.empty()) out.push_back(read_record(r));
  return out;
}

}  // namespace ringkit::proto
