#pragma once

#include <cstdint>
#include <vector>

#include "ringkit/error.hpp"
#include "ringkit/proto/bytes.hpp"

namespace ringkit::proto {

/// Metadata of one offline recording segment.
struct LogFileEntry {
  std::uint16_t file_id = 0;
  std::uint32_t start_time_s = 0;  // device epoch seconds
  std::uint32_t size = 0;          // payload bytes
  std::uint32_t crc = 0;           // crc32 of the payload

  bool operator==(const LogFileEntry&) const = default;
};

inline constexpr std::size_t kLogEntryWireSize = 14;

inline void write_entry(ByteWriter& w, const LogFileEntry& e) {
  w.u16(e.file_id).u32(e.start_time_s).u32(e.size).u32(e.crc);
}

inline LogFileEntry read_entry(ByteReader& r) {
  LogFileEntry e;
  e.file_id = r.u16();
  e.start_time_s = r.u32();
  e.size = r.u32();
  e.crc = r.u32();
  if (e.size == 0) throw Error(Errc::MalformedPayload, "log entry with zero size");
  return e;
}

/// One page of the device's file list (FileList frame payload).
struct FileListPage {
  std::uint16_t total = 0;        // entries on the device
  std::uint16_t first_index = 0;  // index of entries[0]
  std::vector<LogFileEntry> entries;

  bool operator==(const FileListPage&) const = default;
};

inline constexpr std::size_t kFileListHeaderSize = 6;
inline constexpr std::size_t kMaxEntriesPerPage = 64;

inline Bytes encode_file_list(const FileListPage& page) {
  Bytes out;
  ByteWriter w(out);
  w.u16(page.total).u16(page.first_index).u16(static_cast<std::uint16_t>(page.entries.size()));
  for (const auto& e : page.entries) write_entry(w, e);
  return out;
}

inline FileListPage decode_file_list(ByteView payload) {
  ByteReader r(payload);
  FileListPage p;
  p.total = r.u16();
  p.first_index = r.u16();
  const auto n = r.u16();
  if (n > kMaxEntriesPerPage || static_cast<std::size_t>(p.first_index) + n > p.total)
    throw Error(Errc::MalformedPayload, "file list page out of range");
  for (std::uint16_t i = 0; i < n; ++i) p.entries.push_back(read_entry(r));
  r.expect_end("file list");
  return p;
}

/// Bulk-channel unit: a slice of a log file at a byte offset.
struct Chunk {
  std::uint16_t file_id = 0;
  std::uint32_t offset = 0;
  Bytes data;

  bool operator==(const Chunk&) const = default;
};

inline constexpr std::size_t kChunkHeaderSize = 6;
inline constexpr std::size_t kChunkDataSize = 1000;

inline Bytes encode_chunk(const Chunk& c) {
  Bytes out;
  ByteWriter w(out);
  w.u16(c.file_id).u32(c.offset).bytes(c.data);
  return out;
}

inline Chunk decode_chunk(ByteView payload) {
  ByteReader r(payload);
  Chunk c;
  c.file_id = r.u16();
  c.offset = r.u32();
  auto rest = r.bytes(r.remaining());
  if (rest.empty()) throw Error(Errc::MalformedPayload, "empty chunk");
  c.data.assign(rest.begin(), rest.end());
  return c;
}

}  // namespace ringkit::proto
