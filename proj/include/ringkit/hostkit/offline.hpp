#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ringkit/proto/crc32.hpp"
#include "ringkit/proto/response.hpp"
#include "ringkit/proto/sample.hpp"
#include "ringkit/transport/environment.hpp"

namespace ringkit::hostkit {

struct OfflinePlanInfo {
  std::uint32_t start_delay_s = 0;
  std::uint32_t total_s = 0;
  std::uint32_t segment_s = 0;
  std::size_t segments = 0;
  std::int64_t armed_at_us = 0;  // host clock
  std::int64_t ends_at_us = 0;   // host clock, estimated

  static std::size_t segment_count(std::uint32_t total_s, std::uint32_t segment_s) noexcept {
    return (total_s + segment_s - 1) / segment_s;
  }
};

/// Arms the device for an offline run. The radio sleeps until logging ends.
inline OfflinePlanInfo configure_offline(transport::Link& link, std::chrono::seconds total,
                                         std::chrono::seconds segment, std::chrono::seconds start_delay = {}) {
  if (total.count() <= 0 || segment.count() <= 0) throw Error(Errc::BadArgument, "durations must be positive");
  if (segment > total) throw Error(Errc::BadArgument, "segment longer than total duration");
  if (total.count() > 0xFFFFFFFFLL || start_delay.count() < 0 || start_delay.count() > 0xFFFFFFFFLL)
    throw Error(Errc::BadArgument, "duration out of range");
  OfflinePlanInfo p;
  p.start_delay_s = static_cast<std::uint32_t>(start_delay.count());
  p.total_s = static_cast<std::uint32_t>(total.count());
  p.segment_s = static_cast<std::uint32_t>(segment.count());
  p.segments = OfflinePlanInfo::segment_count(p.total_s, p.segment_s);
  link.request(proto::cmd::ScheduleOffline{p.start_delay_s, p.total_s, p.segment_s}).expect_ok();
  p.armed_at_us = link.env().now();
  p.ends_at_us = p.armed_at_us + (static_cast<std::int64_t>(p.start_delay_s) + p.total_s) * 1'000'000;
  return p;
}

/// Runs the environment until the device reports LoggingComplete (or the
/// plan end plus `grace`). Returns the number of segments the device reported.
inline std::optional<std::uint32_t> await_offline(transport::Link& link, const OfflinePlanInfo& plan,
                                                  std::chrono::microseconds grace = std::chrono::seconds(5)) {
  std::optional<std::uint32_t> done;
  const int token = link.subscribe([&done](const transport::Notification& n) {
    if (const auto* e = std::get_if<proto::DeviceEvent>(&n.what))
      if (e->code == proto::EventCode::LoggingComplete || e->code == proto::EventCode::FlashFull ||
          e->code == proto::EventCode::BatteryEmpty)
        done = e->code == proto::EventCode::LoggingComplete ? e->value : 0;
  });
  link.env().run_until(plan.ends_at_us + grace.count(), [&done] { return done.has_value(); });
  link.unsubscribe(token);
  return done;
}

/// All file entries, paged through GetFileList, sorted by start time.
inline std::vector<proto::LogFileEntry> list_files(transport::Link& link) {
  std::vector<proto::LogFileEntry> out;
  std::uint16_t index = 0;
  while (true) {
    const auto r = link.request(proto::cmd::GetFileList{index});
    r.expect_ok();
    const auto& page = r.get<proto::FileListPage>();
    out.insert(out.end(), page.entries.begin(), page.entries.end());
    index = static_cast<std::uint16_t>(page.first_index + page.entries.size());
    if (page.entries.empty() || index >= page.total) break;
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.start_time_s != b.start_time_s ? a.start_time_s < b.start_time_s : a.file_id < b.file_id;
  });
  return out;
}

struct FetchProgress {
  std::uint16_t file_id = 0;
  std::uint64_t bytes = 0;
  std::uint64_t total = 0;
  std::int64_t at_us = 0;  // host clock

  double fraction() const noexcept { return total ? static_cast<double>(bytes) / static_cast<double>(total) : 1.0; }
};
using ProgressFn = std::function<void(const FetchProgress&)>;

struct FetchedFile {
  proto::LogFileEntry entry;
  proto::Bytes payload;
  std::vector<proto::SampleRecord> records;
  std::int64_t started_us = 0;
  std::int64_t finished_us = 0;
};

/// Raised when the bulk link drops mid-transfer. Carries everything received
/// so far so the caller can reconnect and resume.
class FetchInterrupted : public Error {
 public:
  FetchInterrupted(std::uint16_t file_id, proto::Bytes partial, const std::string& what)
      : Error(Errc::Disconnected, what), file_id_(file_id), partial_(std::move(partial)) {}
  std::uint16_t file_id() const noexcept { return file_id_; }
  const proto::Bytes& partial() const noexcept { return partial_; }
  std::uint64_t resume_from() const noexcept { return partial_.size(); }

 private:
  std::uint16_t file_id_;
  proto::Bytes partial_;
};

/// Incremental download of one segment over the bulk channel, starting at
/// `prefix.size()` (the bytes already held from an interrupted attempt).
/// `finish` closes the file, verifies the CRC of the whole payload and decodes it.
class FileFetch {
 public:
  FileFetch(transport::Link& link, std::uint16_t file_id, proto::Bytes prefix = {}) : link_(link) {
    const auto opened = link.request(proto::cmd::OpenFile{file_id});
    opened.expect_ok();
    out_.entry = opened.get<proto::FileInfo>().entry;
    out_.started_us = link.env().now();
    if (prefix.size() > out_.entry.size) throw Error(Errc::BadArgument, "resume offset past end of file");
    out_.payload = std::move(prefix);
    out_.payload.reserve(out_.entry.size);
    stream_ = link.bulk_read(file_id, out_.payload.size(), out_.entry.size);
  }

  const proto::LogFileEntry& entry() const noexcept { return out_.entry; }
  bool done() const noexcept { return done_; }
  FetchProgress progress() const { return {out_.entry.file_id, out_.payload.size(), out_.entry.size, at_us_}; }

  /// Pulls one chunk. Returns false once the payload is complete.
  bool step() {
    if (done_) return false;
    try {
      auto c = stream_->next();
      if (!c) {
        done_ = true;
        return false;
      }
      if (c->chunk.offset != out_.payload.size()) throw Error(Errc::MalformedPayload, "bulk chunk out of order");
      out_.payload.insert(out_.payload.end(), c->chunk.data.begin(), c->chunk.data.end());
      at_us_ = c->arrival_us;
      return true;
    } catch (const Error& e) {
      if (e.code() != Errc::Disconnected) throw;
      throw FetchInterrupted(out_.entry.file_id, std::move(out_.payload), e.what());
    }
  }

  FetchedFile finish() {
    while (step()) {
    }
    out_.finished_us = link_.env().now();
    link_.request(proto::cmd::CloseFile{out_.entry.file_id}).expect_ok();
    if (proto::crc32(out_.payload) != out_.entry.crc)
      throw Error(Errc::CrcMismatch,
                  "file " + std::to_string(out_.entry.file_id) + " payload does not match its CRC; retry");
    out_.records = proto::decode_records(out_.payload);
    return std::move(out_);
  }

 private:
  transport::Link link_;
  std::optional<transport::BulkStream> stream_;
  FetchedFile out_;
  std::int64_t at_us_ = 0;
  bool done_ = false;
};

inline FetchedFile fetch_file(transport::Link& link, std::uint16_t file_id, proto::Bytes prefix = {},
                              const ProgressFn& progress = {}) {
  FileFetch f(link, file_id, std::move(prefix));
  while (f.step())
    if (progress) progress(f.progress());
  return f.finish();
}

}  // namespace ringkit::hostkit
