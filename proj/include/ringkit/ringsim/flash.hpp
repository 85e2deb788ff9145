#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "ringkit/error.hpp"
#include "ringkit/proto/crc32.hpp"
#include "ringkit/proto/logfile.hpp"
#include "ringkit/proto/sample.hpp"

namespace ringkit::ringsim {

inline constexpr std::uint64_t kFlashCapacity = 134'217'728;  // 128 MiB

struct LogSegment {
  proto::LogFileEntry entry;
  proto::Bytes payload;
};

/// Append-only segment store. Records are the 38-byte wire layout; closing a
/// segment seals its size and CRC into a LogFileEntry.
class FlashStore {
 public:
  explicit FlashStore(std::uint64_t capacity = kFlashCapacity) : capacity_(capacity) {}

  std::uint64_t capacity() const noexcept { return capacity_; }
  std::uint64_t used() const noexcept { return closed_bytes_ + (open_ ? open_->payload.size() : 0); }
  std::uint64_t free() const noexcept { return capacity_ - used(); }
  bool can_fit_record() const noexcept { return used() + proto::kRecordSize <= capacity_; }

  const std::vector<LogSegment>& segments() const noexcept { return segments_; }
  bool has_open_segment() const noexcept { return open_.has_value(); }

  const LogSegment* find(std::uint16_t file_id) const noexcept {
    auto it = std::find_if(segments_.begin(), segments_.end(),
                           [file_id](const LogSegment& s) { return s.entry.file_id == file_id; });
    return it == segments_.end() ? nullptr : &*it;
  }

  void open_segment(std::uint32_t start_time_s) {
    if (open_) throw Error(Errc::InvalidTransition, "segment already open");
    open_ = Open{start_time_s, {}, {}};
  }

  /// Appends one record to the open segment. FlashFull if it would not fit.
  void write(const proto::SampleRecord& r) {
    if (!open_) throw Error(Errc::InvalidTransition, "no open segment");
    if (!can_fit_record()) throw Error(Errc::FlashFull, "flash capacity reached");
    const auto before = open_->payload.size();
    proto::ByteWriter w(open_->payload);
    proto::write_record(w, r);
    open_->crc.update(proto::ByteView(open_->payload).subspan(before));
  }

  /// Seals the open segment. An empty segment is discarded (entries have size > 0).
  std::optional<proto::LogFileEntry> close_segment() {
    if (!open_) return std::nullopt;
    Open seg = std::move(*open_);
    open_.reset();
    if (seg.payload.empty()) return std::nullopt;
    proto::LogFileEntry e{next_id_++, seg.start_time_s, static_cast<std::uint32_t>(seg.payload.size()), seg.crc.value()};
    closed_bytes_ += seg.payload.size();
    segments_.push_back(LogSegment{e, std::move(seg.payload)});
    return e;
  }

 private:
  struct Open {
    std::uint32_t start_time_s = 0;
    proto::Bytes payload;
    proto::Crc32 crc;
  };

  std::uint64_t capacity_;
  std::uint64_t closed_bytes_ = 0;
  std::vector<LogSegment> segments_;
  std::optional<Open> open_;
  std::uint16_t next_id_ = 1;
};

}  // namespace ringkit::ringsim
