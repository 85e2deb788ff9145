#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ringkit/error.hpp"

namespace ringkit::proto {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Little-endian append-only writer.
class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(Bytes& out) : out_(&out) {}

  ByteWriter& u8(std::uint8_t v) {
    buf().push_back(v);
    return *this;
  }
  ByteWriter& u16(std::uint16_t v) { return put(v, 2); }
  ByteWriter& u32(std::uint32_t v) { return put(v, 4); }
  ByteWriter& u64(std::uint64_t v) { return put(v, 8); }
  ByteWriter& i16(std::int16_t v) { return u16(static_cast<std::uint16_t>(v)); }
  ByteWriter& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
  ByteWriter& bytes(ByteView v) {
    buf().insert(buf().end(), v.begin(), v.end());
    return *this;
  }
  // u8 length prefix; strings longer than 255 bytes are rejected.
  ByteWriter& str8(std::string_view s) {
    if (s.size() > 0xFF) throw Error(Errc::BadArgument, "string longer than 255 bytes");
    u8(static_cast<std::uint8_t>(s.size()));
    return bytes({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  }

  Bytes take() { return std::move(own_); }
  const Bytes& data() const { return out_ ? *out_ : own_; }

 private:
  Bytes& buf() { return out_ ? *out_ : own_; }
  ByteWriter& put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf().push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }

  Bytes own_;
  Bytes* out_ = nullptr;
};

// Bounds-checked little-endian reader. Running past the end throws
// MalformedPayload; callers decoding whole frames have already checked length.
class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  ByteView bytes(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::string str8() {
    const auto n = u8();
    auto b = bytes(n);
    return {reinterpret_cast<const char*>(b.data()), b.size()};
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool empty() const { return remaining() == 0; }
  // Rejects trailing bytes after a fixed-schema body.
  void expect_end(const char* what) const {
    if (!empty()) throw Error(Errc::MalformedPayload, std::string("trailing bytes in ") + what);
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw Error(Errc::MalformedPayload, "payload shorter than its schema");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  ByteView data_;
  std::size_t pos_ = 0;
};

}  // namespace ringkit::proto
