#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace ringkit::proto {

// CRC-32/ISO-HDLC (the zlib/Ethernet CRC): reflected poly 0xEDB88320,
// init 0xFFFFFFFF, xorout 0xFFFFFFFF. Check value for "123456789" is 0xCBF43926.
namespace detail {

constexpr std::array<std::uint32_t, 256> make_crc32_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1U) ? (0xEDB88320U ^ (c >> 1)) : (c >> 1);
    table[i] = c;
  }
  return table;
}

inline constexpr auto kCrc32Table = make_crc32_table();

}  // namespace detail

/// Incremental CRC-32. Feeding data in any split yields the one-shot value.
class Crc32 {
 public:
  constexpr Crc32& update(std::span<const std::uint8_t> data) noexcept {
    for (std::uint8_t b : data) state_ = detail::kCrc32Table[(state_ ^ b) & 0xFFU] ^ (state_ >> 8);
    return *this;
  }
  constexpr Crc32& update(std::uint8_t byte) noexcept {
    state_ = detail::kCrc32Table[(state_ ^ byte) & 0xFFU] ^ (state_ >> 8);
    return *this;
  }
  constexpr std::uint32_t value() const noexcept { return state_ ^ 0xFFFFFFFFU; }

 private:
  std::uint32_t state_ = 0xFFFFFFFFU;
};

constexpr std::uint32_t crc32(std::span<const std::uint8_t> data) noexcept {
  return Crc32{}.update(data).value();
}

}  // namespace ringkit::proto
