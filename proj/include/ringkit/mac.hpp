#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "ringkit/error.hpp"

namespace ringkit {

struct MacAddress {
  std::array<std::uint8_t, 6> bytes{};

  static MacAddress parse(std::string_view text) {
    MacAddress m;
    unsigned v[6];
    char tail = 0;
    const std::string s(text);
    if (std::sscanf(s.c_str(), "%2x:%2x:%2x:%2x:%2x:%2x%c", &v[0], &v[1], &v[2], &v[3], &v[4], &v[5], &tail) != 6)
      throw Error(Errc::BadArgument, "malformed MAC address '" + s + "'");
    for (int i = 0; i < 6; ++i) m.bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v[i]);
    return m;
  }

  /// Locally administered address derived from a small index (C0:FF:EE:00:xx:xx).
  static MacAddress from_index(std::uint16_t index) {
    return MacAddress{{0xC0, 0xFF, 0xEE, 0x00, static_cast<std::uint8_t>(index >> 8), static_cast<std::uint8_t>(index)}};
  }

  std::string to_string() const {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02X:%02X:%02X:%02X:%02X:%02X", bytes[0], bytes[1], bytes[2], bytes[3], bytes[4],
                  bytes[5]);
    return buf;
  }

  std::uint64_t to_u64() const noexcept {
    std::uint64_t v = 0;
    for (auto b : bytes) v = (v << 8) | b;
    return v;
  }

  auto operator<=>(const MacAddress&) const = default;
};

}  // namespace ringkit
