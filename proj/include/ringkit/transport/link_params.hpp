#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "ringkit/error.hpp"

namespace ringkit::transport {

inline constexpr double kDefaultBulkBytesPerSecond = 16'000.0;  // 128 kbit/s

/// One-way latency, uniform in [mean - jitter, mean + jitter] (never negative).
struct LatencyModel {
  std::int64_t mean_us = 15'000;
  std::int64_t jitter_us = 0;

  template <typename Rng>
  std::int64_t draw(Rng& rng) const {
    if (jitter_us <= 0) return std::max<std::int64_t>(0, mean_us);
    std::uniform_int_distribution<std::int64_t> d(mean_us - jitter_us, mean_us + jitter_us);
    return std::max<std::int64_t>(0, d(rng));
  }
};

/// Link behaviour and fault injection. Loss drops notifications silently and
/// makes commands retry, then time out.
struct LinkParams {
  LatencyModel up;
  LatencyModel down;
  double loss_rate = 0.0;
  double bulk_bytes_per_s = kDefaultBulkBytesPerSecond;
  std::int64_t command_timeout_us = 500'000;
  int max_attempts = 3;
  // One-shot bulk faults, consumed when they fire.
  std::optional<std::uint64_t> bulk_disconnect_at;  // file byte offset
  std::optional<std::size_t> bulk_corrupt_chunk;    // chunk index within a transfer

  static LinkParams symmetric(std::int64_t latency_us, std::int64_t jitter_us = 0) {
    LinkParams p;
    p.up = {latency_us, jitter_us};
    p.down = {latency_us, jitter_us};
    return p;
  }

  void validate() const {
    if (loss_rate < 0 || loss_rate > 1) throw Error(Errc::BadArgument, "loss_rate must be in [0, 1]");
    if (bulk_bytes_per_s <= 0) throw Error(Errc::BadArgument, "bulk rate must be positive");
    if (max_attempts < 1) throw Error(Errc::BadArgument, "max_attempts must be >= 1");
    if (up.mean_us < 0 || down.mean_us < 0 || up.jitter_us < 0 || down.jitter_us < 0)
      throw Error(Errc::BadArgument, "latencies must be non-negative");
  }

  // Profile format: `key = value` per line, '#' comments. Keys:
  //   latency_up_ms, latency_down_ms, latency_ms (both), latency_jitter_ms (both),
  //   latency_up_jitter_ms, latency_down_jitter_ms, loss_rate, bulk_bytes_per_s,
  //   command_timeout_ms, max_attempts, bulk_disconnect_at, bulk_corrupt_chunk
  static LinkParams parse(std::istream& in) {
    LinkParams p;
    std::string line;
    int lineno = 0;
    auto ms = [](double v) { return static_cast<std::int64_t>(v * 1000.0); };
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      std::istringstream ks(line.substr(0, eq));
      std::string key;
      if (!(ks >> key)) continue;
      if (eq == std::string::npos)
        throw Error(Errc::ParseError, "link profile line " + std::to_string(lineno) + ": expected key = value");
      std::istringstream vs(line.substr(eq + 1));
      double v = 0;
      if (!(vs >> v))
        throw Error(Errc::ParseError, "link profile line " + std::to_string(lineno) + ": value must be numeric");
      if (key == "latency_ms") {
        p.up.mean_us = p.down.mean_us = ms(v);
      } else if (key == "latency_up_ms") {
        p.up.mean_us = ms(v);
      } else if (key == "latency_down_ms") {
        p.down.mean_us = ms(v);
      } else if (key == "latency_jitter_ms") {
        p.up.jitter_us = p.down.jitter_us = ms(v);
      } else if (key == "latency_up_jitter_ms") {
        p.up.jitter_us = ms(v);
      } else if (key == "latency_down_jitter_ms") {
        p.down.jitter_us = ms(v);
      } else if (key == "loss_rate") {
        p.loss_rate = v;
      } else if (key == "bulk_bytes_per_s") {
        p.bulk_bytes_per_s = v;
      } else if (key == "command_timeout_ms") {
        p.command_timeout_us = ms(v);
      } else if (key == "max_attempts") {
        p.max_attempts = static_cast<int>(v);
      } else if (key == "bulk_disconnect_at") {
        p.bulk_disconnect_at = static_cast<std::uint64_t>(v);
      } else if (key == "bulk_corrupt_chunk") {
        p.bulk_corrupt_chunk = static_cast<std::size_t>(v);
      } else {
        throw Error(Errc::ParseError, "link profile line " + std::to_string(lineno) + ": unknown key '" + key + "'");
      }
    }
    p.validate();
    return p;
  }

  static LinkParams load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open link profile " + path.string());
    return parse(in);
  }
};

}  // namespace ringkit::transport
