#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ringkit::ringsim {

// Counter-based noise: every draw is a pure function of (seed, stream, index),
// so synthetic sensor output does not depend on how time is stepped or on
// which other sensors are enabled.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t noise_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  return splitmix64(seed ^ splitmix64(stream * 0xD1B54A32D192ED03ULL ^ splitmix64(index)));
}

/// Uniform in [0, 1).
constexpr double noise_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  return static_cast<double>(noise_key(seed, stream, index) >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller over two independent counter draws.
inline double noise_gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  const double u1 = 1.0 - noise_uniform(seed, stream, 2 * index);  // (0, 1]
  const double u2 = noise_uniform(seed, stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Stream identifiers. Each synthetic channel draws from its own stream.
enum NoiseStream : std::uint64_t {
  kStreamPpg0 = 1,
  kStreamPpg1 = 2,
  kStreamPpg2 = 3,
  kStreamAccel0 = 10,  // +axis
  kStreamGyro0 = 20,   // +axis
  kStreamTemp0 = 30,   // +point
  kStreamJitter0 = 40, // +modality
};

}  // namespace ringkit::ringsim
