#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ringkit {

// Stable error identifiers. The names are printed verbatim by the CLI and the
// gateway, so they are part of the public contract.
enum class Errc {
  OversizedPayload,
  BadCrc,
  Truncated,
  UnknownOpcode,
  MalformedPayload,
  WindowViolation,
  InvalidTransition,
  BadArgument,
  FlashFull,
  BatteryEmpty,
  TraceExhausted,
  UnknownDevice,
  AlreadyConnected,
  Timeout,
  NoSuchFile,
  Disconnected,
  NotConverged,
  CrcMismatch,
  ParseError,
  IoError,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::OversizedPayload: return "OversizedPayload";
    case Errc::BadCrc: return "BadCrc";
    case Errc::Truncated: return "Truncated";
    case Errc::UnknownOpcode: return "UnknownOpcode";
    case Errc::MalformedPayload: return "MalformedPayload";
    case Errc::WindowViolation: return "WindowViolation";
    case Errc::InvalidTransition: return "InvalidTransition";
    case Errc::BadArgument: return "BadArgument";
    case Errc::FlashFull: return "FlashFull";
    case Errc::BatteryEmpty: return "BatteryEmpty";
    case Errc::TraceExhausted: return "TraceExhausted";
    case Errc::UnknownDevice: return "UnknownDevice";
    case Errc::AlreadyConnected: return "AlreadyConnected";
    case Errc::Timeout: return "Timeout";
    case Errc::NoSuchFile: return "NoSuchFile";
    case Errc::Disconnected: return "Disconnected";
    case Errc::NotConverged: return "NotConverged";
    case Errc::CrcMismatch: return "CrcMismatch";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Integrity failures (corrupted bytes) as opposed to device/state failures.
constexpr bool is_integrity_error(Errc code) noexcept {
  return code == Errc::BadCrc || code == Errc::CrcMismatch || code == Errc::Truncated ||
         code == Errc::MalformedPayload;
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  explicit Error(Errc code) : std::runtime_error(std::string(to_string(code))), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ringkit
