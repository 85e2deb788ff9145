#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "ringkit/error.hpp"
#include "ringkit/hostkit/json.hpp"

namespace ringkit::gateway {

using hostkit::Json;

inline constexpr std::string_view kApiVersion = "ringkit.api/1";

enum class ApiKind {
  DeviceList,
  Dashboard,
  CalibReport,
  RenderFrame,
  HrUpdate,
  AnnotationAck,
  OfflineStatus,
  FileList,
  FetchProgress,
  Error,
};

constexpr std::string_view to_string(ApiKind k) noexcept {
  switch (k) {
    case ApiKind::DeviceList: return "DeviceList";
    case ApiKind::Dashboard: return "Dashboard";
    case ApiKind::CalibReport: return "CalibReport";
    case ApiKind::RenderFrame: return "RenderFrame";
    case ApiKind::HrUpdate: return "HrUpdate";
    case ApiKind::AnnotationAck: return "AnnotationAck";
    case ApiKind::OfflineStatus: return "OfflineStatus";
    case ApiKind::FileList: return "FileList";
    case ApiKind::FetchProgress: return "FetchProgress";
    case ApiKind::Error: return "Error";
  }
  return "?";
}

/// Only render frames may be shed when a client falls behind.
constexpr bool droppable(ApiKind k) noexcept { return k == ApiKind::RenderFrame; }

struct ApiMessage {
  std::uint64_t seq = 0;
  std::int64_t server_ts_us = 0;  // wall clock, Unix microseconds
  ApiKind kind = ApiKind::Error;
  Json body;

  Json to_json() const { return Json{{"seq", seq}, {"server_ts", server_ts_us}, {"kind", to_string(kind)}, {"body", body}}; }
  std::string line() const { return to_json().dump() + "\n"; }
};

/// Gateway-level failures that have no module counterpart.
struct ApiError : std::runtime_error {
  ApiError(std::string code, int status, const std::string& message)
      : std::runtime_error(message), code(std::move(code)), status(status) {}
  std::string code;
  int status;
};

inline ApiError bad_request(const std::string& m) { return {"BadRequest", 400, m}; }
inline ApiError not_found(const std::string& m) { return {"NotFound", 404, m}; }
inline ApiError not_operator(const std::string& m) { return {"NotOperator", 403, m}; }
inline ApiError not_connected(const std::string& m) { return {"NotConnected", 409, m}; }
inline ApiError no_session(const std::string& m) { return {"NoSession", 409, m}; }
inline ApiError busy(const std::string& m) { return {"Busy", 409, m}; }

/// HTTP status for a module error; the code string is `to_string(Errc)`.
constexpr int http_status(Errc c) noexcept {
  switch (c) {
    case Errc::BadArgument:
    case Errc::ParseError:
    case Errc::WindowViolation:
      return 400;
    case Errc::UnknownDevice:
    case Errc::NoSuchFile:
      return 404;
    case Errc::InvalidTransition:
    case Errc::AlreadyConnected:
    case Errc::FlashFull:
    case Errc::BatteryEmpty:
      return 409;
    case Errc::Timeout:
    case Errc::Disconnected:
      return 504;
    case Errc::CrcMismatch:
    case Errc::BadCrc:
    case Errc::Truncated:
    case Errc::MalformedPayload:
    case Errc::OversizedPayload:
    case Errc::UnknownOpcode:
    case Errc::NotConverged:
      return 502;
    case Errc::TraceExhausted:
    case Errc::IoError:
      return 500;
  }
  return 500;
}

inline Json error_body(std::string_view code, const std::string& message) {
  return Json{{"code", code}, {"message", message}};
}

inline std::int64_t wall_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace ringkit::gateway
