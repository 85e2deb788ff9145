#pragma once

#include <algorithm>
#include <chrono>
#include <vector>

#include "ringkit/transport/environment.hpp"

namespace ringkit::hostkit {

using DeviceSummary = transport::Advertisement;

enum class SortKey { Rssi, Battery, Name };

/// Scans for `duration` and sorts the result. Ties keep scan (MAC) order.
inline std::vector<DeviceSummary> discover(transport::Environment& env,
                                           std::chrono::microseconds duration = std::chrono::seconds(1),
                                           SortKey key = SortKey::Rssi) {
  auto list = env.scan(duration);
  switch (key) {
    case SortKey::Rssi:
      std::stable_sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.rssi_dbm > b.rssi_dbm; });
      break;
    case SortKey::Battery:
      std::stable_sort(list.begin(), list.end(),
                       [](const auto& a, const auto& b) { return a.battery_pct > b.battery_pct; });
      break;
    case SortKey::Name:
      std::stable_sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
      break;
  }
  return list;
}

}  // namespace ringkit::hostkit
