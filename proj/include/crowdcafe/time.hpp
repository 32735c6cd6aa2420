#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace crowdcafe {

// UTC instant with millisecond resolution.
struct Timestamp {
  std::int64_t millis = 0;

  static Timestamp from_seconds(double s) {
    return Timestamp{static_cast<std::int64_t>(s * 1000.0 + (s >= 0 ? 0.5 : -0.5))};
  }

  Timestamp plus_seconds(double s) const {
    return Timestamp{millis + static_cast<std::int64_t>(s * 1000.0 + (s >= 0 ? 0.5 : -0.5))};
  }

  auto operator<=>(const Timestamp&) const = default;
};

inline double seconds_between(Timestamp from, Timestamp to) {
  return static_cast<double>(to.millis - from.millis) / 1000.0;
}

/// "2014-05-12T10:01:27.500Z"; the fraction is omitted when zero.
std::string to_rfc3339(Timestamp t);

/// Accepts "YYYY-MM-DDTHH:MM:SS[.fff...](Z|+hh:mm|-hh:mm)". Throws
/// Error(invalid_argument) on anything else.
Timestamp parse_rfc3339(std::string_view text);

Timestamp system_now();

using Clock = std::function<Timestamp()>;

}  // namespace crowdcafe
