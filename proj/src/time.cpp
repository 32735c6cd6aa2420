#include "crowdcafe/time.hpp"

#include <chrono>
#include <cstdio>

#include "crowdcafe/error.hpp"

namespace crowdcafe {

namespace {

// Howard Hinnant's civil calendar algorithms.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

[[noreturn]] void bad(std::string_view text) {
  throw Error(Errc::invalid_argument, "malformed timestamp '" + std::string(text) + "'");
}

int digits(std::string_view text, std::size_t pos, std::size_t n) {
  if (pos + n > text.size()) bad(text);
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (text[i] < '0' || text[i] > '9') bad(text);
    v = v * 10 + (text[i] - '0');
  }
  return v;
}

}  // namespace

std::string to_rfc3339(Timestamp t) {
  const std::int64_t days = floor_div(t.millis, 86'400'000);
  std::int64_t rem = t.millis - days * 86'400'000;
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  const int hh = static_cast<int>(rem / 3'600'000);
  rem %= 3'600'000;
  const int mm = static_cast<int>(rem / 60'000);
  rem %= 60'000;
  const int ss = static_cast<int>(rem / 1000);
  const int ms = static_cast<int>(rem % 1000);
  char buf[40];
  if (ms == 0) {
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02dZ",
                  static_cast<long long>(y), m, d, hh, mm, ss);
  } else {
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<long long>(y), m, d, hh, mm, ss, ms);
  }
  return buf;
}

Timestamp parse_rfc3339(std::string_view text) {
  if (text.size() < 20) bad(text);
  const int y = digits(text, 0, 4);
  if (text[4] != '-') bad(text);
  const int mo = digits(text, 5, 2);
  if (text[7] != '-') bad(text);
  const int d = digits(text, 8, 2);
  if (text[10] != 'T' && text[10] != 't') bad(text);
  const int hh = digits(text, 11, 2);
  if (text[13] != ':') bad(text);
  const int mi = digits(text, 14, 2);
  if (text[16] != ':') bad(text);
  const int ss = digits(text, 17, 2);
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || hh > 23 || mi > 59 || ss > 60) bad(text);

  std::size_t pos = 19;
  std::int64_t frac_ms = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    int scale = 100;
    const std::size_t start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      frac_ms += (text[pos] - '0') * scale;
      scale /= 10;
      ++pos;
    }
    if (pos == start) bad(text);
  }
  if (pos >= text.size()) bad(text);
  std::int64_t offset_min = 0;
  if (text[pos] == 'Z' || text[pos] == 'z') {
    ++pos;
  } else if (text[pos] == '+' || text[pos] == '-') {
    const int sign = text[pos] == '-' ? -1 : 1;
    const int oh = digits(text, pos + 1, 2);
    if (pos + 3 >= text.size() || text[pos + 3] != ':') bad(text);
    const int om = digits(text, pos + 4, 2);
    offset_min = sign * (oh * 60 + om);
    pos += 6;
  } else {
    bad(text);
  }
  if (pos != text.size()) bad(text);

  const std::int64_t days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  const std::int64_t secs = days * 86'400 + hh * 3600 + mi * 60 + ss - offset_min * 60;
  return Timestamp{secs * 1000 + frac_ms};
}

Timestamp system_now() {
  using namespace std::chrono;
  return Timestamp{duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count()};
}

}  // namespace crowdcafe
