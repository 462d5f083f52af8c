#include "edgetag/time_util.hpp"

#include <charconv>
#include <cstdio>

namespace edgetag {
namespace {

constexpr std::int64_t kNsPerSec = 1'000'000'000;

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  std::int64_t year;
  unsigned month, day;
};

Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

struct Split {
  Civil date;
  unsigned hour, minute, second;
  std::int64_t nanos;
};

Split split(std::int64_t unix_ns) {
  std::int64_t secs = unix_ns / kNsPerSec;
  std::int64_t nanos = unix_ns % kNsPerSec;
  if (nanos < 0) {
    nanos += kNsPerSec;
    --secs;
  }
  std::int64_t days = secs / 86400;
  std::int64_t rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  return {civil_from_days(days), static_cast<unsigned>(rem / 3600),
          static_cast<unsigned>(rem % 3600 / 60), static_cast<unsigned>(rem % 60), nanos};
}

bool read_uint(std::string_view text, std::size_t pos, std::size_t len, unsigned& out) {
  if (pos + len > text.size()) return false;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
  return ec == std::errc{} && ptr == text.data() + pos + len;
}

}  // namespace

std::string format_iso8601(std::int64_t unix_ns) {
  const Split s = split(unix_ns);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02u:%02u:%02u.%09lldZ",
                static_cast<long long>(s.date.year), s.date.month, s.date.day, s.hour, s.minute,
                s.second, static_cast<long long>(s.nanos));
  return buf;
}

std::string format_iso8601_basic_ms(std::int64_t unix_ns) {
  const Split s = split(unix_ns);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04lld%02u%02uT%02u%02u%02u.%03lldZ",
                static_cast<long long>(s.date.year), s.date.month, s.date.day, s.hour, s.minute,
                s.second, static_cast<long long>(s.nanos / 1'000'000));
  return buf;
}

std::optional<std::int64_t> parse_iso8601(std::string_view text) {
  unsigned year, month, day, hour, minute, second;
  if (text.size() < 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':' || text.back() != 'Z')
    return std::nullopt;
  if (!read_uint(text, 0, 4, year) || !read_uint(text, 5, 2, month) ||
      !read_uint(text, 8, 2, day) || !read_uint(text, 11, 2, hour) ||
      !read_uint(text, 14, 2, minute) || !read_uint(text, 17, 2, second))
    return std::nullopt;
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60)
    return std::nullopt;

  std::int64_t nanos = 0;
  std::size_t pos = 19;
  if (text[pos] == '.') {
    ++pos;
    std::int64_t scale = 100'000'000;
    std::size_t digits = 0;
    while (pos < text.size() - 1) {
      const char c = text[pos++];
      if (c < '0' || c > '9' || ++digits > 9) return std::nullopt;
      nanos += (c - '0') * scale;
      scale /= 10;
    }
    if (digits == 0) return std::nullopt;
  } else if (pos != text.size() - 1) {
    return std::nullopt;
  }
  const std::int64_t days = days_from_civil(year, month, day);
  return ((days * 86400 + hour * 3600 + minute * 60 + second) * kNsPerSec) + nanos;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

}  // namespace edgetag
