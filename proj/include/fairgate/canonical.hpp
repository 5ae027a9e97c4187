#pragma once

// Canonical JSON, SHA-256 digests and RFC3339 timestamps. The canonical JSON
// form (sorted keys, no insignificant whitespace, UTF-8, shortest round-trip
// reals) is the hashing form used everywhere a digest is computed.

#include <openssl/evp.h>

#include <charconv>
#include <cstdint>
#include <ctime>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fairgate/errors.hpp"

namespace fairgate {

using json = nlohmann::json;

// nlohmann::json with the default std::map object type already keeps keys
// sorted; dump() emits no whitespace and shortest round-trip doubles.
inline std::string canonical_dump(const json& j) { return j.dump(); }

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(Errc::InvalidValue, "sha256 digest failed");
  }
  static const char* hexchars = "0123456789abcdef";
  std::string out;
  out.resize(static_cast<size_t>(len) * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hexchars[digest[i] >> 4];
    out[2 * i + 1] = hexchars[digest[i] & 0xF];
  }
  return out;
}

inline std::string sha256_hex_json(const json& j) {
  return sha256_hex(canonical_dump(j));
}

inline bool is_hex_digest(std::string_view s) {
  if (s.size() != 64) return false;
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

// Shortest decimal form that round-trips through a double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// RFC3339 UTC instants, seconds precision, 'Z' suffix. Fractional seconds are
// accepted on parse and truncated.

struct Rfc3339 {
  std::int64_t epoch_seconds = 0;
};

inline bool is_leap_year(int y) {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

inline int days_in_month(int y, int m) {
  static const int d[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap_year(y)) return 29;
  return d[m - 1];
}

inline std::optional<Rfc3339> parse_rfc3339(std::string_view s) {
  // YYYY-MM-DDTHH:MM:SS[.frac]Z
  if (s.size() < 20) return std::nullopt;
  auto digits = [&](size_t pos, size_t n, int& out) {
    out = 0;
    for (size_t i = pos; i < pos + n; ++i) {
      if (i >= s.size() || s[i] < '0' || s[i] > '9') return false;
      out = out * 10 + (s[i] - '0');
    }
    return true;
  };
  int year, month, day, hour, minute, second;
  if (!digits(0, 4, year) || s[4] != '-' || !digits(5, 2, month) ||
      s[7] != '-' || !digits(8, 2, day) || (s[10] != 'T' && s[10] != 't') ||
      !digits(11, 2, hour) || s[13] != ':' || !digits(14, 2, minute) ||
      s[16] != ':' || !digits(17, 2, second)) {
    return std::nullopt;
  }
  size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    size_t fstart = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == fstart) return std::nullopt;
  }
  if (pos + 1 != s.size() || (s[pos] != 'Z' && s[pos] != 'z')) {
    return std::nullopt;
  }
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month) ||
      hour > 23 || minute > 59 || second > 60) {
    return std::nullopt;
  }
  // Days since 1970-01-01 (civil-from-days inverse, Howard Hinnant's algorithm).
  std::int64_t y = year;
  std::int64_t m = month;
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const std::int64_t yoe = y - era * 400;
  const std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  const std::int64_t days = era * 146097 + doe - 719468;
  return Rfc3339{days * 86400 + hour * 3600 + minute * 60 + second};
}

inline std::string format_rfc3339(std::int64_t epoch_seconds) {
  // civil-from-days
  std::int64_t z = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    z -= 1;
  }
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  std::int64_t y = yoe + era * 400;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const std::int64_t d = doy - (153 * mp + 2) / 5 + 1;
  const std::int64_t m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04lld-%02lld-%02lldT%02lld:%02lld:%02lldZ",
                static_cast<long long>(y), static_cast<long long>(m),
                static_cast<long long>(d), static_cast<long long>(rem / 3600),
                static_cast<long long>((rem / 60) % 60),
                static_cast<long long>(rem % 60));
  return std::string(buf);
}

// Canonical text for a parseable instant (normalizes case and drops any
// fractional part).
inline std::optional<std::string> normalize_rfc3339(std::string_view s) {
  auto t = parse_rfc3339(s);
  if (!t) return std::nullopt;
  return format_rfc3339(t->epoch_seconds);
}

inline std::string now_rfc3339() {
  return format_rfc3339(static_cast<std::int64_t>(std::time(nullptr)));
}

}  // namespace fairgate
