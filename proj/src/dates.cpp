#include "tickerwatch/dates.hpp"

#include <cstdio>

#include "tickerwatch/common.hpp"

namespace tickerwatch {
namespace {

// Civil-date conversions after Howard Hinnant's algorithms; valid for the
// full range of int days around the 1970 epoch.
int days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(int z, int& y, int& m, int& d) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int yr = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  y = yr + (m <= 2);
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  int v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace

Date Date::from_ymd(int year, int month, int day) {
  return Date::from_serial(days_from_civil(year, month, day));
}

std::optional<Date> Date::try_parse(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y, m, d;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
      !parse_int(text.substr(8, 2), d))
    return std::nullopt;
  if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  return Date::from_ymd(y, m, d);
}

Date Date::parse(std::string_view text) {
  auto d = try_parse(text);
  if (!d) throw InputError("bad date '" + std::string(text) + "' (expected YYYY-MM-DD)");
  return *d;
}

int Date::year() const {
  int y, m, d;
  civil_from_days(serial_, y, m, d);
  return y;
}

int Date::month() const {
  int y, m, d;
  civil_from_days(serial_, y, m, d);
  return m;
}

int Date::day() const {
  int y, m, d;
  civil_from_days(serial_, y, m, d);
  return d;
}

int Date::weekday() const {
  // 1970-01-01 was a Thursday.
  int w = (serial_ + 3) % 7;
  return w < 0 ? w + 7 : w;
}

std::string Date::to_string() const {
  int y, m, d;
  civil_from_days(serial_, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

Date date_of_timestamp(std::string_view iso) {
  iso = trim(iso);
  if (iso.size() < 10)
    throw InputError("bad timestamp '" + std::string(iso) + "' (expected ISO-8601 UTC)");
  return Date::parse(iso.substr(0, 10));
}

}  // namespace tickerwatch
