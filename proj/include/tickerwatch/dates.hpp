#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace tickerwatch {

/// Calendar date stored as days since 1970-01-01 (UTC).
class Date {
 public:
  Date() = default;

  static Date from_serial(int days) {
    Date d;
    d.serial_ = days;
    return d;
  }
  static Date from_ymd(int year, int month, int day);

  /// Parses "YYYY-MM-DD"; throws InputError otherwise.
  static Date parse(std::string_view text);
  static std::optional<Date> try_parse(std::string_view text);

  int serial() const { return serial_; }
  int year() const;
  int month() const;
  int day() const;

  /// 0 = Monday .. 6 = Sunday.
  int weekday() const;
  bool is_weekend() const { return weekday() >= 5; }

  std::string to_string() const;  // YYYY-MM-DD

  Date& operator+=(int days) {
    serial_ += days;
    return *this;
  }
  friend Date operator+(Date d, int days) { return Date::from_serial(d.serial_ + days); }
  friend Date operator-(Date d, int days) { return Date::from_serial(d.serial_ - days); }
  friend int operator-(Date a, Date b) { return a.serial_ - b.serial_; }
  auto operator<=>(const Date&) const = default;

 private:
  int serial_ = 0;
};

/// UTC calendar date of an ISO-8601 timestamp, e.g. "2021-01-14T13:05:22Z"
/// or "2021-01-14 13:05:22". Throws InputError when unparsable.
Date date_of_timestamp(std::string_view iso);

}  // namespace tickerwatch
