#pragma once

#include <compare>
#include <string>
#include <vector>

namespace amf {

// Calendar date. Weekly data uses one Date per period end.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;

  // days since 1970-01-01 (proleptic Gregorian)
  long serial() const;
  static Date from_serial(long days);

  Date plus_days(int days) const { return from_serial(serial() + days); }
  Date plus_weeks(int weeks) const { return plus_days(7 * weeks); }

  std::string to_string() const;  // ISO-8601 yyyy-mm-dd
};

// Parses strict ISO-8601 yyyy-mm-dd; throws Parse error otherwise.
Date parse_date(const std::string& text);

// Half-year bucket label, e.g. "2012H1" (Jan-Jun) / "2012H2" (Jul-Dec).
std::string half_year_bucket(const Date& d);

}  // namespace amf
