#pragma once

#include <compare>
#include <string>

namespace temnet {

// Calendar date (no time of day). Trading-session effects are handled by the
// lag policy, never by timestamps.
struct Date {
    int year = 0;
    int month = 0; // 1..12
    int day = 0;   // 1..31

    auto operator<=>(const Date&) const = default;

    // Months since year 0, used for calendar-window arithmetic.
    int month_index() const { return year * 12 + (month - 1); }
};

// Parses a strict `YYYY-MM-DD` date. Throws DataError on malformed input.
Date parse_date(const std::string& s);

std::string to_string(const Date& d);

// Calendar-month difference b - a, ignoring the day of month.
inline int months_between(const Date& a, const Date& b) {
    return b.month_index() - a.month_index();
}

// Date shifted by a number of calendar months; the day is kept as-is.
Date add_months(const Date& d, int months);

} // namespace temnet
