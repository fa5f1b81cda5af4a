#include "temnet/date.hpp"

#include <cstdio>

#include "temnet/error.hpp"

namespace temnet {

Date parse_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-')
        throw DataError("malformed date '" + s + "', expected YYYY-MM-DD");
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9')
            throw DataError("malformed date '" + s + "', expected YYYY-MM-DD");
    Date d;
    d.year = (s[0] - '0') * 1000 + (s[1] - '0') * 100 + (s[2] - '0') * 10 + (s[3] - '0');
    d.month = (s[5] - '0') * 10 + (s[6] - '0');
    d.day = (s[8] - '0') * 10 + (s[9] - '0');
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
        throw DataError("date '" + s + "' out of range");
    return d;
}

std::string to_string(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

Date add_months(const Date& d, int months) {
    int idx = d.month_index() + months;
    Date out;
    out.year = idx / 12;
    out.month = idx % 12 + 1;
    if (idx < 0 && idx % 12 != 0) { // floor division for pre-epoch dates
        out.year -= 1;
        out.month = idx % 12 + 13;
    }
    out.day = d.day;
    return out;
}

} // namespace temnet
