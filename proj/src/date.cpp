#include "meltcast/date.hpp"

#include <charconv>
#include <cstdio>

#include "meltcast/errors.hpp"

namespace meltcast {

using namespace std::chrono;

Date::Date(int y, unsigned m, unsigned d) {
    const year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "invalid calendar date %04d-%02u-%02u", y, m, d);
        throw DomainError(buf);
    }
    days_ = std::chrono::sys_days{ymd};
}

std::optional<Date> Date::parse_iso(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    const char* s = text.data();
    if (std::from_chars(s, s + 4, y).ptr != s + 4) return std::nullopt;
    if (std::from_chars(s + 5, s + 7, m).ptr != s + 7) return std::nullopt;
    if (std::from_chars(s + 8, s + 10, d).ptr != s + 10) return std::nullopt;
    const year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date(std::chrono::sys_days{ymd});
}

std::string Date::iso() const {
    const year_month_day ymd{days_};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

int Date::year() const { return static_cast<int>(year_month_day{days_}.year()); }
unsigned Date::month() const { return static_cast<unsigned>(year_month_day{days_}.month()); }
unsigned Date::day() const { return static_cast<unsigned>(year_month_day{days_}.day()); }

int Date::day_of_year() const {
    return static_cast<int>(days_between(first_of_year(year()), *this)) + 1;
}

Date first_of_year(int y) { return Date(y, 1, 1); }
Date last_of_year(int y) { return Date(y, 12, 31); }
int days_in_year(int y) { return year{y}.is_leap() ? 366 : 365; }

}  // namespace meltcast
