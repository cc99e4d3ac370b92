#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace meltcast {

/// Calendar date (proleptic Gregorian), backed by std::chrono.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
    Date(int year, unsigned month, unsigned day);

    /// Parses `YYYY-MM-DD`. Returns nullopt for anything else, including
    /// impossible dates such as 2023-02-29.
    static std::optional<Date> parse_iso(std::string_view text);

    [[nodiscard]] std::string iso() const;
    [[nodiscard]] int year() const;
    [[nodiscard]] unsigned month() const;
    [[nodiscard]] unsigned day() const;
    /// 1-based ordinal day within the year (366 on Dec 31 of a leap year).
    [[nodiscard]] int day_of_year() const;

    [[nodiscard]] Date plus_days(int n) const { return Date(days_ + std::chrono::days(n)); }
    [[nodiscard]] std::chrono::sys_days sys_days() const { return days_; }
    [[nodiscard]] long serial() const { return days_.time_since_epoch().count(); }

    friend constexpr auto operator<=>(const Date&, const Date&) = default;
    friend constexpr bool operator==(const Date&, const Date&) = default;

private:
    std::chrono::sys_days days_{};
};

/// Signed number of days from `a` to `b`.
[[nodiscard]] inline long days_between(const Date& a, const Date& b) {
    return b.serial() - a.serial();
}

[[nodiscard]] Date first_of_year(int year);
[[nodiscard]] Date last_of_year(int year);
[[nodiscard]] int days_in_year(int year);

}  // namespace meltcast
