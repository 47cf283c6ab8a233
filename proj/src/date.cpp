#include "localdiff/date.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <stdexcept>

namespace localdiff {

namespace {

std::chrono::year_month_day ymd_of(int serial) {
    std::chrono::sys_days sd{std::chrono::days{serial}};
    return std::chrono::year_month_day{sd};
}

bool parse_uint(std::string_view s, unsigned& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

} // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
    std::chrono::year_month_day ymd{std::chrono::year{year},
                                    std::chrono::month{month},
                                    std::chrono::day{day}};
    if (!ymd.ok()) throw std::logic_error("Date::from_ymd: invalid date");
    std::chrono::sys_days sd{ymd};
    return Date(static_cast<int>(sd.time_since_epoch().count()));
}

std::optional<Date> Date::parse(std::string_view iso) {
    // YYYY-MM-DD, fixed width, no trailing characters.
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
    unsigned y = 0, m = 0, d = 0;
    if (!parse_uint(iso.substr(0, 4), y)) return std::nullopt;
    if (!parse_uint(iso.substr(5, 2), m)) return std::nullopt;
    if (!parse_uint(iso.substr(8, 2), d)) return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(y)},
                                    std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    std::chrono::sys_days sd{ymd};
    return Date(static_cast<int>(sd.time_since_epoch().count()));
}

int Date::year() const { return static_cast<int>(ymd_of(serial_).year()); }
unsigned Date::month() const { return static_cast<unsigned>(ymd_of(serial_).month()); }
unsigned Date::day() const { return static_cast<unsigned>(ymd_of(serial_).day()); }

bool Date::is_leap_year(int year) {
    return std::chrono::year{year}.is_leap();
}

Date Date::prior_year() const {
    auto ymd = ymd_of(serial_);
    if (is_feb29()) throw std::logic_error("Date::prior_year: Feb 29 has no prior-year twin");
    return from_ymd(static_cast<int>(ymd.year()) - 1,
                    static_cast<unsigned>(ymd.month()),
                    static_cast<unsigned>(ymd.day()));
}

std::string Date::to_string() const {
    auto ymd = ymd_of(serial_);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::optional<MonthKey> MonthKey::parse(std::string_view ym) {
    if (ym.size() != 7 || ym[4] != '-') return std::nullopt;
    unsigned y = 0, m = 0;
    if (!parse_uint(ym.substr(0, 4), y)) return std::nullopt;
    if (!parse_uint(ym.substr(5, 2), m)) return std::nullopt;
    if (m < 1 || m > 12) return std::nullopt;
    return MonthKey{static_cast<int>(y), m};
}

std::string MonthKey::to_string() const {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%04d-%02u", year, month);
    return buf;
}

} // namespace localdiff
