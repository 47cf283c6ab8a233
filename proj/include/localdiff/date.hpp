#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace localdiff {

/// Calendar date with day precision, stored as days since 1970-01-01.
/// Cheap to copy and to do day arithmetic on; converts to and from
/// (year, month, day) when calendar structure is needed.
class Date {
public:
    Date() : serial_(0) {}
    explicit Date(int serial) : serial_(serial) {}

    static Date from_ymd(int year, unsigned month, unsigned day);

    /// Parses strict ISO-8601 `YYYY-MM-DD`. Returns nullopt on any deviation,
    /// including out-of-range month/day combinations.
    static std::optional<Date> parse(std::string_view iso);

    int serial() const { return serial_; }
    int year() const;
    unsigned month() const;
    unsigned day() const;

    bool is_feb29() const { return month() == 2 && day() == 29; }
    static bool is_leap_year(int year);

    /// Same month-day one year earlier. Not defined for Feb 29 (callers
    /// handle that date explicitly); throws std::logic_error if violated.
    Date prior_year() const;

    std::string to_string() const;

    Date operator+(int days) const { return Date(serial_ + days); }
    Date operator-(int days) const { return Date(serial_ - days); }
    int operator-(Date other) const { return serial_ - other.serial_; }
    Date& operator++() { ++serial_; return *this; }
    auto operator<=>(const Date&) const = default;

private:
    int serial_;
};

/// Inclusive date interval [begin, end].
struct DateInterval {
    Date begin;
    Date end;

    int length() const { return end - begin + 1; }
    bool contains(Date d) const { return begin <= d && d <= end; }
    bool valid() const { return begin <= end; }
};

/// Calendar month key, e.g. for monthly roll-ups.
struct MonthKey {
    int year = 0;
    unsigned month = 0;

    static std::optional<MonthKey> parse(std::string_view ym); // "YYYY-MM"
    static MonthKey of(Date d) { return {d.year(), d.month()}; }

    MonthKey prior_year() const { return {year - 1, month}; }
    std::string to_string() const;
    auto operator<=>(const MonthKey&) const = default;
};

} // namespace localdiff
