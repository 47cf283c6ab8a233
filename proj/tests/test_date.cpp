#include "localdiff/date.hpp"

#include <doctest.h>

#include <cstdint>
#include <stdexcept>

using localdiff::Date;
using localdiff::DateInterval;
using localdiff::MonthKey;

TEST_CASE("epoch and ymd round trips") {
    CHECK(Date::from_ymd(1970, 1, 1).serial() == 0);
    CHECK(Date::from_ymd(1970, 1, 2).serial() == 1);
    CHECK(Date::from_ymd(1969, 12, 31).serial() == -1);

    const Date d = Date::from_ymd(2020, 2, 29);
    CHECK(d.year() == 2020);
    CHECK(d.month() == 2);
    CHECK(d.day() == 29);
    CHECK(d.to_string() == "2020-02-29");
}

TEST_CASE("parse accepts only strict ISO dates") {
    CHECK(Date::parse("2020-07-30") == Date::from_ymd(2020, 7, 30));
    CHECK(Date::parse("2020-02-29").has_value()); // leap year
    CHECK_FALSE(Date::parse("2019-02-29").has_value());
    CHECK_FALSE(Date::parse("2020-13-01").has_value());
    CHECK_FALSE(Date::parse("2020-00-10").has_value());
    CHECK_FALSE(Date::parse("2020-04-31").has_value());
    CHECK_FALSE(Date::parse("2020-4-01").has_value());
    CHECK_FALSE(Date::parse("2020-04-1").has_value());
    CHECK_FALSE(Date::parse("20-04-01").has_value());
    CHECK_FALSE(Date::parse("2020/04/01").has_value());
    CHECK_FALSE(Date::parse("2020-04-01 ").has_value());
    CHECK_FALSE(Date::parse(" 2020-04-01").has_value());
    CHECK_FALSE(Date::parse("2020-04-01x").has_value());
    CHECK_FALSE(Date::parse("").has_value());
}

TEST_CASE("string round trip over a serial sweep") {
    // Covers month ends, leap days and year boundaries around 2018..2021.
    for (int serial = Date::from_ymd(2018, 1, 1).serial();
         serial <= Date::from_ymd(2021, 12, 31).serial(); ++serial) {
        const Date d(serial);
        const auto back = Date::parse(d.to_string());
        REQUIRE(back.has_value());
        CHECK(back->serial() == serial);
    }
}

TEST_CASE("leap year rule") {
    CHECK(Date::is_leap_year(2020));
    CHECK(Date::is_leap_year(2000));
    CHECK_FALSE(Date::is_leap_year(1900));
    CHECK_FALSE(Date::is_leap_year(2019));
    CHECK_FALSE(Date::is_leap_year(2100));
}

TEST_CASE("day arithmetic and ordering") {
    const Date d = Date::from_ymd(2020, 2, 28);
    CHECK((d + 1).to_string() == "2020-02-29");
    CHECK((d + 2).to_string() == "2020-03-01");
    CHECK((d - 28).to_string() == "2020-01-31");
    CHECK(Date::from_ymd(2020, 3, 1) - d == 2);
    CHECK(d < d + 1);
    Date e = d;
    ++e;
    CHECK(e - d == 1);
}

TEST_CASE("prior_year maps the same month-day") {
    CHECK(Date::from_ymd(2020, 3, 15).prior_year() == Date::from_ymd(2019, 3, 15));
    CHECK(Date::from_ymd(2020, 2, 28).prior_year() == Date::from_ymd(2019, 2, 28));
    CHECK(Date::from_ymd(2021, 1, 1).prior_year() == Date::from_ymd(2020, 1, 1));
    CHECK(Date::from_ymd(2020, 2, 29).is_feb29());
    CHECK_THROWS_AS((void)Date::from_ymd(2020, 2, 29).prior_year(), std::logic_error);
}

TEST_CASE("interval length and membership") {
    const DateInterval iv{Date::from_ymd(2020, 1, 8), Date::from_ymd(2020, 1, 28)};
    CHECK(iv.valid());
    CHECK(iv.length() == 21);
    CHECK(iv.contains(iv.begin));
    CHECK(iv.contains(iv.end));
    CHECK_FALSE(iv.contains(iv.begin - 1));
    CHECK_FALSE(iv.contains(iv.end + 1));
    const DateInterval bad{Date::from_ymd(2020, 2, 1), Date::from_ymd(2020, 1, 1)};
    CHECK_FALSE(bad.valid());
}

TEST_CASE("month keys") {
    const auto mk = MonthKey::parse("2020-07");
    REQUIRE(mk.has_value());
    CHECK(mk->year == 2020);
    CHECK(mk->month == 7);
    CHECK(mk->to_string() == "2020-07");
    CHECK_FALSE(MonthKey::parse("2020-7").has_value());
    CHECK_FALSE(MonthKey::parse("2020-13").has_value());
    CHECK_FALSE(MonthKey::parse("2020-00").has_value());
    CHECK_FALSE(MonthKey::parse("2020-07-01").has_value());
    CHECK_FALSE(MonthKey::parse("").has_value());

    CHECK(MonthKey::of(Date::from_ymd(2020, 2, 29)) == MonthKey{2020, 2});
    CHECK(MonthKey{2020, 2}.prior_year() == MonthKey{2019, 2});
    CHECK(MonthKey{2019, 12} < MonthKey{2020, 1});
}
