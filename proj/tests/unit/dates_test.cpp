#include <catch2/catch_amalgamated.hpp>

#include "gaitvel/dates.hpp"

#include <random>

using namespace gaitvel;

TEST_CASE("civil day number round trips across a wide year range", "[dates]") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::int64_t> day(days_from_civil({1900, 1, 1}),
                                                    days_from_civil({2100, 12, 31}));
    for (int i = 0; i < 5000; ++i) {
        const std::int64_t z = day(rng);
        REQUIRE(days_from_civil(civil_from_days(z)) == z);
    }
    REQUIRE(days_from_civil({1970, 1, 1}) == 0);
    REQUIRE(days_from_civil({1970, 1, 2}) == 1);
    REQUIRE(days_from_civil({1969, 12, 31}) == -1);
}

TEST_CASE("consecutive civil days step by exactly one", "[dates]") {
    CivilDate d{2012, 2, 27}; // leap year boundary walk
    const std::int64_t start = days_from_civil(d);
    for (int i = 1; i <= 10; ++i) {
        const CivilDate next = civil_from_days(start + i);
        REQUIRE(days_from_civil(next) == start + i);
        REQUIRE(is_valid_date(next));
    }
    REQUIRE(format_date(civil_from_days(days_from_civil({2012, 2, 28}) + 1)) == "2012-02-29");
    REQUIRE(format_date(civil_from_days(days_from_civil({2013, 2, 28}) + 1)) == "2013-03-01");
}

TEST_CASE("date validation rejects malformed calendar entries", "[dates]") {
    REQUIRE(is_valid_date({2020, 2, 29}));
    REQUIRE_FALSE(is_valid_date({2021, 2, 29}));
    REQUIRE_FALSE(is_valid_date({2021, 13, 1}));
    REQUIRE_FALSE(is_valid_date({2021, 0, 1}));
    REQUIRE_FALSE(is_valid_date({2021, 4, 31}));
}

TEST_CASE("date text parse and format round trip", "[dates]") {
    REQUIRE(format_date(parse_date("2010-03-01")) == "2010-03-01");
    REQUIRE(parse_date("1999-12-31").year == 1999);
    REQUIRE_THROWS_AS(parse_date("2010-13-01"), Error);
    REQUIRE_THROWS_AS(parse_date("2010-3-1"), Error);
    REQUIRE_THROWS_AS(parse_date("garbage"), Error);
    REQUIRE_THROWS_AS(parse_date("2010-02-30"), Error);
}

TEST_CASE("rfc3339 parse and format round trip", "[dates]") {
    const Timestamp t = parse_rfc3339("2010-03-01T12:30:45.250Z");
    REQUIRE(format_rfc3339(t) == "2010-03-01T12:30:45.250Z");
    REQUIRE(parse_rfc3339("1970-01-01T00:00:00.000Z").ms == 0);
    REQUIRE(parse_rfc3339("1970-01-01T00:00:01.000Z").ms == 1000);
    REQUIRE_THROWS_AS(parse_rfc3339("2010-03-01 12:30:45Z"), Error);
    REQUIRE_THROWS_AS(parse_rfc3339("2010-03-01T25:00:00Z"), Error);

    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::int64_t> ms(kMinEventMs, kMaxEventMs - 1);
    for (int i = 0; i < 2000; ++i) {
        const Timestamp x{ms(rng)};
        REQUIRE(parse_rfc3339(format_rfc3339(x)).ms == x.ms);
    }
}

TEST_CASE("local date respects the timezone offset", "[dates]") {
    const Timestamp t = parse_rfc3339("2010-03-01T00:30:00.000Z");
    REQUIRE(format_date(local_date(t, 0)) == "2010-03-01");
    REQUIRE(format_date(local_date(t, -60)) == "2010-02-28"); // half past midnight UTC is previous day at UTC-1
    REQUIRE(format_date(local_date(t, 60)) == "2010-03-01");

    const Timestamp late = parse_rfc3339("2010-03-01T23:30:00.000Z");
    REQUIRE(format_date(local_date(late, 60)) == "2010-03-02");

    // midnight boundary is exact: local_midnight maps back to the same date
    const CivilDate d{2010, 3, 1};
    for (int tz : {-480, -60, 0, 330, 540}) {
        REQUIRE(format_date(local_date(local_midnight(d, tz), tz)) == "2010-03-01");
        REQUIRE(format_date(local_date({local_midnight(d, tz).ms - 1}, tz)) == "2010-02-28");
    }
}
