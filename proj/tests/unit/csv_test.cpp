#include <catch2/catch_amalgamated.hpp>

#include "gaitvel/csv.hpp"

#include <random>
#include <sstream>

using namespace gaitvel;

TEST_CASE("csv line splitting keeps empty fields", "[csv]") {
    REQUIRE(split_csv_line("a,b,c") == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(split_csv_line("a,,c") == std::vector<std::string>{"a", "", "c"});
    REQUIRE(split_csv_line("") == std::vector<std::string>{""});
    REQUIRE(split_csv_line(",") == std::vector<std::string>{"", ""});
}

TEST_CASE("csv reader tracks line numbers and strips cr", "[csv]") {
    std::istringstream in("h1,h2\r\nv1,v2\n\nv3,v4\n");
    CsvReader reader(in);
    CsvRow row;
    REQUIRE(reader.next(row));
    REQUIRE(row.fields == std::vector<std::string>{"h1", "h2"});
    REQUIRE(row.line_no == 1);
    REQUIRE(reader.next(row));
    REQUIRE(row.fields == std::vector<std::string>{"v1", "v2"});
    REQUIRE(reader.next(row)); // blank line skipped
    REQUIRE(row.fields == std::vector<std::string>{"v3", "v4"});
    REQUIRE(row.line_no == 4);
    REQUIRE_FALSE(reader.next(row));
}

TEST_CASE("header check names the offending file kind", "[csv]") {
    std::istringstream in("wrong,header\n");
    CsvReader reader(in);
    REQUIRE_THROWS_WITH(expect_header(reader, "a,b", "events csv"),
                        Catch::Matchers::ContainsSubstring("events csv"));
}

TEST_CASE("numeric field parsing rejects junk with line context", "[csv]") {
    REQUIRE(parse_double_field("3.25", "x", 4, "f") == 3.25);
    REQUIRE(parse_int_field("-17", "x", 4, "f") == -17);
    REQUIRE_THROWS_AS(parse_double_field("3.2x", "x", 4, "f"), Error);
    REQUIRE_THROWS_AS(parse_double_field("", "x", 4, "f"), Error);
    REQUIRE_THROWS_AS(parse_double_field("nan", "x", 4, "f"), Error);
    REQUIRE_THROWS_AS(parse_int_field("1.5", "x", 4, "f"), Error);
    REQUIRE_THROWS_WITH(parse_double_field("bad", "things csv", 42, "seconds"),
                        Catch::Matchers::ContainsSubstring("42"));
}

TEST_CASE("double formatting survives a parse round trip", "[csv]") {
    REQUIRE(format_double(1.0) == "1");
    REQUIRE(format_double(0.5) == "0.5");
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 5000; ++i) {
        const double v = u(rng);
        REQUIRE(std::stod(format_double(v)) == v);
    }
    // exponents and tiny magnitudes too
    std::uniform_real_distribution<double> mag(-300, 300);
    for (int i = 0; i < 500; ++i) {
        const double v = std::pow(10.0, mag(rng));
        REQUIRE(std::stod(format_double(v)) == v);
    }
}
