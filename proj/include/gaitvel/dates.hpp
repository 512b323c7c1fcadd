#pragma once

#include <cctype>
#include <charconv>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "gaitvel/error.hpp"

namespace gaitvel {

constexpr std::int64_t kMillisPerDay = 86'400'000;

// Proleptic Gregorian calendar date. Conversions use the classic
// days-from-civil / civil-from-days algorithms (era = 400-year blocks).
struct CivilDate {
    int year = 1970;
    unsigned month = 1; // 1..12
    unsigned day = 1;   // 1..31

    auto operator<=>(const CivilDate&) const = default;
};

inline std::int64_t days_from_civil(const CivilDate& d) {
    const int y = d.year - (d.month <= 2);
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (d.month + (d.month > 2 ? -3 : 9)) + 2) / 5 + d.day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned day = doy - (153 * mp + 2) / 5 + 1;
    const unsigned month = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (month <= 2)), month, day};
}

inline bool is_valid_date(const CivilDate& d) {
    if (d.month < 1 || d.month > 12 || d.day < 1) return false;
    static constexpr unsigned lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    unsigned len = lengths[d.month - 1];
    const bool leap = (d.year % 4 == 0 && d.year % 100 != 0) || d.year % 400 == 0;
    if (d.month == 2 && leap) len = 29;
    return d.day <= len;
}

// UTC instant with millisecond resolution.
struct Timestamp {
    std::int64_t ms = 0; // since 1970-01-01T00:00:00Z

    auto operator<=>(const Timestamp&) const = default;
};

inline constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

// Calendar day containing `t` when shifted into home-local time.
inline CivilDate local_date(Timestamp t, int tz_offset_minutes) {
    const std::int64_t local_ms = t.ms + static_cast<std::int64_t>(tz_offset_minutes) * 60'000;
    return civil_from_days(floor_div(local_ms, kMillisPerDay));
}

inline Timestamp local_midnight(const CivilDate& d, int tz_offset_minutes) {
    return Timestamp{days_from_civil(d) * kMillisPerDay -
                     static_cast<std::int64_t>(tz_offset_minutes) * 60'000};
}

namespace detail {

inline bool parse_uint(std::string_view s, unsigned& out) {
    if (s.empty()) return false;
    unsigned v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        v = v * 10 + static_cast<unsigned>(c - '0');
    }
    out = v;
    return true;
}

} // namespace detail

// "YYYY-MM-DD"
inline bool try_parse_date(std::string_view s, CivilDate& out) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    unsigned y, m, d;
    if (!detail::parse_uint(s.substr(0, 4), y) || !detail::parse_uint(s.substr(5, 2), m) ||
        !detail::parse_uint(s.substr(8, 2), d))
        return false;
    CivilDate cd{static_cast<int>(y), m, d};
    if (!is_valid_date(cd)) return false;
    out = cd;
    return true;
}

inline CivilDate parse_date(std::string_view s) {
    CivilDate d;
    if (!try_parse_date(s, d)) raise("invalid date '", std::string(s), "' (want YYYY-MM-DD)");
    return d;
}

inline std::string format_date(const CivilDate& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", d.year, d.month, d.day);
    return buf;
}

// RFC 3339 UTC timestamp: "YYYY-MM-DDTHH:MM:SS[.fff]Z". Fractional digits
// beyond milliseconds are rejected rather than silently truncated.
inline bool try_parse_rfc3339(std::string_view s, Timestamp& out) {
    if (s.size() < 20 || s.back() != 'Z') return false;
    if (s[10] != 'T' || s[13] != ':' || s[16] != ':') return false;
    CivilDate d;
    if (!try_parse_date(s.substr(0, 10), d)) return false;
    unsigned hh, mm, ss;
    if (!detail::parse_uint(s.substr(11, 2), hh) || !detail::parse_uint(s.substr(14, 2), mm) ||
        !detail::parse_uint(s.substr(17, 2), ss))
        return false;
    if (hh > 23 || mm > 59 || ss > 59) return false;
    unsigned frac_ms = 0;
    const std::string_view rest = s.substr(19, s.size() - 20);
    if (!rest.empty()) {
        if (rest[0] != '.' || rest.size() < 2 || rest.size() > 4) return false;
        unsigned v = 0;
        if (!detail::parse_uint(rest.substr(1), v)) return false;
        unsigned digits = static_cast<unsigned>(rest.size() - 1);
        for (unsigned i = digits; i < 3; ++i) v *= 10;
        frac_ms = v;
    }
    out.ms = days_from_civil(d) * kMillisPerDay +
             (static_cast<std::int64_t>(hh) * 3600 + mm * 60 + ss) * 1000 + frac_ms;
    return true;
}

inline Timestamp parse_rfc3339(std::string_view s) {
    Timestamp t;
    if (!try_parse_rfc3339(s, t))
        raise("invalid timestamp '", std::string(s), "' (want RFC 3339 UTC, e.g. 2010-03-01T08:00:00.000Z)");
    return t;
}

inline std::string format_rfc3339(Timestamp t) {
    const std::int64_t day = floor_div(t.ms, kMillisPerDay);
    std::int64_t rem = t.ms - day * kMillisPerDay;
    const CivilDate d = civil_from_days(day);
    const int ms = static_cast<int>(rem % 1000);
    rem /= 1000;
    const int ss = static_cast<int>(rem % 60);
    rem /= 60;
    const int mm = static_cast<int>(rem % 60);
    const int hh = static_cast<int>(rem / 60);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", d.year, d.month, d.day,
                  hh, mm, ss, ms);
    return buf;
}

// Validity window for sensor timestamps.
inline const std::int64_t kMinEventMs = days_from_civil(CivilDate{1990, 1, 1}) * kMillisPerDay;
inline const std::int64_t kMaxEventMs = days_from_civil(CivilDate{2100, 1, 1}) * kMillisPerDay;

} // namespace gaitvel
