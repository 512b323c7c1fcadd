#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gaitvel/error.hpp"

namespace gaitvel {

// Minimal comma-separated reader for the artifact's flat-file formats.
// Fields never contain commas or quotes; the parsers validate that when
// loading labels. Keeps 1-based line numbers for error reporting.
struct CsvRow {
    std::size_t line_no = 0;
    std::vector<std::string> fields;
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    bool next(CsvRow& row) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            row.line_no = line_no_;
            row.fields = split_csv_line(line);
            return true;
        }
        return false;
    }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

inline void expect_header(CsvReader& reader, std::string_view expected, std::string_view what) {
    CsvRow row;
    if (!reader.next(row)) raise(what, ": empty input, expected header '", expected, "'");
    std::string joined;
    for (std::size_t i = 0; i < row.fields.size(); ++i) {
        if (i) joined += ',';
        joined += row.fields[i];
    }
    if (joined != expected)
        raise(what, ": line ", row.line_no, ": bad header '", joined, "', expected '", expected, "'");
}

[[noreturn]] inline void field_error(std::string_view what, std::size_t line_no,
                                     std::string_view field, std::string_view detail) {
    raise(what, ": line ", line_no, ": field '", field, "': ", detail);
}

inline double parse_double_field(const std::string& s, std::string_view what, std::size_t line_no,
                                 std::string_view field) {
    double v = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v))
        field_error(what, line_no, field, "not a number: '" + s + "'");
    return v;
}

inline std::int64_t parse_int_field(const std::string& s, std::string_view what,
                                    std::size_t line_no, std::string_view field) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        field_error(what, line_no, field, "not an integer: '" + s + "'");
    return v;
}

// Shortest round-trip decimal form, deterministic across runs.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise("cannot open ", path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise("cannot write ", path);
    out << content;
    if (!out) raise("write failed for ", path);
}

} // namespace gaitvel
