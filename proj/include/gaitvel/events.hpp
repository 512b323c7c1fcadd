#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gaitvel/csv.hpp"
#include "gaitvel/dates.hpp"
#include "gaitvel/error.hpp"

namespace gaitvel {

// One firing of an area motion sensor, identified by room.
struct AreaMotion {
    std::string room;
};

// One firing of a restricted-view sensor in the ceiling line.
struct LineElement {
    int index = 0;        // 0-based position in the line
    double position_m = 0; // meters along the line
};

// A clinic-administered timed walk result.
struct ClinicWalk {
    double velocity_cmps = 0;
};

using SensorPayload = std::variant<AreaMotion, LineElement, ClinicWalk>;

struct SensorEvent {
    std::string participant;
    Timestamp time;
    std::string sensor_id;
    SensorPayload payload;

    const AreaMotion* area() const { return std::get_if<AreaMotion>(&payload); }
    const LineElement* line() const { return std::get_if<LineElement>(&payload); }
    const ClinicWalk* clinic() const { return std::get_if<ClinicWalk>(&payload); }
};

enum class ExclusionReason { Guest, StaffVisit, SensorOutage };

inline std::string_view to_string(ExclusionReason r) {
    switch (r) {
        case ExclusionReason::Guest: return "guest";
        case ExclusionReason::StaffVisit: return "staff_visit";
        case ExclusionReason::SensorOutage: return "sensor_outage";
    }
    return "?";
}

struct ExclusionCalendar {
    std::string participant;
    std::map<CivilDate, ExclusionReason> excluded_days;
};

// All of one participant's events falling on one home-local calendar day.
struct DayStream {
    std::string participant;
    CivilDate date;
    std::vector<SensorEvent> events; // sorted non-decreasing by timestamp
};

namespace detail {

inline void validate_event(const SensorEvent& ev, std::string_view what, std::size_t line_no) {
    if (ev.time.ms < kMinEventMs || ev.time.ms >= kMaxEventMs)
        field_error(what, line_no, "timestamp", "outside [1990-01-01, 2100-01-01)");
    if (const LineElement* le = ev.line()) {
        if (le->index < 0) field_error(what, line_no, "detail", "line index must be >= 0");
        if (le->position_m < 0) field_error(what, line_no, "detail", "line position must be >= 0");
    }
    if (const ClinicWalk* cw = ev.clinic()) {
        if (!(cw->velocity_cmps > 0 && cw->velocity_cmps < 500))
            field_error(what, line_no, "detail", "clinic velocity must be in (0, 500) cm/s");
    }
}

} // namespace detail

inline constexpr std::string_view kEventCsvHeader = "participant,timestamp,sensor,kind,detail";

// Event CSV rows: kind `area` carries the room label, `line` carries
// `index:position_m`, `clinic` carries the velocity in cm/s.
inline std::vector<SensorEvent> parse_event_csv(std::istream& in) {
    constexpr std::string_view what = "event csv";
    CsvReader reader(in);
    expect_header(reader, kEventCsvHeader, what);
    std::vector<SensorEvent> events;
    CsvRow row;
    while (reader.next(row)) {
        if (row.fields.size() != 5)
            raise(what, ": line ", row.line_no, ": expected 5 fields, got ", row.fields.size());
        SensorEvent ev;
        ev.participant = row.fields[0];
        if (ev.participant.empty()) field_error(what, row.line_no, "participant", "empty");
        if (!try_parse_rfc3339(row.fields[1], ev.time))
            field_error(what, row.line_no, "timestamp", "not RFC 3339 UTC: '" + row.fields[1] + "'");
        ev.sensor_id = row.fields[2];
        if (ev.sensor_id.empty()) field_error(what, row.line_no, "sensor", "empty");
        const std::string& kind = row.fields[3];
        const std::string& detail_str = row.fields[4];
        if (kind == "area") {
            if (detail_str.empty()) field_error(what, row.line_no, "detail", "empty room label");
            ev.payload = AreaMotion{detail_str};
        } else if (kind == "line") {
            const std::size_t colon = detail_str.find(':');
            if (colon == std::string::npos)
                field_error(what, row.line_no, "detail", "want index:position_m, got '" + detail_str + "'");
            LineElement le;
            le.index = static_cast<int>(
                parse_int_field(detail_str.substr(0, colon), what, row.line_no, "detail"));
            le.position_m =
                parse_double_field(detail_str.substr(colon + 1), what, row.line_no, "detail");
            ev.payload = le;
        } else if (kind == "clinic") {
            ev.payload = ClinicWalk{parse_double_field(detail_str, what, row.line_no, "detail")};
        } else {
            field_error(what, row.line_no, "kind", "unknown sensor kind '" + kind + "'");
        }
        detail::validate_event(ev, what, row.line_no);
        events.push_back(std::move(ev));
    }
    return events;
}

inline std::string serialize_event_detail(const SensorEvent& ev) {
    if (const AreaMotion* am = ev.area()) return am->room;
    if (const LineElement* le = ev.line())
        return std::to_string(le->index) + ":" + format_double(le->position_m);
    return format_double(ev.clinic()->velocity_cmps);
}

inline std::string serialize_event_kind(const SensorEvent& ev) {
    if (ev.area()) return "area";
    if (ev.line()) return "line";
    return "clinic";
}

inline std::string serialize_events(const std::vector<SensorEvent>& events) {
    std::string out{kEventCsvHeader};
    out += '\n';
    for (const SensorEvent& ev : events) {
        out += ev.participant;
        out += ',';
        out += format_rfc3339(ev.time);
        out += ',';
        out += ev.sensor_id;
        out += ',';
        out += serialize_event_kind(ev);
        out += ',';
        out += serialize_event_detail(ev);
        out += '\n';
    }
    return out;
}

inline constexpr std::string_view kExclusionCsvHeader = "participant,date,reason";

inline std::vector<ExclusionCalendar> parse_exclusion_csv(std::istream& in) {
    constexpr std::string_view what = "exclusion csv";
    CsvReader reader(in);
    expect_header(reader, kExclusionCsvHeader, what);
    std::map<std::string, ExclusionCalendar> by_participant;
    CsvRow row;
    while (reader.next(row)) {
        if (row.fields.size() != 3)
            raise(what, ": line ", row.line_no, ": expected 3 fields, got ", row.fields.size());
        const std::string& participant = row.fields[0];
        if (participant.empty()) field_error(what, row.line_no, "participant", "empty");
        CivilDate date;
        if (!try_parse_date(row.fields[1], date))
            field_error(what, row.line_no, "date", "not YYYY-MM-DD: '" + row.fields[1] + "'");
        ExclusionReason reason;
        if (row.fields[2] == "guest") reason = ExclusionReason::Guest;
        else if (row.fields[2] == "staff_visit") reason = ExclusionReason::StaffVisit;
        else if (row.fields[2] == "sensor_outage") reason = ExclusionReason::SensorOutage;
        else field_error(what, row.line_no, "reason", "unknown reason '" + row.fields[2] + "'");
        ExclusionCalendar& cal = by_participant[participant];
        cal.participant = participant;
        if (!cal.excluded_days.emplace(date, reason).second)
            field_error(what, row.line_no, "date",
                        "duplicate exclusion for " + format_date(date) + " / " + participant);
    }
    std::vector<ExclusionCalendar> out;
    out.reserve(by_participant.size());
    for (auto& [_, cal] : by_participant) out.push_back(std::move(cal));
    return out;
}

// Drops every event whose home-local date is excluded. Order preserved.
inline std::vector<SensorEvent> apply_exclusions(const std::vector<SensorEvent>& events,
                                                 const ExclusionCalendar& calendar,
                                                 int tz_offset_minutes) {
    std::vector<SensorEvent> out;
    out.reserve(events.size());
    for (const SensorEvent& ev : events) {
        if (ev.participant != calendar.participant)
            raise("apply_exclusions: event participant '", ev.participant,
                  "' does not match calendar participant '", calendar.participant, "'");
        if (!calendar.excluded_days.count(local_date(ev.time, tz_offset_minutes)))
            out.push_back(ev);
    }
    return out;
}

// Buckets events into per-participant, per-local-day streams, each sorted by
// timestamp. The union of all outputs is exactly the input.
inline std::vector<DayStream> split_days(const std::vector<SensorEvent>& events,
                                         int tz_offset_minutes) {
    std::map<std::pair<std::string, CivilDate>, std::vector<SensorEvent>> buckets;
    for (const SensorEvent& ev : events)
        buckets[{ev.participant, local_date(ev.time, tz_offset_minutes)}].push_back(ev);
    std::vector<DayStream> out;
    out.reserve(buckets.size());
    for (auto& [key, evs] : buckets) {
        std::stable_sort(evs.begin(), evs.end(),
                         [](const SensorEvent& a, const SensorEvent& b) { return a.time < b.time; });
        out.push_back(DayStream{key.first, key.second, std::move(evs)});
    }
    return out;
}

// Ceiling sensor-line geometry: element index -> meters along the line.
struct LineGeometry {
    std::vector<double> positions_m; // strictly increasing, indexed by element

    int count() const { return static_cast<int>(positions_m.size()); }
};

inline constexpr std::string_view kLineGeometryCsvHeader = "index,position_m";

inline LineGeometry parse_line_geometry_csv(std::istream& in) {
    constexpr std::string_view what = "line geometry csv";
    CsvReader reader(in);
    expect_header(reader, kLineGeometryCsvHeader, what);
    LineGeometry geo;
    CsvRow row;
    int expected_index = 0;
    while (reader.next(row)) {
        if (row.fields.size() != 2)
            raise(what, ": line ", row.line_no, ": expected 2 fields, got ", row.fields.size());
        const std::int64_t idx = parse_int_field(row.fields[0], what, row.line_no, "index");
        if (idx != expected_index)
            field_error(what, row.line_no, "index",
                        "expected " + std::to_string(expected_index) + ", got " + row.fields[0]);
        const double pos = parse_double_field(row.fields[1], what, row.line_no, "position_m");
        if (pos < 0) field_error(what, row.line_no, "position_m", "must be >= 0");
        if (!geo.positions_m.empty() && pos <= geo.positions_m.back())
            field_error(what, row.line_no, "position_m", "positions must be strictly increasing");
        geo.positions_m.push_back(pos);
        ++expected_index;
    }
    if (geo.positions_m.size() < 2) raise(what, ": need at least 2 line elements");
    return geo;
}

inline std::string serialize_line_geometry(const LineGeometry& geo) {
    std::string out{kLineGeometryCsvHeader};
    out += '\n';
    for (int i = 0; i < geo.count(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += format_double(geo.positions_m[i]);
        out += '\n';
    }
    return out;
}

} // namespace gaitvel
