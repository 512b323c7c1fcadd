#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gaitvel/events.hpp"

namespace gaitvel {

// Elapsed time between consecutive area-motion firings in two different
// rooms. Ordered: kitchen->living and living->kitchen are distinct.
struct TransitionRecord {
    std::string participant;
    CivilDate date;
    std::string from_room;
    std::string to_room;
    double seconds = 0;
};

using RoomPair = std::pair<std::string, std::string>;

struct RoomPairCensus {
    std::map<RoomPair, std::int64_t> counts;

    std::int64_t count(const RoomPair& p) const {
        auto it = counts.find(p);
        return it == counts.end() ? 0 : it->second;
    }
};

// Scans one day's events; line and clinic firings are transparent (they do
// not break adjacency of area firings). Same-room consecutive pairs and
// simultaneous firings (dt == 0) emit nothing.
inline std::vector<TransitionRecord> extract_transitions(const DayStream& day) {
    std::vector<TransitionRecord> out;
    const AreaMotion* prev_area = nullptr;
    Timestamp prev_time;
    for (const SensorEvent& ev : day.events) {
        const AreaMotion* area = ev.area();
        if (!area) continue;
        if (prev_area && prev_area->room != area->room && ev.time.ms > prev_time.ms) {
            out.push_back(TransitionRecord{day.participant, day.date, prev_area->room, area->room,
                                           static_cast<double>(ev.time.ms - prev_time.ms) / 1000.0});
        }
        prev_area = area;
        prev_time = ev.time;
    }
    return out;
}

inline std::vector<TransitionRecord> extract_transitions(const std::vector<DayStream>& days) {
    std::vector<TransitionRecord> out;
    for (const DayStream& day : days) {
        std::vector<TransitionRecord> recs = extract_transitions(day);
        out.insert(out.end(), recs.begin(), recs.end());
    }
    return out;
}

// Removes records longer than the dwell cap. The cap targets measured
// transitions that are dominated by in-room dwell rather than travel.
inline std::vector<TransitionRecord> censor_dwell(const std::vector<TransitionRecord>& records,
                                                  double cap_seconds) {
    require(cap_seconds > 0, "censor_dwell: cap must be > 0, got ", cap_seconds);
    std::vector<TransitionRecord> out;
    out.reserve(records.size());
    for (const TransitionRecord& r : records)
        if (r.seconds <= cap_seconds) out.push_back(r);
    return out;
}

inline RoomPairCensus census(const std::vector<TransitionRecord>& records) {
    RoomPairCensus c;
    for (const TransitionRecord& r : records) ++c.counts[{r.from_room, r.to_room}];
    return c;
}

// Keeps only pairs observed strictly more than min_count times; pairs with
// min_count or fewer observations are statistically unusable.
inline std::vector<TransitionRecord> filter_rare_pairs(const std::vector<TransitionRecord>& records,
                                                       const RoomPairCensus& counts,
                                                       std::int64_t min_count = 50) {
    std::vector<TransitionRecord> out;
    out.reserve(records.size());
    for (const TransitionRecord& r : records)
        if (counts.count({r.from_room, r.to_room}) > min_count) out.push_back(r);
    return out;
}

inline constexpr std::string_view kTransitionCsvHeader = "participant,date,from,to,seconds";

inline std::string serialize_transitions(const std::vector<TransitionRecord>& records) {
    std::string out{kTransitionCsvHeader};
    out += '\n';
    for (const TransitionRecord& r : records) {
        out += r.participant;
        out += ',';
        out += format_date(r.date);
        out += ',';
        out += r.from_room;
        out += ',';
        out += r.to_room;
        out += ',';
        out += format_double(r.seconds);
        out += '\n';
    }
    return out;
}

inline std::vector<TransitionRecord> parse_transition_csv(std::istream& in) {
    constexpr std::string_view what = "transition csv";
    CsvReader reader(in);
    expect_header(reader, kTransitionCsvHeader, what);
    std::vector<TransitionRecord> out;
    CsvRow row;
    while (reader.next(row)) {
        if (row.fields.size() != 5)
            raise(what, ": line ", row.line_no, ": expected 5 fields, got ", row.fields.size());
        TransitionRecord r;
        r.participant = row.fields[0];
        if (!try_parse_date(row.fields[1], r.date))
            field_error(what, row.line_no, "date", "not YYYY-MM-DD: '" + row.fields[1] + "'");
        r.from_room = row.fields[2];
        r.to_room = row.fields[3];
        if (r.from_room.empty() || r.to_room.empty() || r.from_room == r.to_room)
            field_error(what, row.line_no, "from/to", "rooms must be distinct non-empty labels");
        r.seconds = parse_double_field(row.fields[4], what, row.line_no, "seconds");
        if (!(r.seconds > 0)) field_error(what, row.line_no, "seconds", "must be > 0");
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace gaitvel
