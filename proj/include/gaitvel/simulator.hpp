#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gaitvel/events.hpp"
#include "gaitvel/groundtruth.hpp"
#include "gaitvel/stats.hpp"
#include "gaitvel/transitions.hpp"

namespace gaitvel {

struct LognormalParams {
    double mu_log = 0;    // mean of log-seconds
    double sigma_log = 1; // sd of log-seconds
};

// Piecewise-linear control point of the true gait velocity v(t).
struct VelocityPoint {
    double day = 0;
    double cmps = 0;
};

// Everything one simulated household needs. Loaded from the sectioned config
// file or built by default_household(); see README for the file schema.
struct HouseholdConfig {
    std::string participant = "sim01";
    double refractory_s = 6.0;

    std::vector<std::string> rooms;
    std::map<RoomPair, double> adjacency_m; // directed; loader mirrors each edge

    // Dwell contamination: with probability p_contaminate a move's origin
    // sensor last fired `remainder` seconds before departure (the departure
    // re-fire is suppressed), so the measured transition gains that
    // remainder. Remainder is log-normal per origin room.
    double p_contaminate = 0.3;
    LognormalParams default_remainder{std::log(0.5), 1.2};
    std::map<std::string, LognormalParams> room_remainder;

    std::string line_room = "living";
    std::vector<double> line_positions_m{0.0, 0.875, 1.75, 2.625, 3.5};
    double line_stall_prob = 0.1;  // slow-wander traversals -> noise cluster
    double line_jitter_sd_s = 0.02;

    std::vector<VelocityPoint> velocity_profile; // v(t), piecewise linear

    int active_start_hour = 8;
    int active_end_hour = 22;
    double moves_per_day = 120; // Poisson rate of scheduled moves
    double travel_sigma = 0.15; // multiplicative log-normal travel noise
    double clinic_noise_sd = 0; // cm/s; 0 = probes carry v(t) exactly

    std::uint64_t seed = 0;
};

inline const LognormalParams& remainder_params(const HouseholdConfig& cfg,
                                               const std::string& room) {
    const auto it = cfg.room_remainder.find(room);
    return it == cfg.room_remainder.end() ? cfg.default_remainder : it->second;
}

inline void validate_household(const HouseholdConfig& cfg) {
    require(!cfg.participant.empty(), "household config: participant is empty");
    require(cfg.refractory_s >= 0, "household config: refractory_s must be >= 0");
    require(cfg.rooms.size() >= 2, "household config: rooms needs >= 2 entries");
    const std::set<std::string> room_set(cfg.rooms.begin(), cfg.rooms.end());
    require(room_set.size() == cfg.rooms.size(), "household config: rooms has duplicates");
    require(!cfg.adjacency_m.empty(), "household config: adjacency is empty");
    for (const auto& [pair, dist] : cfg.adjacency_m) {
        require(room_set.count(pair.first) && room_set.count(pair.second),
                "household config: adjacency references unknown room '",
                room_set.count(pair.first) ? pair.second : pair.first, "'");
        require(pair.first != pair.second, "household config: adjacency pairs a room with itself: ",
                pair.first);
        require(dist > 0, "household config: adjacency distance must be > 0 for ", pair.first,
                "->", pair.second);
    }
    for (const std::string& room : cfg.rooms) {
        bool reachable = false;
        for (const auto& [pair, _] : cfg.adjacency_m)
            if (pair.first == room) reachable = true;
        require(reachable, "household config: room '", room, "' has no adjacency entries");
    }
    require(cfg.p_contaminate >= 0 && cfg.p_contaminate <= 1,
            "household config: p_contaminate must be in [0, 1]");
    require(cfg.default_remainder.sigma_log >= 0,
            "household config: dwell sigma_log must be >= 0");
    for (const auto& [room, params] : cfg.room_remainder) {
        require(room_set.count(room), "household config: dwell override for unknown room '", room,
                "'");
        require(params.sigma_log >= 0, "household config: dwell sigma_log must be >= 0 for ",
                room);
    }
    require(room_set.count(cfg.line_room), "household config: line room '", cfg.line_room,
            "' not in rooms");
    require(cfg.line_positions_m.size() >= 2, "household config: line needs >= 2 elements");
    for (std::size_t i = 1; i < cfg.line_positions_m.size(); ++i)
        require(cfg.line_positions_m[i] > cfg.line_positions_m[i - 1],
                "household config: line positions must be strictly increasing");
    require(cfg.line_positions_m.front() >= 0,
            "household config: line positions must be >= 0");
    require(cfg.line_stall_prob >= 0 && cfg.line_stall_prob <= 1,
            "household config: line stall_prob must be in [0, 1]");
    require(cfg.line_jitter_sd_s >= 0, "household config: line jitter_sd_s must be >= 0");
    require(!cfg.velocity_profile.empty(), "household config: velocity profile is empty");
    for (std::size_t i = 0; i < cfg.velocity_profile.size(); ++i) {
        const VelocityPoint& p = cfg.velocity_profile[i];
        require(p.cmps > 0 && p.cmps < 500,
                "household config: velocity must be in (0, 500) cm/s, got ", p.cmps);
        if (i) require(p.day > cfg.velocity_profile[i - 1].day,
                       "household config: velocity profile days must be strictly increasing");
    }
    require(cfg.active_start_hour >= 0 && cfg.active_end_hour <= 24 &&
                cfg.active_start_hour < cfg.active_end_hour,
            "household config: active hours must satisfy 0 <= start < end <= 24");
    require(cfg.moves_per_day >= 0, "household config: moves_per_day must be >= 0");
    require(cfg.travel_sigma >= 0, "household config: travel_sigma must be >= 0");
    require(cfg.clinic_noise_sd >= 0, "household config: clinic_noise_sd must be >= 0");
}

// v(t) at a fractional study day: linear between control points, clamped to
// the end values outside them.
inline double velocity_at(const HouseholdConfig& cfg, double day) {
    const auto& prof = cfg.velocity_profile;
    if (day <= prof.front().day) return prof.front().cmps;
    if (day >= prof.back().day) return prof.back().cmps;
    for (std::size_t i = 1; i < prof.size(); ++i) {
        if (day <= prof[i].day) {
            const double f = (day - prof[i - 1].day) / (prof[i].day - prof[i - 1].day);
            return prof[i - 1].cmps + f * (prof[i].cmps - prof[i - 1].cmps);
        }
    }
    return prof.back().cmps;
}

// Ground-truth labels emitted alongside the event stream.
struct RecordTruth {
    std::string participant;
    CivilDate date;
    std::string from_room;
    std::string to_room;
    double seconds = 0;
    bool contaminated = false;
};

struct DailyTruth {
    std::string participant;
    CivilDate date;
    double velocity_cmps = 0; // v(t) at local noon
};

struct SimTruth {
    std::vector<RecordTruth> records; // aligned 1:1 with extractable transitions
    std::vector<DailyTruth> daily;
    std::vector<ClinicMeasurement> clinic;
};

struct SimResult {
    std::vector<SensorEvent> events; // chronologically sorted
    SimTruth truth;
};

namespace sim_detail {

// Study epoch: simulated day 0 starts 2010-01-01 local (= UTC here).
inline const std::int64_t kEpochDay = days_from_civil(CivilDate{2010, 1, 1});

inline Timestamp day_time(int day, std::int64_t offset_ms) {
    return Timestamp{(kEpochDay + day) * kMillisPerDay + offset_ms};
}

struct AreaFire {
    Timestamp t;
    std::string room;
    std::int64_t move_id = -1;
    bool arrival = false;        // arrival firing of move_id
    bool exact_departure = false; // departure firing at the exact departure instant
};

struct LineFire {
    Timestamp t;
    int index = 0;
    double position_m = 0;
};

} // namespace sim_detail

// Generates a labeled event stream: a Markov walk over adjacent rooms with
// Poisson-scheduled moves inside the active window, log-normal travel noise,
// dwell contamination through refractory suppression, line traversals on
// every arrival in the line room, and one clinic probe per 365 days.
// Deterministic per (config, n_days).
inline SimResult simulate(const HouseholdConfig& cfg, int n_days) {
    validate_household(cfg);
    require(n_days >= 1, "simulate: n_days must be >= 1, got ", n_days);

    std::mt19937_64 rng(mix_seed(cfg.seed, fnv1a64("household|" + cfg.participant)));
    std::normal_distribution<double> norm(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Neighbor lists in deterministic (sorted) order.
    std::map<std::string, std::vector<std::pair<std::string, double>>> neighbors;
    for (const auto& [pair, dist] : cfg.adjacency_m)
        neighbors[pair.first].emplace_back(pair.second, dist);

    const double window_start_s = cfg.active_start_hour * 3600.0;
    const double window_end_s = cfg.active_end_hour * 3600.0;
    const std::int64_t refractory_ms = std::llround(cfg.refractory_s * 1000.0);

    std::vector<sim_detail::AreaFire> fires;
    std::vector<sim_detail::LineFire> line_fires;
    std::vector<ClinicMeasurement> clinic;
    std::vector<SensorEvent> clinic_events;

    std::string current = cfg.rooms.front();
    std::int64_t move_id = 0;

    for (int d = 0; d < n_days; ++d) {
        std::poisson_distribution<int> move_count(cfg.moves_per_day);
        const int k = cfg.moves_per_day > 0 ? move_count(rng) : 0;
        std::vector<double> departures(static_cast<std::size_t>(std::max(k, 0)));
        for (double& t : departures)
            t = window_start_s + unit(rng) * (window_end_s - window_start_s);
        std::sort(departures.begin(), departures.end());

        double prev_arrival_s = -1e18; // overnight dwell before the first move
        for (double dep_s : departures) {
            if (dep_s < prev_arrival_s + 0.5) continue; // still walking; skip this slot

            const auto& options = neighbors.at(current);
            std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
            const auto& [next, dist_m] = options[pick(rng)];

            const double v = velocity_at(cfg, d + dep_s / 86400.0);
            const double travel_s = (100.0 * dist_m / v) * std::exp(cfg.travel_sigma * norm(rng));
            const bool contaminated = unit(rng) < cfg.p_contaminate;

            const std::int64_t dep_ms = std::llround(dep_s * 1000.0);
            const std::int64_t travel_ms = std::llround(travel_s * 1000.0);

            std::int64_t origin_fire_ms = dep_ms;
            if (contaminated) {
                const LognormalParams& rp = remainder_params(cfg, current);
                const double remainder_s = std::exp(rp.mu_log + rp.sigma_log * norm(rng));
                origin_fire_ms = dep_ms - std::llround(remainder_s * 1000.0);
            }

            fires.push_back({sim_detail::day_time(d, origin_fire_ms), current, move_id,
                             false, !contaminated});
            fires.push_back({sim_detail::day_time(d, dep_ms + travel_ms), next, move_id, true,
                             false});

            if (next == cfg.line_room) {
                const bool stall = unit(rng) < cfg.line_stall_prob;
                std::int64_t prev_ms = -1;
                const std::int64_t base_ms = dep_ms + travel_ms;
                double wander_offset_s = 0;
                for (std::size_t e = 0; e < cfg.line_positions_m.size(); ++e) {
                    double offset_s;
                    if (stall) {
                        // Slow wander across the line: element gaps well under
                        // the walk-splitting threshold but far slower than
                        // gait, producing the near-zero estimate cluster.
                        if (e > 0) wander_offset_s += 2.5 + 5.5 * unit(rng);
                        offset_s = wander_offset_s;
                    } else {
                        offset_s = cfg.line_positions_m[e] * 100.0 / v +
                                   cfg.line_jitter_sd_s * norm(rng);
                    }
                    std::int64_t t_ms = base_ms + std::llround(offset_s * 1000.0);
                    if (prev_ms >= 0 && t_ms <= prev_ms) t_ms = prev_ms + 1;
                    prev_ms = t_ms;
                    line_fires.push_back({sim_detail::day_time(d, t_ms),
                                          static_cast<int>(e), cfg.line_positions_m[e]});
                }
            }

            prev_arrival_s = dep_s + travel_s;
            current = next;
            ++move_id;
        }

        if ((d + 1) % 365 == 0) {
            double v = velocity_at(cfg, d + 0.5);
            if (cfg.clinic_noise_sd > 0) v += cfg.clinic_noise_sd * norm(rng);
            v = std::clamp(v, 1.0, 499.0);
            const Timestamp when = sim_detail::day_time(d, 12 * 3'600'000);
            clinic.push_back({cfg.participant, local_date(when, 0), v});
            clinic_events.push_back(SensorEvent{cfg.participant, when, "clinic", ClinicWalk{v}});
        }
    }

    // Refractory pass per sensor, chronological. Suppressed firings simply
    // never reach the stream; the truth replay below sees exactly what an
    // ingesting pipeline would.
    std::stable_sort(fires.begin(), fires.end(),
                     [](const sim_detail::AreaFire& a, const sim_detail::AreaFire& b) {
                         return a.t.ms != b.t.ms ? a.t.ms < b.t.ms : a.room < b.room;
                     });
    std::vector<sim_detail::AreaFire> kept;
    kept.reserve(fires.size());
    {
        std::map<std::string, std::int64_t> last_fire;
        for (const sim_detail::AreaFire& f : fires) {
            const auto it = last_fire.find(f.room);
            if (it != last_fire.end() && f.t.ms - it->second < refractory_ms) continue;
            last_fire[f.room] = f.t.ms;
            kept.push_back(f);
        }
    }
    std::stable_sort(line_fires.begin(), line_fires.end(),
                     [](const sim_detail::LineFire& a, const sim_detail::LineFire& b) {
                         return a.t.ms != b.t.ms ? a.t.ms < b.t.ms : a.index < b.index;
                     });
    std::vector<sim_detail::LineFire> line_kept;
    line_kept.reserve(line_fires.size());
    {
        std::map<int, std::int64_t> last_fire;
        for (const sim_detail::LineFire& f : line_fires) {
            const auto it = last_fire.find(f.index);
            if (it != last_fire.end() && f.t.ms - it->second < refractory_ms) continue;
            last_fire[f.index] = f.t.ms;
            line_kept.push_back(f);
        }
    }

    SimResult result;

    // Replay the kept area firings exactly the way transition extraction
    // walks them: consecutive distinct-room pairs within one local day, dt >
    // 0. A record is clean only when its bracketing firings are the same
    // move's exact departure and its arrival.
    for (std::size_t i = 1; i < kept.size(); ++i) {
        const sim_detail::AreaFire& a = kept[i - 1];
        const sim_detail::AreaFire& b = kept[i];
        if (a.room == b.room || b.t.ms <= a.t.ms) continue;
        const CivilDate da = local_date(a.t, 0);
        if (da != local_date(b.t, 0)) continue;
        const bool clean = b.arrival && a.move_id == b.move_id && !a.arrival && a.exact_departure;
        result.truth.records.push_back({cfg.participant, da, a.room, b.room,
                                        static_cast<double>(b.t.ms - a.t.ms) / 1000.0, !clean});
    }
    for (int d = 0; d < n_days; ++d)
        result.truth.daily.push_back({cfg.participant,
                                      civil_from_days(sim_detail::kEpochDay + d),
                                      velocity_at(cfg, d + 0.5)});
    result.truth.clinic = clinic;

    result.events.reserve(kept.size() + line_kept.size() + clinic_events.size());
    for (const sim_detail::AreaFire& f : kept)
        result.events.push_back(SensorEvent{cfg.participant, f.t, "area:" + f.room,
                                            AreaMotion{f.room}});
    for (const sim_detail::LineFire& f : line_kept)
        result.events.push_back(SensorEvent{cfg.participant, f.t,
                                            "line:" + std::to_string(f.index),
                                            LineElement{f.index, f.position_m}});
    result.events.insert(result.events.end(), clinic_events.begin(), clinic_events.end());
    std::stable_sort(result.events.begin(), result.events.end(),
                     [](const SensorEvent& x, const SensorEvent& y) {
                         if (x.time.ms != y.time.ms) return x.time.ms < y.time.ms;
                         return x.sensor_id < y.sensor_id;
                     });
    return result;
}

inline LineGeometry line_geometry(const HouseholdConfig& cfg) {
    return LineGeometry{cfg.line_positions_m};
}

inline constexpr std::string_view kTruthDailyCsvHeader = "participant,date,true_cm_s";
inline constexpr std::string_view kTruthRecordsCsvHeader =
    "participant,date,from,to,seconds,contaminated";

inline std::string serialize_truth_daily(const std::vector<DailyTruth>& rows) {
    std::string out{kTruthDailyCsvHeader};
    out += '\n';
    for (const DailyTruth& r : rows) {
        out += r.participant;
        out += ',';
        out += format_date(r.date);
        out += ',';
        out += format_double(r.velocity_cmps);
        out += '\n';
    }
    return out;
}

inline std::vector<DailyTruth> parse_truth_daily_csv(std::istream& in) {
    constexpr std::string_view what = "truth daily csv";
    CsvReader reader(in);
    expect_header(reader, kTruthDailyCsvHeader, what);
    std::vector<DailyTruth> rows;
    CsvRow row;
    while (reader.next(row)) {
        if (row.fields.size() != 3)
            raise(what, ": line ", row.line_no, ": expected 3 fields, got ", row.fields.size());
        DailyTruth r;
        r.participant = row.fields[0];
        if (!try_parse_date(row.fields[1], r.date))
            field_error(what, row.line_no, "date", "invalid date '" + row.fields[1] + "'");
        r.velocity_cmps = parse_double_field(row.fields[2], what, row.line_no, "true_cm_s");
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::string serialize_truth_records(const std::vector<RecordTruth>& rows) {
    std::string out{kTruthRecordsCsvHeader};
    out += '\n';
    for (const RecordTruth& r : rows) {
        out += r.participant;
        out += ',';
        out += format_date(r.date);
        out += ',';
        out += r.from_room;
        out += ',';
        out += r.to_room;
        out += ',';
        out += format_double(r.seconds);
        out += ',';
        out += r.contaminated ? '1' : '0';
        out += '\n';
    }
    return out;
}

inline std::vector<RecordTruth> parse_truth_records_csv(std::istream& in) {
    constexpr std::string_view what = "truth records csv";
    CsvReader reader(in);
    expect_header(reader, kTruthRecordsCsvHeader, what);
    std::vector<RecordTruth> rows;
    CsvRow row;
    while (reader.next(row)) {
        if (row.fields.size() != 6)
            raise(what, ": line ", row.line_no, ": expected 6 fields, got ", row.fields.size());
        RecordTruth r;
        r.participant = row.fields[0];
        if (!try_parse_date(row.fields[1], r.date))
            field_error(what, row.line_no, "date", "invalid date '" + row.fields[1] + "'");
        r.from_room = row.fields[2];
        r.to_room = row.fields[3];
        r.seconds = parse_double_field(row.fields[4], what, row.line_no, "seconds");
        if (row.fields[5] == "0") r.contaminated = false;
        else if (row.fields[5] == "1") r.contaminated = true;
        else field_error(what, row.line_no, "contaminated", "must be 0 or 1");
        rows.push_back(std::move(r));
    }
    return rows;
}

// Writes the full labeled dataset: events.csv in the ingest format plus the
// oracle files and the line geometry the ground-truth stage needs.
inline void export_simulation(const SimResult& result, const HouseholdConfig& cfg,
                              const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) raise("cannot create directory ", dir, ": ", ec.message());
    const std::filesystem::path base(dir);
    write_text_file((base / "events.csv").string(), serialize_events(result.events));
    write_text_file((base / "truth_daily.csv").string(),
                    serialize_truth_daily(result.truth.daily));
    write_text_file((base / "truth_records.csv").string(),
                    serialize_truth_records(result.truth.records));
    write_text_file((base / "clinic.csv").string(), serialize_clinic(result.truth.clinic));
    write_text_file((base / "line.csv").string(),
                    serialize_line_geometry(line_geometry(cfg)));
}

// Four-room flat with the sensor line across the living room; velocity
// drifts 100 -> 60 cm/s over the run.
inline HouseholdConfig default_household(int n_days = 730) {
    require(n_days >= 1, "default_household: n_days must be >= 1");
    HouseholdConfig cfg;
    cfg.rooms = {"living", "kitchen", "bathroom", "bedroom"};
    auto edge = [&](const std::string& a, const std::string& b, double m) {
        cfg.adjacency_m[{a, b}] = m;
        cfg.adjacency_m[{b, a}] = m;
    };
    edge("living", "kitchen", 4.0);
    edge("living", "bathroom", 5.0);
    edge("living", "bedroom", 5.5);
    edge("kitchen", "bathroom", 3.0);
    edge("bedroom", "bathroom", 2.5);
    cfg.velocity_profile = {{0.0, 100.0}, {static_cast<double>(std::max(n_days - 1, 1)), 60.0}};
    return cfg;
}

// ---- config file (sectioned key/value text) ----

namespace sim_detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

inline double config_num(const std::string& value, std::size_t line_no, std::string_view key) {
    return parse_double_field(value, "household config", line_no, key);
}

} // namespace sim_detail

// Sections: [household], [rooms], [adjacency], [dwell], [line], [velocity],
// [schedule]. `#` starts a comment. See README for the full schema.
inline HouseholdConfig parse_household_config(std::istream& in) {
    constexpr std::string_view what = "household config";
    HouseholdConfig cfg;
    cfg.velocity_profile.clear();
    cfg.line_positions_m.clear();
    std::string section;
    std::string raw;
    std::size_t line_no = 0;
    bool any_velocity = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = sim_detail::trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                raise(what, ": line ", line_no, ": malformed section header '", line, "'");
            section = line.substr(1, line.size() - 2);
            const std::set<std::string> known = {"household", "rooms", "adjacency", "dwell",
                                                 "line",      "velocity", "schedule"};
            if (!known.count(section))
                raise(what, ": line ", line_no, ": unknown section [", section, "]");
            continue;
        }
        if (section.empty())
            raise(what, ": line ", line_no, ": content before any [section]");

        if (section == "rooms") {
            cfg.rooms.push_back(line);
            continue;
        }
        if (section == "adjacency") {
            const auto toks = sim_detail::split_ws(line);
            if (toks.size() != 3)
                raise(what, ": line ", line_no, ": adjacency wants 'from to meters', got '", line,
                      "'");
            const double m = sim_detail::config_num(toks[2], line_no, "adjacency");
            cfg.adjacency_m[{toks[0], toks[1]}] = m;
            cfg.adjacency_m[{toks[1], toks[0]}] = m;
            continue;
        }
        if (section == "velocity") {
            const auto toks = sim_detail::split_ws(line);
            if (toks.size() != 2)
                raise(what, ": line ", line_no, ": velocity wants 'day cm_s', got '", line, "'");
            cfg.velocity_profile.push_back({sim_detail::config_num(toks[0], line_no, "day"),
                                            sim_detail::config_num(toks[1], line_no, "cm_s")});
            any_velocity = true;
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            raise(what, ": line ", line_no, ": expected 'key = value', got '", line, "'");
        const std::string key = sim_detail::trim(line.substr(0, eq));
        const std::string value = sim_detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            raise(what, ": line ", line_no, ": expected 'key = value', got '", line, "'");

        if (section == "household") {
            if (key == "participant") cfg.participant = value;
            else if (key == "refractory_s")
                cfg.refractory_s = sim_detail::config_num(value, line_no, key);
            else if (key == "seed")
                cfg.seed = static_cast<std::uint64_t>(
                    parse_int_field(value, what, line_no, key));
            else raise(what, ": line ", line_no, ": unknown [household] key '", key, "'");
        } else if (section == "dwell") {
            if (key == "p_contaminate")
                cfg.p_contaminate = sim_detail::config_num(value, line_no, key);
            else if (key == "mu_log")
                cfg.default_remainder.mu_log = sim_detail::config_num(value, line_no, key);
            else if (key == "sigma_log")
                cfg.default_remainder.sigma_log = sim_detail::config_num(value, line_no, key);
            else {
                // room override: `room.<name>.mu_log` / `room.<name>.sigma_log`
                if (key.rfind("room.", 0) == 0) {
                    const std::size_t dot = key.rfind('.');
                    const std::string room = key.substr(5, dot - 5);
                    const std::string field = key.substr(dot + 1);
                    if (room.empty() || (field != "mu_log" && field != "sigma_log"))
                        raise(what, ": line ", line_no, ": unknown [dwell] key '", key, "'");
                    LognormalParams& rp =
                        cfg.room_remainder.try_emplace(room, cfg.default_remainder).first->second;
                    (field == "mu_log" ? rp.mu_log : rp.sigma_log) =
                        sim_detail::config_num(value, line_no, key);
                } else {
                    raise(what, ": line ", line_no, ": unknown [dwell] key '", key, "'");
                }
            }
        } else if (section == "line") {
            if (key == "room") cfg.line_room = value;
            else if (key == "stall_prob")
                cfg.line_stall_prob = sim_detail::config_num(value, line_no, key);
            else if (key == "jitter_sd_s")
                cfg.line_jitter_sd_s = sim_detail::config_num(value, line_no, key);
            else if (key == "positions") {
                for (const std::string& tok : split_csv_line(value))
                    cfg.line_positions_m.push_back(
                        sim_detail::config_num(sim_detail::trim(tok), line_no, key));
            } else raise(what, ": line ", line_no, ": unknown [line] key '", key, "'");
        } else if (section == "schedule") {
            if (key == "active_start_hour")
                cfg.active_start_hour = static_cast<int>(
                    parse_int_field(value, what, line_no, key));
            else if (key == "active_end_hour")
                cfg.active_end_hour = static_cast<int>(
                    parse_int_field(value, what, line_no, key));
            else if (key == "moves_per_day")
                cfg.moves_per_day = sim_detail::config_num(value, line_no, key);
            else if (key == "travel_sigma")
                cfg.travel_sigma = sim_detail::config_num(value, line_no, key);
            else if (key == "clinic_noise_sd")
                cfg.clinic_noise_sd = sim_detail::config_num(value, line_no, key);
            else raise(what, ": line ", line_no, ": unknown [schedule] key '", key, "'");
        } else {
            raise(what, ": line ", line_no, ": key '", key, "' not valid in [", section, "]");
        }
    }
    if (!any_velocity) cfg.velocity_profile = {{0.0, 100.0}, {729.0, 60.0}};
    if (cfg.line_positions_m.empty())
        cfg.line_positions_m = {0.0, 0.875, 1.75, 2.625, 3.5};
    validate_household(cfg);
    return cfg;
}

inline std::string format_household_config(const HouseholdConfig& cfg) {
    std::ostringstream out;
    out << "[household]\n";
    out << "participant = " << cfg.participant << '\n';
    out << "refractory_s = " << format_double(cfg.refractory_s) << '\n';
    out << "seed = " << cfg.seed << '\n';
    out << "\n[rooms]\n";
    for (const std::string& r : cfg.rooms) out << r << '\n';
    out << "\n[adjacency]\n";
    std::set<RoomPair> seen;
    for (const auto& [pair, dist] : cfg.adjacency_m) {
        if (seen.count({pair.second, pair.first})) continue;
        seen.insert(pair);
        out << pair.first << ' ' << pair.second << ' ' << format_double(dist) << '\n';
    }
    out << "\n[dwell]\n";
    out << "p_contaminate = " << format_double(cfg.p_contaminate) << '\n';
    out << "mu_log = " << format_double(cfg.default_remainder.mu_log) << '\n';
    out << "sigma_log = " << format_double(cfg.default_remainder.sigma_log) << '\n';
    for (const auto& [room, rp] : cfg.room_remainder) {
        out << "room." << room << ".mu_log = " << format_double(rp.mu_log) << '\n';
        out << "room." << room << ".sigma_log = " << format_double(rp.sigma_log) << '\n';
    }
    out << "\n[line]\n";
    out << "room = " << cfg.line_room << '\n';
    out << "positions = ";
    for (std::size_t i = 0; i < cfg.line_positions_m.size(); ++i) {
        if (i) out << ',';
        out << format_double(cfg.line_positions_m[i]);
    }
    out << '\n';
    out << "stall_prob = " << format_double(cfg.line_stall_prob) << '\n';
    out << "jitter_sd_s = " << format_double(cfg.line_jitter_sd_s) << '\n';
    out << "\n[velocity]\n";
    for (const VelocityPoint& p : cfg.velocity_profile)
        out << format_double(p.day) << ' ' << format_double(p.cmps) << '\n';
    out << "\n[schedule]\n";
    out << "active_start_hour = " << cfg.active_start_hour << '\n';
    out << "active_end_hour = " << cfg.active_end_hour << '\n';
    out << "moves_per_day = " << format_double(cfg.moves_per_day) << '\n';
    out << "travel_sigma = " << format_double(cfg.travel_sigma) << '\n';
    out << "clinic_noise_sd = " << format_double(cfg.clinic_noise_sd) << '\n';
    return out.str();
}

} // namespace gaitvel
