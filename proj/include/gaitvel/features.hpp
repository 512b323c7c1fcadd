#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gaitvel/stats.hpp"
#include "gaitvel/transitions.hpp"

namespace gaitvel {

// The six per-pair transition-time summaries used as model inputs.
enum class FeatureKind { P10, P15, P20, Q1, Mean, Median };

inline constexpr std::array<FeatureKind, 6> kAllFeatureKinds = {
    FeatureKind::P10, FeatureKind::P15, FeatureKind::P20,
    FeatureKind::Q1,  FeatureKind::Mean, FeatureKind::Median};

inline std::string_view to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::P10: return "p10";
        case FeatureKind::P15: return "p15";
        case FeatureKind::P20: return "p20";
        case FeatureKind::Q1: return "q1";
        case FeatureKind::Mean: return "mean";
        case FeatureKind::Median: return "median";
    }
    return "?";
}

inline std::string_view display_name(FeatureKind k) {
    switch (k) {
        case FeatureKind::P10: return "10th percentile";
        case FeatureKind::P15: return "15th percentile";
        case FeatureKind::P20: return "20th percentile";
        case FeatureKind::Q1: return "first quartile";
        case FeatureKind::Mean: return "mean";
        case FeatureKind::Median: return "median";
    }
    return "?";
}

inline FeatureKind parse_feature_kind(std::string_view s) {
    for (FeatureKind k : kAllFeatureKinds)
        if (s == to_string(k)) return k;
    raise("unknown feature kind '", std::string(s), "' (want p10|p15|p20|q1|mean|median)");
}

// A feature's scope is either one calendar day (half_width_days == 0) or a
// window of clinic-centered days (center +/- half_width).
struct Scope {
    CivilDate center;
    int half_width_days = 0;

    bool is_window() const { return half_width_days > 0; }
    auto operator<=>(const Scope&) const = default;
};

inline std::string format_scope(const Scope& s) {
    if (!s.is_window()) return format_date(s.center);
    return format_date(s.center) + "~" + std::to_string(s.half_width_days);
}

inline Scope parse_scope(std::string_view s) {
    const std::size_t tilde = s.find('~');
    Scope out;
    if (tilde == std::string_view::npos) {
        out.center = parse_date(s);
        return out;
    }
    out.center = parse_date(s.substr(0, tilde));
    const std::string width(s.substr(tilde + 1));
    out.half_width_days = static_cast<int>(parse_int_field(width, "scope", 0, "half_width"));
    require(out.half_width_days > 0, "scope window half-width must be > 0");
    return out;
}

struct FeatureSample {
    std::string participant;
    Scope scope;
    std::string from_room;
    std::string to_room;
    FeatureKind kind = FeatureKind::P20;
    double seconds = 0;
};

inline double feature_statistic(std::span<const double> durations, FeatureKind kind) {
    switch (kind) {
        case FeatureKind::P10: return percentile(durations, 0.10);
        case FeatureKind::P15: return percentile(durations, 0.15);
        case FeatureKind::P20: return percentile(durations, 0.20);
        case FeatureKind::Q1: return percentile(durations, 0.25);
        case FeatureKind::Mean: return mean(durations);
        case FeatureKind::Median: return percentile(durations, 0.50);
    }
    raise("feature_statistic: bad kind");
}

// Minimum record counts below which a scope yields no sample. A percentile
// of one or two points is meaningless; windows get a higher floor.
inline constexpr std::size_t kMinDailyRecords = 3;
inline constexpr std::size_t kMinWindowRecords = 10;

// One scope's samples for one room pair, all six kinds. Returns nothing when
// the scope has too few records (skipped, not an error).
inline std::vector<FeatureSample> compute_features(const std::string& participant,
                                                   const Scope& scope, const RoomPair& pair,
                                                   std::span<const double> durations) {
    const std::size_t floor = scope.is_window() ? kMinWindowRecords : kMinDailyRecords;
    if (durations.size() < floor) return {};
    std::vector<FeatureSample> out;
    out.reserve(kAllFeatureKinds.size());
    for (FeatureKind kind : kAllFeatureKinds)
        out.push_back(FeatureSample{participant, scope, pair.first, pair.second, kind,
                                    feature_statistic(durations, kind)});
    return out;
}

// Daily features for every (participant, pair, date) with enough records.
inline std::vector<FeatureSample> daily_features(const std::vector<TransitionRecord>& records) {
    std::map<std::tuple<std::string, RoomPair, CivilDate>, std::vector<double>> groups;
    for (const TransitionRecord& r : records)
        groups[{r.participant, {r.from_room, r.to_room}, r.date}].push_back(r.seconds);
    std::vector<FeatureSample> out;
    for (const auto& [key, durations] : groups) {
        const auto& [participant, pair, date] = key;
        std::vector<FeatureSample> fs =
            compute_features(participant, Scope{date, 0}, pair, durations);
        out.insert(out.end(), fs.begin(), fs.end());
    }
    return out;
}

// Clinic-centered window features: for each center date, pools records whose
// date lies within +/- half_width days of it.
inline std::vector<FeatureSample> window_features(const std::vector<TransitionRecord>& records,
                                                  const std::vector<std::pair<std::string, CivilDate>>& centers,
                                                  int half_width_days) {
    require(half_width_days > 0, "window_features: half-width must be > 0, got ", half_width_days);
    std::map<std::pair<std::string, RoomPair>, std::vector<const TransitionRecord*>> by_pair;
    for (const TransitionRecord& r : records)
        by_pair[{r.participant, {r.from_room, r.to_room}}].push_back(&r);
    std::vector<FeatureSample> out;
    for (const auto& [participant, center] : centers) {
        const std::int64_t center_day = days_from_civil(center);
        for (const auto& [key, recs] : by_pair) {
            if (key.first != participant) continue;
            std::vector<double> durations;
            for (const TransitionRecord* r : recs) {
                const std::int64_t delta = days_from_civil(r->date) - center_day;
                if (delta >= -half_width_days && delta <= half_width_days)
                    durations.push_back(r->seconds);
            }
            std::vector<FeatureSample> fs = compute_features(
                participant, Scope{center, half_width_days}, key.second, durations);
            out.insert(out.end(), fs.begin(), fs.end());
        }
    }
    return out;
}

// Affine map of the training range onto [-1, +1]. Values outside the range
// (test folds) map outside [-1, +1] and are deliberately not clipped.
struct Scaler {
    double min = 0;
    double max = 1;

    double apply(double v) const { return 2.0 * (v - min) / (max - min) - 1.0; }
    double invert(double s) const { return min + (s + 1.0) * (max - min) / 2.0; }
};

inline Scaler fit_scaler(std::span<const double> train_values) {
    require(!train_values.empty(), "fit_scaler: empty training values");
    const auto [lo, hi] = std::minmax_element(train_values.begin(), train_values.end());
    require(*hi > *lo, "fit_scaler: degenerate feature, min == max == ", *lo);
    return Scaler{*lo, *hi};
}

inline constexpr std::string_view kFeatureCsvHeader = "participant,scope,from,to,kind,seconds";

inline std::string serialize_features(const std::vector<FeatureSample>& samples) {
    std::string out{kFeatureCsvHeader};
    out += '\n';
    for (const FeatureSample& s : samples) {
        out += s.participant;
        out += ',';
        out += format_scope(s.scope);
        out += ',';
        out += s.from_room;
        out += ',';
        out += s.to_room;
        out += ',';
        out += to_string(s.kind);
        out += ',';
        out += format_double(s.seconds);
        out += '\n';
    }
    return out;
}

inline std::vector<FeatureSample> parse_feature_csv(std::istream& in) {
    constexpr std::string_view what = "feature csv";
    CsvReader reader(in);
    expect_header(reader, kFeatureCsvHeader, what);
    std::vector<FeatureSample> out;
    CsvRow row;
    while (reader.next(row)) {
        if (row.fields.size() != 6)
            raise(what, ": line ", row.line_no, ": expected 6 fields, got ", row.fields.size());
        FeatureSample s;
        s.participant = row.fields[0];
        try {
            s.scope = parse_scope(row.fields[1]);
        } catch (const Error& e) {
            field_error(what, row.line_no, "scope", e.what());
        }
        s.from_room = row.fields[2];
        s.to_room = row.fields[3];
        s.kind = parse_feature_kind(row.fields[4]);
        s.seconds = parse_double_field(row.fields[5], what, row.line_no, "seconds");
        if (!(s.seconds > 0)) field_error(what, row.line_no, "seconds", "must be > 0");
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace gaitvel
