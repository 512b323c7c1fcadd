#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gaitvel/csv.hpp"
#include "gaitvel/events.hpp"
#include "gaitvel/stats.hpp"

namespace gaitvel {

// One pass along the sensor line: ordered element firings with their
// positions looked up from the configured geometry.
struct LineWalk {
    std::string participant;
    CivilDate date;
    std::vector<std::pair<Timestamp, double>> firings; // (time, position m)
};

struct VelocityEstimate {
    std::string participant;
    CivilDate date;
    double velocity_cmps = 0;
};

// Groups consecutive line-element firings into walks. A gap longer than
// gap_seconds (or any non-line event in between does not matter; only line
// firings are considered) starts a new walk. Walks with fewer than two
// firings carry no speed information and are dropped.
inline std::vector<LineWalk> assemble_line_walks(const std::vector<SensorEvent>& events,
                                                 const LineGeometry& geometry,
                                                 double gap_seconds = 10.0,
                                                 int tz_offset_minutes = 0) {
    require(gap_seconds > 0, "assemble_line_walks: gap_seconds must be > 0");
    std::vector<LineWalk> walks;
    LineWalk current;
    Timestamp last{0};
    auto flush = [&] {
        if (current.firings.size() >= 2) walks.push_back(current);
        current.firings.clear();
    };
    for (const SensorEvent& ev : events) {
        const LineElement* el = ev.line();
        if (el == nullptr) continue;
        require(el->index >= 0 &&
                    static_cast<std::size_t>(el->index) < geometry.positions_m.size(),
                "line firing references element ", el->index, " outside geometry of size ",
                geometry.positions_m.size());
        const double pos = geometry.positions_m[static_cast<std::size_t>(el->index)];
        const bool fresh = current.firings.empty() || ev.participant != current.participant ||
                           (ev.time.ms - last.ms) > static_cast<std::int64_t>(gap_seconds * 1000.0);
        if (fresh) {
            flush();
            current.participant = ev.participant;
            current.date = local_date(ev.time, tz_offset_minutes);
        }
        current.firings.emplace_back(ev.time, pos);
        last = ev.time;
    }
    flush();
    return walks;
}

// Direction-agnostic speed from one walk: least-squares slope of position
// against time across all firings, in cm/s. Reduces to distance/time for
// exact data and absorbs single-element jitter otherwise.
inline VelocityEstimate estimate_line_velocity(const LineWalk& walk) {
    require(walk.firings.size() >= 2, "estimate_line_velocity: need >= 2 firings, got ",
            walk.firings.size());
    const std::int64_t t0 = walk.firings.front().first.ms;
    std::vector<double> t, pos;
    t.reserve(walk.firings.size());
    pos.reserve(walk.firings.size());
    for (const auto& [when, p] : walk.firings) {
        t.push_back(static_cast<double>(when.ms - t0) / 1000.0);
        pos.push_back(p);
    }
    const bool all_same = std::all_of(t.begin(), t.end(), [&](double v) { return v == t[0]; });
    require(!all_same, "estimate_line_velocity: all firings share one timestamp, slope undefined");
    const LineFit fit = ols(t, pos);
    return {walk.participant, walk.date, std::abs(fit.slope) * 100.0};
}

struct GaussComponent {
    double mean = 0;
    double sd = 1;
    double weight = 0.5;
};

struct ClusterSplit {
    GaussComponent noise;
    GaussComponent gait;
    std::vector<int> assignments;    // 0 = noise, 1 = gait, aligned with input
    std::vector<double> loglik_trace; // one entry per EM iteration
    int iterations = 0;
};

namespace em_detail {

constexpr double kSdFloor = 1e-3;

inline double log_normal_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.9189385332046727; // ln sqrt(2 pi)
}

// k-means++-style seeding on the 1-D sample: first center uniform, second
// weighted by squared distance from the first.
inline std::pair<double, double> seed_centers(std::span<const double> values,
                                              std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    const double c0 = values[pick(rng)];
    std::vector<double> d2(values.size());
    double total = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        d2[i] = (values[i] - c0) * (values[i] - c0);
        total += d2[i];
    }
    double c1 = c0;
    if (total > 0) {
        std::uniform_real_distribution<double> u(0.0, total);
        double r = u(rng);
        for (std::size_t i = 0; i < values.size(); ++i) {
            r -= d2[i];
            if (r <= 0) {
                c1 = values[i];
                break;
            }
        }
        if (c1 == c0) c1 = values[values.size() - 1];
    }
    return {c0, c1};
}

} // namespace em_detail

// Two-component 1-D Gaussian mixture fit by EM, used to separate the
// near-zero artifact cluster from genuine walking speeds. Deterministic per
// seed; the larger-mean component is canonically `gait`.
inline ClusterSplit split_clusters(std::span<const double> velocities, std::uint64_t seed,
                                   int max_iter = 500, double rel_tol = 1e-8) {
    const std::size_t n = velocities.size();
    require(n >= 20, "split_clusters: need >= 20 estimates to cluster, got ", n);
    const double overall_sd = sample_sd(velocities);
    require(overall_sd > 1e-12, "split_clusters: degenerate input, all estimates equal ",
            velocities[0]);

    std::mt19937_64 rng(mix_seed(seed, 0x67617573));
    auto [c0, c1] = em_detail::seed_centers(velocities, rng);

    GaussComponent comp[2];
    comp[0].mean = c0;
    comp[1].mean = c1;
    // Hard-assign to the nearest center for initial spreads and weights.
    {
        std::vector<double> bucket[2];
        for (double v : velocities)
            bucket[std::abs(v - c1) < std::abs(v - c0) ? 1 : 0].push_back(v);
        for (int k = 0; k < 2; ++k) {
            if (bucket[k].size() >= 2) {
                comp[k].mean = mean(bucket[k]);
                comp[k].sd = std::max(sample_sd(bucket[k]), em_detail::kSdFloor);
            } else {
                comp[k].sd = std::max(overall_sd, em_detail::kSdFloor);
            }
            comp[k].weight =
                std::clamp(static_cast<double>(bucket[k].size()) / static_cast<double>(n), 0.05,
                           0.95);
        }
        const double wsum = comp[0].weight + comp[1].weight;
        comp[0].weight /= wsum;
        comp[1].weight /= wsum;
    }

    ClusterSplit split;
    std::vector<double> resp(n); // responsibility of component 1
    double prev_ll = -std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int iter = 0; iter < max_iter; ++iter) {
        // E-step and log-likelihood in one pass.
        double ll = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double l0 = std::log(comp[0].weight) +
                              em_detail::log_normal_pdf(velocities[i], comp[0].mean, comp[0].sd);
            const double l1 = std::log(comp[1].weight) +
                              em_detail::log_normal_pdf(velocities[i], comp[1].mean, comp[1].sd);
            const double hi = std::max(l0, l1);
            const double lse = hi + std::log(std::exp(l0 - hi) + std::exp(l1 - hi));
            resp[i] = std::exp(l1 - lse);
            ll += lse;
        }
        split.loglik_trace.push_back(ll);
        split.iterations = iter + 1;
        if (iter > 0 && std::abs(ll - prev_ll) <= rel_tol * (1.0 + std::abs(prev_ll))) {
            converged = true;
            break;
        }
        prev_ll = ll;

        // M-step.
        double n1 = 0, s1 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            n1 += resp[i];
            s1 += resp[i] * velocities[i];
        }
        const double n0 = static_cast<double>(n) - n1;
        double s0 = 0;
        for (std::size_t i = 0; i < n; ++i) s0 += (1.0 - resp[i]) * velocities[i];
        const double m0 = n0 > 0 ? s0 / n0 : comp[0].mean;
        const double m1 = n1 > 0 ? s1 / n1 : comp[1].mean;
        double v0 = 0, v1 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            v0 += (1.0 - resp[i]) * (velocities[i] - m0) * (velocities[i] - m0);
            v1 += resp[i] * (velocities[i] - m1) * (velocities[i] - m1);
        }
        comp[0].mean = m0;
        comp[1].mean = m1;
        comp[0].sd = std::max(n0 > 0 ? std::sqrt(v0 / n0) : comp[0].sd, em_detail::kSdFloor);
        comp[1].sd = std::max(n1 > 0 ? std::sqrt(v1 / n1) : comp[1].sd, em_detail::kSdFloor);
        comp[0].weight = std::clamp(n0 / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
        comp[1].weight = 1.0 - comp[0].weight;
    }
    if (!converged)
        raise("split_clusters: EM did not converge within ", max_iter, " iterations");

    const int gait_k = comp[1].mean > comp[0].mean ? 1 : 0;
    require(comp[gait_k].mean > comp[1 - gait_k].mean,
            "split_clusters: component means coincide at ", comp[0].mean);
    split.gait = comp[gait_k];
    split.noise = comp[1 - gait_k];
    split.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool to_one = resp[i] >= 0.5;
        split.assignments[i] = (to_one ? 1 : 0) == gait_k ? 1 : 0;
    }
    return split;
}

// Keeps estimates within two gait-cluster standard deviations of the gait
// mean, boundary inclusive.
inline std::vector<VelocityEstimate> filter_two_sd(const ClusterSplit& split,
                                                   const std::vector<VelocityEstimate>& estimates) {
    std::vector<VelocityEstimate> kept;
    for (const VelocityEstimate& e : estimates)
        if (std::abs(e.velocity_cmps - split.gait.mean) <= 2.0 * split.gait.sd) kept.push_back(e);
    return kept;
}

struct DailyVelocity {
    std::string participant;
    CivilDate date;
    double mean_cmps = 0;
    int n = 0;
    double sd_cmps = 0;
};

inline std::vector<DailyVelocity> daily_mean(const std::vector<VelocityEstimate>& retained) {
    std::map<std::pair<std::string, CivilDate>, std::vector<double>> groups;
    for (const VelocityEstimate& e : retained)
        groups[{e.participant, e.date}].push_back(e.velocity_cmps);
    std::vector<DailyVelocity> out;
    out.reserve(groups.size());
    for (const auto& [key, vals] : groups) {
        DailyVelocity d;
        d.participant = key.first;
        d.date = key.second;
        d.mean_cmps = mean(vals);
        d.n = static_cast<int>(vals.size());
        d.sd_cmps = sample_sd(vals);
        out.push_back(d);
    }
    return out;
}

struct QqDiagnostic {
    double r_squared = 0;
    double slope = 0;
    double intercept = 0;
};

// Paired (theoretical normal quantile, order statistic) points at plotting
// positions (i - 0.5)/n.
inline std::vector<std::pair<double, double>> qq_pairs(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(sorted.size());
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        pairs.emplace_back(normal_quantile((static_cast<double>(i) + 0.5) / n), sorted[i]);
    return pairs;
}

inline QqDiagnostic qq_diagnostic(std::span<const double> values) {
    require(values.size() >= 10, "qq_diagnostic: need >= 10 values, got ", values.size());
    require(sample_sd(values) > 0, "qq_diagnostic: constant sample, r^2 undefined");
    const auto pairs = qq_pairs(values);
    std::vector<double> q(pairs.size()), v(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        q[i] = pairs[i].first;
        v[i] = pairs[i].second;
    }
    const LineFit fit = ols(q, v);
    const double r = pearson_r(q, v);
    return {r * r, fit.slope, fit.intercept};
}

// Full chain from an event stream to daily targets: walks -> speeds ->
// cluster filter -> daily means. Clustering is per participant.
struct GroundTruthResult {
    std::vector<VelocityEstimate> estimates; // all, pre-filter
    std::vector<VelocityEstimate> retained;
    std::vector<DailyVelocity> daily;
    std::map<std::string, ClusterSplit> splits; // per participant
};

inline GroundTruthResult compute_ground_truth(const std::vector<SensorEvent>& events,
                                              const LineGeometry& geometry, std::uint64_t seed,
                                              double gap_seconds = 10.0,
                                              int tz_offset_minutes = 0) {
    GroundTruthResult result;
    for (const LineWalk& walk : assemble_line_walks(events, geometry, gap_seconds,
                                                    tz_offset_minutes))
        result.estimates.push_back(estimate_line_velocity(walk));

    std::map<std::string, std::vector<std::size_t>> by_participant;
    for (std::size_t i = 0; i < result.estimates.size(); ++i)
        by_participant[result.estimates[i].participant].push_back(i);
    for (const auto& [participant, idx] : by_participant) {
        std::vector<double> values;
        std::vector<VelocityEstimate> locals;
        values.reserve(idx.size());
        for (std::size_t i : idx) {
            values.push_back(result.estimates[i].velocity_cmps);
            locals.push_back(result.estimates[i]);
        }
        const ClusterSplit split = split_clusters(values, mix_seed(seed, fnv1a64(participant)));
        std::vector<VelocityEstimate> kept = filter_two_sd(split, locals);
        result.retained.insert(result.retained.end(), kept.begin(), kept.end());
        result.splits.emplace(participant, split);
    }
    result.daily = daily_mean(result.retained);
    return result;
}

// Clinic probes embedded in the event stream, one row per timed walk.
struct ClinicMeasurement {
    std::string participant;
    CivilDate date;
    double velocity_cmps = 0;
};

inline std::vector<ClinicMeasurement> extract_clinic_measurements(
    const std::vector<SensorEvent>& events, int tz_offset_minutes = 0) {
    std::vector<ClinicMeasurement> out;
    for (const SensorEvent& ev : events)
        if (const ClinicWalk* cw = ev.clinic())
            out.push_back({ev.participant, local_date(ev.time, tz_offset_minutes),
                           cw->velocity_cmps});
    return out;
}

inline constexpr const char* kDailyVelocityCsvHeader = "participant,date,mean_cm_s,n,sd_cm_s";
inline constexpr const char* kClinicCsvHeader = "participant,date,velocity_cm_s";

inline std::string serialize_daily_velocity(const std::vector<DailyVelocity>& rows) {
    std::ostringstream out;
    out << kDailyVelocityCsvHeader << '\n';
    for (const DailyVelocity& d : rows)
        out << d.participant << ',' << format_date(d.date) << ',' << format_double(d.mean_cmps)
            << ',' << d.n << ',' << format_double(d.sd_cmps) << '\n';
    return out.str();
}

inline std::vector<DailyVelocity> parse_daily_velocity_csv(std::istream& in) {
    constexpr std::string_view what = "daily velocity csv";
    CsvReader reader(in);
    expect_header(reader, kDailyVelocityCsvHeader, what);
    std::vector<DailyVelocity> rows;
    CsvRow row;
    while (reader.next(row)) {
        if (row.fields.size() != 5)
            raise(what, ": line ", row.line_no, ": expected 5 fields, got ", row.fields.size());
        DailyVelocity d;
        d.participant = row.fields[0];
        if (d.participant.empty()) field_error(what, row.line_no, "participant", "empty");
        if (!try_parse_date(row.fields[1], d.date))
            field_error(what, row.line_no, "date", "invalid date '" + row.fields[1] + "'");
        d.mean_cmps = parse_double_field(row.fields[2], what, row.line_no, "mean_cm_s");
        d.n = static_cast<int>(parse_int_field(row.fields[3], what, row.line_no, "n"));
        d.sd_cmps = parse_double_field(row.fields[4], what, row.line_no, "sd_cm_s");
        if (d.n < 1) field_error(what, row.line_no, "n", "must be >= 1");
        if (!(d.mean_cmps > 0)) field_error(what, row.line_no, "mean_cm_s", "must be > 0");
        rows.push_back(d);
    }
    return rows;
}

inline std::string serialize_clinic(const std::vector<ClinicMeasurement>& rows) {
    std::ostringstream out;
    out << kClinicCsvHeader << '\n';
    for (const ClinicMeasurement& c : rows)
        out << c.participant << ',' << format_date(c.date) << ','
            << format_double(c.velocity_cmps) << '\n';
    return out.str();
}

inline std::vector<ClinicMeasurement> parse_clinic_csv(std::istream& in) {
    constexpr std::string_view what = "clinic csv";
    CsvReader reader(in);
    expect_header(reader, kClinicCsvHeader, what);
    std::vector<ClinicMeasurement> rows;
    CsvRow row;
    while (reader.next(row)) {
        if (row.fields.size() != 3)
            raise(what, ": line ", row.line_no, ": expected 3 fields, got ", row.fields.size());
        ClinicMeasurement c;
        c.participant = row.fields[0];
        if (c.participant.empty()) field_error(what, row.line_no, "participant", "empty");
        if (!try_parse_date(row.fields[1], c.date))
            field_error(what, row.line_no, "date", "invalid date '" + row.fields[1] + "'");
        c.velocity_cmps = parse_double_field(row.fields[2], what, row.line_no, "velocity_cm_s");
        if (!(c.velocity_cmps > 0)) field_error(what, row.line_no, "velocity_cm_s", "must be > 0");
        rows.push_back(c);
    }
    return rows;
}

} // namespace gaitvel
