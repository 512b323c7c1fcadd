#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gaitvel/features.hpp"
#include "gaitvel/groundtruth.hpp"
#include "gaitvel/svr.hpp"

namespace gaitvel {

// One (participant, pair, kind) evaluation: cross-validated RMSE in cm/s.
struct EvalCell {
    std::string participant;
    RoomPair pair;
    FeatureKind kind = FeatureKind::P20;
    double rmse_mean = 0;
    double rmse_sd = 0;
    std::size_t n_samples = 0;
    bool leave_one_out = false; // clinical fallback when targets are scarce
    std::string skip_reason;    // non-empty marks a skipped cell

    bool skipped() const { return !skip_reason.empty(); }
};

inline std::string pair_label(const RoomPair& pair) { return pair.first + ":" + pair.second; }

// Per-fold record kept for audit: exactly which indices were fit on and
// which were predicted, plus the hyperparameter the inner search chose.
struct FoldAudit {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    double chosen_c = 1.0;
    double rmse = 0;
};

struct CvResult {
    std::vector<FoldAudit> folds;
    double rmse_mean = 0;
    double rmse_sd = 0;
    std::vector<std::pair<double, double>> oof; // (truth, out-of-fold prediction)
};

// Iteration budget for each grid-search probe. Probes that cannot converge
// within it score +inf and drop out of the selection, which biases toward
// the smaller (flatter) C values exactly like the grid's own tie-break; the
// chosen C is then refit under the caller's full budget.
inline constexpr int kGridProbeMaxIter = 10'000;

// Inner hyperparameter selection on the training portion only. Too few rows
// for a meaningful inner split degrade to the moderate default C = 1.
inline double choose_c(std::span<const double> x, std::span<const double> y,
                       const SvrParams& base, std::uint64_t seed) {
    if (x.size() < 4) return 1.0;
    const std::size_t folds = std::min<std::size_t>(5, x.size());
    SvrParams probe = base;
    probe.max_iter = std::min(base.max_iter, kGridProbeMaxIter);
    return grid_search_c(x, y, probe, folds, seed).best_c;
}

// k-fold cross validation over raw (x, y) rows. Every per-fold artifact that
// can leak (scaler, standardizer, grid search) is fit inside train_model on
// the training portion alone; the audit trail records the index split so
// tests can verify that discipline.
inline CvResult cross_validate_xy(std::span<const double> x, std::span<const double> y,
                                  const SvrParams& base, std::size_t k, std::uint64_t seed) {
    require(x.size() == y.size(), "cross_validate: |x| != |y|");
    const std::size_t n = x.size();
    require(n >= k, "cross_validate: need n >= k, got n=", n, " k=", k);
    const auto fold_idx = kfold_split(n, k, seed);

    CvResult result;
    std::vector<double> fold_rmse;
    for (std::size_t f = 0; f < fold_idx.size(); ++f) {
        FoldAudit audit;
        audit.test_idx = fold_idx[f];
        std::vector<bool> in_test(n, false);
        for (std::size_t t : audit.test_idx) in_test[t] = true;
        std::vector<double> tx, ty;
        for (std::size_t i = 0; i < n; ++i)
            if (!in_test[i]) {
                audit.train_idx.push_back(i);
                tx.push_back(x[i]);
                ty.push_back(y[i]);
            }
        audit.chosen_c = choose_c(tx, ty, base, mix_seed(seed, f + 1));
        SvrParams params = base;
        params.C = audit.chosen_c;
        const SvrModel model = train_model(tx, ty, params);
        double ss = 0;
        for (std::size_t t : audit.test_idx) {
            const double pred = predict(model, x[t]);
            result.oof.emplace_back(y[t], pred);
            ss += (y[t] - pred) * (y[t] - pred);
        }
        audit.rmse = std::sqrt(ss / static_cast<double>(audit.test_idx.size()));
        fold_rmse.push_back(audit.rmse);
        result.folds.push_back(std::move(audit));
    }
    result.rmse_mean = mean(fold_rmse);
    result.rmse_sd = sample_sd(fold_rmse);
    return result;
}

// A joined sample: one feature value with its target velocity.
struct MatchedRow {
    double x = 0; // seconds
    double y = 0; // cm/s
};

enum class EvalMode { Daily, Clinical };

inline std::string to_string(EvalMode mode) {
    return mode == EvalMode::Daily ? "daily" : "clinical";
}

// Joins daily feature samples to same-date daily velocities.
inline std::vector<MatchedRow> join_daily(const std::vector<FeatureSample>& features,
                                          const std::vector<DailyVelocity>& targets) {
    std::map<std::pair<std::string, CivilDate>, double> lookup;
    for (const DailyVelocity& d : targets) lookup[{d.participant, d.date}] = d.mean_cmps;
    std::vector<MatchedRow> rows;
    for (const FeatureSample& f : features) {
        if (f.scope.is_window()) continue;
        const auto it = lookup.find({f.participant, f.scope.center});
        if (it != lookup.end()) rows.push_back({f.seconds, it->second});
    }
    return rows;
}

// Joins window feature samples (centered on clinic dates) to the clinic
// measurements at those centers.
inline std::vector<MatchedRow> join_clinical(const std::vector<FeatureSample>& features,
                                             const std::vector<ClinicMeasurement>& targets,
                                             int half_width_days) {
    std::map<std::pair<std::string, CivilDate>, double> lookup;
    for (const ClinicMeasurement& c : targets) lookup[{c.participant, c.date}] = c.velocity_cmps;
    std::vector<MatchedRow> rows;
    for (const FeatureSample& f : features) {
        if (!f.scope.is_window() || f.scope.half_width_days != half_width_days) continue;
        const auto it = lookup.find({f.participant, f.scope.center});
        if (it != lookup.end()) rows.push_back({f.seconds, it->second});
    }
    return rows;
}

struct CellResult {
    EvalCell cell;
    CvResult cv; // empty when skipped
};

// Evaluates one joined cell. Daily mode requires n >= k; clinical mode falls
// back to leave-one-out when 2 <= n < k because annual assessments are
// scarce by design.
inline CellResult evaluate_cell(std::string participant, RoomPair pair, FeatureKind kind,
                                const std::vector<MatchedRow>& rows, const SvrParams& base,
                                std::size_t k, std::uint64_t seed, EvalMode mode) {
    CellResult result;
    result.cell.participant = std::move(participant);
    result.cell.pair = std::move(pair);
    result.cell.kind = kind;
    result.cell.n_samples = rows.size();

    std::size_t folds = k;
    if (rows.size() < k) {
        if (mode == EvalMode::Clinical && rows.size() >= 2) {
            folds = rows.size(); // leave-one-out
            result.cell.leave_one_out = true;
        } else {
            result.cell.skip_reason = "too few matched samples (" + std::to_string(rows.size()) +
                                      " < " + std::to_string(k) + " folds)";
            return result;
        }
    }
    std::vector<double> x, y;
    x.reserve(rows.size());
    y.reserve(rows.size());
    for (const MatchedRow& r : rows) {
        x.push_back(r.x);
        y.push_back(r.y);
    }
    try {
        result.cv = cross_validate_xy(x, y, base, folds, seed);
        result.cell.rmse_mean = result.cv.rmse_mean;
        result.cell.rmse_sd = result.cv.rmse_sd;
    } catch (const Error& e) {
        result.cell.skip_reason = e.what();
        result.cv = CvResult{};
    }
    return result;
}

// Argmin over pairs per feature kind; ties break toward the lexicographically
// smaller pair label.
inline std::map<FeatureKind, EvalCell> best_pair_table(const std::vector<EvalCell>& cells) {
    std::map<FeatureKind, EvalCell> best;
    for (const EvalCell& cell : cells) {
        if (cell.skipped()) continue;
        const auto it = best.find(cell.kind);
        if (it == best.end()) {
            best.emplace(cell.kind, cell);
            continue;
        }
        const EvalCell& cur = it->second;
        if (cell.rmse_mean < cur.rmse_mean ||
            (cell.rmse_mean == cur.rmse_mean && pair_label(cell.pair) < pair_label(cur.pair)))
            it->second = cell;
    }
    return best;
}

struct PopulationReport {
    // Population mean (over participants) of each participant's
    // minimum-over-pairs RMSE, one entry per kind with >= 1 surviving cell.
    std::map<FeatureKind, double> kind_mean_rmse;
    std::vector<FeatureKind> kind_order; // ascending by population mean
    // Per participant: the globally best (pair, kind) cell.
    std::map<std::string, EvalCell> best_by_participant;
};

inline PopulationReport population_aggregate(const std::vector<EvalCell>& cells) {
    std::map<std::string, std::vector<EvalCell>> by_participant;
    for (const EvalCell& cell : cells)
        if (!cell.skipped()) by_participant[cell.participant].push_back(cell);
    require(!by_participant.empty(), "population_aggregate: no usable cells");

    PopulationReport report;
    std::map<FeatureKind, std::vector<double>> minima;
    for (const auto& [participant, rows] : by_participant) {
        const auto best = best_pair_table(rows);
        for (const auto& [kind, cell] : best) minima[kind].push_back(cell.rmse_mean);
        const EvalCell* overall = nullptr;
        for (const auto& [kind, cell] : best)
            if (overall == nullptr || cell.rmse_mean < overall->rmse_mean ||
                (cell.rmse_mean == overall->rmse_mean &&
                 pair_label(cell.pair) < pair_label(overall->pair)))
                overall = &cell;
        report.best_by_participant.emplace(participant, *overall);
    }
    for (const auto& [kind, vals] : minima) report.kind_mean_rmse.emplace(kind, mean(vals));
    for (const auto& [kind, v] : report.kind_mean_rmse) report.kind_order.push_back(kind);
    std::stable_sort(report.kind_order.begin(), report.kind_order.end(),
                     [&](FeatureKind a, FeatureKind b) {
                         return report.kind_mean_rmse.at(a) < report.kind_mean_rmse.at(b);
                     });
    return report;
}

struct RegressionSummary {
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;
};

// OLS of predicted on true plus r^2; the y = x diagnostic.
inline RegressionSummary predicted_vs_true(std::span<const double> truths,
                                           std::span<const double> predictions) {
    require(truths.size() == predictions.size(), "predicted_vs_true: size mismatch");
    require(truths.size() >= 3, "predicted_vs_true: need >= 3 pairs, got ", truths.size());
    const LineFit fit = ols(truths, predictions);
    const double r = pearson_r(truths, predictions);
    return {fit.slope, fit.intercept, r * r};
}

// Whole-evaluation driver: group features by (participant, pair, kind), join
// targets, evaluate every cell, aggregate.
struct EvaluationReport {
    EvalMode mode = EvalMode::Daily;
    int window_days = 0; // clinical only: 15 or 30
    std::uint64_t seed = 0;
    std::size_t feature_rows = 0;
    std::size_t target_rows = 0;
    std::size_t matched_rows = 0;
    std::vector<CellResult> cells; // sorted by (participant, pair, kind)
    PopulationReport population;   // populated when >= 1 cell survived
    bool has_population = false;
};

namespace eval_detail {

struct CellKey {
    std::string participant;
    RoomPair pair;
    FeatureKind kind;

    auto operator<=>(const CellKey&) const = default;
};

} // namespace eval_detail

inline EvaluationReport evaluate_daily(const std::vector<FeatureSample>& features,
                                       const std::vector<DailyVelocity>& targets,
                                       const SvrParams& base, std::size_t k, std::uint64_t seed) {
    EvaluationReport report;
    report.mode = EvalMode::Daily;
    report.seed = seed;
    report.feature_rows = features.size();
    report.target_rows = targets.size();

    std::map<eval_detail::CellKey, std::vector<FeatureSample>> groups;
    for (const FeatureSample& f : features) {
        if (f.scope.is_window()) continue;
        groups[{f.participant, {f.from_room, f.to_room}, f.kind}].push_back(f);
    }
    std::vector<EvalCell> survivors;
    for (const auto& [key, samples] : groups) {
        std::vector<MatchedRow> rows = join_daily(samples, targets);
        report.matched_rows += rows.size();
        const std::uint64_t cell_seed = mix_seed(
            seed, fnv1a64(key.participant + "|" + pair_label(key.pair) + "|" +
                          std::string(to_string(key.kind))));
        CellResult cr = evaluate_cell(key.participant, key.pair, key.kind, rows, base, k,
                                      cell_seed, EvalMode::Daily);
        if (!cr.cell.skipped()) survivors.push_back(cr.cell);
        report.cells.push_back(std::move(cr));
    }
    if (!survivors.empty()) {
        report.population = population_aggregate(survivors);
        report.has_population = true;
    }
    return report;
}

inline EvaluationReport evaluate_clinical(const std::vector<FeatureSample>& features,
                                          const std::vector<ClinicMeasurement>& targets,
                                          int window_days, const SvrParams& base, std::size_t k,
                                          std::uint64_t seed) {
    require(window_days == 15 || window_days == 30,
            "evaluate_clinical: window_days must be 15 or 30, got ", window_days);
    const int half_width = window_days / 2;
    EvaluationReport report;
    report.mode = EvalMode::Clinical;
    report.window_days = window_days;
    report.seed = seed;
    report.feature_rows = features.size();
    report.target_rows = targets.size();

    std::map<eval_detail::CellKey, std::vector<FeatureSample>> groups;
    for (const FeatureSample& f : features) {
        if (!f.scope.is_window() || f.scope.half_width_days != half_width) continue;
        groups[{f.participant, {f.from_room, f.to_room}, f.kind}].push_back(f);
    }
    std::vector<EvalCell> survivors;
    for (const auto& [key, samples] : groups) {
        std::vector<MatchedRow> rows = join_clinical(samples, targets, half_width);
        report.matched_rows += rows.size();
        const std::uint64_t cell_seed = mix_seed(
            seed, fnv1a64(key.participant + "|" + pair_label(key.pair) + "|" +
                          std::string(to_string(key.kind))));
        CellResult cr = evaluate_cell(key.participant, key.pair, key.kind, rows, base, k,
                                      cell_seed, EvalMode::Clinical);
        if (!cr.cell.skipped()) survivors.push_back(cr.cell);
        report.cells.push_back(std::move(cr));
    }
    if (!survivors.empty()) {
        report.population = population_aggregate(survivors);
        report.has_population = true;
    }
    return report;
}

// (truth, prediction) pairs backing the predicted-vs-true scatter: the
// out-of-fold predictions of each participant's best cell.
inline std::vector<std::pair<double, double>> best_cell_scatter(const EvaluationReport& report) {
    std::vector<std::pair<double, double>> points;
    if (!report.has_population) return points;
    for (const auto& [participant, best] : report.population.best_by_participant) {
        for (const CellResult& cr : report.cells) {
            if (cr.cell.participant == participant && cr.cell.pair == best.pair &&
                cr.cell.kind == best.kind && !cr.cell.skipped()) {
                points.insert(points.end(), cr.cv.oof.begin(), cr.cv.oof.end());
                break;
            }
        }
    }
    return points;
}

} // namespace gaitvel
