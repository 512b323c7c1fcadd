#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gaitvel/features.hpp"
#include "gaitvel/stats.hpp"

namespace gaitvel {

struct SvrParams {
    double C = 1.0;
    double epsilon = 0.1;      // tube half-width, standardized-target units
    double tolerance = 1e-6;   // KKT violation threshold
    int max_iter = 100'000;
};

// Scalar-feature training set. x is expected in scaled units ([-1,1] on the
// training fold), y in standardized target units; train_model() below does
// both transforms from raw values.
struct TrainingSet {
    std::vector<double> x;
    std::vector<double> y;

    std::size_t size() const { return x.size(); }
};

inline void validate_training_set(const TrainingSet& train) {
    require(train.x.size() == train.y.size(), "training set: |x| != |y|");
    require(train.size() >= 2, "training set: need at least 2 points, got ", train.size());
    for (std::size_t i = 0; i < train.size(); ++i)
        require(std::isfinite(train.x[i]) && std::isfinite(train.y[i]),
                "training set: non-finite value at index ", i);
}

// Eq-style epsilon-insensitive loss: zero inside the closed tube, |r|-eps
// beyond it.
inline double epsilon_loss(double residual, double epsilon) {
    require(epsilon >= 0, "epsilon_loss: epsilon must be >= 0, got ", epsilon);
    const double a = std::abs(residual);
    return a <= epsilon ? 0.0 : a - epsilon;
}

// Solution of the dual QP in solver units. alpha/alpha_star are the dual
// coefficient pairs; w == sum_i (alpha_i - alpha_star_i) * x_i.
struct SvrFit {
    double w = 0;
    double b = 0;
    std::vector<double> alpha;
    std::vector<double> alpha_star;
    int iterations = 0;
    double final_violation = 0;
};

namespace svr_detail {

// The dual works on 2l stacked variables: t < l is alpha_i with sign +1,
// t >= l is alpha_star_i with sign -1. For the linear kernel the Hessian is
// rank one, Q[t][u] = z_t * z_u with z_t = sign_t * x_{t mod l}, so the
// gradient is G_t = z_t * w + p_t with w maintained incrementally.
struct DualProblem {
    std::size_t l = 0;
    std::vector<double> z; // size 2l
    std::vector<double> p; // size 2l

    explicit DualProblem(const TrainingSet& train, double epsilon) : l(train.size()) {
        z.resize(2 * l);
        p.resize(2 * l);
        for (std::size_t i = 0; i < l; ++i) {
            z[i] = train.x[i];
            z[l + i] = -train.x[i];
            p[i] = epsilon - train.y[i];
            p[l + i] = epsilon + train.y[i];
        }
    }

    double sign(std::size_t t) const { return t < l ? 1.0 : -1.0; }
};

struct BiasInterval {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    double free_sum = 0;
    int free_count = 0;

    double bias() const { return free_count > 0 ? free_sum / free_count : (lower + upper) / 2; }
};

// KKT bounds on b given the current (alpha, alpha_star, w). Free support
// points pin b exactly; at-bound points only constrain one side.
inline BiasInterval bias_interval(const SvrFit& fit, const TrainingSet& train, double epsilon,
                                  double C) {
    BiasInterval bi;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const double fhat = fit.w * train.x[i];
        const double lo_val = train.y[i] - fhat - epsilon; // from the alpha side
        const double hi_val = train.y[i] - fhat + epsilon; // from the alpha_star side
        if (fit.alpha[i] > 0 && fit.alpha[i] < C) {
            bi.free_sum += lo_val;
            ++bi.free_count;
        }
        if (fit.alpha_star[i] > 0 && fit.alpha_star[i] < C) {
            bi.free_sum += hi_val;
            ++bi.free_count;
        }
        if (fit.alpha[i] < C) bi.lower = std::max(bi.lower, lo_val);
        if (fit.alpha[i] > 0) bi.upper = std::min(bi.upper, lo_val);
        if (fit.alpha_star[i] > 0) bi.lower = std::max(bi.lower, hi_val);
        if (fit.alpha_star[i] < C) bi.upper = std::min(bi.upper, hi_val);
    }
    return bi;
}

struct SmoOutcome {
    bool converged = false;
    int iterations = 0;
    double violation = std::numeric_limits<double>::infinity();
};

// Pairwise coordinate descent on the maximal-violating pair operating on a
// caller-provided beta (must be inside the box and on the equality
// hyperplane; zeros for a cold start, a previous solution for a warm one).
// Deterministic: selection ties break toward the lowest index. Leaves beta
// at the final iterate even when the iteration cap is hit, so an outer C
// sweep can reuse the progress.
//
// Scans run over a shrunken active set: variables locked at a bound whose
// -sign*G value cannot re-enter the violating window are set aside, libsvm
// style. Every kRecheckPeriod updates (and whenever the active set looks
// converged) the full set is rescanned, so termination is always certified
// against every variable and wrongly shrunk ones get reactivated.
inline SmoOutcome smo_minimize(const DualProblem& prob, const SvrParams& params,
                               std::vector<double>& beta) {
    const std::size_t l = prob.l;
    const std::size_t n = 2 * l;
    const double C = params.C;
    constexpr double kTau = 1e-12;
    constexpr int kRecheckPeriod = 1024;
    const double* z = prob.z.data();
    const double* p = prob.p.data();
    double* B = beta.data();

    double w = 0;
    for (std::size_t t = 0; t < n; ++t) w += z[t] * B[t];

    const double inf = std::numeric_limits<double>::infinity();
    // -sign_t * G_t: a lower bound on b for t in I_up, an upper bound for t
    // in I_low; optimality is max-over-I_up minus min-over-I_low < tol.
    const auto vvalue = [&](std::size_t t) {
        const double g = z[t] * w + p[t];
        return t < l ? -g : g;
    };
    const auto in_up = [&](std::size_t t) { return t < l ? B[t] < C : B[t] > 0; };
    const auto in_low = [&](std::size_t t) { return t < l ? B[t] > 0 : B[t] < C; };

    struct Scan {
        double m = 0, M = 0;
        std::size_t i_up = 0, i_low = 0;
    };
    // Pass 1: i_up = maximal violator over I_up, M = min over I_low (the
    // convergence check is m - M). Pass 2: the partner i_low is the I_low
    // violator with the largest second-order gain (violation^2 / curvature),
    // libsvm style, which avoids the first-order zig-zag between
    // near-parallel coordinates. Ties break toward the lowest index.
    const auto select_pair = [&](auto&& range) {
        Scan s{-inf, inf, n, n};
        for (const auto t : range) {
            const double v = vvalue(t);
            if (in_up(t) && v > s.m) {
                s.m = v;
                s.i_up = t;
            }
            if (in_low(t) && v < s.M) s.M = v;
        }
        if (s.i_up == n) return s;
        const double zi = z[s.i_up];
        const bool i_plus = s.i_up < l;
        double best_gain = -inf;
        for (const auto t : range) {
            if (!in_low(t)) continue;
            const double v = vvalue(t);
            const double diff = s.m - v;
            if (diff <= 0) continue;
            const bool t_plus = static_cast<std::size_t>(t) < l;
            double quad = (i_plus == t_plus) ? (zi - z[t]) * (zi - z[t])
                                             : (zi + z[t]) * (zi + z[t]);
            if (quad <= 0) quad = kTau;
            const double gain = diff * diff / quad;
            if (gain > best_gain) {
                best_gain = gain;
                s.i_low = t;
            }
        }
        return s;
    };

    struct IotaRange {
        std::size_t b = 0, e = 0;
        struct It {
            std::size_t v;
            std::size_t operator*() const { return v; }
            It& operator++() {
                ++v;
                return *this;
            }
            bool operator!=(const It& o) const { return v != o.v; }
        };
        It begin() const { return {b}; }
        It end() const { return {e}; }
    };
    const auto full_scan = [&]() { return select_pair(IotaRange{0, n}); };

    std::vector<std::uint32_t> active;
    active.reserve(n);
    // Keeps t when it is free, or when its bound-side v-value still sits
    // inside the (M, m) window of the latest full scan.
    const auto rebuild_active = [&](const Scan& full) {
        active.clear();
        for (std::size_t t = 0; t < n; ++t) {
            const bool up = in_up(t), low = in_low(t);
            if (up && low) {
                active.push_back(static_cast<std::uint32_t>(t));
                continue;
            }
            const double v = vvalue(t);
            if (up && v < full.M) continue;  // can never become the max side
            if (low && v > full.m) continue; // can never become the min side
            active.push_back(static_cast<std::uint32_t>(t));
        }
    };

    SmoOutcome out;
    {
        const Scan s = full_scan();
        out.violation = s.m - s.M;
        if (out.violation < params.tolerance) {
            out.converged = true;
            return out;
        }
        rebuild_active(s);
    }

    int iter = 0;
    int since_recheck = 0;
    for (; iter < params.max_iter; ++iter) {
        Scan s = select_pair(active);
        if (s.m - s.M < params.tolerance || ++since_recheck >= kRecheckPeriod) {
            const Scan full = full_scan();
            out.violation = full.m - full.M;
            if (out.violation < params.tolerance) {
                out.converged = true;
                break;
            }
            rebuild_active(full);
            since_recheck = 0;
            s = full;
        }

        const std::size_t i = s.i_up, j = s.i_low;
        const double Gi = z[i] * w + p[i];
        const double Gj = z[j] * w + p[j];
        const double old_i = B[i], old_j = B[j];

        if ((i < l) != (j < l)) {
            double quad = (z[i] + z[j]) * (z[i] + z[j]);
            if (quad <= 0) quad = kTau;
            const double delta = (-Gi - Gj) / quad;
            const double diff = B[i] - B[j];
            B[i] += delta;
            B[j] += delta;
            if (diff > 0) {
                if (B[j] < 0) {
                    B[j] = 0;
                    B[i] = diff;
                }
                if (B[i] > C) {
                    B[i] = C;
                    B[j] = C - diff;
                }
            } else {
                if (B[i] < 0) {
                    B[i] = 0;
                    B[j] = -diff;
                }
                if (B[j] > C) {
                    B[j] = C;
                    B[i] = C + diff;
                }
            }
        } else {
            double quad = (z[i] - z[j]) * (z[i] - z[j]);
            if (quad <= 0) quad = kTau;
            const double delta = (Gi - Gj) / quad;
            const double sum = B[i] + B[j];
            B[i] -= delta;
            B[j] += delta;
            if (sum > C) {
                if (B[i] > C) {
                    B[i] = C;
                    B[j] = sum - C;
                }
                if (B[j] > C) {
                    B[j] = C;
                    B[i] = sum - C;
                }
            } else {
                if (B[j] < 0) {
                    B[j] = 0;
                    B[i] = sum;
                }
                if (B[i] < 0) {
                    B[i] = 0;
                    B[j] = sum;
                }
            }
        }

        w += z[i] * (B[i] - old_i) + z[j] * (B[j] - old_j);
        if ((iter & 0xff) == 0xff) {
            // Periodically rebuild w to shed accumulated rounding drift.
            w = 0;
            for (std::size_t t = 0; t < n; ++t) w += z[t] * B[t];
        }
    }
    out.iterations = iter;
    if (!out.converged) {
        // Cap hit: report the certified full-set violation, not the stale
        // value from the last periodic recheck.
        const Scan s = full_scan();
        out.violation = s.m - s.M;
        out.converged = out.violation < params.tolerance;
    }
    return out;
}

// Assembles the public fit (alphas, exact w, bias) from a solver iterate.
inline SvrFit fit_from_beta(const DualProblem& prob, const TrainingSet& train,
                            const SvrParams& params, const std::vector<double>& beta,
                            const SmoOutcome& outcome) {
    SvrFit fit;
    fit.alpha.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(prob.l));
    fit.alpha_star.assign(beta.begin() + static_cast<std::ptrdiff_t>(prob.l), beta.end());
    // rounding in the pair updates can leave residues like 1e-16 on variables
    // that are at a bound in exact arithmetic; snap them so the bias interval
    // classifies free vs bound rows the way the exact solution would
    const double snap = 1e-12 * params.C;
    const auto clean = [&](double a) { return a < snap ? 0.0 : (a > params.C - snap ? params.C : a); };
    for (double& a : fit.alpha) a = clean(a);
    for (double& a : fit.alpha_star) a = clean(a);
    double w = 0;
    for (std::size_t i = 0; i < prob.l; ++i) w += prob.z[i] * (fit.alpha[i] - fit.alpha_star[i]);
    fit.w = w;
    fit.iterations = outcome.iterations;
    fit.final_violation = outcome.violation;
    fit.b = bias_interval(fit, train, params.epsilon, params.C).bias();
    return fit;
}

inline void validate_solver_inputs(const TrainingSet& train, const SvrParams& params) {
    validate_training_set(train);
    require(params.C > 0, "svr: C must be > 0, got ", params.C);
    require(params.epsilon >= 0, "svr: epsilon must be >= 0, got ", params.epsilon);
    require(params.tolerance > 0, "svr: tolerance must be > 0, got ", params.tolerance);
    const auto [lo, hi] = std::minmax_element(train.x.begin(), train.x.end());
    require(*hi > *lo, "svr: degenerate input, all feature values equal ", *lo);
}

} // namespace svr_detail

// Trains the linear epsilon-SVR dual by pairwise coordinate steps on the
// maximal-violating pair, libsvm style. Throws if x is degenerate or the
// iteration cap is hit before the KKT gap drops below params.tolerance.
inline SvrFit solve_svr(const TrainingSet& train, const SvrParams& params) {
    svr_detail::validate_solver_inputs(train, params);
    const svr_detail::DualProblem prob(train, params.epsilon);
    std::vector<double> beta(2 * prob.l, 0.0);
    const svr_detail::SmoOutcome out = svr_detail::smo_minimize(prob, params, beta);
    if (!out.converged)
        raise("svr: no convergence after ", params.max_iter,
              " iterations, final KKT violation ", out.violation);
    return svr_detail::fit_from_beta(prob, train, params, beta, out);
}

inline double primal_objective(const SvrFit& fit, const TrainingSet& train,
                               const SvrParams& params) {
    double loss_sum = 0;
    for (std::size_t i = 0; i < train.size(); ++i)
        loss_sum += epsilon_loss(train.y[i] - (fit.w * train.x[i] + fit.b), params.epsilon);
    return 0.5 * fit.w * fit.w + params.C * loss_sum;
}

// Value of the maximized dual; equals the primal objective at the optimum.
inline double dual_objective(const SvrFit& fit, const TrainingSet& train,
                             const SvrParams& params) {
    double v = -0.5 * fit.w * fit.w;
    for (std::size_t i = 0; i < train.size(); ++i) {
        v -= (params.epsilon - train.y[i]) * fit.alpha[i];
        v -= (params.epsilon + train.y[i]) * fit.alpha_star[i];
    }
    return v;
}

// Post-hoc KKT audit with the fitted bias: largest violation of the
// stationarity/complementarity conditions across all points.
inline double kkt_max_violation(const SvrFit& fit, const TrainingSet& train,
                                const SvrParams& params) {
    double worst = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const double r = train.y[i] - (fit.w * train.x[i] + fit.b);
        if (fit.alpha[i] > 0) worst = std::max(worst, params.epsilon - r);
        if (fit.alpha[i] < params.C) worst = std::max(worst, r - params.epsilon);
        if (fit.alpha_star[i] > 0) worst = std::max(worst, params.epsilon + r);
        if (fit.alpha_star[i] < params.C) worst = std::max(worst, -r - params.epsilon);
    }
    return worst;
}

// Zero-mean/unit-variance transform for targets, fit on training folds only.
struct Standardizer {
    double mean = 0;
    double sd = 1;

    double apply(double y) const { return (y - mean) / sd; }
    double invert(double s) const { return s * sd + mean; }
};

inline Standardizer fit_standardizer(std::span<const double> y) {
    Standardizer s;
    s.mean = mean(y);
    s.sd = sample_sd(y);
    if (s.sd < 1e-12) s.sd = 1.0; // constant targets: pass through centered
    return s;
}

// A trained model: solver-space fit plus the input scaler and target
// standardizer that were fit on the same training data.
struct SvrModel {
    SvrFit fit;
    Scaler scaler;
    Standardizer targets;
    SvrParams params;
};

inline SvrModel train_model(std::span<const double> x_raw, std::span<const double> y_raw,
                            const SvrParams& params) {
    require(x_raw.size() == y_raw.size(), "train_model: |x| != |y|");
    require(x_raw.size() >= 2, "train_model: need at least 2 samples, got ", x_raw.size());
    SvrModel model;
    model.params = params;
    model.scaler = fit_scaler(x_raw);
    model.targets = fit_standardizer(y_raw);
    TrainingSet train;
    train.x.reserve(x_raw.size());
    train.y.reserve(y_raw.size());
    for (std::size_t i = 0; i < x_raw.size(); ++i) {
        train.x.push_back(model.scaler.apply(x_raw[i]));
        train.y.push_back(model.targets.apply(y_raw[i]));
    }
    model.fit = solve_svr(train, params);
    return model;
}

inline double predict(const SvrModel& model, double x_raw) {
    return model.targets.invert(model.fit.w * model.scaler.apply(x_raw) + model.fit.b);
}

// The exponentially growing C grid: 2^-5, 2^-3, ..., 2^15.
inline std::vector<double> default_c_grid() {
    std::vector<double> grid;
    for (int e = -5; e <= 15; e += 2) grid.push_back(std::ldexp(1.0, e));
    return grid;
}

struct GridSearchResult {
    double best_c = 1.0;
    std::vector<std::pair<double, double>> cv_rmse; // (C, mean cv rmse)
};

// Cross-validated grid search over C on raw samples. Each fold refits the
// scaler and standardizer on its own training portion. A cell whose training
// fails scores +inf. Ties break toward the smaller (flatter) C.
//
// Folds are swept on the outside and grid values ascend on the inside so
// each solve warm-starts from the previous C's iterate for the same fold:
// the box only grows with C, so the carried beta stays feasible, and a
// non-converged solve still leaves its progress behind for the next C.
inline GridSearchResult grid_search_c(std::span<const double> x_raw, std::span<const double> y_raw,
                                      const SvrParams& base, std::size_t folds, std::uint64_t seed,
                                      const std::vector<double>& grid = default_c_grid()) {
    require(!grid.empty(), "grid_search_c: empty grid");
    require(x_raw.size() == y_raw.size(), "grid_search_c: |x| != |y|");
    const std::size_t n = x_raw.size();
    require(n >= folds, "grid_search_c: need n >= folds, got n=", n, " folds=", folds);
    require(std::is_sorted(grid.begin(), grid.end()), "grid_search_c: grid must ascend");
    const std::vector<std::vector<std::size_t>> fold_idx = kfold_split(n, folds, seed);

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> totals(grid.size(), 0.0);
    for (const std::vector<std::size_t>& test_idx : fold_idx) {
        std::vector<bool> in_test(n, false);
        for (std::size_t t : test_idx) in_test[t] = true;
        std::vector<double> tx, ty;
        for (std::size_t t = 0; t < n; ++t)
            if (!in_test[t]) {
                tx.push_back(x_raw[t]);
                ty.push_back(y_raw[t]);
            }

        try {
            const Scaler scaler = fit_scaler(tx);
            const Standardizer stand = fit_standardizer(ty);
            TrainingSet train;
            train.x.reserve(tx.size());
            train.y.reserve(ty.size());
            for (std::size_t t = 0; t < tx.size(); ++t) {
                train.x.push_back(scaler.apply(tx[t]));
                train.y.push_back(stand.apply(ty[t]));
            }
            SvrParams params = base;
            params.C = grid.front();
            svr_detail::validate_solver_inputs(train, params);
            const svr_detail::DualProblem prob(train, params.epsilon);
            std::vector<double> beta(2 * prob.l, 0.0);

            for (std::size_t g = 0; g < grid.size(); ++g) {
                params.C = grid[g];
                const svr_detail::SmoOutcome out = svr_detail::smo_minimize(prob, params, beta);
                if (!out.converged) {
                    totals[g] = kInf;
                    continue;
                }
                const SvrFit fit = svr_detail::fit_from_beta(prob, train, params, beta, out);
                double ss = 0;
                for (std::size_t t : test_idx) {
                    const double pred = stand.invert(fit.w * scaler.apply(x_raw[t]) + fit.b);
                    const double d = y_raw[t] - pred;
                    ss += d * d;
                }
                totals[g] += std::sqrt(ss / static_cast<double>(test_idx.size()));
            }
        } catch (const Error&) {
            // Fold unusable (degenerate scaler or solver input): every C
            // inherits the failure.
            std::fill(totals.begin(), totals.end(), kInf);
        }
    }

    GridSearchResult result;
    double best_rmse = kInf;
    result.best_c = grid.front();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double score = totals[g] / static_cast<double>(folds); // inf stays inf
        result.cv_rmse.emplace_back(grid[g], score);
        if (score < best_rmse) {
            best_rmse = score;
            result.best_c = grid[g];
        }
    }
    return result;
}

} // namespace gaitvel
