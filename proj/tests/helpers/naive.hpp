#pragma once

// Slow, obviously-correct reference implementations the tests compare
// against. Each one recomputes its answer from scratch with a different
// algorithm than the library uses.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace naive {

// Linear-interpolation percentile done the textbook way: sort a copy, take
// h = (n-1)p, blend the two straddling order statistics.
inline double percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    const double h = static_cast<double>(v.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

inline double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sd(const std::vector<double>& v) {
    const double m = mean(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double rmse(const std::vector<double>& truth, const std::vector<double>& pred) {
    double ss = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = truth[i] - pred[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(truth.size()));
}

struct Line {
    double slope = 0;
    double intercept = 0;
};

// OLS through the raw normal equations (the library centers first).
inline Line ols(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    Line fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean(x), my = mean(y);
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

// Group values by key and average each group, map-ordered.
template <typename Key>
inline std::map<Key, double> group_means(const std::vector<std::pair<Key, double>>& rows) {
    std::map<Key, std::pair<double, int>> acc;
    for (const auto& [k, v] : rows) {
        acc[k].first += v;
        acc[k].second += 1;
    }
    std::map<Key, double> out;
    for (const auto& [k, sv] : acc) out[k] = sv.first / sv.second;
    return out;
}

} // namespace naive
