#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "camflow/grid.hpp"

namespace testutil {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline camflow::Grid2D random_grid(std::mt19937_64& gen, int h, int w, double lo = -1.0,
                                   double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    camflow::Grid2D g(h, w);
    for (double& v : g.values()) v = dist(gen);
    return g;
}

inline camflow::FeatureMap random_map(std::mt19937_64& gen, int c, int h, int w,
                                      double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    camflow::FeatureMap m(c, h, w);
    for (double& v : m.values()) v = dist(gen);
    return m;
}

// Coordinate with fractional part in [0.1, 0.9]: keeps finite-difference
// probes away from the kinks of piecewise-bilinear functions.
inline double fractional_coord(std::mt19937_64& gen, double lo, double hi) {
    std::uniform_int_distribution<int> whole(static_cast<int>(lo), static_cast<int>(hi) - 1);
    std::uniform_real_distribution<double> frac(0.1, 0.9);
    return whole(gen) + frac(gen);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::fabs(a[i] - b[i]));
    }
    return worst;
}

inline double max_abs_diff(const camflow::FeatureMap& a, const camflow::FeatureMap& b) {
    return max_abs_diff(a.values(), b.values());
}

// Spearman rank correlation; assumes no ties beyond exact duplicates.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    auto ranks = [n](const std::vector<double>& v) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
            return v[i] < v[j];
        });
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[order[i]] = static_cast<double>(i);
        return r;
    };
    const std::vector<double> ra = ranks(a);
    const std::vector<double> rb = ranks(b);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = ra[i] - rb[i];
        d2 += d * d;
    }
    const double nn = static_cast<double>(n);
    return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

}  // namespace testutil
