#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "cssm/common.hpp"

// Median-of-reps timing for the benchmark command and the acceptance checks.

namespace cssm {

struct TimingStats {
    double median_ns = 0.0;
    double iqr_ns = 0.0;
    std::size_t reps = 0;
};

inline double time_once_ns(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return static_cast<double>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
}

inline TimingStats measure_ns(const std::function<void()>& fn, std::size_t reps,
                              std::size_t warmup = 1) {
    require(reps >= 1, "measure_ns: reps must be positive");
    for (std::size_t i = 0; i < warmup; ++i) fn();
    std::vector<double> samples(reps);
    for (std::size_t i = 0; i < reps; ++i) samples[i] = time_once_ns(fn);
    std::sort(samples.begin(), samples.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(reps - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, reps - 1);
        const double frac = pos - static_cast<double>(lo);
        return samples[lo] * (1.0 - frac) + samples[hi] * frac;
    };
    TimingStats s;
    s.median_ns = quantile(0.5);
    s.iqr_ns = quantile(0.75) - quantile(0.25);
    s.reps = reps;
    return s;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "loglog_slope: need >= 2 points");
    const auto n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace cssm
