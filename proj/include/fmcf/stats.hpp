#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fmcf/rng.hpp"

namespace fmcf {

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 normalization).
inline double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mu = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct PowerLawFit {
    double exponent = 0.0;  ///< slope in log-log
    double amplitude = 0.0; ///< exp(intercept)
    double r2 = 0.0;
    bool degenerate = false; ///< non-positive data, fit impossible
};

/// Ordinary least squares of log(y) on log(x). Points with y <= 0 mark the
/// fit degenerate (a zero-variance sample has no power law).
inline PowerLawFit fit_power_law(const std::vector<double>& x,
                                 const std::vector<double>& y) {
    PowerLawFit fit;
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] > 0.0) || !(y[k] > 0.0)) {
            fit.degenerate = true;
            return fit;
        }
        lx.push_back(std::log(x[k]));
        ly.push_back(std::log(y[k]));
    }
    if (lx.size() < 2) {
        fit.degenerate = true;
        return fit;
    }
    double mx = mean(lx), my = mean(ly);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
        syy += (ly[k] - my) * (ly[k] - my);
    }
    fit.exponent = sxy / sxx;
    fit.amplitude = std::exp(my - fit.exponent * mx);
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

/// Percentile bootstrap of a statistic of per-seed rows.
/// `stat` maps a resampled index set to a scalar.
template <typename Stat>
std::pair<double, double> bootstrap_interval(std::size_t n, const Stat& stat,
                                             int n_resamples, std::uint64_t seed,
                                             double lo_q = 0.025, double hi_q = 0.975) {
    std::vector<double> vals(n_resamples);
    SplitMix64 rng(mix64(seed));
    std::vector<std::size_t> pick(n);
    for (int b = 0; b < n_resamples; ++b) {
        for (std::size_t k = 0; k < n; ++k) pick[k] = rng.next_below(n);
        vals[b] = stat(pick);
    }
    std::sort(vals.begin(), vals.end());
    auto at_q = [&](double q) {
        double pos = q * (vals.size() - 1);
        std::size_t i0 = static_cast<std::size_t>(pos);
        std::size_t i1 = std::min(i0 + 1, vals.size() - 1);
        return vals[i0] + (pos - i0) * (vals[i1] - vals[i0]);
    };
    return {at_q(lo_q), at_q(hi_q)};
}

/// Bootstrap standard error of a statistic.
template <typename Stat>
double bootstrap_se(std::size_t n, const Stat& stat, int n_resamples,
                    std::uint64_t seed) {
    std::vector<double> vals(n_resamples);
    SplitMix64 rng(mix64(seed));
    std::vector<std::size_t> pick(n);
    for (int b = 0; b < n_resamples; ++b) {
        for (std::size_t k = 0; k < n; ++k) pick[k] = rng.next_below(n);
        vals[b] = stat(pick);
    }
    return sample_std(vals);
}

/// Solve C * exp(-1/C) = p for C > 0 (bisection); the Gaussian-envelope
/// constant calibrated so the lambda = 1 tail fraction sits on the envelope.
inline double calibrate_envelope_constant(double p) {
    if (!(p > 0.0)) return 0.0;
    double lo = 1e-6, hi = 64.0;
    auto f = [](double c) { return c * std::exp(-1.0 / c); };
    if (f(hi) < p) return hi;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (f(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace fmcf
