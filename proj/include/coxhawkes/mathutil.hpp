#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "coxhawkes/errors.hpp"

namespace coxhawkes {

inline constexpr double kPi = 3.14159265358979323846;

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi);
}

// Standard normal CDF via erfc; absolute error well below 1e-12 over the
// range we use (|z| < 40).
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// Inverse standard normal CDF. Cold path only (prior medians, interval
// endpoints); Newton refinement on erfc from a crude seed.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw NumericalError("normal_quantile: p must lie in (0, 1)");
    }
    double tail = std::min(p, 1.0 - p);
    double x = std::sqrt(-2.0 * std::log(tail));
    // Rough asymptotic seed, sign fixed below.
    x -= (std::log(x) + std::log(2.0 * kPi) / 2.0) / std::max(x, 1.0);
    if (p < 0.5) x = -x;
    for (int it = 0; it < 12; ++it) {
        double err = normal_cdf(x) - p;
        double step = err / std::max(normal_pdf(x), 1e-300);
        // Halley correction for cubic convergence.
        step /= 1.0 + 0.5 * x * step;
        x -= step;
        if (std::fabs(step) < 1e-14 * std::max(1.0, std::fabs(x))) break;
    }
    return x;
}

// log density of N(mean, sd^2).
inline double normal_logpdf(double x, double mean, double sd) {
    double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * kPi);
}

struct TruncatedNormal {
    double loc{0.0};
    double scale{1.0};

    // log density on (0, inf); -inf below the support boundary.
    double logpdf(double x) const {
        if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
        return normal_logpdf(x, loc, scale) - std::log(normal_cdf(loc / scale));
    }
    // d logpdf / dx for x > 0 (normalizer is constant in x).
    double dlogpdf(double x) const { return -(x - loc) / (scale * scale); }

    double median() const {
        double p0 = normal_cdf(-loc / scale);
        return loc + scale * normal_quantile(0.5 * (1.0 + p0));
    }
};

// Asymptotic p-value for the one-sample Kolmogorov-Smirnov statistic d on n
// observations (Stephens' small-sample adjustment).
inline double ks_p_value(double d, std::size_t n) {
    if (n == 0) throw InsufficientDataError("ks_p_value: empty sample");
    double en = std::sqrt(static_cast<double>(n));
    double lambda = (en + 0.12 + 0.11 / en) * d;
    if (lambda < 1e-8) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        double term = 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
        sum += (j % 2 == 1) ? term : -term;
        if (term < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

// Linear-interpolation quantile (type 7) of an unsorted sample.
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InsufficientDataError("quantile: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw NumericalError("quantile: q outside [0, 1]");
    std::sort(values.begin(), values.end());
    double pos = q * static_cast<double>(values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Unbiased sample variance.
inline double variance_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

// FNV-1a, used to stamp artifact files with a configuration fingerprint.
inline std::uint64_t fnv1a_hash(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace coxhawkes
