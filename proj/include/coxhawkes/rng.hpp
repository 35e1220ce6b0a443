#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "coxhawkes/errors.hpp"
#include "coxhawkes/mathutil.hpp"

namespace coxhawkes {

// Splittable counter-based generator. Each output is a hash of
// (stream key, counter), so streams derived for different tags are
// independent of the draw order of their siblings; this is what makes
// per-cluster and per-chain reproducibility possible.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0)
        : key_(mix64(seed ^ 0x6a09e667f3bcc909ull)) {}

    std::uint64_t next_u64() {
        counter_ += 0x9e3779b97f4a7c15ull;
        return mix64(key_ ^ counter_);
    }

    // Child stream identified by tag; independent of this stream's position.
    RngStream child(std::uint64_t tag) const {
        RngStream s;
        s.key_ = mix64(key_ + mix64(tag ^ 0xbb67ae8584caa73bull));
        s.counter_ = 0;
        s.have_spare_ = false;
        return s;
    }

    // Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential(double rate) {
        if (!(rate > 0.0)) throw NumericalError("exponential: rate must be > 0");
        return -std::log(uniform()) / rate;
    }

    // Box-Muller with a cached spare; consumes two uniforms per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * kPi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    std::uint64_t poisson(double mean) {
        if (!(mean >= 0.0)) throw NumericalError("poisson: mean must be >= 0");
        if (mean == 0.0) return 0;
        if (mean < 30.0) return poisson_knuth(mean);
        return poisson_ptrs(mean);
    }

    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw NumericalError("uniform_index: n must be > 0");
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return static_cast<std::size_t>(v % n);
    }

    // Draws an index with probability proportional to consecutive differences
    // of the (strictly increasing) cumulative weight vector.
    std::size_t categorical_from_cumulative(const std::vector<double>& cumulative) {
        if (cumulative.empty() || !(cumulative.back() > 0.0)) {
            throw NumericalError("categorical: no mass");
        }
        double u = uniform() * cumulative.back();
        std::size_t lo = 0, hi = cumulative.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (cumulative[mid] <= u) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        return lo;
    }

private:
    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t poisson_knuth(double mean) {
        double limit = std::exp(-mean);
        double prod = uniform();
        std::uint64_t k = 0;
        while (prod > limit) {
            prod *= uniform();
            ++k;
        }
        return k;
    }

    // Hormann's PTRS transformed-rejection sampler, valid for mean >= 10.
    std::uint64_t poisson_ptrs(double mean) {
        double log_mu = std::log(mean);
        double b = 0.931 + 2.53 * std::sqrt(mean);
        double a = -0.059 + 0.02483 * b;
        double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        double v_r = 0.9277 - 3.6224 / (b - 2.0);
        while (true) {
            double u = uniform() - 0.5;
            double v = uniform();
            double us = 0.5 - std::fabs(u);
            double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
            double rhs = kf * log_mu - mean - std::lgamma(kf + 1.0);
            if (lhs <= rhs) return static_cast<std::uint64_t>(kf);
        }
    }

    std::uint64_t key_{0};
    std::uint64_t counter_{0};
    double spare_{0.0};
    bool have_spare_{false};
};

}  // namespace coxhawkes
