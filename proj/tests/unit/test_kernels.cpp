#include <doctest.h>

#include <cmath>

#include "coxhawkes/kernels.hpp"
#include "coxhawkes/mathutil.hpp"
#include "coxhawkes/rng.hpp"

using namespace coxhawkes;

namespace {
const TriggerParams kExp1{0.5, 0.7, 0.5, 0.5};
const Domain kUnit{50.0, {0.0, 1.0}, {0.0, 1.0}};
}  // namespace

TEST_CASE("trigger intensity frozen values") {
    // alpha*beta/(2*pi*sx*sy) at the origin as dt -> 0+.
    CHECK(trigger_intensity(1e-12, 0.0, 0.0, kExp1) ==
          doctest::Approx(0.11140846016432673).epsilon(1e-9));
    CHECK(trigger_intensity(1.0, 0.0, 0.0, kExp1) ==
          doctest::Approx(0.05532380403563534).epsilon(1e-12));
    TriggerParams zero = kExp1;
    zero.alpha = 0.0;
    CHECK(trigger_intensity(0.3, 0.2, 0.1, zero) == 0.0);
    CHECK_THROWS_AS(trigger_intensity(0.0, 0.0, 0.0, kExp1), NumericalError);
    CHECK_THROWS_AS(trigger_intensity(-1.0, 0.0, 0.0, kExp1), NumericalError);
}

TEST_CASE("trigger temporal mass closed form") {
    CHECK(trigger_temporal_mass(0.0, 50.0, kExp1) ==
          doctest::Approx(0.49999999999999967).epsilon(1e-14));
    CHECK(trigger_temporal_mass(3.0, 3.0, kExp1) == 0.0);
    CHECK(trigger_temporal_mass(0.0, 1.0 / 0.7, kExp1) ==
          doctest::Approx(0.5 * (1.0 - std::exp(-1.0))).epsilon(1e-14));
    CHECK_THROWS_AS(trigger_temporal_mass(2.0, 1.0, kExp1), NumericalError);
}

TEST_CASE("trigger spatial mass frozen values") {
    Domain unit1{1.0, {0.0, 1.0}, {0.0, 1.0}};
    CHECK(trigger_spatial_mass(0.5, 0.5, unit1, kExp1) ==
          doctest::Approx(0.27092012280339633).epsilon(1e-10));
    // Tiny variance concentrates all mass inside.
    TriggerParams tight = kExp1;
    tight.sigma_x2 = 1e-12;
    tight.sigma_y2 = 1e-12;
    CHECK(trigger_spatial_mass(0.5, 0.5, unit1, tight) == doctest::Approx(1.0));
    // Huge variance spreads to area / (2 pi sigma_x sigma_y).
    TriggerParams wide = kExp1;
    wide.sigma_x2 = 1e6;
    wide.sigma_y2 = 1e6;
    CHECK(trigger_spatial_mass(0.5, 0.5, unit1, wide) ==
          doctest::Approx(1.5915492982898983e-07).epsilon(1e-6));
}

TEST_CASE("spatial mass grows monotonically to one with the domain") {
    double prev = 0.0;
    for (int r = 1; r <= 12; ++r) {
        Domain dom{1.0, {0.5 - r * 0.7, 0.5 + r * 0.7}, {0.5 - r * 0.7, 0.5 + r * 0.7}};
        const double m = trigger_spatial_mass(0.5, 0.5, dom, kExp1);
        CHECK(m >= prev);
        CHECK(m <= 1.0);
        prev = m;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("total kernel mass integrates to alpha") {
    // Temporal factor against an infinity proxy, spatial factor on a huge box.
    const double temporal = trigger_temporal_mass(0.0, 1e6, kExp1);
    Domain big{1.0, {-100.0, 100.0}, {-100.0, 100.0}};
    const double spatial = trigger_spatial_mass(0.0, 0.0, big, kExp1);
    CHECK(std::fabs(temporal * spatial - kExp1.alpha) < 1e-9);

    // Monte-Carlo integration of the kernel itself, relative error < 1%.
    // The box holds all but ~1e-6 of the mass and keeps the variance low
    // enough for the sample size.
    RngStream rng(2024);
    const int n = 4000000;
    const double t_hi = 20.0, box = 4.0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double dt = rng.uniform() * t_hi;
        const double dx = rng.uniform(-box, box);
        const double dy = rng.uniform(-box, box);
        sum += trigger_intensity(dt, dx, dy, kExp1);
    }
    const double volume = t_hi * (2 * box) * (2 * box);
    const double mc = sum / n * volume;
    CHECK(mc == doctest::Approx(kExp1.alpha).epsilon(0.01));
}

TEST_CASE("se covariance values and properties") {
    GPHyper h{10.0, 1.0};
    const double u[] = {0.0};
    const double v[] = {10.0};
    CHECK(se_covariance(u, v, h) == doctest::Approx(0.6065306597126334).epsilon(1e-14));
    const double w[] = {50.0};
    CHECK(se_covariance(u, w, h) == doctest::Approx(3.726653172078671e-06).epsilon(1e-12));
    CHECK(se_covariance(u, u, h) == doctest::Approx(1.0));

    GPHyper hs{0.25, 2.5};
    const double p1[] = {0.1, 0.9};
    const double p2[] = {0.7, 0.3};
    CHECK(se_covariance(p1, p2, hs) == se_covariance(p2, p1, hs));
    CHECK(se_covariance(p1, p2, hs) <= hs.variance);
    const double q1[] = {0.1};
    CHECK_THROWS_AS(se_covariance(q1, p2, hs), NumericalError);
}
