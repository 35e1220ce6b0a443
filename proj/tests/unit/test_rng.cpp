#include <doctest.h>

#include <cmath>
#include <vector>

#include "coxhawkes/rng.hpp"

using namespace coxhawkes;

TEST_CASE("streams are deterministic and seed-sensitive") {
    RngStream a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    bool differs = false;
    RngStream a2(42);
    for (int i = 0; i < 10; ++i) {
        if (a2.next_u64() != c.next_u64()) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("child streams are independent of parent position") {
    RngStream parent(7);
    RngStream child_before = parent.child(5);
    parent.next_u64();
    parent.next_u64();
    RngStream child_after = parent.child(5);
    for (int i = 0; i < 20; ++i) {
        CHECK(child_before.next_u64() == child_after.next_u64());
    }
    RngStream other = parent.child(6);
    CHECK(other.next_u64() != parent.child(5).next_u64());
}

TEST_CASE("uniform stays in the open unit interval") {
    RngStream rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("moment checks for normal, exponential, poisson") {
    RngStream rng(123);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::fabs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));

    sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.exponential(0.7);
    CHECK(sum / n == doctest::Approx(1.0 / 0.7).epsilon(0.02));

    // Small-mean and PTRS branches.
    for (double mu : {2.0, 80.0}) {
        double psum = 0.0, psq = 0.0;
        for (int i = 0; i < n / 4; ++i) {
            const double k = static_cast<double>(rng.poisson(mu));
            psum += k;
            psq += k * k;
        }
        const double pm = psum / (n / 4);
        const double pv = psq / (n / 4) - pm * pm;
        CHECK(pm == doctest::Approx(mu).epsilon(0.02));
        CHECK(pv == doctest::Approx(mu).epsilon(0.05));
    }
}

TEST_CASE("categorical draws follow the weights") {
    RngStream rng(9);
    std::vector<double> cum{0.1, 0.1 + 0.6, 0.1 + 0.6 + 0.3};
    std::vector<int> counts(3, 0);
    const int n = 60000;
    for (int i = 0; i < n; ++i) ++counts[rng.categorical_from_cumulative(cum)];
    CHECK(counts[0] / static_cast<double>(n) == doctest::Approx(0.1).epsilon(0.1));
    CHECK(counts[1] / static_cast<double>(n) == doctest::Approx(0.6).epsilon(0.05));
    CHECK(counts[2] / static_cast<double>(n) == doctest::Approx(0.3).epsilon(0.07));
}
