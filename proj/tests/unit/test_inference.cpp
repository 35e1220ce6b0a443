#include <doctest.h>

#include <cmath>

#include "coxhawkes/inference.hpp"
#include "coxhawkes/mathutil.hpp"
#include "coxhawkes/simulator.hpp"

using namespace coxhawkes;

namespace {

// Standard bivariate normal with correlation rho.
LogDensityTarget gaussian2d(double rho) {
    LogDensityTarget t;
    t.dim = 2;
    const double det = 1.0 - rho * rho;
    t.logp = [rho, det](std::span<const double> q) {
        return -0.5 * (q[0] * q[0] - 2.0 * rho * q[0] * q[1] + q[1] * q[1]) / det;
    };
    t.logp_grad = [rho, det](std::span<const double> q, std::span<double> g) {
        g[0] = -(q[0] - rho * q[1]) / det;
        g[1] = -(q[1] - rho * q[0]) / det;
        return -0.5 * (q[0] * q[0] - 2.0 * rho * q[0] * q[1] + q[1] * q[1]) / det;
    };
    return t;
}

McmcConfig quick_cfg(int chains, int samples, int warmup, std::uint64_t seed) {
    McmcConfig cfg;
    cfg.n_chains = chains;
    cfg.n_samples = samples;
    cfg.n_warmup = warmup;
    cfg.leapfrog_steps = 8;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("hmc recovers a correlated gaussian target") {
    const double rho = 0.4;
    const LogDensityTarget target = gaussian2d(rho);
    const std::vector<double> init{3.0, -2.0};
    McmcConfig cfg = quick_cfg(2, 3000, 500, 99);
    const HmcResult res = hmc_sample(target, init, cfg);
    REQUIRE(res.chains.size() == 2);
    const std::size_t n = res.chains[0].size() + res.chains[1].size();
    REQUIRE(n == 2 * 2500);
    double m0 = 0.0, m1 = 0.0, v0 = 0.0, v1 = 0.0, c01 = 0.0;
    for (const auto& chain : res.chains) {
        for (const auto& q : chain) {
            m0 += q[0];
            m1 += q[1];
        }
    }
    m0 /= n;
    m1 /= n;
    for (const auto& chain : res.chains) {
        for (const auto& q : chain) {
            v0 += (q[0] - m0) * (q[0] - m0);
            v1 += (q[1] - m1) * (q[1] - m1);
            c01 += (q[0] - m0) * (q[1] - m1);
        }
    }
    v0 /= n;
    v1 /= n;
    c01 /= n;
    // Mean within 3 SE assuming an effective sample of at least n / 10.
    const double se = 3.0 / std::sqrt(n / 10.0);
    CHECK(std::fabs(m0) < se);
    CHECK(std::fabs(m1) < se);
    CHECK(v0 == doctest::Approx(1.0).epsilon(0.10));
    CHECK(v1 == doctest::Approx(1.0).epsilon(0.10));
    CHECK(c01 == doctest::Approx(rho).epsilon(0.25));
    // Step-size adaptation lands near the target acceptance.
    for (const auto& s : res.stats) {
        CHECK(s.mean_accept > cfg.target_accept - 0.15);
        CHECK(s.mean_accept < cfg.target_accept + 0.15);
    }
}

TEST_CASE("hmc is deterministic and rejects degenerate configs") {
    const LogDensityTarget target = gaussian2d(0.0);
    const std::vector<double> init{1.0, 1.0};
    const McmcConfig cfg = quick_cfg(2, 200, 50, 7);
    const HmcResult a = hmc_sample(target, init, cfg);
    const HmcResult b = hmc_sample(target, init, cfg);
    for (std::size_t c = 0; c < a.chains.size(); ++c) {
        REQUIRE(a.chains[c].size() == b.chains[c].size());
        for (std::size_t d = 0; d < a.chains[c].size(); ++d) {
            CHECK(a.chains[c][d] == b.chains[c][d]);
        }
    }

    McmcConfig bad = cfg;
    bad.leapfrog_steps = 0;
    CHECK_THROWS_AS(hmc_sample(target, init, bad), ConfigError);
    bad = cfg;
    bad.n_warmup = cfg.n_samples;
    CHECK_THROWS_AS(hmc_sample(target, init, bad), ConfigError);
    bad = cfg;
    bad.target_accept = 1.0;
    CHECK_THROWS_AS(hmc_sample(target, init, bad), ConfigError);

    // Non-finite initialization is refused.
    LogDensityTarget nan_target = target;
    nan_target.logp = [](std::span<const double>) {
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(hmc_sample(nan_target, init, cfg), NumericalError);
}

TEST_CASE("detailed balance smoke test on a 1-d gaussian") {
    LogDensityTarget target;
    target.dim = 1;
    target.logp = [](std::span<const double> q) { return -0.5 * q[0] * q[0]; };
    target.logp_grad = [](std::span<const double> q, std::span<double> g) {
        g[0] = -q[0];
        return -0.5 * q[0] * q[0];
    };
    const std::vector<double> init{0.5};
    int passes = 0;
    const int runs = 100;
    for (int r = 0; r < runs; ++r) {
        McmcConfig cfg = quick_cfg(1, 750, 250, 1000 + r);
        const HmcResult res = hmc_sample(target, init, cfg);
        // Thin to soften autocorrelation before the exact-distribution test.
        std::vector<double> xs;
        for (std::size_t i = 0; i < res.chains[0].size(); i += 5) {
            xs.push_back(res.chains[0][i][0]);
        }
        std::sort(xs.begin(), xs.end());
        const double n = static_cast<double>(xs.size());
        double d = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double cdf = normal_cdf(xs[i]);
            d = std::max(d, std::max(cdf - i / n, (i + 1) / n - cdf));
        }
        if (ks_p_value(d, xs.size()) > 0.01) ++passes;
    }
    CHECK(passes >= 95);
}

TEST_CASE("r_hat separates mixed from unmixed chains") {
    RngStream rng(21);
    std::vector<std::vector<double>> iid(4), split(2);
    for (auto& c : iid) {
        for (int i = 0; i < 1000; ++i) c.push_back(rng.normal());
    }
    CHECK(r_hat(iid) == doctest::Approx(1.0).epsilon(0.01));

    for (int i = 0; i < 1000; ++i) {
        split[0].push_back(rng.normal() + 10.0);
        split[1].push_back(rng.normal() - 10.0);
    }
    CHECK(r_hat(split) > 1.2);

    CHECK_THROWS_AS(r_hat({iid[0]}), InsufficientDataError);
    std::vector<std::vector<double>> tiny(2, std::vector<double>(10, 0.0));
    CHECK_THROWS_AS(r_hat(tiny), InsufficientDataError);
}

TEST_CASE("effective sample size is sane for iid draws") {
    RngStream rng(22);
    std::vector<std::vector<double>> chains(2);
    for (auto& c : chains) {
        for (int i = 0; i < 2000; ++i) c.push_back(rng.normal());
    }
    const double ess = effective_sample_size(chains);
    CHECK(ess > 0.5 * 4000);
    CHECK(ess < 1.6 * 4000);
}

TEST_CASE("posterior field bands collapse and reflect symmetry") {
    const Grid1D grid = Grid1D::over(10.0, 8);
    const LowRankBasis basis = precompute_basis(grid, GPHyper{2.0, 1.0}, 1.0);
    PosteriorSamples samples;
    samples.kind = ModelKind::lgcp;
    samples.m_t = basis.rank();
    samples.m_s = 0;

    ParamState one;
    one.z_t.assign(basis.rank(), 0.0);
    one.z_t[0] = 1.3;
    samples.chains = {{one}};
    const FieldSummary single = posterior_field(samples, basis, true);
    const GridField f = sample_field(basis, one.z_t);
    for (int i = 0; i < grid.n_t; ++i) {
        CHECK(single.mean[i] == doctest::Approx(f.values[i]));
        CHECK(single.quantiles[0][i] == doctest::Approx(f.values[i]));
        CHECK(single.quantiles[1][i] == doctest::Approx(f.values[i]));
    }

    ParamState minus = one;
    minus.z_t[0] = -1.3;
    samples.chains = {{one, minus}};
    const FieldSummary pair = posterior_field(samples, basis, true, {0.0, 1.0});
    for (int i = 0; i < grid.n_t; ++i) {
        CHECK(pair.mean[i] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(pair.quantiles[1][i] == doctest::Approx(std::fabs(f.values[i])));
        CHECK(pair.quantiles[0][i] == doctest::Approx(-std::fabs(f.values[i])));
    }
}

TEST_CASE("fit recovers a0 on lgcp data and matches a pinned-trigger run") {
    // Simulate a small LGCP dataset.
    SimConfig sim_cfg;
    sim_cfg.domain = Domain{20.0, {0.0, 1.0}, {0.0, 1.0}};
    sim_cfg.kind = ModelKind::lgcp;
    sim_cfg.a0 = 1.3;
    sim_cfg.gp_t = GPHyper{5.0, 0.3};
    sim_cfg.gp_s = GPHyper{0.4, 0.3};
    sim_cfg.n_t_cells = 20;
    sim_cfg.n_x_cells = 8;
    sim_cfg.n_y_cells = 8;
    sim_cfg.seed = 11;
    const SimResult sim = simulate(sim_cfg);
    REQUIRE(sim.events.size() > 10);

    const Grid1D gt = Grid1D::over(20.0, 20);
    const Grid2D gs = Grid2D::over({0.0, 1.0}, {0.0, 1.0}, 8, 8);
    const LowRankBasis bt = precompute_basis(gt, *sim_cfg.gp_t, 0.99);
    const LowRankBasis bs = precompute_basis(gs, *sim_cfg.gp_s, 0.99);
    Model lgcp(ModelKind::lgcp, sim.events, sim_cfg.domain, gt, gs, bt, bs, PriorSpec{});

    McmcConfig cfg = quick_cfg(2, 700, 250, 17);
    cfg.leapfrog_steps = 16;
    const PosteriorSamples post = fit(lgcp, cfg);
    REQUIRE(post.draws_per_chain() == 450);
    const auto summaries = summarize(post);
    const ParamSummary& a0s = summaries.front();
    CHECK(a0s.name == "a0");
    CHECK(a0s.q05 < 1.3);
    CHECK(a0s.q95 > 1.3);
    CHECK(r_hat(post, "a0") < 1.2);
    // Constrained draws stay positive where they must.
    for (const auto& chain : post.chains) {
        for (const auto& s : chain) {
            CHECK(s.z_t.size() == static_cast<std::size_t>(bt.rank()));
        }
    }

    // The same posterior reached through the cox layout with the trigger
    // block pinned at a vanishing alpha: a0 means agree within MC error.
    Model cox(ModelKind::cox_hawkes, sim.events, sim_cfg.domain, gt, gs, bt, bs,
              PriorSpec{});
    LogDensityTarget pinned;
    pinned.dim = lgcp.dim();
    auto expand = [&cox](std::span<const double> u) {
        std::vector<double> full(cox.dim());
        full[0] = u[0];
        full[1] = -34.5;  // alpha ~ 1e-15
        full[2] = 0.0;
        full[3] = 0.0;
        full[4] = 0.0;
        std::copy(u.begin() + 1, u.end(), full.begin() + 5);
        return full;
    };
    pinned.logp = [&](std::span<const double> u) {
        return cox.log_posterior(expand(u));
    };
    pinned.logp_grad = [&](std::span<const double> u, std::span<double> g) {
        const auto full = expand(u);
        const auto fg = cox.grad_log_posterior(full);
        g[0] = fg[0];
        std::copy(fg.begin() + 5, fg.end(), g.begin() + 1);
        return cox.log_posterior(full);
    };
    std::vector<double> init(pinned.dim, 0.0);
    init[0] = std::log((sim.events.size() + 0.5) / sim_cfg.domain.volume());
    const HmcResult pinned_res = hmc_sample(pinned, init, cfg);
    double pinned_mean = 0.0;
    std::size_t n = 0;
    for (const auto& chain : pinned_res.chains) {
        for (const auto& q : chain) {
            pinned_mean += q[0];
            ++n;
        }
    }
    pinned_mean /= static_cast<double>(n);
    CHECK(pinned_mean == doctest::Approx(a0s.mean).epsilon(0.02));
}
