#include "coxhawkes/inference.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "coxhawkes/errors.hpp"

namespace coxhawkes {

namespace {

constexpr double kDivergenceThreshold = 1000.0;

struct DualAverage {
    // Hoffman-Gelman schedule: gamma 0.05, t0 10, kappa 0.75.
    double mu{0.0};
    double log_eps{0.0};
    double log_eps_bar{0.0};
    double h_bar{0.0};
    double target{0.8};
    double count{1.0};

    explicit DualAverage(double eps_init, double target_accept)
        : mu(std::log(10.0 * eps_init)),
          log_eps(std::log(eps_init)),
          target(target_accept) {}

    void update(double accept_prob) {
        const double w = 1.0 / (count + 10.0);
        h_bar = (1.0 - w) * h_bar + w * (target - accept_prob);
        log_eps = std::max(mu - std::sqrt(count) / 0.05 * h_bar, std::log(1e-12));
        const double w2 = std::pow(count, -0.75);
        log_eps_bar = w2 * log_eps + (1.0 - w2) * log_eps_bar;
        count += 1.0;
    }

    double current() const { return std::exp(log_eps); }
    double adapted() const { return std::exp(log_eps_bar); }
};

struct ChainWorkspace {
    std::vector<double> q, p, q_new, p_new, grad;
    std::vector<double> inv_mass, mass_sd;
};

double kinetic(std::span<const double> p, std::span<const double> inv_mass) {
    double k = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) k += p[i] * p[i] * inv_mass[i];
    return 0.5 * k;
}

// One full trajectory; returns the final log density, or NaN when the
// integrator produced a non-finite state.
double leapfrog(const LogDensityTarget& target, ChainWorkspace& ws, double eps, int steps,
                double& logp_out) {
    const std::size_t d = ws.q_new.size();
    double logp = target.logp_grad(ws.q_new, ws.grad);
    for (std::size_t i = 0; i < d; ++i) ws.p_new[i] += 0.5 * eps * ws.grad[i];
    for (int s = 0; s < steps; ++s) {
        for (std::size_t i = 0; i < d; ++i) {
            ws.q_new[i] += eps * ws.inv_mass[i] * ws.p_new[i];
        }
        logp = target.logp_grad(ws.q_new, ws.grad);
        if (!std::isfinite(logp)) return std::numeric_limits<double>::quiet_NaN();
        const double scale = (s + 1 == steps) ? 0.5 : 1.0;
        for (std::size_t i = 0; i < d; ++i) ws.p_new[i] += scale * eps * ws.grad[i];
    }
    logp_out = logp;
    return logp;
}

struct ChainDraws {
    std::vector<std::vector<double>> draws;
    ChainStats stats;
};

int jittered_steps(int base, double jitter, RngStream& rng) {
    if (jitter <= 0.0) return std::max(base, 1);
    const int lo = std::max(1, static_cast<int>(std::floor(base * (1.0 - jitter))));
    const int hi = std::max(lo, static_cast<int>(std::ceil(base * (1.0 + jitter))));
    return lo + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(hi - lo + 1)));
}

double find_initial_step_size(const LogDensityTarget& target, ChainWorkspace& ws,
                              std::span<const double> q0, double logp0, RngStream& rng) {
    double eps = 0.1;
    std::vector<double> p0(q0.size());
    for (std::size_t i = 0; i < q0.size(); ++i) {
        p0[i] = rng.normal() * ws.mass_sd[i];
    }
    const double h0 = -logp0 + kinetic(p0, ws.inv_mass);
    auto accept_of = [&](double e) {
        ws.q_new.assign(q0.begin(), q0.end());
        ws.p_new = p0;
        double logp = 0.0;
        double r = leapfrog(target, ws, e, 1, logp);
        if (!std::isfinite(r)) return 0.0;
        const double h1 = -logp + kinetic(ws.p_new, ws.inv_mass);
        return std::exp(std::min(0.0, h0 - h1));
    };
    double a = accept_of(eps);
    const double dir = a > 0.5 ? 2.0 : 0.5;
    for (int it = 0; it < 50; ++it) {
        const double next = eps * dir;
        if (next < 1e-10 || next > 1e3) break;
        const double an = accept_of(next);
        if ((dir > 1.0 && an <= 0.5) || (dir < 1.0 && an >= 0.5)) {
            eps = next;
            break;
        }
        eps = next;
        a = an;
    }
    return eps;
}

ChainDraws run_chain(const LogDensityTarget& target, std::span<const double> init,
                     const McmcConfig& cfg, RngStream rng) {
    const std::size_t d = target.dim;
    ChainWorkspace ws;
    ws.q.assign(init.begin(), init.end());
    ws.p.assign(d, 0.0);
    ws.q_new.assign(d, 0.0);
    ws.p_new.assign(d, 0.0);
    ws.grad.assign(d, 0.0);
    ws.inv_mass.assign(d, 1.0);
    ws.mass_sd.assign(d, 1.0);

    double logp = target.logp(ws.q);
    if (!std::isfinite(logp)) {
        throw NumericalError("hmc: log density not finite at initialization");
    }

    double eps = find_initial_step_size(target, ws, ws.q, logp, rng);
    DualAverage da(eps, cfg.target_accept);

    const int n_keep = cfg.n_samples - cfg.n_warmup;
    ChainDraws out;
    out.draws.reserve(n_keep);
    int divergences = 0;
    double accept_sum = 0.0;
    int accept_count = 0;
    int warmup_divergences = 0;

    // Mass adaptation window: the step size re-adapts over the second half
    // of warmup under the new metric.
    const int mass_lo = cfg.n_warmup / 5;
    const int mass_hi = cfg.n_warmup / 2;
    std::vector<double> mass_mean(d, 0.0), mass_m2(d, 0.0);
    long mass_n = 0;

    for (int iter = 0; iter < cfg.n_samples; ++iter) {
        const bool warming = iter < cfg.n_warmup;
        const double step = warming ? da.current() : eps;
        const int steps = jittered_steps(cfg.leapfrog_steps, cfg.leapfrog_jitter, rng);

        for (std::size_t i = 0; i < d; ++i) ws.p[i] = rng.normal() * ws.mass_sd[i];
        ws.q_new = ws.q;
        ws.p_new = ws.p;
        const double h0 = -logp + kinetic(ws.p, ws.inv_mass);
        double logp_new = 0.0;
        const double ok = leapfrog(target, ws, step, steps, logp_new);

        double accept_prob = 0.0;
        bool divergent = false;
        if (std::isfinite(ok)) {
            const double h1 = -logp_new + kinetic(ws.p_new, ws.inv_mass);
            const double dh = h0 - h1;
            // A non-finite energy difference counts as divergent; NaN must
            // never reach the acceptance test.
            if (!std::isfinite(dh) || std::fabs(dh) > kDivergenceThreshold) {
                divergent = true;
            } else {
                accept_prob = std::exp(std::min(0.0, dh));
            }
        } else {
            divergent = true;
        }

        if (!divergent && rng.uniform() < accept_prob) {
            ws.q = ws.q_new;
            logp = logp_new;
        }

        if (warming) {
            da.update(divergent ? 0.0 : accept_prob);
            if (divergent) ++warmup_divergences;
            if (cfg.adapt_mass && iter >= mass_lo && iter < mass_hi) {
                ++mass_n;
                for (std::size_t i = 0; i < d; ++i) {
                    const double delta = ws.q[i] - mass_mean[i];
                    mass_mean[i] += delta / static_cast<double>(mass_n);
                    mass_m2[i] += delta * (ws.q[i] - mass_mean[i]);
                }
            }
            if (cfg.adapt_mass && iter + 1 == mass_hi && mass_n > 10) {
                for (std::size_t i = 0; i < d; ++i) {
                    const double var = mass_m2[i] / static_cast<double>(mass_n - 1);
                    ws.inv_mass[i] = std::max(var, 1e-6);
                    ws.mass_sd[i] = 1.0 / std::sqrt(ws.inv_mass[i]);
                }
                // Step size must re-adapt under the new metric.
                const double eps_restart = find_initial_step_size(target, ws, ws.q, logp, rng);
                da = DualAverage(eps_restart, cfg.target_accept);
            }
            if (iter + 1 == cfg.n_warmup) {
                eps = da.adapted();
                if (warmup_divergences >= cfg.n_warmup) {
                    throw NumericalError(
                        "hmc: every warmup transition diverged; pathological posterior "
                        "or bad initialization");
                }
            }
        } else {
            if (divergent) ++divergences;
            accept_sum += divergent ? 0.0 : accept_prob;
            ++accept_count;
            out.draws.push_back(ws.q);
        }
    }

    out.stats.mean_accept = accept_count ? accept_sum / accept_count : 0.0;
    out.stats.divergences = divergences;
    out.stats.step_size = eps;
    return out;
}

}  // namespace

void McmcConfig::validate() const {
    if (n_chains < 1) throw ConfigError("mcmc: need at least one chain");
    if (n_samples < 2) throw ConfigError("mcmc: n_samples too small");
    if (n_warmup < 1 || n_warmup >= n_samples) {
        throw ConfigError("mcmc: require 1 <= n_warmup < n_samples");
    }
    if (leapfrog_steps < 1) throw ConfigError("mcmc: leapfrog_steps must be >= 1");
    if (!(leapfrog_jitter >= 0.0 && leapfrog_jitter < 1.0)) {
        throw ConfigError("mcmc: leapfrog_jitter must lie in [0, 1)");
    }
    if (!(target_accept > 0.0 && target_accept < 1.0)) {
        throw ConfigError("mcmc: target_accept must lie in (0, 1)");
    }
    if (threads < 1) throw ConfigError("mcmc: threads must be >= 1");
}

HmcResult hmc_sample(const LogDensityTarget& target, std::span<const double> init,
                     const McmcConfig& cfg) {
    cfg.validate();
    if (init.size() != target.dim) throw ConfigError("hmc: init length != dim");
    RngStream root(cfg.seed);

    std::vector<ChainDraws> results(cfg.n_chains);
    if (cfg.threads > 1 && cfg.n_chains > 1) {
        std::vector<std::future<ChainDraws>> futures;
        futures.reserve(cfg.n_chains);
        for (int c = 0; c < cfg.n_chains; ++c) {
            RngStream chain_rng = root.child(static_cast<std::uint64_t>(c) + 1);
            futures.push_back(std::async(std::launch::async, [&, chain_rng]() {
                return run_chain(target, init, cfg, chain_rng);
            }));
        }
        for (int c = 0; c < cfg.n_chains; ++c) results[c] = futures[c].get();
    } else {
        for (int c = 0; c < cfg.n_chains; ++c) {
            results[c] = run_chain(target, init, cfg, root.child(static_cast<std::uint64_t>(c) + 1));
        }
    }

    HmcResult out;
    out.chains.reserve(cfg.n_chains);
    for (auto& r : results) {
        out.chains.push_back(std::move(r.draws));
        out.stats.push_back(r.stats);
    }
    return out;
}

int PosteriorSamples::total_divergences() const {
    int d = 0;
    for (const auto& s : stats) d += s.divergences;
    return d;
}

std::vector<ParamState> PosteriorSamples::combined() const {
    std::vector<ParamState> all;
    for (const auto& chain : chains) all.insert(all.end(), chain.begin(), chain.end());
    return all;
}

PosteriorSamples fit(const Model& model, const McmcConfig& cfg) {
    LogDensityTarget target;
    target.dim = model.dim();
    target.logp = [&model](std::span<const double> u) { return model.log_posterior(u); };
    // Each thread evaluates through its own workspace, keyed on the model
    // instance so sequential fits of different models never alias.
    target.logp_grad = [&model](std::span<const double> u, std::span<double> grad) {
        thread_local Model::Workspace ws;
        thread_local std::uint64_t ws_instance = 0;
        if (ws_instance != model.instance_id()) {
            ws = model.make_workspace();
            ws_instance = model.instance_id();
        }
        return model.log_posterior_with_grad(u, grad, ws);
    };

    // Method-of-moments start: a0 from the mean homogeneous rate, trigger
    // parameters at their prior medians, GP coefficients at zero.
    ParamState init;
    const double n_eff = static_cast<double>(model.events().size()) + 0.5;
    init.a0 = std::log(n_eff / model.domain().volume());
    if (model_has_trigger(model.kind())) {
        const PriorSpec& pr = model.priors();
        init.trigger.alpha = std::min(pr.alpha.median(), 0.95);
        init.trigger.beta = pr.beta.median();
        init.trigger.sigma_x2 = pr.sigma_x2.median();
        init.trigger.sigma_y2 = pr.sigma_y2.median();
    }
    init.z_t.assign(model.m_t(), 0.0);
    init.z_s.assign(model.m_s(), 0.0);
    if (!model_has_gp(model.kind())) {
        init.z_t.clear();
        init.z_s.clear();
    }
    const std::vector<double> u0 = model.pack(init);

    HmcResult raw = hmc_sample(target, u0, cfg);

    PosteriorSamples out;
    out.kind = model.kind();
    out.m_t = model_has_gp(model.kind()) ? model.m_t() : 0;
    out.m_s = model_has_gp(model.kind()) ? model.m_s() : 0;
    out.stats = raw.stats;
    out.chains.resize(raw.chains.size());
    for (std::size_t c = 0; c < raw.chains.size(); ++c) {
        out.chains[c].reserve(raw.chains[c].size());
        for (const auto& u : raw.chains[c]) {
            out.chains[c].push_back(model.unpack(u));
        }
    }
    return out;
}

std::vector<std::vector<double>> parameter_chains(const PosteriorSamples& samples,
                                                  const std::string& param) {
    const auto names = param_names(samples.kind, samples.m_t, samples.m_s);
    std::size_t idx = names.size();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == param) {
            idx = i;
            break;
        }
    }
    if (idx == names.size()) throw ConfigError("unknown parameter name: " + param);
    std::vector<std::vector<double>> chains;
    chains.reserve(samples.chains.size());
    for (const auto& chain : samples.chains) {
        std::vector<double> vals;
        vals.reserve(chain.size());
        for (const ParamState& s : chain) {
            vals.push_back(constrained_values(s, samples.kind)[idx]);
        }
        chains.push_back(std::move(vals));
    }
    return chains;
}

double r_hat(const std::vector<std::vector<double>>& chains) {
    if (chains.size() < 2) throw InsufficientDataError("r_hat: need at least 2 chains");
    std::size_t len = chains.front().size();
    for (const auto& c : chains) len = std::min(len, c.size());
    if (len < 50) throw InsufficientDataError("r_hat: need at least 50 draws per chain");

    // Split each chain in half.
    const std::size_t half = len / 2;
    std::vector<std::vector<double>> seqs;
    for (const auto& c : chains) {
        seqs.emplace_back(c.begin(), c.begin() + half);
        seqs.emplace_back(c.begin() + half, c.begin() + 2 * half);
    }
    const double m = static_cast<double>(seqs.size());
    const double n = static_cast<double>(half);
    std::vector<double> means(seqs.size());
    double w = 0.0;
    for (std::size_t j = 0; j < seqs.size(); ++j) {
        means[j] = mean_of(seqs[j]);
        w += variance_of(seqs[j]);
    }
    w /= m;
    const double b_over_n = variance_of(means);
    if (w <= 1e-300) return b_over_n <= 1e-300 ? 1.0 : std::numeric_limits<double>::infinity();
    const double var_plus = (n - 1.0) / n * w + b_over_n;
    return std::sqrt(var_plus / w);
}

double r_hat(const PosteriorSamples& samples, const std::string& param) {
    return r_hat(parameter_chains(samples, param));
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
    if (chains.empty() || chains.front().size() < 4) {
        throw InsufficientDataError("ess: need draws");
    }
    std::size_t len = chains.front().size();
    for (const auto& c : chains) len = std::min(len, c.size());
    const std::size_t half = len / 2;
    std::vector<std::vector<double>> seqs;
    for (const auto& c : chains) {
        seqs.emplace_back(c.begin(), c.begin() + half);
        seqs.emplace_back(c.begin() + half, c.begin() + 2 * half);
    }
    const double m = static_cast<double>(seqs.size());
    const double n = static_cast<double>(half);

    std::vector<double> means(seqs.size());
    double w = 0.0;
    for (std::size_t j = 0; j < seqs.size(); ++j) {
        means[j] = mean_of(seqs[j]);
        w += variance_of(seqs[j]);
    }
    w /= m;
    const double var_plus = (n - 1.0) / n * w + variance_of(means);
    if (var_plus <= 1e-300) return m * n;

    // Mean per-chain autocovariance at each lag, Geyer initial positive
    // sequence over paired lags.
    auto autocov = [&](std::size_t lag) {
        double acc = 0.0;
        for (std::size_t j = 0; j < seqs.size(); ++j) {
            const auto& s = seqs[j];
            double c = 0.0;
            for (std::size_t i = 0; i + lag < s.size(); ++i) {
                c += (s[i] - means[j]) * (s[i + lag] - means[j]);
            }
            acc += c / n;
        }
        return acc / m;
    };

    double tau = 1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t lag = 1; lag + 1 < half; lag += 2) {
        const double rho_a = 1.0 - (w - autocov(lag)) / var_plus;
        const double rho_b = 1.0 - (w - autocov(lag + 1)) / var_plus;
        double pair = rho_a + rho_b;
        if (pair < 0.0) break;
        pair = std::min(pair, prev_pair);  // enforce monotone decrease
        prev_pair = pair;
        tau += 2.0 * pair;
    }
    return m * n / tau;
}

FieldSummary posterior_field(const PosteriorSamples& samples, const LowRankBasis& basis,
                             bool temporal, const std::vector<double>& probs) {
    const auto draws = samples.combined();
    if (draws.empty()) throw InsufficientDataError("posterior_field: no draws");
    const std::size_t cells = basis.grid_size();
    FieldSummary out;
    out.probs = probs;
    out.mean.assign(cells, 0.0);
    std::vector<std::vector<double>> values(cells);
    for (auto& v : values) v.reserve(draws.size());
    for (const ParamState& s : draws) {
        const std::vector<double>& z = temporal ? s.z_t : s.z_s;
        GridField f = sample_field(basis, z);
        for (std::size_t c = 0; c < cells; ++c) {
            out.mean[c] += f.values[c];
            values[c].push_back(f.values[c]);
        }
    }
    for (std::size_t c = 0; c < cells; ++c) {
        out.mean[c] /= static_cast<double>(draws.size());
    }
    out.quantiles.assign(probs.size(), std::vector<double>(cells, 0.0));
    for (std::size_t qi = 0; qi < probs.size(); ++qi) {
        for (std::size_t c = 0; c < cells; ++c) {
            out.quantiles[qi][c] = quantile(values[c], probs[qi]);
        }
    }
    return out;
}

std::vector<ParamSummary> summarize(const PosteriorSamples& samples) {
    const auto names = param_names(samples.kind, samples.m_t, samples.m_s);
    std::vector<ParamSummary> out;
    out.reserve(names.size());
    for (const auto& name : names) {
        const auto chains = parameter_chains(samples, name);
        std::vector<double> all;
        for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
        ParamSummary s;
        s.name = name;
        s.mean = mean_of(all);
        s.sd = std::sqrt(variance_of(all));
        s.q05 = quantile(all, 0.05);
        s.q50 = quantile(all, 0.50);
        s.q95 = quantile(all, 0.95);
        s.rhat = chains.size() >= 2 ? r_hat(chains) : 1.0;
        s.ess = effective_sample_size(chains);
        out.push_back(s);
    }
    return out;
}

}  // namespace coxhawkes
