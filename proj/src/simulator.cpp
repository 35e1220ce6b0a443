#include "coxhawkes/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "coxhawkes/errors.hpp"

namespace coxhawkes {

namespace {

// Stream tags: background sampling, field coefficients, then one stream per
// event id for its offspring so cluster cascades are order-independent.
constexpr std::uint64_t kTagBackground = 1;
constexpr std::uint64_t kTagFieldT = 2;
constexpr std::uint64_t kTagFieldS = 3;
constexpr std::uint64_t kTagClusterBase = 16;

}  // namespace

void SimConfig::validate() const {
    domain.validate();
    if (!std::isfinite(a0)) throw ConfigError("sim: a0 must be finite");
    if (model_has_trigger(kind)) {
        if (!trigger) throw ConfigError("sim: model kind requires trigger parameters");
        trigger->validate();
    }
    if (model_has_gp(kind)) {
        if (!gp_t || !gp_s) throw ConfigError("sim: model kind requires GP hyperparameters");
        gp_t->validate();
        gp_s->validate();
        if (n_t_cells <= 0 || n_x_cells <= 0 || n_y_cells <= 0) {
            throw ConfigError("sim: grid cell counts must be positive");
        }
        if (!(var_frac > 0.0 && var_frac <= 1.0)) {
            throw ConfigError("sim: var_frac must lie in (0, 1]");
        }
    }
    if (max_events == 0) throw ConfigError("sim: max_events must be positive");
}

EventSet simulate_background(const GridField& f_t, const GridField& f_s, double a0,
                             const Domain& domain, const Grid1D& grid_t,
                             const Grid2D& grid_s, RngStream& rng,
                             bool use_rejection_sampler) {
    if (f_t.values.size() != static_cast<std::size_t>(grid_t.n_t) ||
        f_s.values.size() != grid_s.size()) {
        throw NumericalError("simulate_background: field/grid size mismatch");
    }
    const std::size_t nt = f_t.values.size();
    const std::size_t ns = f_s.values.size();
    std::vector<double> wt(nt), ws(ns);
    double max_ft = -std::numeric_limits<double>::infinity();
    double max_fs = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nt; ++k) {
        wt[k] = std::exp(f_t.values[k]) * grid_t.cell_width;
        max_ft = std::max(max_ft, f_t.values[k]);
    }
    for (std::size_t k = 0; k < ns; ++k) {
        ws[k] = std::exp(f_s.values[k]) * grid_s.cell_area;
        max_fs = std::max(max_fs, f_s.values[k]);
    }
    std::vector<double> cum_t(nt), cum_s(ns);
    double acc = 0.0;
    for (std::size_t k = 0; k < nt; ++k) cum_t[k] = (acc += wt[k]);
    acc = 0.0;
    for (std::size_t k = 0; k < ns; ++k) cum_s[k] = (acc += ws[k]);

    const double total_mass = std::exp(a0) * cum_t.back() * cum_s.back();
    if (!(total_mass > 0.0)) return EventSet{};
    const std::uint64_t n0 = rng.poisson(total_mass);

    const double wx = grid_s.x_range.length() / grid_s.n_x;
    const double wy = grid_s.y_range.length() / grid_s.n_y;
    std::vector<Event> events;
    events.reserve(n0);
    if (!use_rejection_sampler) {
        // The separable rate factorizes, so the temporal and spatial cells can
        // be drawn independently with in-cell uniform jitter.
        for (std::uint64_t i = 0; i < n0; ++i) {
            const std::size_t kt = rng.categorical_from_cumulative(cum_t);
            const std::size_t ks = rng.categorical_from_cumulative(cum_s);
            Event e;
            e.t = (static_cast<double>(kt) + rng.uniform()) * grid_t.cell_width;
            e.x = grid_s.centers_x[ks] + (rng.uniform() - 0.5) * wx;
            e.y = grid_s.centers_y[ks] + (rng.uniform() - 0.5) * wy;
            e.gen = 0;
            events.push_back(e);
        }
    } else {
        // Rejection against the peak piecewise-constant rate.
        const double log_peak = max_ft + max_fs;
        for (std::uint64_t i = 0; i < n0; ++i) {
            while (true) {
                const double t = rng.uniform(0.0, domain.t_max);
                const double x = rng.uniform(grid_s.x_range.lo, grid_s.x_range.hi);
                const double y = rng.uniform(grid_s.y_range.lo, grid_s.y_range.hi);
                const double f = f_t.values[grid_t.cell_index(t)] +
                                 f_s.values[grid_s.cell_index(x, y)];
                if (rng.uniform() <= std::exp(f - log_peak)) {
                    events.push_back(Event{t, x, y, 0});
                    break;
                }
            }
        }
    }
    return EventSet::from_unsorted(std::move(events));
}

std::vector<Event> simulate_offspring(const Event& parent, const TriggerParams& p,
                                      const Domain& domain, RngStream& rng) {
    if (!(parent.t < domain.t_max)) {
        throw NumericalError("simulate_offspring: parent at or past the horizon");
    }
    const std::uint64_t count = rng.poisson(p.alpha);
    std::vector<Event> children;
    children.reserve(count);
    const double sx = std::sqrt(p.sigma_x2);
    const double sy = std::sqrt(p.sigma_y2);
    const int next_gen = parent.gen ? *parent.gen + 1 : 1;
    for (std::uint64_t c = 0; c < count; ++c) {
        Event child;
        child.t = parent.t + rng.exponential(p.beta);
        child.x = parent.x + sx * rng.normal();
        child.y = parent.y + sy * rng.normal();
        child.gen = next_gen;
        if (child.t >= domain.t_max) continue;
        if (!domain.x_range.contains(child.x) || !domain.y_range.contains(child.y)) continue;
        children.push_back(child);
    }
    return children;
}

SimResult simulate(const SimConfig& config) {
    config.validate();
    RngStream root(config.seed);

    SimResult result;
    result.grid_t = Grid1D::over(config.domain.t_max, config.n_t_cells);
    result.grid_s = Grid2D::over(config.domain.x_range, config.domain.y_range,
                                 config.n_x_cells, config.n_y_cells);

    if (model_has_gp(config.kind)) {
        if (config.fixed_f_t && config.fixed_f_s) {
            result.f_t = *config.fixed_f_t;
            result.f_s = *config.fixed_f_s;
        } else {
            const LowRankBasis basis_t =
                precompute_basis(result.grid_t, *config.gp_t, config.var_frac);
            const LowRankBasis basis_s =
                precompute_basis(result.grid_s, *config.gp_s, config.var_frac);
            RngStream rt = root.child(kTagFieldT);
            RngStream rs = root.child(kTagFieldS);
            result.z_t.resize(basis_t.rank());
            result.z_s.resize(basis_s.rank());
            for (double& z : result.z_t) z = rt.normal();
            for (double& z : result.z_s) z = rs.normal();
            result.f_t = sample_field(basis_t, result.z_t);
            result.f_s = sample_field(basis_s, result.z_s);
        }
    } else {
        result.f_t.values.assign(result.grid_t.n_t, 0.0);
        result.f_s.values.assign(result.grid_s.size(), 0.0);
    }

    RngStream bg_rng = root.child(kTagBackground);
    EventSet background =
        simulate_background(result.f_t, result.f_s, config.a0, config.domain, result.grid_t,
                            result.grid_s, bg_rng, config.use_rejection_sampler);
    result.background_count = background.size();

    // Each event gets an id in creation order; its offspring use a stream
    // derived from that id, so the cascade is reproducible regardless of the
    // order parents are processed in.
    struct Pending {
        Event event;
        std::uint64_t id;
    };
    std::vector<Event> all(background.begin(), background.end());
    std::vector<Pending> generation;
    generation.reserve(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        generation.push_back({all[i], static_cast<std::uint64_t>(i)});
    }
    std::uint64_t next_id = all.size();

    if (model_has_trigger(config.kind) && config.trigger->alpha > 0.0) {
        while (!generation.empty()) {
            std::vector<Pending> next;
            for (const Pending& parent : generation) {
                RngStream crng = root.child(kTagClusterBase + parent.id);
                std::vector<Event> children =
                    simulate_offspring(parent.event, *config.trigger, config.domain, crng);
                for (Event& child : children) {
                    next.push_back({child, next_id++});
                    all.push_back(child);
                }
            }
            if (all.size() > config.max_events) {
                std::ostringstream os;
                os << "simulate: cascade exceeded " << config.max_events
                   << " events; parameters are effectively non-stationary";
                throw NumericalError(os.str());
            }
            generation = std::move(next);
        }
    }
    result.offspring_count = all.size() - result.background_count;
    result.events = EventSet::from_unsorted(std::move(all));
    return result;
}

KsResult ks_residual_test(const EventSet& events,
                          const std::function<double(double)>& temporal_compensator) {
    if (events.size() < 5) {
        std::ostringstream os;
        os << "ks_residual_test: need at least 5 events, got " << events.size();
        throw InsufficientDataError(os.str());
    }
    // Time-rescaled arrivals are unit-rate Poisson, so the inter-arrival gaps
    // (including the first, from Lambda(0) = 0) should look Exp(1).
    std::vector<double> gaps;
    gaps.reserve(events.size());
    double prev = 0.0;
    for (const Event& e : events) {
        double tau = temporal_compensator(e.t);
        if (tau + 1e-12 < prev) {
            throw NumericalError("ks_residual_test: compensator is decreasing");
        }
        gaps.push_back(std::max(tau - prev, 0.0));
        prev = tau;
    }
    std::sort(gaps.begin(), gaps.end());
    const double n = static_cast<double>(gaps.size());
    double d = 0.0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        const double cdf = 1.0 - std::exp(-gaps[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(cdf - lo, hi - cdf));
    }
    KsResult res;
    res.statistic = d;
    res.n = gaps.size();
    res.p_value = ks_p_value(d, gaps.size());
    return res;
}

}  // namespace coxhawkes
