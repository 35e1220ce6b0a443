#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "coxhawkes/domain.hpp"
#include "coxhawkes/gp_generator.hpp"
#include "coxhawkes/grid.hpp"
#include "coxhawkes/likelihood.hpp"
#include "coxhawkes/rng.hpp"

namespace coxhawkes {

struct SimConfig {
    Domain domain;
    ModelKind kind{ModelKind::cox_hawkes};
    double a0{0.0};
    std::optional<TriggerParams> trigger;
    std::optional<GPHyper> gp_t;
    std::optional<GPHyper> gp_s;
    int n_t_cells{50};
    int n_x_cells{25};
    int n_y_cells{25};
    double var_frac{0.99};
    std::uint64_t seed{0};
    // Reuse a known field draw instead of sampling fresh coefficients.
    std::optional<GridField> fixed_f_t;
    std::optional<GridField> fixed_f_s;
    // Location sampling for the background: cell-categorical (default) or the
    // rejection formulation; both are exact for a piecewise-constant rate.
    bool use_rejection_sampler{false};
    std::size_t max_events{1000000};

    void validate() const;
};

// Events plus the ground truths that produced them.
struct SimResult {
    EventSet events;
    Grid1D grid_t;
    Grid2D grid_s;
    GridField f_t;  // zero fields for constant-background kinds
    GridField f_s;
    std::vector<double> z_t;
    std::vector<double> z_s;
    std::size_t background_count{0};
    std::size_t offspring_count{0};
};

// Inhomogeneous Poisson draw from rate exp(a0 + f_t + f_s) on the grids;
// all events carry gen = 0.
EventSet simulate_background(const GridField& f_t, const GridField& f_s, double a0,
                             const Domain& domain, const Grid1D& grid_t,
                             const Grid2D& grid_s, RngStream& rng,
                             bool use_rejection_sampler = false);

// First-generation children of one parent: count ~ Poisson(alpha), delays
// Exp(beta), displacements N(0, diag(sigma_x2, sigma_y2)). Children falling
// past the horizon or outside the region are discarded (whole subtree).
std::vector<Event> simulate_offspring(const Event& parent, const TriggerParams& p,
                                      const Domain& domain, RngStream& rng);

// Cluster-based generative simulation; deterministic given config.seed.
SimResult simulate(const SimConfig& config);

struct KsResult {
    double statistic{0.0};
    double p_value{1.0};
    std::size_t n{0};
};

// Time-rescaling residual check: transformed inter-arrivals against Exp(1).
KsResult ks_residual_test(const EventSet& events,
                          const std::function<double(double)>& temporal_compensator);

}  // namespace coxhawkes
