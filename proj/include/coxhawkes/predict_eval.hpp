#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "coxhawkes/inference.hpp"
#include "coxhawkes/likelihood.hpp"
#include "coxhawkes/rng.hpp"
#include "coxhawkes/simulator.hpp"

namespace coxhawkes {

// Continues the fitted process past the training horizon and returns the
// first k events by time. The model's events are the history; the drawn GP
// fields are reused, with the temporal field held at its last-cell value
// beyond the grid. The simulation window auto-doubles (up to a cap) until k
// events materialize.
std::vector<Event> predict_next_events(const Model& model, const ParamState& draw, int k,
                                       RngStream& rng, double initial_window = 0.0);

struct RmseScales {
    double t_scale{1.0};
    double x_scale{1.0};
    double y_scale{1.0};
};

// Events are paired by rank order in time; each pair contributes the three
// per-axis residuals standardized by the train-window scales, and the root
// mean square is taken per pair: sqrt((1/k) sum_i [(dt/T)^2 + (dx/Lx)^2 +
// (dy/Ly)^2]).
double rmse(const std::vector<Event>& predicted, const std::vector<Event>& actual,
            const RmseScales& scales);

struct ExperimentConfig {
    std::vector<SimConfig> generators;
    std::vector<ModelKind> inference_kinds;
    int n_datasets{10};
    int n_predictions{50};
    int k{10};
    double train_frac{0.8};
    McmcConfig mcmc;
    PriorSpec priors;
    GPHyper fit_gp_t{10.0, 1.0};
    GPHyper fit_gp_s{0.25, 1.0};
    int fit_n_t{50};
    int fit_n_x{25};
    int fit_n_y{25};
    double fit_var_frac{0.99};
    double temporal_cutoff{30.0};
    int n_posterior_draws{50};
    std::uint64_t seed{0};
    std::string checkpoint_dir;  // empty disables checkpointing

    void validate() const;
};

struct ExperimentCell {
    ModelKind generator;
    ModelKind inference;
    double mean_rmse{0.0};
    double se{0.0};
    long n_scores{0};
    long n_failures{0};
};

struct ExperimentReport {
    std::vector<ModelKind> generators;
    std::vector<ModelKind> inference_kinds;
    std::vector<ExperimentCell> cells;  // row-major: generator x inference

    const ExperimentCell& cell(ModelKind generator, ModelKind inference) const;
};

// Simulate datasets per generator, split by time, fit every inference model,
// predict, and score. Fit failures are recorded per cell, not fatal.
ExperimentReport run_misspecification_experiment(const ExperimentConfig& cfg);

// Table-shaped CSV (rows = generator, columns = inference, entries
// "mean (se)") and a long-format CSV for plotting.
void write_report_table_csv(std::ostream& out, const ExperimentReport& report);
void write_report_long_csv(std::ostream& out, const ExperimentReport& report);

}  // namespace coxhawkes
