#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "coxhawkes/inference.hpp"
#include "coxhawkes/likelihood.hpp"
#include "coxhawkes/simulator.hpp"

namespace coxhawkes {

// One generator entry of the misspecification experiment; unset pieces fall
// back to the top-level configuration.
struct GeneratorEntry {
    ModelKind model{ModelKind::poisson};
    double a0{0.0};
    std::optional<TriggerParams> trigger;
    std::optional<GPHyper> gp_t;
    std::optional<GPHyper> gp_s;
};

struct ExperimentSection {
    bool present{false};
    int n_datasets{10};
    int n_predictions{50};
    int k{10};
    double train_frac{0.8};
    std::vector<ModelKind> inference{ModelKind::lgcp, ModelKind::cox_hawkes,
                                     ModelKind::hawkes_const_bg, ModelKind::poisson};
    McmcConfig mcmc;
    std::vector<GeneratorEntry> generators;
};

struct PredictionSection {
    int k{10};
    int replicates{200};
    int posterior_draws{50};
    double window{0.0};
};

// Whole-run configuration. Schema-validated on load; unknown keys are
// rejected with their path.
struct RunConfig {
    Domain domain;
    ModelKind model{ModelKind::cox_hawkes};
    double a0{0.0};
    std::optional<TriggerParams> trigger;
    std::optional<GPHyper> gp_t;
    std::optional<GPHyper> gp_s;
    int n_t{50};
    int n_x{25};
    int n_y{25};
    double var_frac{0.99};
    PriorSpec priors;
    McmcConfig mcmc;
    double temporal_cutoff{30.0};
    bool rejection_sampler{false};
    std::size_t max_events{1000000};
    PredictionSection prediction;
    ExperimentSection experiment;
    std::string basis_cache_dir;
    std::uint64_t seed{0};
    int threads{1};

    std::uint64_t config_hash{0};  // of the canonical serialized form

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_file(const std::string& path);

    SimConfig sim_config() const;
    SimConfig sim_config_for(const GeneratorEntry& gen) const;
};

}  // namespace coxhawkes
