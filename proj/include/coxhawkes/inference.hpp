#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "coxhawkes/likelihood.hpp"
#include "coxhawkes/rng.hpp"

namespace coxhawkes {

struct McmcConfig {
    int n_chains{3};
    int n_samples{1500};  // total per chain, warmup included
    int n_warmup{500};
    int leapfrog_steps{32};
    double leapfrog_jitter{0.2};  // +-20% uniform jitter on the step count
    double target_accept{0.8};
    std::uint64_t seed{0};
    bool adapt_mass{false};  // diagonal mass estimation during warmup
    int threads{1};

    void validate() const;
};

struct ChainStats {
    double mean_accept{0.0};
    int divergences{0};
    double step_size{0.0};
};

// Generic sampler output in unconstrained coordinates.
struct HmcResult {
    std::vector<std::vector<std::vector<double>>> chains;  // [chain][draw][dim]
    std::vector<ChainStats> stats;
};

struct LogDensityTarget {
    std::function<double(std::span<const double>)> logp;
    // Fills grad and returns the log density.
    std::function<double(std::span<const double>, std::span<double>)> logp_grad;
    std::size_t dim{0};
};

// Fixed-path HMC with dual-averaging step-size adaptation during warmup.
// Deterministic given cfg.seed; chains may run on separate threads.
HmcResult hmc_sample(const LogDensityTarget& target, std::span<const double> init,
                     const McmcConfig& cfg);

// Post-warmup draws on the constrained scale.
struct PosteriorSamples {
    ModelKind kind{ModelKind::poisson};
    int m_t{0};
    int m_s{0};
    std::vector<std::vector<ParamState>> chains;
    std::vector<ChainStats> stats;

    std::size_t n_chains() const { return chains.size(); }
    std::size_t draws_per_chain() const { return chains.empty() ? 0 : chains.front().size(); }
    int total_divergences() const;
    // Combined post-warmup draws from all chains, in chain order.
    std::vector<ParamState> combined() const;
};

PosteriorSamples fit(const Model& model, const McmcConfig& cfg);

// Split-chain potential scale reduction for one scalar parameter, indexed per
// param_names(kind, m_t, m_s).
double r_hat(const PosteriorSamples& samples, const std::string& param);
double r_hat(const std::vector<std::vector<double>>& chains);

// Effective sample size (Geyer initial positive sequence on split chains).
double effective_sample_size(const std::vector<std::vector<double>>& chains);

struct FieldSummary {
    std::vector<double> mean;
    std::vector<std::vector<double>> quantiles;  // [quantile][cell]
    std::vector<double> probs;
};

// Per-cell mean and quantile bands of basis * z over the posterior draws.
FieldSummary posterior_field(const PosteriorSamples& samples, const LowRankBasis& basis,
                             bool temporal, const std::vector<double>& probs = {0.05, 0.95});

struct ParamSummary {
    std::string name;
    double mean{0.0};
    double sd{0.0};
    double q05{0.0};
    double q50{0.0};
    double q95{0.0};
    double rhat{0.0};
    double ess{0.0};
};

std::vector<ParamSummary> summarize(const PosteriorSamples& samples);

// Extract one named scalar across chains on the constrained scale.
std::vector<std::vector<double>> parameter_chains(const PosteriorSamples& samples,
                                                  const std::string& param);

}  // namespace coxhawkes
