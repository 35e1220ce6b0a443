#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coxhawkes/domain.hpp"
#include "coxhawkes/gp_generator.hpp"
#include "coxhawkes/grid.hpp"
#include "coxhawkes/mathutil.hpp"

namespace coxhawkes {

enum class ModelKind { poisson, lgcp, hawkes_const_bg, cox_hawkes };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

inline bool model_has_trigger(ModelKind k) {
    return k == ModelKind::hawkes_const_bg || k == ModelKind::cox_hawkes;
}
inline bool model_has_gp(ModelKind k) {
    return k == ModelKind::lgcp || k == ModelKind::cox_hawkes;
}

// Full latent state on the constrained scale. For model kinds without a
// trigger the trigger block is inert (alpha = 0); without a GP background the
// coefficient vectors are empty.
struct ParamState {
    double a0{0.0};
    TriggerParams trigger{0.0, 1.0, 1.0, 1.0};
    std::vector<double> z_t;
    std::vector<double> z_s;
};

// Sampler coordinates: log transform on the four positive trigger parameters,
// everything else unchanged.
struct UnconstrainedState {
    double a0{0.0};
    double log_alpha{0.0};
    double log_beta{0.0};
    double log_sigma_x2{0.0};
    double log_sigma_y2{0.0};
    std::vector<double> z_t;
    std::vector<double> z_s;
};

UnconstrainedState to_unconstrained(const ParamState& s);
ParamState to_constrained(const UnconstrainedState& u);
// log |d(constrained)/d(unconstrained)| = sum of the four log parameters.
double log_jacobian(const UnconstrainedState& u);

struct PriorSpec {
    double a0_mean{0.0};
    double a0_sd{2.0};
    TruncatedNormal alpha{0.0, 1.0};
    TruncatedNormal beta{0.0, 2.0};
    TruncatedNormal sigma_x2{0.0, 1.0};
    TruncatedNormal sigma_y2{0.0, 1.0};

    void validate() const;
};

struct LikelihoodDiagnostics {
    long underflow_count{0};
};

// Names of the constrained scalar parameters for the given layout, in trace
// column order: a0[, alpha, beta, sigma_x2, sigma_y2][, z_t_*, z_s_*].
std::vector<std::string> param_names(ModelKind kind, int m_t, int m_s);
std::vector<double> constrained_values(const ParamState& s, ModelKind kind);

// Nondecreasing map t -> integral of the spatially-integrated intensity over
// [0, t]; feeds the time-rescaling residual test.
class TemporalCompensator {
public:
    double operator()(double t) const;

private:
    friend class Model;
    double a0_scale_{0.0};  // exp(a0) * spatial quadrature mass
    double t_max_{0.0};
    double cell_width_{0.0};
    std::vector<double> exp_ft_;      // empty when the background is constant
    std::vector<double> cum_bg_;      // cumulative background mass at cell edges
    std::vector<double> event_times_;
    std::vector<double> event_spatial_mass_;
    double alpha_{0.0};
    double beta_{1.0};
};

// Bundles the data, grids, and generator bases behind the likelihood,
// posterior, and gradient evaluations for one model kind. Immutable after
// construction; evaluations are const and may run concurrently when each
// caller owns its Workspace.
class Model {
public:
    struct Workspace {
        std::vector<double> ft, fs, exp_ft, exp_fs;
        std::vector<double> lambda_inv, bg_at_event, trig_at_event;
        std::vector<double> pair_g;
        std::vector<double> dft, dfs;
    };

    Model(ModelKind kind, EventSet events, Domain domain, std::optional<Grid1D> grid_t,
          std::optional<Grid2D> grid_s, std::optional<LowRankBasis> basis_t,
          std::optional<LowRankBasis> basis_s, PriorSpec priors,
          double temporal_cutoff = 0.0);

    ModelKind kind() const { return kind_; }
    std::uint64_t instance_id() const { return instance_id_; }
    const Domain& domain() const { return domain_; }
    const EventSet& events() const { return events_; }
    const PriorSpec& priors() const { return priors_; }
    int m_t() const;
    int m_s() const;
    std::size_t dim() const;
    const std::optional<Grid1D>& grid_t() const { return grid_t_; }
    const std::optional<Grid2D>& grid_s() const { return grid_s_; }
    const std::optional<LowRankBasis>& basis_t() const { return basis_t_; }
    const std::optional<LowRankBasis>& basis_s() const { return basis_s_; }

    std::vector<double> pack(const ParamState& s) const;
    ParamState unpack(std::span<const double> u) const;

    double log_likelihood(const ParamState& s) const;
    double log_likelihood(const ParamState& s, LikelihoodDiagnostics& diag) const;
    double log_posterior(std::span<const double> u) const;
    std::vector<double> grad_log_posterior(std::span<const double> u) const;
    // Hot path used by the sampler: returns the log posterior and fills grad.
    double log_posterior_with_grad(std::span<const double> u, std::span<double> grad,
                                   Workspace& ws) const;

    // Conditional intensity at (t, x, y) given the strictly-earlier events.
    double intensity_at(double t, double x, double y, const ParamState& s) const;
    // Integrated intensity over the whole window (background + trigger part).
    double compensator_total(const ParamState& s) const;
    TemporalCompensator temporal_compensator(const ParamState& s) const;

    // Cumulative count of intensity-floor hits across every evaluation of
    // this model; surfaced in fit diagnostics.
    long underflow_total() const { return underflow_total_->load(); }

    Workspace make_workspace() const;

private:
    double evaluate(std::span<const double> u, std::span<double> grad, bool want_grad,
                    Workspace& ws, LikelihoodDiagnostics* diag) const;
    void compute_fields(const ParamState& s, Workspace& ws) const;
    double background_quadrature_t(const Workspace& ws) const;  // time-integrated
    double background_quadrature_s(const Workspace& ws) const;  // space-integrated

    std::uint64_t instance_id_;
    std::shared_ptr<std::atomic<long>> underflow_total_;
    ModelKind kind_;
    EventSet events_;
    Domain domain_;
    std::optional<Grid1D> grid_t_;
    std::optional<Grid2D> grid_s_;
    std::optional<LowRankBasis> basis_t_;
    std::optional<LowRankBasis> basis_s_;
    PriorSpec priors_;
    double temporal_cutoff_;  // skip pairs with beta * dt above this; <= 0 disables

    // Per-event precomputation.
    std::vector<int> cell_t_;
    std::vector<int> cell_s_;
    std::vector<double> edge_x_lo_, edge_x_hi_, edge_y_lo_, edge_y_hi_;
    // Pairs (j earlier than i, strict in time), stored per i with dt ascending.
    std::vector<std::size_t> pair_offset_;
    std::vector<double> pair_dt_, pair_dx2_, pair_dy2_;
};

}  // namespace coxhawkes
