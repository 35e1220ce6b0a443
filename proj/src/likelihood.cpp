#include "coxhawkes/likelihood.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "coxhawkes/errors.hpp"
#include "coxhawkes/kernels.hpp"

namespace coxhawkes {

namespace {
constexpr double kIntensityFloor = 1e-300;

std::uint64_t next_model_instance_id() {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
}

// x * phi(x) for x >= 0, with the x -> inf underflow handled (the product
// decays like exp(-x^2/2), far faster than any denominator it meets).
double x_normal_pdf(double x) {
    return x > 40.0 ? 0.0 : x * normal_pdf(x);
}
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::poisson: return "poisson";
        case ModelKind::lgcp: return "lgcp";
        case ModelKind::hawkes_const_bg: return "hawkes_const_bg";
        case ModelKind::cox_hawkes: return "cox_hawkes";
    }
    throw ConfigError("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "poisson") return ModelKind::poisson;
    if (name == "lgcp") return ModelKind::lgcp;
    if (name == "hawkes_const_bg") return ModelKind::hawkes_const_bg;
    if (name == "cox_hawkes") return ModelKind::cox_hawkes;
    throw ConfigError("unknown model kind '" + name +
                      "' (expected poisson|lgcp|hawkes_const_bg|cox_hawkes)");
}

UnconstrainedState to_unconstrained(const ParamState& s) {
    UnconstrainedState u;
    u.a0 = s.a0;
    u.log_alpha = std::log(s.trigger.alpha);
    u.log_beta = std::log(s.trigger.beta);
    u.log_sigma_x2 = std::log(s.trigger.sigma_x2);
    u.log_sigma_y2 = std::log(s.trigger.sigma_y2);
    u.z_t = s.z_t;
    u.z_s = s.z_s;
    return u;
}

ParamState to_constrained(const UnconstrainedState& u) {
    ParamState s;
    s.a0 = u.a0;
    s.trigger.alpha = std::exp(u.log_alpha);
    s.trigger.beta = std::exp(u.log_beta);
    s.trigger.sigma_x2 = std::exp(u.log_sigma_x2);
    s.trigger.sigma_y2 = std::exp(u.log_sigma_y2);
    s.z_t = u.z_t;
    s.z_s = u.z_s;
    return s;
}

double log_jacobian(const UnconstrainedState& u) {
    return u.log_alpha + u.log_beta + u.log_sigma_x2 + u.log_sigma_y2;
}

void PriorSpec::validate() const {
    if (!(a0_sd > 0.0) || !(alpha.scale > 0.0) || !(beta.scale > 0.0) ||
        !(sigma_x2.scale > 0.0) || !(sigma_y2.scale > 0.0)) {
        throw ConfigError("priors: all scales must be > 0");
    }
}

std::vector<std::string> param_names(ModelKind kind, int m_t, int m_s) {
    std::vector<std::string> names{"a0"};
    if (model_has_trigger(kind)) {
        names.insert(names.end(), {"alpha", "beta", "sigma_x2", "sigma_y2"});
    }
    if (model_has_gp(kind)) {
        for (int i = 0; i < m_t; ++i) names.push_back("z_t_" + std::to_string(i));
        for (int i = 0; i < m_s; ++i) names.push_back("z_s_" + std::to_string(i));
    }
    return names;
}

std::vector<double> constrained_values(const ParamState& s, ModelKind kind) {
    std::vector<double> v{s.a0};
    if (model_has_trigger(kind)) {
        v.insert(v.end(),
                 {s.trigger.alpha, s.trigger.beta, s.trigger.sigma_x2, s.trigger.sigma_y2});
    }
    if (model_has_gp(kind)) {
        v.insert(v.end(), s.z_t.begin(), s.z_t.end());
        v.insert(v.end(), s.z_s.begin(), s.z_s.end());
    }
    return v;
}

double TemporalCompensator::operator()(double t) const {
    if (!(t >= 0.0)) throw NumericalError("temporal compensator: t must be >= 0");
    double tc = std::min(t, t_max_);
    double bg;
    if (exp_ft_.empty()) {
        bg = a0_scale_ * tc;
    } else {
        double rel = tc / cell_width_;
        int cell = std::min(static_cast<int>(rel), static_cast<int>(exp_ft_.size()) - 1);
        bg = a0_scale_ *
             (cum_bg_[cell] + exp_ft_[cell] * (tc - cell * cell_width_));
    }
    double trig = 0.0;
    for (std::size_t i = 0; i < event_times_.size(); ++i) {
        if (event_times_[i] >= tc) break;
        trig += alpha_ * (1.0 - std::exp(-beta_ * (tc - event_times_[i]))) *
                event_spatial_mass_[i];
    }
    return bg + trig;
}

Model::Model(ModelKind kind, EventSet events, Domain domain, std::optional<Grid1D> grid_t,
             std::optional<Grid2D> grid_s, std::optional<LowRankBasis> basis_t,
             std::optional<LowRankBasis> basis_s, PriorSpec priors, double temporal_cutoff)
    : instance_id_(next_model_instance_id()),
      underflow_total_(std::make_shared<std::atomic<long>>(0)),
      kind_(kind),
      events_(validate_events(std::move(events), domain)),
      domain_(domain),
      grid_t_(std::move(grid_t)),
      grid_s_(std::move(grid_s)),
      basis_t_(std::move(basis_t)),
      basis_s_(std::move(basis_s)),
      priors_(priors),
      temporal_cutoff_(temporal_cutoff) {
    priors_.validate();
    if (model_has_gp(kind_)) {
        if (!grid_t_ || !grid_s_ || !basis_t_ || !basis_s_) {
            throw ConfigError("model: GP background requires grids and bases");
        }
        if (basis_t_->grid_size() != static_cast<std::size_t>(grid_t_->n_t) ||
            basis_s_->grid_size() != grid_s_->size()) {
            throw ConfigError("model: basis rows do not match grid size");
        }
        if (std::abs(grid_t_->t_max - domain_.t_max) > 1e-9 * domain_.t_max) {
            throw ConfigError("model: temporal grid does not cover the domain");
        }
    }
    const auto& ev = events_.events();
    const std::size_t n = ev.size();
    cell_t_.resize(n);
    cell_s_.resize(n);
    edge_x_lo_.resize(n);
    edge_x_hi_.resize(n);
    edge_y_lo_.resize(n);
    edge_y_hi_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (model_has_gp(kind_)) {
            cell_t_[i] = grid_t_->cell_index(ev[i].t);
            cell_s_[i] = grid_s_->cell_index(ev[i].x, ev[i].y);
        }
        edge_x_lo_[i] = ev[i].x - domain_.x_range.lo;
        edge_x_hi_[i] = domain_.x_range.hi - ev[i].x;
        edge_y_lo_[i] = ev[i].y - domain_.y_range.lo;
        edge_y_hi_[i] = domain_.y_range.hi - ev[i].y;
    }
    pair_offset_.assign(n + 1, 0);
    if (model_has_trigger(kind_)) {
        std::size_t total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            pair_offset_[i] = total;
            for (std::size_t j = i; j-- > 0;) {
                if (ev[j].t < ev[i].t) ++total;
            }
        }
        pair_offset_[n] = total;
        pair_dt_.resize(total);
        pair_dx2_.resize(total);
        pair_dy2_.resize(total);
        std::size_t p = 0;
        for (std::size_t i = 0; i < n; ++i) {
            // j descending means dt ascending, which lets the cutoff break early.
            for (std::size_t j = i; j-- > 0;) {
                double dt = ev[i].t - ev[j].t;
                if (!(dt > 0.0)) continue;  // ties do not excite
                double dx = ev[i].x - ev[j].x;
                double dy = ev[i].y - ev[j].y;
                pair_dt_[p] = dt;
                pair_dx2_[p] = dx * dx;
                pair_dy2_[p] = dy * dy;
                ++p;
            }
        }
    }
}

int Model::m_t() const { return basis_t_ ? basis_t_->rank() : 0; }
int Model::m_s() const { return basis_s_ ? basis_s_->rank() : 0; }

std::size_t Model::dim() const {
    std::size_t d = 1;
    if (model_has_trigger(kind_)) d += 4;
    if (model_has_gp(kind_)) d += static_cast<std::size_t>(m_t()) + m_s();
    return d;
}

std::vector<double> Model::pack(const ParamState& s) const {
    std::vector<double> u;
    u.reserve(dim());
    u.push_back(s.a0);
    if (model_has_trigger(kind_)) {
        u.push_back(std::log(s.trigger.alpha));
        u.push_back(std::log(s.trigger.beta));
        u.push_back(std::log(s.trigger.sigma_x2));
        u.push_back(std::log(s.trigger.sigma_y2));
    }
    if (model_has_gp(kind_)) {
        if (s.z_t.size() != static_cast<std::size_t>(m_t()) ||
            s.z_s.size() != static_cast<std::size_t>(m_s())) {
            throw NumericalError("pack: coefficient lengths do not match bases");
        }
        u.insert(u.end(), s.z_t.begin(), s.z_t.end());
        u.insert(u.end(), s.z_s.begin(), s.z_s.end());
    }
    return u;
}

ParamState Model::unpack(std::span<const double> u) const {
    if (u.size() != dim()) throw NumericalError("unpack: state length mismatch");
    ParamState s;
    std::size_t k = 0;
    s.a0 = u[k++];
    if (model_has_trigger(kind_)) {
        s.trigger.alpha = std::exp(u[k++]);
        s.trigger.beta = std::exp(u[k++]);
        s.trigger.sigma_x2 = std::exp(u[k++]);
        s.trigger.sigma_y2 = std::exp(u[k++]);
    } else {
        s.trigger = TriggerParams{0.0, 1.0, 1.0, 1.0};
    }
    if (model_has_gp(kind_)) {
        s.z_t.assign(u.begin() + k, u.begin() + k + m_t());
        k += m_t();
        s.z_s.assign(u.begin() + k, u.begin() + k + m_s());
        k += m_s();
    }
    return s;
}

Model::Workspace Model::make_workspace() const {
    Workspace ws;
    if (model_has_gp(kind_)) {
        ws.ft.resize(grid_t_->n_t);
        ws.exp_ft.resize(grid_t_->n_t);
        ws.fs.resize(grid_s_->size());
        ws.exp_fs.resize(grid_s_->size());
        ws.dft.resize(grid_t_->n_t);
        ws.dfs.resize(grid_s_->size());
    }
    ws.lambda_inv.resize(events_.size());
    ws.bg_at_event.resize(events_.size());
    ws.trig_at_event.resize(events_.size());
    ws.pair_g.resize(pair_dt_.size());
    return ws;
}

void Model::compute_fields(const ParamState& s, Workspace& ws) const {
    if (!model_has_gp(kind_)) return;
    Eigen::Map<const Eigen::VectorXd> zt(s.z_t.data(), static_cast<Eigen::Index>(s.z_t.size()));
    Eigen::Map<const Eigen::VectorXd> zs(s.z_s.data(), static_cast<Eigen::Index>(s.z_s.size()));
    Eigen::Map<Eigen::VectorXd> ft(ws.ft.data(), static_cast<Eigen::Index>(ws.ft.size()));
    Eigen::Map<Eigen::VectorXd> fs(ws.fs.data(), static_cast<Eigen::Index>(ws.fs.size()));
    ft = basis_t_->basis * zt;
    fs = basis_s_->basis * zs;
    for (std::size_t k = 0; k < ws.ft.size(); ++k) ws.exp_ft[k] = std::exp(ws.ft[k]);
    for (std::size_t k = 0; k < ws.fs.size(); ++k) ws.exp_fs[k] = std::exp(ws.fs[k]);
}

double Model::background_quadrature_t(const Workspace& ws) const {
    if (!model_has_gp(kind_)) return domain_.t_max;
    return cell_sum(ws.exp_ft) * grid_t_->cell_width;
}

double Model::background_quadrature_s(const Workspace& ws) const {
    if (!model_has_gp(kind_)) return domain_.area();
    return cell_sum(ws.exp_fs) * grid_s_->cell_area;
}

double Model::evaluate(std::span<const double> u, std::span<double> grad, bool want_grad,
                       Workspace& ws, LikelihoodDiagnostics* diag) const {
    const ParamState state = unpack(u);
    const auto& ev = events_.events();
    const std::size_t n = ev.size();
    const bool gp = model_has_gp(kind_);
    const bool trig = model_has_trigger(kind_);

    compute_fields(state, ws);
    const double exp_a0 = std::exp(state.a0);
    const double qt = background_quadrature_t(ws);
    const double qs = background_quadrature_s(ws);
    const double comp_bg = exp_a0 * qt * qs;

    // Background intensity at each event.
    for (std::size_t i = 0; i < n; ++i) {
        double f = state.a0;
        if (gp) f += ws.ft[cell_t_[i]] + ws.fs[cell_s_[i]];
        ws.bg_at_event[i] = std::exp(f);
    }

    // Pairwise excitation.
    const double alpha = state.trigger.alpha;
    const double beta = state.trigger.beta;
    const double sx2 = state.trigger.sigma_x2;
    const double sy2 = state.trigger.sigma_y2;
    double comp_trig = 0.0;
    if (trig) {
        // Normalizer assembled in log space so extreme trigger scales
        // overflow to inf or underflow to zero instead of producing NaN.
        const double log_norm =
            u[1] + u[2] - std::log(2.0 * kPi) - 0.5 * (u[3] + u[4]);
        const double hx = 0.5 / std::max(sx2, std::numeric_limits<double>::min());
        const double hy = 0.5 / std::max(sy2, std::numeric_limits<double>::min());
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            const std::size_t b = pair_offset_[i];
            const std::size_t e = pair_offset_[i + 1];
            for (std::size_t p = b; p < e; ++p) {
                const double bdt = beta * pair_dt_[p];
                if (temporal_cutoff_ > 0.0 && bdt > temporal_cutoff_) {
                    if (want_grad) {
                        std::fill(ws.pair_g.begin() + p, ws.pair_g.begin() + e, 0.0);
                    }
                    break;  // dt ascending within each i
                }
                const double g =
                    std::exp(log_norm - bdt - pair_dx2_[p] * hx - pair_dy2_[p] * hy);
                if (want_grad) ws.pair_g[p] = g;
                s += g;
            }
            ws.trig_at_event[i] = s;
        }
    } else {
        std::fill(ws.trig_at_event.begin(), ws.trig_at_event.end(), 0.0);
    }

    long underflows = 0;
    double point_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double lambda = ws.bg_at_event[i] + ws.trig_at_event[i];
        if (lambda < kIntensityFloor) {
            lambda = kIntensityFloor;
            ++underflows;
        }
        ws.lambda_inv[i] = 1.0 / lambda;
        point_sum += std::log(lambda);
    }
    if (diag) diag->underflow_count += underflows;
    if (underflows) underflow_total_->fetch_add(underflows);

    // Trigger compensator, exact temporal factor times the edge-corrected
    // spatial mass.
    const double sx = std::sqrt(sx2);
    const double sy = std::sqrt(sy2);
    double d_comp_beta = 0.0;
    double d_comp_sx2 = 0.0;
    double d_comp_sy2 = 0.0;
    if (trig) {
        for (std::size_t i = 0; i < n; ++i) {
            const double rem = domain_.t_max - ev[i].t;
            const double decay = std::exp(-beta * rem);
            const double tm = 1.0 - decay;
            const double px =
                normal_cdf(edge_x_hi_[i] / sx) + normal_cdf(edge_x_lo_[i] / sx) - 1.0;
            const double py =
                normal_cdf(edge_y_hi_[i] / sy) + normal_cdf(edge_y_lo_[i] / sy) - 1.0;
            comp_trig += tm * px * py;
            if (want_grad) {
                d_comp_beta += px * py * rem * decay;
                // d(Phi(e/s))/d(s^2) = -(e/s) phi(e/s) / (2 s^2); the numerator
                // vanishes double-exponentially, so a zero numerator decides
                // the underflowing ratio.
                const double numx = x_normal_pdf(edge_x_hi_[i] / sx) +
                                    x_normal_pdf(edge_x_lo_[i] / sx);
                const double numy = x_normal_pdf(edge_y_hi_[i] / sy) +
                                    x_normal_pdf(edge_y_lo_[i] / sy);
                const double dpx = numx == 0.0 ? 0.0 : -numx / (2.0 * sx2);
                const double dpy = numy == 0.0 ? 0.0 : -numy / (2.0 * sy2);
                d_comp_sx2 += tm * py * dpx;
                d_comp_sy2 += tm * px * dpy;
            }
        }
        comp_trig *= alpha;
    }

    double logp = point_sum - comp_bg - comp_trig;

    // Priors on the constrained scale plus the log transform Jacobian.
    logp += normal_logpdf(state.a0, priors_.a0_mean, priors_.a0_sd);
    if (trig) {
        logp += priors_.alpha.logpdf(alpha) + priors_.beta.logpdf(beta) +
                priors_.sigma_x2.logpdf(sx2) + priors_.sigma_y2.logpdf(sy2);
        logp += std::log(alpha) + std::log(beta) + std::log(sx2) + std::log(sy2);
    }
    if (gp) {
        for (double z : state.z_t) logp += -0.5 * z * z;
        for (double z : state.z_s) logp += -0.5 * z * z;
        logp -= 0.5 * std::log(2.0 * kPi) * static_cast<double>(m_t() + m_s());
    }

    if (!want_grad) return logp;

    std::fill(grad.begin(), grad.end(), 0.0);
    double bg_ratio_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        bg_ratio_sum += ws.bg_at_event[i] * ws.lambda_inv[i];
    }
    grad[0] = bg_ratio_sum - comp_bg - (state.a0 - priors_.a0_mean) /
                                            (priors_.a0_sd * priors_.a0_sd);

    std::size_t k = 1;
    if (trig) {
        double sum_w = 0.0, sum_w_bdt = 0.0, sum_w_dx2 = 0.0, sum_w_dy2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ws.lambda_inv[i];
            const std::size_t b = pair_offset_[i];
            const std::size_t e = pair_offset_[i + 1];
            for (std::size_t p = b; p < e; ++p) {
                if (ws.pair_g[p] == 0.0) continue;  // avoids 0 * inf at extremes
                const double w = ws.pair_g[p] * r;
                sum_w += w;
                sum_w_bdt += w * beta * pair_dt_[p];
                sum_w_dx2 += w * pair_dx2_[p];
                sum_w_dy2 += w * pair_dy2_[p];
            }
        }
        // d/d log(alpha)
        grad[k] = sum_w - comp_trig + alpha * priors_.alpha.dlogpdf(alpha) + 1.0;
        // d/d log(beta)
        grad[k + 1] = (sum_w - sum_w_bdt) - beta * alpha * d_comp_beta +
                      beta * priors_.beta.dlogpdf(beta) + 1.0;
        // d/d log(sigma_x2), d/d log(sigma_y2)
        grad[k + 2] = (-0.5 * sum_w + sum_w_dx2 * (0.5 / sx2)) -
                      sx2 * alpha * d_comp_sx2 + sx2 * priors_.sigma_x2.dlogpdf(sx2) + 1.0;
        grad[k + 3] = (-0.5 * sum_w + sum_w_dy2 * (0.5 / sy2)) -
                      sy2 * alpha * d_comp_sy2 + sy2 * priors_.sigma_y2.dlogpdf(sy2) + 1.0;
        k += 4;
    }
    if (gp) {
        // d logp / d f, then chain through the basis columns.
        const double bg_t_scale = exp_a0 * qs * grid_t_->cell_width;
        for (std::size_t c = 0; c < ws.dft.size(); ++c) {
            ws.dft[c] = -bg_t_scale * ws.exp_ft[c];
        }
        const double bg_s_scale = exp_a0 * qt * grid_s_->cell_area;
        for (std::size_t c = 0; c < ws.dfs.size(); ++c) {
            ws.dfs[c] = -bg_s_scale * ws.exp_fs[c];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ws.bg_at_event[i] * ws.lambda_inv[i];
            ws.dft[cell_t_[i]] += r;
            ws.dfs[cell_s_[i]] += r;
        }
        Eigen::Map<const Eigen::VectorXd> dft(ws.dft.data(),
                                              static_cast<Eigen::Index>(ws.dft.size()));
        Eigen::Map<const Eigen::VectorXd> dfs(ws.dfs.data(),
                                              static_cast<Eigen::Index>(ws.dfs.size()));
        Eigen::VectorXd gzt = basis_t_->basis.transpose() * dft;
        Eigen::VectorXd gzs = basis_s_->basis.transpose() * dfs;
        for (int c = 0; c < m_t(); ++c) grad[k + c] = gzt(c) - state.z_t[c];
        k += m_t();
        for (int c = 0; c < m_s(); ++c) grad[k + c] = gzs(c) - state.z_s[c];
        k += m_s();
    }
    return logp;
}

double Model::log_likelihood(const ParamState& s) const {
    LikelihoodDiagnostics diag;
    return log_likelihood(s, diag);
}

double Model::log_likelihood(const ParamState& s, LikelihoodDiagnostics& diag) const {
    // Reuses the posterior path and strips priors off analytically would be
    // error prone; compute the likelihood terms directly instead.
    Workspace ws = make_workspace();
    const auto& ev = events_.events();
    const std::size_t n = ev.size();
    const bool gp = model_has_gp(kind_);
    const bool trig = model_has_trigger(kind_);
    compute_fields(s, ws);
    const double exp_a0 = std::exp(s.a0);
    const double comp_bg = exp_a0 * background_quadrature_t(ws) * background_quadrature_s(ws);

    double point_sum = 0.0;
    const double alpha = s.trigger.alpha;
    const double beta = s.trigger.beta;
    const double sx2 = s.trigger.sigma_x2;
    const double sy2 = s.trigger.sigma_y2;
    const bool excite = trig && alpha > 0.0;
    const double log_norm =
        excite ? std::log(alpha) + std::log(beta) - std::log(2.0 * kPi) -
                     0.5 * (std::log(sx2) + std::log(sy2))
               : 0.0;
    const double hx =
        excite ? 0.5 / std::max(sx2, std::numeric_limits<double>::min()) : 0.0;
    const double hy =
        excite ? 0.5 / std::max(sy2, std::numeric_limits<double>::min()) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double f = s.a0;
        if (gp) f += ws.ft[cell_t_[i]] + ws.fs[cell_s_[i]];
        double lambda = std::exp(f);
        if (excite) {
            const std::size_t b = pair_offset_[i];
            const std::size_t e = pair_offset_[i + 1];
            for (std::size_t p = b; p < e; ++p) {
                const double bdt = beta * pair_dt_[p];
                if (temporal_cutoff_ > 0.0 && bdt > temporal_cutoff_) break;
                lambda +=
                    std::exp(log_norm - bdt - pair_dx2_[p] * hx - pair_dy2_[p] * hy);
            }
        }
        if (lambda < kIntensityFloor) {
            lambda = kIntensityFloor;
            ++diag.underflow_count;
            underflow_total_->fetch_add(1);
        }
        point_sum += std::log(lambda);
    }

    double comp_trig = 0.0;
    if (trig && alpha > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            comp_trig += trigger_temporal_mass(ev[i].t, domain_.t_max, s.trigger) *
                         trigger_spatial_mass(ev[i].x, ev[i].y, domain_, s.trigger);
        }
    }
    return point_sum - comp_bg - comp_trig;
}

double Model::log_posterior(std::span<const double> u) const {
    Workspace ws = make_workspace();
    return evaluate(u, {}, false, ws, nullptr);
}

std::vector<double> Model::grad_log_posterior(std::span<const double> u) const {
    std::vector<double> grad(dim(), 0.0);
    Workspace ws = make_workspace();
    evaluate(u, grad, true, ws, nullptr);
    return grad;
}

double Model::log_posterior_with_grad(std::span<const double> u, std::span<double> grad,
                                      Workspace& ws) const {
    return evaluate(u, grad, true, ws, nullptr);
}

double Model::intensity_at(double t, double x, double y, const ParamState& s) const {
    if (!(t >= 0.0 && t <= domain_.t_max)) {
        throw NumericalError("intensity_at: t outside [0, T]");
    }
    double f = s.a0;
    if (model_has_gp(kind_)) {
        Workspace ws = make_workspace();
        compute_fields(s, ws);
        f += ws.ft[grid_t_->cell_index(t)] + ws.fs[grid_s_->cell_index(x, y)];
    }
    double lambda = std::exp(f);
    if (model_has_trigger(kind_) && s.trigger.alpha > 0.0) {
        for (const Event& e : events_.events()) {
            if (e.t >= t) break;
            lambda += trigger_intensity(t - e.t, x - e.x, y - e.y, s.trigger);
        }
    }
    return lambda;
}

double Model::compensator_total(const ParamState& s) const {
    Workspace ws = make_workspace();
    compute_fields(s, ws);
    double total =
        std::exp(s.a0) * background_quadrature_t(ws) * background_quadrature_s(ws);
    if (model_has_trigger(kind_) && s.trigger.alpha > 0.0) {
        for (const Event& e : events_.events()) {
            total += trigger_temporal_mass(e.t, domain_.t_max, s.trigger) *
                     trigger_spatial_mass(e.x, e.y, domain_, s.trigger);
        }
    }
    return total;
}

TemporalCompensator Model::temporal_compensator(const ParamState& s) const {
    TemporalCompensator tc;
    tc.t_max_ = domain_.t_max;
    Workspace ws = make_workspace();
    compute_fields(s, ws);
    tc.a0_scale_ = std::exp(s.a0) * background_quadrature_s(ws);
    if (model_has_gp(kind_)) {
        tc.cell_width_ = grid_t_->cell_width;
        tc.exp_ft_ = ws.exp_ft;
        tc.cum_bg_.assign(ws.exp_ft.size() + 1, 0.0);
        for (std::size_t k = 0; k < ws.exp_ft.size(); ++k) {
            tc.cum_bg_[k + 1] = tc.cum_bg_[k] + ws.exp_ft[k] * grid_t_->cell_width;
        }
    }
    if (model_has_trigger(kind_) && s.trigger.alpha > 0.0) {
        tc.alpha_ = s.trigger.alpha;
        tc.beta_ = s.trigger.beta;
        for (const Event& e : events_.events()) {
            tc.event_times_.push_back(e.t);
            tc.event_spatial_mass_.push_back(
                trigger_spatial_mass(e.x, e.y, domain_, s.trigger));
        }
    }
    return tc;
}

}  // namespace coxhawkes
