#include "coxhawkes/kernels.hpp"

#include <cmath>

#include "coxhawkes/mathutil.hpp"

namespace coxhawkes {

double trigger_intensity(double dt, double dx, double dy, const TriggerParams& p) {
    if (!(dt > 0.0)) {
        throw NumericalError("trigger_intensity: dt must be > 0 (strict causality)");
    }
    double sx = std::sqrt(p.sigma_x2);
    double sy = std::sqrt(p.sigma_y2);
    double quad = dx * dx / (2.0 * p.sigma_x2) + dy * dy / (2.0 * p.sigma_y2);
    return p.alpha * p.beta * std::exp(-p.beta * dt - quad) / (2.0 * kPi * sx * sy);
}

double trigger_temporal_mass(double t_i, double t_end, const TriggerParams& p) {
    if (t_end < t_i) {
        throw NumericalError("trigger_temporal_mass: t_end must be >= t_i");
    }
    return p.alpha * (1.0 - std::exp(-p.beta * (t_end - t_i)));
}

double trigger_spatial_mass(double x_i, double y_i, const Domain& domain,
                            const TriggerParams& p) {
    double sx = std::sqrt(p.sigma_x2);
    double sy = std::sqrt(p.sigma_y2);
    double mx = normal_cdf((domain.x_range.hi - x_i) / sx) -
                normal_cdf((domain.x_range.lo - x_i) / sx);
    double my = normal_cdf((domain.y_range.hi - y_i) / sy) -
                normal_cdf((domain.y_range.lo - y_i) / sy);
    return mx * my;
}

double se_covariance_dist2(double squared_distance, const GPHyper& h) {
    return h.variance *
           std::exp(-squared_distance / (2.0 * h.length_scale * h.length_scale));
}

double se_covariance(std::span<const double> u, std::span<const double> v,
                     const GPHyper& h) {
    if (u.size() != v.size()) {
        throw NumericalError("se_covariance: dimension mismatch");
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double d = u[i] - v[i];
        d2 += d * d;
    }
    return se_covariance_dist2(d2, h);
}

}  // namespace coxhawkes
