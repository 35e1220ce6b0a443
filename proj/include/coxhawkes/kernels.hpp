#pragma once

#include <span>

#include "coxhawkes/domain.hpp"

namespace coxhawkes {

// Excitation rate added by one past event: exponential decay in time times a
// bivariate Gaussian density in space (axis-aligned covariance). Integrates
// to alpha over (0, inf) x R^2.
double trigger_intensity(double dt, double dx, double dy, const TriggerParams& p);

// Time integral of the excitation kernel of an event at t_i over [t_i, t_end]:
// alpha * (1 - exp(-beta * (t_end - t_i))), in [0, alpha).
double trigger_temporal_mass(double t_i, double t_end, const TriggerParams& p);

// Probability that an offspring displacement from (x_i, y_i) lands inside the
// domain rectangle; the spatial edge correction of the compensator.
double trigger_spatial_mass(double x_i, double y_i, const Domain& domain,
                            const TriggerParams& p);

// Squared-exponential covariance between points of equal dimension.
double se_covariance(std::span<const double> u, std::span<const double> v,
                     const GPHyper& h);
double se_covariance_dist2(double squared_distance, const GPHyper& h);

}  // namespace coxhawkes
