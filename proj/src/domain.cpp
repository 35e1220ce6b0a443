#include "coxhawkes/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace coxhawkes {

void Domain::validate() const {
    if (!(std::isfinite(t_max) && t_max > 0.0)) {
        throw ConfigError("domain: t_max must be finite and > 0");
    }
    if (!(std::isfinite(x_range.lo) && std::isfinite(x_range.hi) && x_range.length() > 0.0)) {
        throw ConfigError("domain: x_range must be a nonempty finite interval");
    }
    if (!(std::isfinite(y_range.lo) && std::isfinite(y_range.hi) && y_range.length() > 0.0)) {
        throw ConfigError("domain: y_range must be a nonempty finite interval");
    }
}

EventSet EventSet::from_unsorted(std::vector<Event> events) {
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    EventSet out;
    out.events_ = std::move(events);
    return out;
}

EventSet validate_events(std::vector<Event> events, const Domain& domain) {
    domain.validate();
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Event& e = events[i];
        if (!std::isfinite(e.t) || !std::isfinite(e.x) || !std::isfinite(e.y)) {
            std::ostringstream os;
            os << "event " << i << ": non-finite field (t=" << e.t << ", x=" << e.x
               << ", y=" << e.y << ")";
            throw DataError(os.str());
        }
        if (e.gen && *e.gen < 0) {
            std::ostringstream os;
            os << "event " << i << ": negative generation label " << *e.gen;
            throw DataError(os.str());
        }
        if (e.t < 0.0 || e.t > domain.t_max) {
            std::ostringstream os;
            os << "event " << i << " outside time window: t=" << e.t << " not in [0, "
               << domain.t_max << "]";
            throw DataError(os.str());
        }
        if (!domain.x_range.contains(e.x) || !domain.y_range.contains(e.y)) {
            std::ostringstream os;
            os << "event " << i << " outside spatial region: (x=" << e.x << ", y=" << e.y
               << ")";
            throw DataError(os.str());
        }
    }
    return EventSet::from_unsorted(std::move(events));
}

EventSet validate_events(const EventSet& events, const Domain& domain) {
    return validate_events(events.events(), domain);
}

void TriggerParams::validate() const {
    if (!(std::isfinite(alpha) && alpha >= 0.0)) {
        throw ConfigError("trigger: alpha must be finite and >= 0");
    }
    if (!(alpha < 1.0)) {
        throw ConfigError("trigger: alpha must be < 1 (stationarity)");
    }
    if (!(std::isfinite(beta) && beta > 0.0)) {
        throw ConfigError("trigger: beta must be finite and > 0");
    }
    if (!(std::isfinite(sigma_x2) && sigma_x2 > 0.0) ||
        !(std::isfinite(sigma_y2) && sigma_y2 > 0.0)) {
        throw ConfigError("trigger: spatial variances must be finite and > 0");
    }
}

double branching_ratio(const TriggerParams& p) {
    p.validate();
    // The temporal factor integrates to alpha and the spatial factor is a
    // probability density, so the total mass is exactly alpha.
    return p.alpha;
}

void GPHyper::validate() const {
    if (!(std::isfinite(length_scale) && length_scale > 0.0)) {
        throw ConfigError("gp: length_scale must be finite and > 0");
    }
    if (!(std::isfinite(variance) && variance > 0.0)) {
        throw ConfigError("gp: variance must be finite and > 0");
    }
    if (!std::isfinite(mean)) {
        throw ConfigError("gp: mean must be finite");
    }
}

}  // namespace coxhawkes
