#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "coxhawkes/errors.hpp"

namespace coxhawkes {

struct Interval {
    double lo{0.0};
    double hi{1.0};

    double length() const { return hi - lo; }
    bool contains(double v) const { return v >= lo && v <= hi; }
};

// Observation window [0, t_max] x rectangle. All units are abstract and
// never converted.
struct Domain {
    double t_max{1.0};
    Interval x_range{0.0, 1.0};
    Interval y_range{0.0, 1.0};

    double area() const { return x_range.length() * y_range.length(); }
    double volume() const { return t_max * area(); }
    bool contains(double t, double x, double y) const {
        return t >= 0.0 && t <= t_max && x_range.contains(x) && y_range.contains(y);
    }
    void validate() const;
};

struct Event {
    double t{0.0};
    double x{0.0};
    double y{0.0};
    // Generation label: 0 = background, k >= 1 = k-th offspring generation.
    std::optional<int> gen{};
};

// Time-ordered events. Ties keep insertion order and never excite each other
// (the conditional intensity sums strictly over earlier times).
class EventSet {
public:
    EventSet() = default;

    static EventSet from_unsorted(std::vector<Event> events);

    const std::vector<Event>& events() const { return events_; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }
    const Event& operator[](std::size_t i) const { return events_[i]; }
    auto begin() const { return events_.begin(); }
    auto end() const { return events_.end(); }

private:
    std::vector<Event> events_;
};

// Sorts by time and checks finiteness and domain membership. Error messages
// report the offending input index and coordinates.
EventSet validate_events(std::vector<Event> events, const Domain& domain);
EventSet validate_events(const EventSet& events, const Domain& domain);

struct TriggerParams {
    double alpha{0.5};    // branching factor, dimensionless
    double beta{1.0};     // temporal decay rate (1/time)
    double sigma_x2{1.0}; // spatial variance (length^2)
    double sigma_y2{1.0};

    // alpha = 0 is the pure-Cox boundary and is allowed; the upper bound
    // alpha < 1 is the stationarity condition.
    void validate() const;
};

// Total mass of the triggering kernel over (0, inf) x R^2; closed form.
double branching_ratio(const TriggerParams& p);

struct GPHyper {
    double length_scale{1.0};
    double variance{1.0};
    double mean{0.0};

    void validate() const;
};

}  // namespace coxhawkes
