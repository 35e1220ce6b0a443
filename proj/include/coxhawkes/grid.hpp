#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "coxhawkes/domain.hpp"

namespace coxhawkes {

// Uniform cells covering [0, t_max] exactly.
struct Grid1D {
    int n_t{0};
    double t_max{0.0};
    double cell_width{0.0};
    std::vector<double> centers;

    static Grid1D over(double t_max, int n_t);
    // Containing cell; points exactly on a shared edge go to the lower cell.
    int cell_index(double t) const;
};

// Uniform rectangular cells tiling the spatial region exactly; flat index is
// ix * n_y + iy.
struct Grid2D {
    int n_x{0};
    int n_y{0};
    Interval x_range;
    Interval y_range;
    double cell_area{0.0};
    std::vector<double> centers_x;  // flat, aligned with centers_y
    std::vector<double> centers_y;

    static Grid2D over(const Interval& x_range, const Interval& y_range, int n_x, int n_y);
    int cell_index(double x, double y) const;
    std::size_t size() const { return static_cast<std::size_t>(n_x) * n_y; }
};

// Piecewise-constant field realization aligned with grid centers.
struct GridField {
    std::vector<double> values;
};

double field_at(const GridField& field, const Grid1D& grid, double t);
double field_at(const GridField& field, const Grid2D& grid, double x, double y);

// Left-to-right accumulation shared with the likelihood quadrature so that
// field integration and the compensator agree bit for bit.
double cell_sum(std::span<const double> values);

}  // namespace coxhawkes
