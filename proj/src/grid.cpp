#include "coxhawkes/grid.hpp"

#include <cmath>
#include <sstream>

namespace coxhawkes {

namespace {

// Cell of v in n uniform cells over [lo, lo + n*width]; interior edge points
// belong to the lower-index cell.
int uniform_cell(double v, double lo, double width, int n, const char* axis) {
    double rel = (v - lo) / width;
    if (rel < 0.0 || rel > static_cast<double>(n)) {
        std::ostringstream os;
        os << "point outside grid on " << axis << " axis: " << v;
        throw DataError(os.str());
    }
    int idx = static_cast<int>(std::ceil(rel)) - 1;
    if (idx < 0) idx = 0;
    if (idx >= n) idx = n - 1;
    return idx;
}

}  // namespace

Grid1D Grid1D::over(double t_max, int n_t) {
    if (n_t <= 0 || !(t_max > 0.0)) {
        throw ConfigError("grid1d: need n_t > 0 and t_max > 0");
    }
    Grid1D g;
    g.n_t = n_t;
    g.t_max = t_max;
    g.cell_width = t_max / n_t;
    g.centers.resize(n_t);
    for (int i = 0; i < n_t; ++i) {
        g.centers[i] = (i + 0.5) * g.cell_width;
    }
    return g;
}

int Grid1D::cell_index(double t) const {
    return uniform_cell(t, 0.0, cell_width, n_t, "t");
}

Grid2D Grid2D::over(const Interval& x_range, const Interval& y_range, int n_x, int n_y) {
    if (n_x <= 0 || n_y <= 0) throw ConfigError("grid2d: need positive cell counts");
    if (!(x_range.length() > 0.0) || !(y_range.length() > 0.0)) {
        throw ConfigError("grid2d: degenerate spatial region");
    }
    Grid2D g;
    g.n_x = n_x;
    g.n_y = n_y;
    g.x_range = x_range;
    g.y_range = y_range;
    double wx = x_range.length() / n_x;
    double wy = y_range.length() / n_y;
    g.cell_area = wx * wy;
    g.centers_x.resize(g.size());
    g.centers_y.resize(g.size());
    for (int ix = 0; ix < n_x; ++ix) {
        for (int iy = 0; iy < n_y; ++iy) {
            std::size_t idx = static_cast<std::size_t>(ix) * n_y + iy;
            g.centers_x[idx] = x_range.lo + (ix + 0.5) * wx;
            g.centers_y[idx] = y_range.lo + (iy + 0.5) * wy;
        }
    }
    return g;
}

int Grid2D::cell_index(double x, double y) const {
    double wx = x_range.length() / n_x;
    double wy = y_range.length() / n_y;
    int ix = uniform_cell(x, x_range.lo, wx, n_x, "x");
    int iy = uniform_cell(y, y_range.lo, wy, n_y, "y");
    return ix * n_y + iy;
}

double field_at(const GridField& field, const Grid1D& grid, double t) {
    if (field.values.size() != static_cast<std::size_t>(grid.n_t)) {
        throw NumericalError("field_at: field/grid size mismatch");
    }
    return field.values[grid.cell_index(t)];
}

double field_at(const GridField& field, const Grid2D& grid, double x, double y) {
    if (field.values.size() != grid.size()) {
        throw NumericalError("field_at: field/grid size mismatch");
    }
    return field.values[grid.cell_index(x, y)];
}

double cell_sum(std::span<const double> values) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

}  // namespace coxhawkes
