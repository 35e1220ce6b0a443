#include "coxhawkes/gp_generator.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "coxhawkes/csv.hpp"
#include "coxhawkes/errors.hpp"
#include "coxhawkes/kernels.hpp"

namespace coxhawkes {

namespace {

Eigen::MatrixXd covariance_from_points(const std::vector<double>& xs,
                                       const std::vector<double>& ys, bool two_d,
                                       const GPHyper& h) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = h.variance * (1.0 + kCovarianceJitter);
        for (Eigen::Index j = 0; j < i; ++j) {
            double dx = xs[i] - xs[j];
            double d2 = dx * dx;
            if (two_d) {
                double dy = ys[i] - ys[j];
                d2 += dy * dy;
            }
            double v = se_covariance_dist2(d2, h);
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

}  // namespace

Eigen::MatrixXd build_covariance(const Grid1D& grid, const GPHyper& h) {
    if (grid.n_t <= 0) throw ConfigError("build_covariance: empty grid");
    h.validate();
    return covariance_from_points(grid.centers, {}, false, h);
}

Eigen::MatrixXd build_covariance(const Grid2D& grid, const GPHyper& h) {
    if (grid.size() == 0) throw ConfigError("build_covariance: empty grid");
    h.validate();
    return covariance_from_points(grid.centers_x, grid.centers_y, true, h);
}

LowRankBasis precompute_basis(const Eigen::MatrixXd& covariance, const GPHyper& h,
                              double var_frac) {
    if (!(var_frac > 0.0 && var_frac <= 1.0)) {
        throw ConfigError("precompute_basis: var_frac must lie in (0, 1]");
    }
    const Eigen::Index n = covariance.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("precompute_basis: eigendecomposition failed");
    }
    // Ascending from Eigen; traverse from the top.
    const Eigen::VectorXd& evals = solver.eigenvalues();
    double neg_floor = -1e-8 * h.variance;
    double trace = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (evals(i) < neg_floor) {
            throw NumericalError("precompute_basis: covariance not PSD beyond jitter");
        }
        trace += std::max(evals(i), 0.0);
    }

    // Smallest rank whose eigenvalue mass reaches var_frac of the trace; the
    // dropped mass then bounds the nuclear-norm reconstruction error by
    // 1 - var_frac.
    Eigen::Index m = 0;
    double kept = 0.0;
    if (var_frac >= 1.0) {
        m = n;
        kept = trace;
    } else {
        while (m < n) {
            kept += std::max(evals(n - 1 - m), 0.0);
            ++m;
            if (kept >= var_frac * trace) break;
        }
    }

    LowRankBasis basis;
    basis.hyper = h;
    basis.var_frac = var_frac;
    basis.retained_variance_fraction = trace > 0.0 ? kept / trace : 1.0;
    basis.basis.resize(n, m);
    for (Eigen::Index c = 0; c < m; ++c) {
        Eigen::Index src = n - 1 - c;  // largest eigenvalue first
        double scale = std::sqrt(std::max(evals(src), 0.0));
        basis.basis.col(c) = solver.eigenvectors().col(src) * scale;
    }
    return basis;
}

LowRankBasis precompute_basis(const Grid1D& grid, const GPHyper& h, double var_frac) {
    return precompute_basis(build_covariance(grid, h), h, var_frac);
}

LowRankBasis precompute_basis(const Grid2D& grid, const GPHyper& h, double var_frac) {
    return precompute_basis(build_covariance(grid, h), h, var_frac);
}

GridField sample_field(const LowRankBasis& basis, std::span<const double> z) {
    if (z.size() != static_cast<std::size_t>(basis.rank())) {
        throw NumericalError("sample_field: coefficient length does not match rank");
    }
    GridField field;
    field.values.assign(basis.grid_size(), 0.0);
    Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
    Eigen::Map<Eigen::VectorXd> out(field.values.data(),
                                    static_cast<Eigen::Index>(field.values.size()));
    out = basis.basis * zv;
    return field;
}

namespace {
constexpr int kBasisCacheVersion = 1;
}

std::string grid_spec_string(const Grid1D& grid, const GPHyper& h, double var_frac) {
    std::ostringstream os;
    os << "grid1d n_t=" << grid.n_t << " t_max=" << format_double(grid.t_max)
       << " l=" << format_double(h.length_scale) << " w2=" << format_double(h.variance)
       << " var_frac=" << format_double(var_frac);
    return os.str();
}

std::string grid_spec_string(const Grid2D& grid, const GPHyper& h, double var_frac) {
    std::ostringstream os;
    os << "grid2d n_x=" << grid.n_x << " n_y=" << grid.n_y
       << " x=[" << format_double(grid.x_range.lo) << "," << format_double(grid.x_range.hi)
       << "] y=[" << format_double(grid.y_range.lo) << "," << format_double(grid.y_range.hi)
       << "] l=" << format_double(h.length_scale) << " w2=" << format_double(h.variance)
       << " var_frac=" << format_double(var_frac);
    return os.str();
}

void save_basis(std::ostream& out, const LowRankBasis& basis, const std::string& grid_spec) {
    nlohmann::json header;
    header["version"] = kBasisCacheVersion;
    header["grid_spec"] = grid_spec;
    header["length_scale"] = basis.hyper.length_scale;
    header["variance"] = basis.hyper.variance;
    header["jitter"] = kCovarianceJitter;
    header["rank"] = basis.rank();
    header["rows"] = basis.basis.rows();
    header["var_frac"] = basis.var_frac;
    header["retained_variance_fraction"] = basis.retained_variance_fraction;
    out << header.dump() << "\n";
    for (Eigen::Index r = 0; r < basis.basis.rows(); ++r) {
        for (Eigen::Index c = 0; c < basis.basis.cols(); ++c) {
            if (c) out << ',';
            out << format_double(basis.basis(r, c));
        }
        out << "\n";
    }
}

void save_basis_file(const std::string& path, const LowRankBasis& basis,
                     const std::string& grid_spec) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open basis cache for writing: " + path);
    save_basis(out, basis, grid_spec);
    if (!out) throw DataError("basis cache write failed: " + path);
}

LowRankBasis load_basis(std::istream& in, const std::string& expected_grid_spec) {
    std::string header_line;
    if (!std::getline(in, header_line)) throw DataError("basis cache: missing header");
    nlohmann::json header = nlohmann::json::parse(header_line, nullptr, false);
    if (header.is_discarded()) throw DataError("basis cache: malformed header JSON");
    if (header.value("version", -1) != kBasisCacheVersion) {
        throw DataError("basis cache: unsupported version");
    }
    if (header.value("grid_spec", std::string{}) != expected_grid_spec) {
        throw DataError("basis cache: grid spec mismatch (expected '" + expected_grid_spec +
                        "', found '" + header.value("grid_spec", std::string{}) + "')");
    }
    LowRankBasis basis;
    basis.hyper.length_scale = header.at("length_scale").get<double>();
    basis.hyper.variance = header.at("variance").get<double>();
    basis.var_frac = header.at("var_frac").get<double>();
    basis.retained_variance_fraction = header.at("retained_variance_fraction").get<double>();
    auto rows = header.at("rows").get<Eigen::Index>();
    auto rank = header.at("rank").get<Eigen::Index>();
    basis.basis.resize(rows, rank);
    std::string line;
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) throw DataError("basis cache: truncated matrix");
        std::istringstream ls(line);
        std::string cell;
        for (Eigen::Index c = 0; c < rank; ++c) {
            if (!std::getline(ls, cell, ',')) {
                throw DataError("basis cache: short row in matrix");
            }
            basis.basis(r, c) = std::stod(cell);
        }
    }
    return basis;
}

LowRankBasis load_basis_file(const std::string& path, const std::string& expected_grid_spec) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open basis cache: " + path);
    return load_basis(in, expected_grid_spec);
}

void export_field_csv(std::ostream& out, const GridField& field, const Grid1D& grid) {
    if (field.values.size() != static_cast<std::size_t>(grid.n_t)) {
        throw NumericalError("export_field_csv: field/grid size mismatch");
    }
    out << "cell_index,t_center,value\n";
    for (int i = 0; i < grid.n_t; ++i) {
        out << i << ',' << format_double(grid.centers[i]) << ','
            << format_double(field.values[i]) << "\n";
    }
}

void export_field_csv(std::ostream& out, const GridField& field, const Grid2D& grid) {
    if (field.values.size() != grid.size()) {
        throw NumericalError("export_field_csv: field/grid size mismatch");
    }
    out << "cell_index,x_center,y_center,value\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out << i << ',' << format_double(grid.centers_x[i]) << ','
            << format_double(grid.centers_y[i]) << ',' << format_double(field.values[i])
            << "\n";
    }
}

}  // namespace coxhawkes
