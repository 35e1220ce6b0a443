#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <string>

#include "coxhawkes/domain.hpp"
#include "coxhawkes/grid.hpp"

namespace coxhawkes {

// Relative jitter added to covariance diagonals (times the kernel variance).
inline constexpr double kCovarianceJitter = 1e-6;

// Dense squared-exponential covariance over grid centers, jittered diagonal.
Eigen::MatrixXd build_covariance(const Grid1D& grid, const GPHyper& h);
Eigen::MatrixXd build_covariance(const Grid2D& grid, const GPHyper& h);

// Precomputed linear map from i.i.d. standard normals to approximate GP
// draws on a grid: columns are eigenvectors scaled by sqrt(eigenvalue).
// Plays the role of a pre-trained generator: sampling needs no factorization,
// only a matrix-vector product against uncorrelated z.
struct LowRankBasis {
    Eigen::MatrixXd basis;  // grid_size x m
    GPHyper hyper;
    double var_frac{1.0};
    double retained_variance_fraction{1.0};

    int rank() const { return static_cast<int>(basis.cols()); }
    std::size_t grid_size() const { return static_cast<std::size_t>(basis.rows()); }
};

// Truncated eigenbasis of K. The rank is the smallest m whose eigenvalue
// mass reaches var_frac of the trace, which bounds the nuclear-norm
// reconstruction error ||K - B B^T||_* / ||K||_* by 1 - var_frac.
LowRankBasis precompute_basis(const Eigen::MatrixXd& covariance, const GPHyper& h,
                              double var_frac);
LowRankBasis precompute_basis(const Grid1D& grid, const GPHyper& h, double var_frac);
LowRankBasis precompute_basis(const Grid2D& grid, const GPHyper& h, double var_frac);

// values = basis * z; deterministic given z.
GridField sample_field(const LowRankBasis& basis, std::span<const double> z);

// Versioned text cache: one JSON header line, then the basis matrix in CSV.
void save_basis(std::ostream& out, const LowRankBasis& basis, const std::string& grid_spec);
void save_basis_file(const std::string& path, const LowRankBasis& basis,
                     const std::string& grid_spec);
LowRankBasis load_basis(std::istream& in, const std::string& expected_grid_spec);
LowRankBasis load_basis_file(const std::string& path, const std::string& expected_grid_spec);

// Canonical one-line description used to key basis caches.
std::string grid_spec_string(const Grid1D& grid, const GPHyper& h, double var_frac);
std::string grid_spec_string(const Grid2D& grid, const GPHyper& h, double var_frac);

// Field export: cell_index,center_coord(s),value rows.
void export_field_csv(std::ostream& out, const GridField& field, const Grid1D& grid);
void export_field_csv(std::ostream& out, const GridField& field, const Grid2D& grid);

}  // namespace coxhawkes
