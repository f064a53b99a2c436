#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "uqct/covariance.hpp"

namespace uqct {

// Discrete Karhunen-Loeve expansion of the log-field on a uniform tensor
// grid over [0,1]^2. Eigenvalues sorted decreasing, eigenfunction samples
// L2(D)-orthonormal under the grid's trapezoid weights. Immutable after
// construction.
struct KLExpansion {
    int grid_n = 0;            // points per side
    Eigen::VectorXd mean;      // grid_n^2 samples of the mean log-field, row-major
    Eigen::VectorXd lambdas;   // decreasing, nonnegative
    Eigen::MatrixXd psi;       // grid_n^2 x terms, column k = psi_k samples

    int num_terms() const { return int(lambdas.size()); }
    double grid_h() const { return 1.0 / (grid_n - 1); }
};

// Nystrom discretization of the covariance operator: symmetrized weighted
// kernel matrix, dense eigensolve, negatives clamped/dropped, top num_terms
// kept. Throws if fewer than num_terms positive eigenvalues survive.
KLExpansion compute_kl(const CovarianceSpec& spec, int grid_points_per_side, int num_terms,
                       double mean_value = 0.0);

// b(x) = mean(x) + sum_{k<m} sqrt(lambda_k) psi_k(x) y_k via bilinear
// interpolation of the grid samples; m = y.size(). The lognormal coefficient
// is exp() of this, applied by callers.
std::vector<double> eval_log_field(const KLExpansion& kl,
                                   const std::vector<std::pair<double, double>>& points,
                                   const std::vector<double>& y);

// Grid samples of the truncated log-field at parameter y (one fused pass,
// used by the PDE evaluation path).
Eigen::VectorXd combined_log_field(const KLExpansion& kl, const std::vector<double>& y);

// Bilinear interpolation of a row-major grid_n^2 sample vector at (x,y) in
// [0,1]^2; rejects points outside the domain.
double bilinear(const Eigen::VectorXd& samples, int grid_n, double x, double y);

// Binary cache with a JSON header keyed by (spec, grid size, num_terms).
void save_kl(const KLExpansion& kl, const CovarianceSpec& spec, const std::string& path);
// Returns false if the file is absent or keyed differently.
bool load_kl(KLExpansion& kl, const CovarianceSpec& spec, int grid_points_per_side, int num_terms,
             double mean_value, const std::string& path);

}  // namespace uqct
