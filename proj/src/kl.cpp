#include "uqct/kl.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <lapacke.h>

#include "json.hpp"

namespace uqct {

namespace {

// 1D trapezoid weights on [0,1] with n points.
Eigen::VectorXd trapezoid_weights(int n) {
    const double h = 1.0 / (n - 1);
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, h);
    w[0] = w[n - 1] = 0.5 * h;
    return w;
}

}  // namespace

KLExpansion compute_kl(const CovarianceSpec& spec, int grid_points_per_side, int num_terms,
                       double mean_value) {
    spec.validate();
    const int n = grid_points_per_side;
    if (n < 9) throw std::invalid_argument("compute_kl: grid must have at least 9 points per side");
    const long N = long(n) * n;
    if (num_terms < 1 || num_terms > N)
        throw std::invalid_argument("compute_kl: num_terms out of range");

    const double h = 1.0 / (n - 1);
    const Eigen::VectorXd w1 = trapezoid_weights(n);
    Eigen::VectorXd w(N), sw(N);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            w[long(iy) * n + ix] = w1[ix] * w1[iy];
            sw[long(iy) * n + ix] = std::sqrt(w[long(iy) * n + ix]);
        }

    const bool one_norm = spec.distance == CovarianceSpec::Distance::one_norm;

    // cov depends only on the distance, which on a uniform grid is a function
    // of (|dix|, |diy|); tabulate once.
    Eigen::MatrixXd cov_tab(n, n);
    for (int dy = 0; dy < n; ++dy)
        for (int dx = 0; dx < n; ++dx) {
            const double r = one_norm ? (dx + dy) * h : std::hypot(dx * h, dy * h);
            cov_tab(dx, dy) = covariance(spec, r);
        }

    // Symmetrized Nystrom matrix W^{1/2} K W^{1/2}.
    Eigen::MatrixXd A(N, N);
    for (long j = 0; j < N; ++j) {
        const int jx = int(j % n), jy = int(j / n);
        for (long i = j; i < N; ++i) {
            const int ix = int(i % n), iy = int(i / n);
            const double v = sw[i] * cov_tab(std::abs(ix - jx), std::abs(iy - jy)) * sw[j];
            A(i, j) = v;
            A(j, i) = v;
        }
    }

    Eigen::VectorXd evals(N);
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', lapack_int(N), A.data(),
                                           lapack_int(N), evals.data());
    if (info != 0) throw std::runtime_error("compute_kl: eigensolve did not converge");

    // dsyevd returns ascending order; keep the positive tail, largest first.
    // Eigenvalues below the relative noise floor of the dense solve are
    // numerical zeros, not usable modes.
    const double floor = 1e-12 * std::max(evals[N - 1], 0.0);
    std::vector<long> keep;
    for (long i = N - 1; i >= 0; --i) {
        if (evals[i] > floor && evals[i] > 0.0) keep.push_back(i);
        if (long(keep.size()) == num_terms) break;
    }
    if (long(keep.size()) < num_terms)
        throw std::runtime_error("compute_kl: only " + std::to_string(keep.size()) +
                                 " nonnegative eigenvalues available");

    KLExpansion kl;
    kl.grid_n = n;
    kl.mean = Eigen::VectorXd::Constant(N, mean_value);
    kl.lambdas.resize(num_terms);
    kl.psi.resize(N, num_terms);
    for (int k = 0; k < num_terms; ++k) {
        kl.lambdas[k] = evals[keep[k]];
        Eigen::VectorXd psi = A.col(keep[k]).cwiseQuotient(sw);
        // deterministic sign: largest-magnitude entry positive
        long imax = 0;
        psi.cwiseAbs().maxCoeff(&imax);
        if (psi[imax] < 0.0) psi = -psi;
        kl.psi.col(k) = psi;
    }
    return kl;
}

double bilinear(const Eigen::VectorXd& samples, int grid_n, double x, double y) {
    constexpr double slack = 1e-12;
    if (!(x >= -slack && x <= 1.0 + slack && y >= -slack && y <= 1.0 + slack))
        throw std::invalid_argument("bilinear: point outside [0,1]^2");
    const double h = 1.0 / (grid_n - 1);
    const int ix = std::min(int(x / h), grid_n - 2);
    const int iy = std::min(int(y / h), grid_n - 2);
    const double tx = std::clamp(x / h - ix, 0.0, 1.0);
    const double ty = std::clamp(y / h - iy, 0.0, 1.0);
    const long base = long(iy) * grid_n + ix;
    const double v00 = samples[base], v10 = samples[base + 1];
    const double v01 = samples[base + grid_n], v11 = samples[base + grid_n + 1];
    return (1 - ty) * ((1 - tx) * v00 + tx * v10) + ty * ((1 - tx) * v01 + tx * v11);
}

Eigen::VectorXd combined_log_field(const KLExpansion& kl, const std::vector<double>& y) {
    if (long(y.size()) > kl.num_terms())
        throw std::invalid_argument("combined_log_field: truncation exceeds stored terms");
    Eigen::VectorXd field = kl.mean;
    for (size_t k = 0; k < y.size(); ++k)
        if (y[k] != 0.0) field += std::sqrt(kl.lambdas[long(k)]) * y[k] * kl.psi.col(long(k));
    return field;
}

std::vector<double> eval_log_field(const KLExpansion& kl,
                                   const std::vector<std::pair<double, double>>& points,
                                   const std::vector<double>& y) {
    const Eigen::VectorXd field = combined_log_field(kl, y);
    std::vector<double> out(points.size());
    for (size_t i = 0; i < points.size(); ++i)
        out[i] = bilinear(field, kl.grid_n, points[i].first, points[i].second);
    return out;
}

namespace {

nlohmann::json cache_header(const CovarianceSpec& spec, int grid_n, int num_terms,
                            double mean_value) {
    return {{"key", spec.key()}, {"grid", grid_n}, {"terms", num_terms}, {"mean", mean_value}};
}

}  // namespace

void save_kl(const KLExpansion& kl, const CovarianceSpec& spec, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_kl: cannot open " + path);
    os << cache_header(spec, kl.grid_n, kl.num_terms(), kl.mean[0]).dump() << '\n';
    auto dump = [&](const double* p, long count) {
        os.write(reinterpret_cast<const char*>(p), std::streamsize(sizeof(double)) * count);
    };
    dump(kl.mean.data(), kl.mean.size());
    dump(kl.lambdas.data(), kl.lambdas.size());
    dump(kl.psi.data(), kl.psi.size());
}

bool load_kl(KLExpansion& kl, const CovarianceSpec& spec, int grid_points_per_side, int num_terms,
             double mean_value, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return false;
    std::string line;
    std::getline(is, line);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        return false;
    }
    if (header != cache_header(spec, grid_points_per_side, num_terms, mean_value)) return false;

    const long N = long(grid_points_per_side) * grid_points_per_side;
    kl.grid_n = grid_points_per_side;
    kl.mean.resize(N);
    kl.lambdas.resize(num_terms);
    kl.psi.resize(N, num_terms);
    auto slurp = [&](double* p, long count) {
        is.read(reinterpret_cast<char*>(p), std::streamsize(sizeof(double)) * count);
    };
    slurp(kl.mean.data(), N);
    slurp(kl.lambdas.data(), num_terms);
    slurp(kl.psi.data(), N * num_terms);
    return bool(is);
}

}  // namespace uqct
