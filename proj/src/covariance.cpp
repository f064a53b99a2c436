#include "uqct/covariance.hpp"

#include <cmath>
#include <sstream>

namespace uqct {

void CovarianceSpec::validate() const {
    if (!(xi > 0.0)) throw std::invalid_argument("covariance: xi must be positive");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("covariance: sigma2 must be positive");
    if (kind == Kind::matern && !(nu > 0.0))
        throw std::invalid_argument("covariance: nu must be positive");
}

std::string CovarianceSpec::key() const {
    std::ostringstream os;
    if (kind == Kind::gaussian_limit)
        os << "gauss";
    else
        os << "matern" << nu;
    os << "_xi" << xi << "_s2" << sigma2
       << (distance == Distance::one_norm ? "_l1" : "_l2");
    return os.str();
}

namespace {

// Matern with nu = s + 1/2, s integer:
// sigma2 * exp(-sqrt(2s+1) r/xi) * s!/(2s)! * sum_i (s+i)!/(i!(s-i)!) (2 sqrt(2s+1) r/xi)^(s-i)
double matern_half_integer(int s, double xi, double sigma2, double r) {
    const double q = std::sqrt(2.0 * s + 1.0) * r / xi;
    double sum = 0.0;
    // (s+i)!/(i!(s-i)!) built up iteratively to avoid factorial overflow
    for (int i = 0; i <= s; ++i) {
        double coeff = 1.0;
        for (int j = 1; j <= i; ++j) coeff *= double(s + j) / double(j);  // (s+i)!/(s! i!)
        for (int j = s - i + 1; j <= s; ++j) coeff *= double(j);          // times s!/(s-i)!
        sum += coeff * std::pow(2.0 * q, s - i);
    }
    double front = 1.0;
    for (int j = s + 1; j <= 2 * s; ++j) front /= double(j);  // s!/(2s)!
    return sigma2 * std::exp(-q) * front * sum;
}

}  // namespace

double covariance(const CovarianceSpec& spec, double r) {
    spec.validate();
    if (!std::isfinite(r) || r < 0.0)
        throw std::invalid_argument("covariance: r must be finite and nonnegative");

    if (spec.kind == CovarianceSpec::Kind::gaussian_limit)
        return spec.sigma2 * std::exp(-0.5 * r * r / (spec.xi * spec.xi));

    if (r == 0.0) return spec.sigma2;

    const double s_real = spec.nu - 0.5;
    const int s = int(std::lround(s_real));
    if (s >= 0 && std::abs(s_real - s) < 1e-12)
        return matern_half_integer(s, spec.xi, spec.sigma2, r);

    const double q = std::sqrt(2.0 * spec.nu) * r / spec.xi;
    return spec.sigma2 * std::pow(2.0, 1.0 - spec.nu) / std::tgamma(spec.nu) *
           std::pow(q, spec.nu) * std::cyl_bessel_k(spec.nu, q);
}

}  // namespace uqct
