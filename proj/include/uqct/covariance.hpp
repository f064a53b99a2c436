#pragma once

#include <stdexcept>
#include <string>

namespace uqct {

// Stationary covariance kernel of the Matern family. The Gaussian kernel is
// the nu -> infinity limit and gets its own kind so runs can request it
// without a magic sentinel value for nu.
struct CovarianceSpec {
    enum class Kind { matern, gaussian_limit };
    enum class Distance { euclidean, one_norm };

    Kind kind = Kind::matern;
    double nu = 2.5;        // smoothness, ignored for gaussian_limit
    double xi = 0.2;        // correlation length
    double sigma2 = 1.0;    // variance, cov(0) = sigma2
    Distance distance = Distance::euclidean;

    void validate() const;
    std::string key() const;  // stable identifier used for cache files
};

// cov(r) for r >= 0. Half-integer nu uses the exact
// polynomial-times-exponential form, other nu the Bessel-K formula.
double covariance(const CovarianceSpec& spec, double r);

}  // namespace uqct
