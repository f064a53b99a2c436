#include "uqct/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace uqct {

QuadRule1D gauss_hermite(int size) {
    if (size < 1) throw std::invalid_argument("gauss_hermite: size must be >= 1");

    QuadRule1D rule;
    rule.level = 0;
    if (size == 1) {
        rule.nodes = Eigen::VectorXd::Zero(1);
        rule.weights = Eigen::VectorXd::Ones(1);
        return rule;
    }

    // Jacobi matrix of the probabilists' Hermite polynomials: zero diagonal,
    // off-diagonal b_k = sqrt(k).
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(size, size);
    for (int k = 1; k < size; ++k) {
        const double b = std::sqrt(double(k));
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("gauss_hermite: eigensolve failed");

    rule.nodes = es.eigenvalues();
    rule.weights.resize(size);
    for (int i = 0; i < size; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = v0 * v0;  // mu_0 = integral of the density = 1
    }

    // Enforce exact symmetry: average mirrored pairs.
    for (int i = 0, j = size - 1; i < j; ++i, --j) {
        const double n = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        rule.nodes[i] = -n;
        rule.nodes[j] = n;
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.weights[i] = rule.weights[j] = w;
    }
    if (size % 2 == 1) rule.nodes[size / 2] = 0.0;
    return rule;
}

const QuadRule1D& rule_for_level(int level) {
    if (level < 0) throw std::invalid_argument("rule_for_level: negative level");
    static std::map<int, QuadRule1D> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(level);
    if (it == cache.end()) {
        QuadRule1D rule = gauss_hermite(1 << level);
        rule.level = level;
        it = cache.emplace(level, std::move(rule)).first;
    }
    return it->second;
}

long tensor_size(const std::vector<int>& levels) {
    long n = 1;
    for (int l : levels) n *= (1L << l);
    return n;
}

void tensor_nodes(const std::vector<int>& levels,
                  const std::function<void(const std::vector<double>&, double)>& fn) {
    const int dim = int(levels.size());
    std::vector<const QuadRule1D*> rules(dim);
    for (int k = 0; k < dim; ++k) rules[k] = &rule_for_level(levels[k]);

    std::vector<int> idx(dim, 0);
    std::vector<double> y(dim, 0.0);
    while (true) {
        double w = 1.0;
        for (int k = 0; k < dim; ++k) {
            y[k] = rules[k]->nodes[idx[k]];
            w *= rules[k]->weights[idx[k]];
        }
        fn(y, w);

        int k = 0;
        while (k < dim && ++idx[k] == rules[k]->size()) idx[k++] = 0;
        if (k == dim) break;
    }
}

}  // namespace uqct
