#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace uqct {

// Univariate Gauss-Hermite rule in probabilists' normalization: the standard
// normal density is folded into the weights, so sum(weights) == 1 and
// integrands never see the density.
struct QuadRule1D {
    int level = 0;  // size == 2^level
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
    int size() const { return int(nodes.size()); }
};

// Nodes/weights of the n-point rule via the Golub-Welsch tridiagonal
// eigenproblem. Nodes symmetrized about 0.
QuadRule1D gauss_hermite(int size);

// Level l maps to the 2^l point rule; level 0 is the single node at y = 0
// with weight 1, the anchoring rule for inactive dimensions. Rules are cached.
const QuadRule1D& rule_for_level(int level);

// Enumerates the tensor product of the per-dimension rules given by `levels`
// in a fixed (mixed-radix, first dimension fastest) order. `y` has the same
// length as `levels`; dimensions beyond it are implicitly level 0 / node 0.
void tensor_nodes(const std::vector<int>& levels,
                  const std::function<void(const std::vector<double>& y, double w)>& fn);

// Total point count of the tensor rule.
long tensor_size(const std::vector<int>& levels);

}  // namespace uqct
