#pragma once

#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "uqct/kl.hpp"
#include "uqct/multi_index.hpp"
#include "uqct/qoi.hpp"
#include "uqct/quadrature.hpp"

namespace uqct {

// Everything a full-grid evaluation needs: the truncated lognormal
// coefficient exp(mean + sum sqrt(lambda_k) psi_k y_k), the right-hand side,
// the functional and the spatial hierarchy.
struct Problem {
    std::shared_ptr<const KLExpansion> kl;
    SpatialFn f = [](double, double) { return 1.0; };
    QoISpec qoi;
    int mesh_offset = 2;
    double solver_tol = 1e-10;
    int threads = 1;
};

struct CacheEntry {
    QoiValue value;
    long solves = 0;    // tensor node count of this evaluation
    double wall_ms = 0;
};

// Lookup-or-compute map with single-flight semantics: an index being
// computed is awaited by concurrent callers, never recomputed.
class EvalCache {
  public:
    using Ptr = std::shared_ptr<const CacheEntry>;

    Ptr lookup_or_compute(const MultiIndex& idx, const std::function<CacheEntry()>& compute);
    Ptr find(const MultiIndex& idx) const;  // nullptr if absent or pending

    long total_solves() const;
    long size() const;

  private:
    mutable std::mutex mtx_;
    std::unordered_map<MultiIndex, std::shared_future<Ptr>, MultiIndexHash> entries_;
};

// alpha_l = sum_{z in {0,1}^d} (-1)^|z| chi_I(l+z) for every l in I.
// I must be downward closed; ambient_dims = 1 + tracked parametric dims
// (coordinates beyond those spanned by I cannot contribute).
std::unordered_map<MultiIndex, int, MultiIndexHash> combination_coefficients(
    const IndexSet& I, int ambient_dims);

// P_l u: tensor Gauss-Hermite quadrature over the parametric levels of one
// F(FEM solution) per node, cached.
QoiValue full_grid_eval(const MultiIndex& idx, const Problem& problem, EvalCache& cache);

// Delta_l u: alternating {0,1}-corner sum of full-grid evaluations over the
// positive coordinates of idx, on the mesh of level idx.lx.
QoiValue increment(const MultiIndex& idx, const Problem& problem, EvalCache& cache);

// sum alpha_l P_l u on the maximum spatial level of I. Every index with a
// nonzero coefficient must already be in the cache.
QoiValue combine(const IndexSet& I,
                 const std::unordered_map<MultiIndex, int, MultiIndexHash>& coeffs,
                 const Problem& problem, const EvalCache& cache);

// JSON round trip for index sets with coefficients (run resumption and
// reporting).
std::string index_set_to_json(const IndexSet& I,
                              const std::unordered_map<MultiIndex, int, MultiIndexHash>& coeffs);
void index_set_from_json(const std::string& text, IndexSet& I,
                         std::unordered_map<MultiIndex, int, MultiIndexHash>& coeffs);

}  // namespace uqct
