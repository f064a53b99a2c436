#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace uqct {

// Uniform triangulation of D = [0,1]^2: a tensor grid of
// (2^(level+offset)+1)^2 nodes, every cell split into two triangles along
// the lower-left to upper-right diagonal.
struct MeshLevel {
    int level = 0;
    int offset = 2;

    int nodes_per_side() const { return (1 << (level + offset)) + 1; }
    long node_count() const { return long(nodes_per_side()) * nodes_per_side(); }
    double h() const { return 1.0 / (nodes_per_side() - 1); }

    bool operator==(const MeshLevel& o) const = default;
};

using SpatialFn = std::function<double(double, double)>;

// Nodal values of a P1 function, row-major: node (ix, iy) at
// (ix*h, iy*h) has index iy*n + ix.
struct GridFunction {
    MeshLevel mesh;
    Eigen::VectorXd values;

    double at(int ix, int iy) const { return values[long(iy) * mesh.nodes_per_side() + ix]; }
};

GridFunction zero_function(MeshLevel mesh);

// P1 nodal interpolant of a given function (boundary included).
GridFunction interpolate(MeshLevel mesh, const SpatialFn& fn);

// Galerkin solution of -div(a grad u) = f with homogeneous Dirichlet data.
// The coefficient is evaluated once per triangle at its centroid, f by the
// one-point centroid rule. Errors out on a non-positive coefficient or if
// the linear solve misses the requested relative residual.
GridFunction assemble_solve(MeshLevel mesh, const SpatialFn& a_eval, const SpatialFn& f_eval,
                            double rel_residual = 1e-10);

// Exact P1 interpolation onto a finer level of the same hierarchy.
GridFunction prolong(const GridFunction& u, MeshLevel target);

// sqrt(v^T M v) with the consistent P1 mass matrix.
double l2_norm(const GridFunction& u);

// integral_D g*u with both as P1 functions on the same mesh.
double mass_inner(const GridFunction& g, const GridFunction& u);

// sum(coeff_i * u_i) on the finest level present (all operands prolonged).
GridFunction combine_axpy(const std::vector<std::pair<double, const GridFunction*>>& terms);

// CLI export helpers: (x,y,value) CSV and row-major binary with JSON header.
void write_csv(const GridFunction& u, const std::string& path);
void write_binary(const GridFunction& u, const std::string& path);
GridFunction read_binary(const std::string& path);

}  // namespace uqct
