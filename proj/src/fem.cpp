#include "uqct/fem.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "json.hpp"

namespace uqct {

GridFunction zero_function(MeshLevel mesh) {
    return {mesh, Eigen::VectorXd::Zero(mesh.node_count())};
}

GridFunction interpolate(MeshLevel mesh, const SpatialFn& fn) {
    const int n = mesh.nodes_per_side();
    const double h = mesh.h();
    GridFunction u{mesh, Eigen::VectorXd(mesh.node_count())};
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
            u.values[long(iy) * n + ix] = fn(ix * h, iy * h);
    return u;
}

namespace {

// Triangles of cell (ix,iy), diagonal from (ix,iy) to (ix+1,iy+1):
//   lower: (ix,iy), (ix+1,iy), (ix+1,iy+1)
//   upper: (ix,iy), (ix+1,iy+1), (ix,iy+1)
struct Tri {
    long v[3];
    double cx, cy;  // centroid
};

template <class F>
void for_each_triangle(MeshLevel mesh, F&& fn) {
    const int n = mesh.nodes_per_side();
    const double h = mesh.h();
    for (int iy = 0; iy + 1 < n; ++iy) {
        for (int ix = 0; ix + 1 < n; ++ix) {
            const long n00 = long(iy) * n + ix;
            const long n10 = n00 + 1;
            const long n01 = n00 + n;
            const long n11 = n01 + 1;
            const double x0 = ix * h, y0 = iy * h;
            fn(Tri{{n00, n10, n11}, x0 + 2.0 * h / 3.0, y0 + h / 3.0}, true);
            fn(Tri{{n00, n11, n01}, x0 + h / 3.0, y0 + 2.0 * h / 3.0}, false);
        }
    }
}

}  // namespace

GridFunction assemble_solve(MeshLevel mesh, const SpatialFn& a_eval, const SpatialFn& f_eval,
                            double rel_residual) {
    const int n = mesh.nodes_per_side();
    const double h = mesh.h();
    const double area = 0.5 * h * h;

    // Interior node numbering.
    std::vector<long> dof(mesh.node_count(), -1);
    long ndof = 0;
    for (int iy = 1; iy + 1 < n; ++iy)
        for (int ix = 1; ix + 1 < n; ++ix) dof[long(iy) * n + ix] = ndof++;

    GridFunction u = zero_function(mesh);
    if (ndof == 0) return u;

    // Constant P1 gradients on the two congruent triangle shapes.
    // lower triangle (0,0)-(h,0)-(h,h): grads (-1/h,0), (1/h,-1/h), (0,1/h)
    // upper triangle (0,0)-(h,h)-(0,h): grads (0,-1/h), (1/h,0), (-1/h,1/h)
    const double g_lower[3][2] = {{-1, 0}, {1, -1}, {0, 1}};
    const double g_upper[3][2] = {{0, -1}, {1, 0}, {-1, 1}};

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9L * 2 * (n - 1) * (n - 1));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ndof);

    for_each_triangle(mesh, [&](const Tri& t, bool lower) {
        const double a = a_eval(t.cx, t.cy);
        if (!(a > 0.0))
            throw std::runtime_error("assemble_solve: non-positive coefficient at centroid");
        const auto& g = lower ? g_lower : g_upper;
        const double fv = f_eval(t.cx, t.cy) * area / 3.0;
        for (int i = 0; i < 3; ++i) {
            const long di = dof[t.v[i]];
            if (di < 0) continue;
            rhs[di] += fv;
            for (int j = 0; j < 3; ++j) {
                const long dj = dof[t.v[j]];
                if (dj < 0) continue;
                // gradients scale with 1/h, area with h^2/2: h cancels to 0.5
                const double k = a * 0.5 * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                trips.emplace_back(int(di), int(dj), k);
            }
        }
    });

    Eigen::SparseMatrix<double> A(ndof, ndof);
    A.setFromTriplets(trips.begin(), trips.end());

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("assemble_solve: factorization failed");
    Eigen::VectorXd x = solver.solve(rhs);

    const double bnorm = rhs.norm();
    if (bnorm > 0.0) {
        const double res = (A * x - rhs).norm() / bnorm;
        if (!(res <= rel_residual))
            throw std::runtime_error("assemble_solve: solver residual " + std::to_string(res) +
                                     " exceeds tolerance");
    }

    for (long node = 0; node < mesh.node_count(); ++node)
        if (dof[node] >= 0) u.values[node] = x[dof[node]];
    return u;
}

GridFunction prolong(const GridFunction& u, MeshLevel target) {
    if (target.offset != u.mesh.offset)
        throw std::invalid_argument("prolong: mismatched mesh offset");
    if (target.level < u.mesh.level)
        throw std::invalid_argument("prolong: target coarser than source");
    if (target.level == u.mesh.level) return u;

    // One level at a time; the diagonal midpoint follows the triangulation.
    const int nc = u.mesh.nodes_per_side();
    MeshLevel fine{u.mesh.level + 1, u.mesh.offset};
    const int nf = fine.nodes_per_side();
    GridFunction v{fine, Eigen::VectorXd(fine.node_count())};
    auto c = [&](int ix, int iy) { return u.values[long(iy) * nc + ix]; };
    for (int iy = 0; iy < nf; ++iy) {
        for (int ix = 0; ix < nf; ++ix) {
            const int cx = ix / 2, cy = iy / 2;
            double val;
            if (ix % 2 == 0 && iy % 2 == 0)
                val = c(cx, cy);
            else if (iy % 2 == 0)
                val = 0.5 * (c(cx, cy) + c(cx + 1, cy));
            else if (ix % 2 == 0)
                val = 0.5 * (c(cx, cy) + c(cx, cy + 1));
            else
                val = 0.5 * (c(cx, cy) + c(cx + 1, cy + 1));
            v.values[long(iy) * nf + ix] = val;
        }
    }
    return prolong(v, target);
}

namespace {

// v^T M w accumulated triangle-wise; M_T = area/12 * (ones + I) pattern.
double mass_bilinear(const GridFunction& v, const GridFunction& w) {
    const double area = 0.5 * v.mesh.h() * v.mesh.h();
    double sum = 0.0;
    for_each_triangle(v.mesh, [&](const Tri& t, bool) {
        double sv = 0.0, sw = 0.0, diag = 0.0;
        for (int i = 0; i < 3; ++i) {
            sv += v.values[t.v[i]];
            sw += w.values[t.v[i]];
            diag += v.values[t.v[i]] * w.values[t.v[i]];
        }
        sum += area / 12.0 * (sv * sw + diag);
    });
    return sum;
}

}  // namespace

double l2_norm(const GridFunction& u) {
    return std::sqrt(std::max(0.0, mass_bilinear(u, u)));
}

double mass_inner(const GridFunction& g, const GridFunction& u) {
    if (!(g.mesh == u.mesh)) throw std::invalid_argument("mass_inner: mesh mismatch");
    return mass_bilinear(g, u);
}

GridFunction combine_axpy(const std::vector<std::pair<double, const GridFunction*>>& terms) {
    if (terms.empty()) throw std::invalid_argument("combine_axpy: empty list");
    MeshLevel target = terms.front().second->mesh;
    for (const auto& [c, g] : terms)
        if (g->mesh.level > target.level) target = g->mesh;
    GridFunction out = zero_function(target);
    for (const auto& [c, g] : terms) {
        if (g->mesh.level == target.level)
            out.values += c * g->values;
        else
            out.values += c * prolong(*g, target).values;
    }
    return out;
}

void write_csv(const GridFunction& u, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_csv: cannot open " + path);
    os << "x,y,value\n";
    const int n = u.mesh.nodes_per_side();
    const double h = u.mesh.h();
    char buf[96];
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", ix * h, iy * h,
                          u.values[long(iy) * n + ix]);
            os << buf;
        }
}

void write_binary(const GridFunction& u, const std::string& path) {
    nlohmann::json header = {
        {"level", u.mesh.level}, {"offset", u.mesh.offset}, {"count", u.values.size()}};
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_binary: cannot open " + path);
    const std::string h = header.dump();
    os << h << '\n';
    os.write(reinterpret_cast<const char*>(u.values.data()),
             std::streamsize(sizeof(double)) * u.values.size());
}

GridFunction read_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_binary: cannot open " + path);
    std::string line;
    std::getline(is, line);
    const auto header = nlohmann::json::parse(line);
    GridFunction u{{header.at("level"), header.at("offset")}, {}};
    const long count = header.at("count");
    if (count != u.mesh.node_count()) throw std::runtime_error("read_binary: count mismatch");
    u.values.resize(count);
    is.read(reinterpret_cast<char*>(u.values.data()), std::streamsize(sizeof(double)) * count);
    if (!is) throw std::runtime_error("read_binary: truncated " + path);
    return u;
}

}  // namespace uqct
