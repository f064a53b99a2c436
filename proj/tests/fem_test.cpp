#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "uqct/fem.hpp"

using namespace uqct;

namespace {

constexpr double pi = std::numbers::pi;

double exact_sin(double x, double y) { return std::sin(pi * x) * std::sin(pi * y); }
double rhs_sin(double x, double y) { return 2.0 * pi * pi * exact_sin(x, y); }

// L2 error against a smooth function via the 3-edge-midpoint rule (exact for
// quadratics), independent of the mass-matrix path under test.
double l2_error_vs(const GridFunction& u, const SpatialFn& exact) {
    const int n = u.mesh.nodes_per_side();
    const double h = u.mesh.h();
    const double area = 0.5 * h * h;
    double sum = 0.0;
    auto node = [&](int ix, int iy) { return u.values[long(iy) * n + ix]; };
    for (int iy = 0; iy + 1 < n; ++iy)
        for (int ix = 0; ix + 1 < n; ++ix) {
            const double x0 = ix * h, y0 = iy * h;
            const double corners[2][3][2] = {
                {{x0, y0}, {x0 + h, y0}, {x0 + h, y0 + h}},
                {{x0, y0}, {x0 + h, y0 + h}, {x0, y0 + h}}};
            const double vals[2][3] = {
                {node(ix, iy), node(ix + 1, iy), node(ix + 1, iy + 1)},
                {node(ix, iy), node(ix + 1, iy + 1), node(ix, iy + 1)}};
            for (int t = 0; t < 2; ++t)
                for (int e = 0; e < 3; ++e) {
                    const int a = e, b = (e + 1) % 3;
                    const double mx = 0.5 * (corners[t][a][0] + corners[t][b][0]);
                    const double my = 0.5 * (corners[t][a][1] + corners[t][b][1]);
                    const double uv = 0.5 * (vals[t][a] + vals[t][b]);
                    const double d = uv - exact(mx, my);
                    sum += area / 3.0 * d * d;
                }
        }
    return std::sqrt(sum);
}

double fit_rate(const std::vector<double>& hs, const std::vector<double>& errs) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = int(hs.size());
    for (int i = 0; i < n; ++i) {
        const double x = std::log(hs[i]), y = std::log(errs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("mesh hierarchy sizes") {
    CHECK(MeshLevel{6, 2}.nodes_per_side() == 257);
    CHECK(MeshLevel{0, 2}.nodes_per_side() == 5);
    CHECK(MeshLevel{0, 2}.h() == doctest::Approx(0.25));
}

TEST_CASE("zero right-hand side gives the zero solution") {
    auto u = assemble_solve({2, 2}, [](double, double) { return 1.0; },
                            [](double, double) { return 0.0; });
    CHECK(u.values.norm() == 0.0);
}

TEST_CASE("manufactured solution converges at rate 2 in L2") {
    std::vector<double> hs, errs;
    for (int level = 1; level <= 5; ++level) {
        auto u = assemble_solve({level, 2}, [](double, double) { return 1.0; }, rhs_sin);
        hs.push_back(u.mesh.h());
        errs.push_back(l2_error_vs(u, exact_sin));
    }
    const double rate = fit_rate(hs, errs);
    CHECK(rate == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("manufactured solution converges at rate 1 in H1 seminorm") {
    std::vector<double> hs, errs;
    for (int level = 1; level <= 5; ++level) {
        auto u = assemble_solve({level, 2}, [](double, double) { return 1.0; }, rhs_sin);
        // H1 seminorm error by centroid rule on constant-gradient triangles
        const int n = u.mesh.nodes_per_side();
        const double h = u.mesh.h();
        const double area = 0.5 * h * h;
        double sum = 0.0;
        auto node = [&](int ix, int iy) { return u.values[long(iy) * n + ix]; };
        for (int iy = 0; iy + 1 < n; ++iy)
            for (int ix = 0; ix + 1 < n; ++ix) {
                const double x0 = ix * h, y0 = iy * h;
                // lower triangle
                {
                    const double gx = (node(ix + 1, iy) - node(ix, iy)) / h;
                    const double gy = (node(ix + 1, iy + 1) - node(ix + 1, iy)) / h;
                    const double cx = x0 + 2 * h / 3, cy = y0 + h / 3;
                    const double ex = gx - pi * std::cos(pi * cx) * std::sin(pi * cy);
                    const double ey = gy - pi * std::sin(pi * cx) * std::cos(pi * cy);
                    sum += area * (ex * ex + ey * ey);
                }
                // upper triangle
                {
                    const double gx = (node(ix + 1, iy + 1) - node(ix, iy + 1)) / h;
                    const double gy = (node(ix, iy + 1) - node(ix, iy)) / h;
                    const double cx = x0 + h / 3, cy = y0 + 2 * h / 3;
                    const double ex = gx - pi * std::cos(pi * cx) * std::sin(pi * cy);
                    const double ey = gy - pi * std::sin(pi * cx) * std::cos(pi * cy);
                    sum += area * (ex * ex + ey * ey);
                }
            }
        hs.push_back(h);
        errs.push_back(std::sqrt(sum));
    }
    CHECK(fit_rate(hs, errs) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("solution symmetric under (x,y) swap for symmetric data") {
    auto u = assemble_solve({3, 2}, [](double, double) { return 1.0; },
                            [](double, double) { return 1.0; });
    const int n = u.mesh.nodes_per_side();
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
            CHECK(u.at(ix, iy) == doctest::Approx(u.at(iy, ix)).epsilon(1e-10));
}

TEST_CASE("discrete maximum principle sanity: nonnegative solution for f >= 0") {
    auto u = assemble_solve({3, 2}, [](double x, double y) { return 1.0 + x + y; },
                            [](double, double) { return 1.0; });
    CHECK(u.values.minCoeff() >= -1e-12);
}

TEST_CASE("non-positive coefficient is rejected") {
    CHECK_THROWS(assemble_solve({2, 2}, [](double x, double) { return x - 0.5; },
                                [](double, double) { return 1.0; }));
}

TEST_CASE("prolongation is exact P1 interpolation") {
    MeshLevel coarse{1, 2};
    auto u = interpolate(coarse, [](double x, double y) { return 1.5 * x - 0.5 * y + 0.25; });

    SUBCASE("same level is identity") {
        auto v = prolong(u, coarse);
        CHECK((v.values - u.values).norm() == 0.0);
    }
    SUBCASE("linear functions are reproduced exactly") {
        auto v = prolong(u, {3, 2});
        auto w = interpolate({3, 2}, [](double x, double y) { return 1.5 * x - 0.5 * y + 0.25; });
        CHECK((v.values - w.values).lpNorm<Eigen::Infinity>() < 1e-14);
    }
    SUBCASE("norm preserved to 1e-12") {
        auto f = interpolate(coarse, [](double x, double y) { return x * x + std::sin(y); });
        CHECK(l2_norm(prolong(f, {4, 2})) == doctest::Approx(l2_norm(f)).epsilon(1e-12));
    }
    SUBCASE("coarser target rejected") {
        auto fine = interpolate({2, 2}, [](double, double) { return 1.0; });
        CHECK_THROWS(prolong(fine, {1, 2}));
    }
}

TEST_CASE("hat function prolongs with half values on edge neighbors") {
    MeshLevel coarse{1, 2};  // 9x9
    const int n = coarse.nodes_per_side();
    GridFunction hat = zero_function(coarse);
    const int c = n / 2;
    hat.values[long(c) * n + c] = 1.0;
    auto fine = prolong(hat, {2, 2});
    const int nf = fine.mesh.nodes_per_side();
    const int fc = 2 * c;
    CHECK(fine.values[long(fc) * nf + fc] == 1.0);
    CHECK(fine.values[long(fc) * nf + fc + 1] == 0.5);
    CHECK(fine.values[long(fc + 1) * nf + fc] == 0.5);
    CHECK(fine.values[long(fc - 1) * nf + fc] == 0.5);
}

TEST_CASE("l2 norm basics") {
    MeshLevel mesh{2, 2};
    GridFunction ones{mesh, Eigen::VectorXd::Ones(mesh.node_count())};
    CHECK(l2_norm(ones) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(l2_norm(zero_function(mesh)) == 0.0);

    auto s = interpolate({4, 2}, exact_sin);
    CHECK(l2_norm(s) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("combine_axpy linearity") {
    auto u = interpolate({2, 2}, [](double x, double y) { return x * y + 1.0; });
    CHECK_THROWS(combine_axpy({}));
    auto same = combine_axpy({{1.0, &u}});
    CHECK((same.values - u.values).norm() == 0.0);
    auto zero = combine_axpy({{2.0, &u}, {-1.0, &u}, {-1.0, &u}});
    CHECK(zero.values.lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("binary round trip") {
    auto u = interpolate({2, 1}, [](double x, double y) { return std::cos(3 * x) + y; });
    const std::string path = "/tmp/uqct_fem_test.bin";
    write_binary(u, path);
    auto v = read_binary(path);
    CHECK(v.mesh == u.mesh);
    CHECK((v.values - u.values).norm() == 0.0);
}
