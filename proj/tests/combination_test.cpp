#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "test_helpers.hpp"
#include "uqct/combination.hpp"

using namespace uqct;
using uqct::testing::random_downward_closed;
using uqct::testing::toy_problem;

namespace {

MultiIndex mi(int lx, std::vector<int> ly = {}) { return MultiIndex(lx, std::move(ly)); }

double diff_norm(const QoiValue& a, const QoiValue& b) {
    QoiValue d = a;
    qoi_axpy(d, -1.0, b);
    return qoi_norm(d);
}

}  // namespace

TEST_CASE("multi-index trailing zeros do not distinguish indices") {
    CHECK(mi(1, {2, 0, 0}) == mi(1, {2}));
    CHECK(MultiIndexHash()(mi(1, {2, 0, 0})) == MultiIndexHash()(mi(1, {2})));
    CHECK(mi(0, {0, 0}) == MultiIndex{});
    CHECK(mi(0, {0, 1}).effective_truncation() == 2);
    CHECK(mi(0, {0, 1, 0}).effective_truncation() == 2);
    CHECK(mi(3).effective_truncation() == 0);
}

TEST_CASE("downward closedness") {
    CHECK(is_downward_closed({MultiIndex{}}));
    CHECK(is_downward_closed({MultiIndex{}, mi(1)}));
    CHECK(is_downward_closed({MultiIndex{}, mi(1), mi(0, {1})}));
    CHECK_FALSE(is_downward_closed({mi(1)}));
    CHECK_FALSE(is_downward_closed({MultiIndex{}, mi(0, {1}), mi(1, {1})}));
    // a unit index in any dimension only needs the root below it
    CHECK(is_downward_closed({MultiIndex{}, mi(0, {0, 1})}));
    CHECK(is_downward_closed({MultiIndex{}, mi(0, {1}), mi(0, {0, 1})}));
    CHECK_FALSE(is_downward_closed({MultiIndex{}, mi(0, {0, 2})}));
}

TEST_CASE("combination coefficients on small sets") {
    SUBCASE("singleton root") {
        auto coeffs = combination_coefficients({MultiIndex{}}, 3);
        REQUIRE(coeffs.size() == 1);
        CHECK(coeffs.at(MultiIndex{}) == 1);
    }
    SUBCASE("L-shaped set in two coordinates") {
        IndexSet I{MultiIndex{}, mi(1), mi(0, {1})};
        auto coeffs = combination_coefficients(I, 2);
        CHECK(coeffs.at(MultiIndex{}) == -1);
        CHECK(coeffs.at(mi(1)) == 1);
        CHECK(coeffs.at(mi(0, {1})) == 1);
    }
    SUBCASE("full box telescopes to its corner") {
        IndexSet I;
        for (int a = 0; a <= 2; ++a)
            for (int b = 0; b <= 1; ++b) I.insert(mi(a, {b}));
        auto coeffs = combination_coefficients(I, 2);
        for (const auto& [idx, c] : coeffs) {
            if (idx == mi(2, {1}))
                CHECK(c == 1);
            else
                CHECK(c == 0);
        }
    }
}

TEST_CASE("coefficients of random downward closed sets sum to one") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        IndexSet I = random_downward_closed(rng, 4, 12);
        REQUIRE(is_downward_closed(I));
        auto coeffs = combination_coefficients(I, 4);
        long sum = 0;
        for (const auto& [idx, c] : coeffs) sum += c;
        CHECK(sum == 1);
    }
}

TEST_CASE("anchor evaluation is the single deterministic solve") {
    Problem p = toy_problem();
    p.kl = uqct::testing::analytic_kl(0.5, 0.2, /*mean=*/0.3);
    EvalCache cache;
    QoiValue v = full_grid_eval(MultiIndex{}, p, cache);

    GridFunction direct = assemble_solve(MeshLevel{0, p.mesh_offset},
                                         [](double, double) { return std::exp(0.3); }, p.f);
    CHECK(diff_norm(v, apply_qoi(p.qoi, direct)) < 1e-14);
    CHECK(cache.total_solves() == 1);
}

TEST_CASE("one parametric level averages the two Gauss-Hermite nodes") {
    // psi_1 is constant one, so the coefficient field is spatially constant
    // exp(sqrt(lambda_1) y) and each node solve can be formed directly.
    Problem p = toy_problem(0.5, 0.0);
    EvalCache cache;
    QoiValue v = full_grid_eval(mi(0, {1}), p, cache);

    const double s = std::sqrt(0.5);
    MeshLevel mesh{0, p.mesh_offset};
    GridFunction lo = assemble_solve(mesh, [&](double, double) { return std::exp(-s); }, p.f);
    GridFunction hi = assemble_solve(mesh, [&](double, double) { return std::exp(s); }, p.f);
    GridFunction avg = combine_axpy({{0.5, &lo}, {0.5, &hi}});
    CHECK(diff_norm(v, QoiValue{avg}) < 1e-13);
    CHECK(cache.total_solves() == 2);
}

TEST_CASE("cache never recomputes an index") {
    Problem p = toy_problem();
    EvalCache cache;
    full_grid_eval(mi(1, {1}), p, cache);
    const long solves = cache.total_solves();
    const long size = cache.size();
    full_grid_eval(mi(1, {1}), p, cache);
    full_grid_eval(mi(1, {1, 0}), p, cache);  // same index, padded spelling
    CHECK(cache.total_solves() == solves);
    CHECK(cache.size() == size);
}

TEST_CASE("increments") {
    Problem p = toy_problem();
    EvalCache cache;

    SUBCASE("at the root the increment is the evaluation itself") {
        QoiValue d = increment(MultiIndex{}, p, cache);
        CHECK(diff_norm(d, full_grid_eval(MultiIndex{}, p, cache)) == 0.0);
    }
    SUBCASE("first spatial detail") {
        QoiValue d = increment(mi(1), p, cache);
        GridFunction expect = full_grid_eval(mi(1), p, cache).field();
        GridFunction coarse = full_grid_eval(MultiIndex{}, p, cache).field();
        GridFunction up = prolong(coarse, expect.mesh);
        expect.values -= up.values;
        CHECK(diff_norm(d, QoiValue{expect}) < 1e-15);
    }
    SUBCASE("directions the field does not depend on are annihilated") {
        Problem flat = toy_problem(0.5, 0.0);  // independent of y_2
        CHECK(qoi_norm(increment(mi(0, {0, 1}), flat, cache)) < 1e-13);
        CHECK(qoi_norm(increment(mi(1, {1, 2}), flat, cache)) < 1e-13);
    }
}

TEST_CASE("combining equals summing increments") {
    Problem p = toy_problem();
    std::mt19937 rng(42);
    for (int trial = 0; trial < 3; ++trial) {
        IndexSet I = random_downward_closed(rng, 3, 8, 2);
        EvalCache cache;

        QoiValue sum = increment(MultiIndex{}, p, cache);
        for (const MultiIndex& idx : I)
            if (!(idx == MultiIndex{})) qoi_axpy(sum, 1.0, increment(idx, p, cache));

        auto coeffs = combination_coefficients(I, 3);
        QoiValue combined = combine(I, coeffs, p, cache);
        CHECK(diff_norm(combined, sum) < 1e-12 * (1 + qoi_norm(combined)));
    }
}

TEST_CASE("scalar functional path") {
    Problem p = toy_problem();
    p.qoi.kind = QoISpec::Kind::linear_functional;
    p.qoi.weight = [](double, double) { return 1.0; };
    EvalCache cache;

    IndexSet I{MultiIndex{}, mi(1), mi(0, {1})};
    for (const MultiIndex& idx : I) full_grid_eval(idx, p, cache);
    auto coeffs = combination_coefficients(I, 2);
    QoiValue v = combine(I, coeffs, p, cache);
    REQUIRE(v.is_scalar());

    const double expect = full_grid_eval(mi(1), p, cache).scalar() +
                          full_grid_eval(mi(0, {1}), p, cache).scalar() -
                          full_grid_eval(MultiIndex{}, p, cache).scalar();
    CHECK(v.scalar() == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("combine refuses indices missing from the cache") {
    Problem p = toy_problem();
    EvalCache cache;
    IndexSet I{MultiIndex{}, mi(1)};
    auto coeffs = combination_coefficients(I, 1);
    CHECK_THROWS(combine(I, coeffs, p, cache));
}

TEST_CASE("index set JSON round trip") {
    std::mt19937 rng(3);
    IndexSet I = random_downward_closed(rng, 4, 10);
    auto coeffs = combination_coefficients(I, 4);
    const std::string text = index_set_to_json(I, coeffs);

    IndexSet I2;
    std::unordered_map<MultiIndex, int, MultiIndexHash> coeffs2;
    index_set_from_json(text, I2, coeffs2);
    CHECK(I2 == I);
    for (const auto& [idx, c] : coeffs) CHECK(coeffs2.at(idx) == c);
}
