#pragma once

#include <variant>

#include "uqct/fem.hpp"

namespace uqct {

// Quantity-of-interest functional applied nodally to FEM solutions before
// quadrature.
struct QoISpec {
    enum class Kind { first_moment, second_moment, linear_functional };
    Kind kind = Kind::first_moment;
    SpatialFn weight;  // g for linear_functional, ignored otherwise

    bool scalar_valued() const { return kind == Kind::linear_functional; }
};

// F(u): a GridFunction for the moment kinds, a scalar for linear functionals.
struct QoiValue {
    std::variant<GridFunction, double> v;

    bool is_scalar() const { return std::holds_alternative<double>(v); }
    double scalar() const { return std::get<double>(v); }
    const GridFunction& field() const { return std::get<GridFunction>(v); }
};

QoiValue apply_qoi(const QoISpec& F, const GridFunction& u);

// Arithmetic used by the combination machinery; fields are prolonged to the
// finest level present.
QoiValue qoi_zero_like(const QoiValue& v);
void qoi_axpy(QoiValue& acc, double coeff, const QoiValue& term);
QoiValue qoi_prolonged(const QoiValue& v, int level);
double qoi_norm(const QoiValue& v);  // L2(D) for fields, |.| for scalars

}  // namespace uqct
