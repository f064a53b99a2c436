#include "uqct/qoi.hpp"

#include <stdexcept>

namespace uqct {

QoiValue apply_qoi(const QoISpec& F, const GridFunction& u) {
    switch (F.kind) {
        case QoISpec::Kind::first_moment:
            return {u};
        case QoISpec::Kind::second_moment: {
            GridFunction sq = u;
            sq.values = u.values.cwiseProduct(u.values);
            return {std::move(sq)};
        }
        case QoISpec::Kind::linear_functional: {
            if (!F.weight) throw std::invalid_argument("apply_qoi: missing weight field");
            return {mass_inner(interpolate(u.mesh, F.weight), u)};
        }
    }
    throw std::logic_error("apply_qoi: bad kind");
}

QoiValue qoi_zero_like(const QoiValue& v) {
    if (v.is_scalar()) return {0.0};
    return {zero_function(v.field().mesh)};
}

void qoi_axpy(QoiValue& acc, double coeff, const QoiValue& term) {
    if (acc.is_scalar() != term.is_scalar())
        throw std::invalid_argument("qoi_axpy: mixed scalar/field values");
    if (acc.is_scalar()) {
        acc.v = acc.scalar() + coeff * term.scalar();
        return;
    }
    GridFunction& a = std::get<GridFunction>(acc.v);
    if (term.field().mesh.level > a.mesh.level)
        a = prolong(a, term.field().mesh);
    if (term.field().mesh.level == a.mesh.level)
        a.values += coeff * term.field().values;
    else
        a.values += coeff * prolong(term.field(), a.mesh).values;
}

QoiValue qoi_prolonged(const QoiValue& v, int level) {
    if (v.is_scalar()) return v;
    return {prolong(v.field(), {level, v.field().mesh.offset})};
}

double qoi_norm(const QoiValue& v) {
    return v.is_scalar() ? std::abs(v.scalar()) : l2_norm(v.field());
}

}  // namespace uqct
