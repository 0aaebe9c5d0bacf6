#include "topflow/phase_field.hpp"

#include <algorithm>
#include <cmath>

#include "topflow/error.hpp"

namespace topflow {

PhaseField::PhaseField(const Mesh& m, Eigen::VectorXd v) : mesh(&m), values(std::move(v)) {
    if (values.size() != m.vertex_count())
        throw Error("PhaseField: coefficient count does not match vertex count");
    min_value = values.minCoeff();
    max_value = values.maxCoeff();
}

PhaseField PhaseField::constant(const Mesh& m, double c) {
    return PhaseField(m, Eigen::VectorXd::Constant(m.vertex_count(), c));
}

PhaseField PhaseField::interpolate(const Mesh& m, const Expr& expr) {
    Eigen::VectorXd v(m.vertex_count());
    for (int i = 0; i < m.vertex_count(); ++i)
        v[i] = expr.eval(m.vertices[i][0], m.vertices[i][1]);
    return PhaseField(m, std::move(v));
}

void ModelParams::validate(double domain_area) const {
    if (!(eps1 > 0) || !(eps2 > 0)) throw ConfigError("model: eps1 and eps2 must be positive");
    if (!(tau > 0)) throw ConfigError("model: tau must be positive");
    if (s0 < 0 || s1 < 0) throw ConfigError("model: s0 and s1 must be nonnegative");
    if (beta < 0) throw ConfigError("model: beta must be nonnegative");
    if (vhat < 0 || vhat > domain_area)
        throw ConfigError("model: vhat must lie in [0, |Omega|]");
    if (n_phi < 1) throw ConfigError("model: n_phi must be at least 1");
    if (scheme == Scheme::cahn_hilliard && use_projection)
        throw ConfigError("use_projection: the projection is incompatible with cahn-hilliard "
                          "(it would break mass conservation)");
}

std::pair<double, double> double_well(double phi) {
    if (phi < 0.0) return {phi * phi, 2.0 * phi};
    if (phi > 1.0) return {(phi - 1.0) * (phi - 1.0), 2.0 * (phi - 1.0)};
    double a = phi * (phi - 1.0);
    return {0.25 * a * a, 0.5 * phi * (phi - 1.0) * (2.0 * phi - 1.0)};
}

Permeability permeability(const PhaseField& phi, double alpha0) {
    const int n = static_cast<int>(phi.values.size());
    Permeability p;
    p.alpha.resize(n);
    p.dalpha.resize(n);
    for (int i = 0; i < n; ++i) {
        double v = phi.values[i];
        p.alpha[i] = alpha0 * (1.0 - std::clamp(v, 0.0, 1.0));
        p.dalpha[i] = (v > 0.0 && v < 1.0) ? -alpha0 : 0.0;
    }
    return p;
}

PhaseField project_unit_interval(const PhaseField& phi) {
    Eigen::VectorXd v = phi.values;
    for (int i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], 0.0, 1.0);
    return PhaseField(*phi.mesh, std::move(v));
}

double solid_volume(const PhaseField& phi, const P1Operators& ops) {
    double s = 0.0;
    for (int i = 0; i < phi.values.size(); ++i)
        s += ops.lumped_mass[i] * std::clamp(phi.values[i], 0.0, 1.0);
    return ops.area - s;
}

std::pair<double, double> ginzburg_landau(const PhaseField& phi, const ModelParams& params,
                                          const P1Operators& ops) {
    double grad_term = 0.5 * params.eps1 * ops.h1_seminorm_sq(phi.values);

    double well = 0.0;
    if (params.well_quadrature == WellQuadrature::lumped) {
        for (int i = 0; i < phi.values.size(); ++i)
            well += ops.lumped_mass[i] * double_well(phi.values[i]).first;
    } else {
        const QuadratureRule quad = quadrature_rule(4);
        well = deterministic_element_sum(
            static_cast<int>(ops.geom.size()), Exec::parallel, [&](int t) {
                const TriGeometry& g = ops.geom[t];
                double acc = 0.0;
                for (const auto& qp : quad.points) {
                    double v = qp.lambda[0] * phi.values[g.v[0]] +
                               qp.lambda[1] * phi.values[g.v[1]] +
                               qp.lambda[2] * phi.values[g.v[2]];
                    acc += g.area * qp.weight * double_well(v).first;
                }
                return acc;
            });
    }
    return {grad_term, well / params.eps2};
}

}  // namespace topflow
