#include "topflow/gradient_flow.hpp"

#include <cmath>

#include "topflow/error.hpp"

namespace topflow {

SensitivityField sensitivity_density(const PhaseField& phi, const FlowState& state,
                                     const FlowState& adjoint, const ModelParams& params,
                                     double ell, const FlowSystem& flow, const P1Operators& ops) {
    const int n = static_cast<int>(phi.values.size());
    SensitivityField s;
    s.well_force.resize(n);
    s.flow_force.resize(n);

    const Permeability perm = permeability(phi, params.alpha0);
    for (int i = 0; i < n; ++i) {
        s.well_force[i] = double_well(phi.values[i]).second / params.eps2;
        auto u = flow.vertex_velocity(state, i);
        auto v = flow.vertex_velocity(adjoint, i);
        double u_sq = u[0] * u[0] + u[1] * u[1];
        double uv = u[0] * v[0] + u[1] * v[1];
        s.flow_force[i] = perm.dalpha[i] * (0.5 * u_sq - uv);
    }

    s.eta2 = 1.0;
    if (params.normalize_sensitivity) {
        double norm = ops.l2_norm(s.flow_force);
        if (norm < 1e-14)
            s.normalization_skipped = true;
        else
            s.eta2 = norm;
    }
    s.flow_force *= params.eta1 / s.eta2;

    // V'(phi) = -1 everywhere, also where the clamp is active; the multiplier
    // enters through the same V' factor as the penalty force.
    double vdiff = solid_volume(phi, ops) - params.vhat;
    s.volume_force = Eigen::VectorXd::Constant(n, -params.beta * vdiff);
    s.multiplier_force = Eigen::VectorXd::Constant(n, -ell);

    s.total = s.well_force + s.flow_force + s.volume_force + s.multiplier_force;
    return s;
}

Eigen::VectorXd reduced_energy_gradient(const PhaseField& phi, const FlowState& state,
                                        const FlowState& adjoint, const ModelParams& params,
                                        double ell, const FlowSystem& flow,
                                        const P1Operators& ops) {
    const Mesh& mesh = *phi.mesh;
    const int nv = mesh.vertex_count();
    const Permeability perm = permeability(phi, params.alpha0);
    const FunctionSpace& vs = flow.velocity_space();
    const QuadratureRule quad = quadrature_rule(4);

    // int psi_j (0.5|u|^2 - u.v), accumulated in element order
    const int nt = mesh.triangle_count();
    std::vector<std::array<double, 3>> partial(nt);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < nt; ++t) {
        const TriGeometry& geo = ops.geom[t];
        double uc[2][4], vc[2][4];
        for (int c = 0; c < 2; ++c) {
            for (int k = 0; k < 3; ++k) {
                uc[c][k] = state.velocity[vs.vertex_dof(c, geo.v[k])];
                vc[c][k] = adjoint.velocity[vs.vertex_dof(c, geo.v[k])];
            }
            uc[c][3] = state.velocity[vs.bubble_dof(c, t)];
            vc[c][3] = adjoint.velocity[vs.bubble_dof(c, t)];
        }
        partial[t] = {0.0, 0.0, 0.0};
        for (const auto& qp : quad.points) {
            double n[4] = {qp.lambda[0], qp.lambda[1], qp.lambda[2],
                           27.0 * qp.lambda[0] * qp.lambda[1] * qp.lambda[2]};
            double u[2] = {0, 0}, v[2] = {0, 0};
            for (int c = 0; c < 2; ++c)
                for (int a = 0; a < 4; ++a) {
                    u[c] += uc[c][a] * n[a];
                    v[c] += vc[c][a] * n[a];
                }
            double dens = 0.5 * (u[0] * u[0] + u[1] * u[1]) - (u[0] * v[0] + u[1] * v[1]);
            for (int k = 0; k < 3; ++k)
                partial[t][k] += geo.area * qp.weight * qp.lambda[k] * dens;
        }
    }
    Eigen::VectorXd flow_weight = Eigen::VectorXd::Zero(nv);
    for (int t = 0; t < nt; ++t)
        for (int k = 0; k < 3; ++k) flow_weight[ops.geom[t].v[k]] += partial[t][k];

    Eigen::VectorXd g = params.eps1 * ops.stiffness.multiply(phi.values);
    double vforce = -params.beta * (solid_volume(phi, ops) - params.vhat) - ell;
    for (int j = 0; j < nv; ++j)
        g[j] += ops.lumped_mass[j] *
                    (double_well(phi.values[j]).second / params.eps2 + vforce) +
                perm.dalpha[j] * flow_weight[j];
    return g;
}

AllenCahnStepper::AllenCahnStepper(const P1Operators& ops, const ModelParams& params)
    : ops_(&ops), params_(params) {
    CsrMatrix system = ops.mass;  // same pattern as the stiffness on one mesh
    const double cm = 1.0 / params_.tau + params_.s0;
    const double ck = params_.eps1 + params_.s1;
    for (size_t k = 0; k < system.val.size(); ++k)
        system.val[k] = cm * ops.mass.val[k] + ck * ops.stiffness.val[k];
    fact_.factorize(system);
}

PhaseField AllenCahnStepper::step(const PhaseField& phi, const SensitivityField& forcing,
                                  StepReport& report) const {
    const double cm = 1.0 / params_.tau + params_.s0;
    Eigen::VectorXd rhs = ops_->mass.multiply(cm * phi.values - forcing.total);
    if (params_.s1 != 0.0) rhs += params_.s1 * ops_->stiffness.multiply(phi.values);

    Eigen::VectorXd next = fact_.solve(rhs);

    // nu = -(phi^{n+1} - phi^n)/tau since G = -I; bound tau*(nu, G nu) = -tau*|nu|^2,
    // clamped against roundoff since |nu|^2 >= 0
    Eigen::VectorXd nu = (phi.values - next) / params_.tau;
    report.dissipation_bound = std::min(0.0, -params_.tau * nu.dot(ops_->mass.multiply(nu)));
    report.phi_min_pre = next.minCoeff();
    report.phi_max_pre = next.maxCoeff();
    report.linear_iterations = 0;
    return PhaseField(*phi.mesh, std::move(next));
}

CahnHilliardStepper::CahnHilliardStepper(const P1Operators& ops, const ModelParams& params)
    : ops_(&ops), params_(params) {
    // coupled system for x = [phi; nu]:
    //   [ M/tau                K  ] [phi]   [ M phi^n / tau                       ]
    //   [ -((eps1+s1)K + s0 M) M  ] [nu ] = [ M U - s1 K phi^n - s0 M phi^n       ]
    const int n = ops.mass.rows;
    const double ck = params_.eps1 + params_.s1;
    std::vector<Triplet> trips;
    trips.reserve(2 * (ops.mass.val.size() + ops.stiffness.val.size()));
    for (int r = 0; r < n; ++r) {
        for (int k = ops.mass.row_ptr[r]; k < ops.mass.row_ptr[r + 1]; ++k) {
            int c = ops.mass.col[k];
            trips.push_back({r, c, ops.mass.val[k] / params_.tau});
            trips.push_back({n + r, n + c, ops.mass.val[k]});
            if (params_.s0 != 0.0) trips.push_back({n + r, c, -params_.s0 * ops.mass.val[k]});
        }
        for (int k = ops.stiffness.row_ptr[r]; k < ops.stiffness.row_ptr[r + 1]; ++k) {
            int c = ops.stiffness.col[k];
            trips.push_back({r, n + c, ops.stiffness.val[k]});
            trips.push_back({n + r, c, -ck * ops.stiffness.val[k]});
        }
    }
    CsrMatrix system = CsrMatrix::from_triplets(2 * n, 2 * n, trips);
    fact_.factorize(system);
}

std::pair<PhaseField, Eigen::VectorXd> CahnHilliardStepper::step(const PhaseField& phi,
                                                                 const SensitivityField& forcing,
                                                                 StepReport& report) const {
    const int n = static_cast<int>(phi.values.size());
    Eigen::VectorXd rhs(2 * n);
    rhs.head(n) = ops_->mass.multiply(phi.values) / params_.tau;
    rhs.tail(n) = ops_->mass.multiply(forcing.total - params_.s0 * phi.values);
    if (params_.s1 != 0.0) rhs.tail(n) -= params_.s1 * ops_->stiffness.multiply(phi.values);

    Eigen::VectorXd x = fact_.solve(rhs);
    Eigen::VectorXd next = x.head(n);
    Eigen::VectorXd nu = x.tail(n);

    report.dissipation_bound = std::min(0.0, -params_.tau * nu.dot(ops_->stiffness.multiply(nu)));
    report.phi_min_pre = next.minCoeff();
    report.phi_max_pre = next.maxCoeff();
    report.linear_iterations = 0;
    report.mass_before = ops_->integral(phi.values);
    report.mass_after = ops_->integral(next);
    return {PhaseField(*phi.mesh, std::move(next)), std::move(nu)};
}

std::pair<PhaseField, StepReport> allen_cahn_step(const PhaseField& phi,
                                                  const SensitivityField& forcing,
                                                  const ModelParams& params,
                                                  const P1Operators& ops) {
    AllenCahnStepper stepper(ops, params);
    StepReport report;
    PhaseField next = stepper.step(phi, forcing, report);
    return {std::move(next), report};
}

std::tuple<PhaseField, Eigen::VectorXd, StepReport> cahn_hilliard_step(
    const PhaseField& phi, const SensitivityField& forcing, const ModelParams& params,
    const P1Operators& ops) {
    CahnHilliardStepper stepper(ops, params);
    StepReport report;
    auto [next, nu] = stepper.step(phi, forcing, report);
    return {std::move(next), std::move(nu), report};
}

double uzawa_update(double ell, const PhaseField& phi, const ModelParams& params,
                    const P1Operators& ops) {
    return ell + params.beta * (solid_volume(phi, ops) - params.vhat);
}

DissipationReport dissipation_check(const std::vector<EnergyBreakdown>& history) {
    if (history.size() < 2) throw Error("dissipation_check: need at least 2 history entries");
    DissipationReport rep;
    double tol = 1e-9 * std::max(1.0, std::abs(history[0].total));
    for (size_t i = 1; i < history.size(); ++i) {
        double inc = history[i].total - history[i - 1].total;
        if (inc > tol) {
            rep.flagged.push_back(static_cast<int>(i));
            if (inc > rep.largest_increase) {
                rep.largest_increase = inc;
                rep.largest_index = static_cast<int>(i);
            }
        }
    }
    return rep;
}

}  // namespace topflow
