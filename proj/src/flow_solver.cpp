#include "topflow/flow_solver.hpp"

#include <cmath>

#include "topflow/error.hpp"

namespace topflow {

void FlowParams::validate() const {
    if (!(mu > 0)) throw ConfigError("flow: mu must be positive");
    if (alpha0 < 0) throw ConfigError("flow: alpha0 must be nonnegative");
    if (!(newton_tol > 0)) throw ConfigError("flow: newton_tol must be positive");
    if (newton_max < 1) throw ConfigError("flow: newton_max must be at least 1");
}

namespace {

// local dof order per element: 4 scalar generators (3 vertices + bubble) per
// velocity component, then 3 pressure vertices
constexpr int kLoc = 11;

struct LocalBasis {
    double n[4];
    double g[4][2];
};

inline void basis_at(const TriGeometry& geo, const std::array<double, 3>& l, LocalBasis& b) {
    for (int k = 0; k < 3; ++k) {
        b.n[k] = l[k];
        b.g[k][0] = geo.grad_lambda[k][0];
        b.g[k][1] = geo.grad_lambda[k][1];
    }
    b.n[3] = 27.0 * l[0] * l[1] * l[2];
    for (int d = 0; d < 2; ++d)
        b.g[3][d] = 27.0 * (l[1] * l[2] * geo.grad_lambda[0][d] +
                            l[0] * l[2] * geo.grad_lambda[1][d] +
                            l[0] * l[1] * geo.grad_lambda[2][d]);
}

}  // namespace

struct FlowSystem::Kernels {
    // Gathers local velocity/pressure coefficients of one element.
    static void gather(const FlowSystem& fs, const FlowState& st, int t, double uc[2][4],
                       double pl[3]) {
        const TriGeometry& geo = fs.geom_[t];
        for (int c = 0; c < 2; ++c) {
            for (int k = 0; k < 3; ++k) uc[c][k] = st.velocity[fs.vel_space_.vertex_dof(c, geo.v[k])];
            uc[c][3] = st.velocity[fs.vel_space_.bubble_dof(c, t)];
        }
        for (int k = 0; k < 3; ++k) pl[k] = st.pressure[geo.v[k]];
    }
};

FlowSystem::FlowSystem(const Mesh& mesh, const BoundarySpec& spec, FlowParams params)
    : mesh_(&mesh), params_(std::move(params)), vel_space_(make_vector_mini(mesh)),
      geom_(compute_geometry(mesh)), quad_(quadrature_rule(4)) {
    params_.validate();

    const int nv = mesh.vertex_count();
    const int nt = mesh.triangle_count();
    pressure_offset_ = vel_space_.dof_count;

    DirichletVelocity dv = dirichlet_velocity_values(mesh, spec);
    for (size_t i = 0; i < dv.vertices.size(); ++i)
        for (int c = 0; c < 2; ++c) {
            dirichlet_dofs_.push_back(vel_space_.vertex_dof(c, dv.vertices[i]));
            dirichlet_values_.push_back(dv.values[i][c]);
        }

    bool has_neumann = false;
    for (const auto& be : mesh.boundary_edges)
        if (mesh.label_is_neumann(be.label)) has_neumann = true;
    pin_pressure_ = !has_neumann;

    // element dof table for the coupled saddle system
    const int n = pressure_offset_ + nv;
    std::vector<int> dofs(static_cast<size_t>(nt) * kLoc);
    for (int t = 0; t < nt; ++t) {
        int* d = &dofs[static_cast<size_t>(t) * kLoc];
        for (int c = 0; c < 2; ++c) {
            for (int k = 0; k < 3; ++k) d[c * 4 + k] = vel_space_.vertex_dof(c, mesh.triangles[t][k]);
            d[c * 4 + 3] = vel_space_.bubble_dof(c, t);
        }
        for (int k = 0; k < 3; ++k) d[8 + k] = pressure_offset_ + mesh.triangles[t][k];
    }
    assembler_ = std::make_unique<FormAssembler>(n, n, nt, kLoc, kLoc, dofs, dofs);

    P1Operators p1 = P1Operators::build(mesh);
    pressure_lumped_ = p1.lumped_mass;
}

FlowState FlowSystem::initial_state() const {
    FlowState st;
    st.role = FlowState::Role::state;
    st.velocity.setZero(vel_space_.dof_count);
    st.pressure.setZero(mesh_->vertex_count());
    for (size_t i = 0; i < dirichlet_dofs_.size(); ++i)
        st.velocity[dirichlet_dofs_[i]] = dirichlet_values_[i];
    return st;
}

void FlowSystem::apply_constraints(CsrMatrix& mat, Eigen::VectorXd& rhs) const {
    for (int dof : dirichlet_dofs_) {
        mat.zero_row(dof);
        mat.set_value(dof, dof, 1.0);
        rhs[dof] = 0.0;
    }
    if (pin_pressure_) {
        int row = pressure_offset_;  // pressure dof of vertex 0
        mat.zero_row(row);
        mat.set_value(row, row, 1.0);
        rhs[row] = 0.0;
    }
}

void FlowSystem::assemble_oseen(const FlowState& current, const PhaseField& phi, CsrMatrix& jac,
                                Eigen::VectorXd& rhs, Exec exec) const {
    if (current.velocity.size() != vel_space_.dof_count ||
        current.pressure.size() != mesh_->vertex_count() ||
        phi.values.size() != mesh_->vertex_count())
        throw Error("assemble_oseen: dimension mismatch");

    const Permeability perm = permeability(phi, params_.alpha0);
    const double mu = params_.mu;
    const bool has_force = static_cast<bool>(params_.body_force);

    assembler_->assemble(
        exec,
        [&](int t, double* mat, double* lrhs) {
            const TriGeometry& geo = geom_[t];
            double uc[2][4], pl[3];
            Kernels::gather(*this, current, t, uc, pl);
            double al[3] = {perm.alpha[geo.v[0]], perm.alpha[geo.v[1]], perm.alpha[geo.v[2]]};

            LocalBasis b;
            for (const auto& qp : quad_.points) {
                basis_at(geo, qp.lambda, b);
                const double w = geo.area * qp.weight;

                double u[2] = {0, 0}, du[2][2] = {{0, 0}, {0, 0}};
                for (int c = 0; c < 2; ++c)
                    for (int a = 0; a < 4; ++a) {
                        u[c] += uc[c][a] * b.n[a];
                        du[c][0] += uc[c][a] * b.g[a][0];
                        du[c][1] += uc[c][a] * b.g[a][1];
                    }
                double p = pl[0] * qp.lambda[0] + pl[1] * qp.lambda[1] + pl[2] * qp.lambda[2];
                double aq = al[0] * qp.lambda[0] + al[1] * qp.lambda[1] + al[2] * qp.lambda[2];

                double f[2] = {0, 0};
                if (has_force) {
                    double x = qp.lambda[0] * geo.x[0] + qp.lambda[1] * geo.x[1] + qp.lambda[2] * geo.x[2];
                    double y = qp.lambda[0] * geo.y[0] + qp.lambda[1] * geo.y[1] + qp.lambda[2] * geo.y[2];
                    auto fv = params_.body_force(x, y);
                    f[0] = fv[0];
                    f[1] = fv[1];
                }

                for (int d = 0; d < 2; ++d)
                    for (int bb = 0; bb < 4; ++bb) {
                        const int row = d * 4 + bb;
                        // blocks diagonal in the component: viscosity, drag,
                        // convection b(u, du, v)
                        for (int a = 0; a < 4; ++a) {
                            double diag =
                                mu * (b.g[a][0] * b.g[bb][0] + b.g[a][1] * b.g[bb][1]) +
                                aq * b.n[a] * b.n[bb] +
                                b.n[bb] * (u[0] * b.g[a][0] + u[1] * b.g[a][1]);
                            mat[row * kLoc + d * 4 + a] += w * diag;
                            // full block: convection b(du, u, v)
                            for (int c = 0; c < 2; ++c)
                                mat[row * kLoc + c * 4 + a] += w * b.n[bb] * b.n[a] * du[d][c];
                        }
                        for (int j = 0; j < 3; ++j)
                            mat[row * kLoc + 8 + j] -= w * qp.lambda[j] * b.g[bb][d];

                        double conv = u[0] * du[d][0] + u[1] * du[d][1];
                        double visc = du[d][0] * b.g[bb][0] + du[d][1] * b.g[bb][1];
                        lrhs[row] += w * (f[d] * b.n[bb] - mu * visc - conv * b.n[bb] -
                                          aq * u[d] * b.n[bb] + p * b.g[bb][d]);
                    }
                const double div_u = du[0][0] + du[1][1];
                for (int i = 0; i < 3; ++i) {
                    const int row = 8 + i;
                    for (int c = 0; c < 2; ++c)
                        for (int a = 0; a < 4; ++a)
                            mat[row * kLoc + c * 4 + a] += w * qp.lambda[i] * b.g[a][c];
                    lrhs[row] -= w * qp.lambda[i] * div_u;
                }
            }
        },
        jac, &rhs);

    apply_constraints(jac, rhs);
}

void FlowSystem::assemble_adjoint(const FlowState& state, const PhaseField& phi, CsrMatrix& mat_out,
                                  Eigen::VectorXd& rhs, Exec exec) const {
    if (state.velocity.size() != vel_space_.dof_count || phi.values.size() != mesh_->vertex_count())
        throw Error("assemble_adjoint: dimension mismatch");

    const Permeability perm = permeability(phi, params_.alpha0);
    const double mu = params_.mu;

    assembler_->assemble(
        exec,
        [&](int t, double* mat, double* lrhs) {
            const TriGeometry& geo = geom_[t];
            double uc[2][4], pl[3];
            Kernels::gather(*this, state, t, uc, pl);
            double al[3] = {perm.alpha[geo.v[0]], perm.alpha[geo.v[1]], perm.alpha[geo.v[2]]};

            LocalBasis b;
            for (const auto& qp : quad_.points) {
                basis_at(geo, qp.lambda, b);
                const double w = geo.area * qp.weight;

                double u[2] = {0, 0}, du[2][2] = {{0, 0}, {0, 0}};
                for (int c = 0; c < 2; ++c)
                    for (int a = 0; a < 4; ++a) {
                        u[c] += uc[c][a] * b.n[a];
                        du[c][0] += uc[c][a] * b.g[a][0];
                        du[c][1] += uc[c][a] * b.g[a][1];
                    }
                double aq = al[0] * qp.lambda[0] + al[1] * qp.lambda[1] + al[2] * qp.lambda[2];

                // test w = (bb, d), trial v = (a, c)
                for (int d = 0; d < 2; ++d)
                    for (int bb = 0; bb < 4; ++bb) {
                        const int row = d * 4 + bb;
                        for (int a = 0; a < 4; ++a) {
                            // a(v,w) + (alpha v, w) + b(u, v, w-slot): diagonal in component
                            double diag =
                                mu * (b.g[a][0] * b.g[bb][0] + b.g[a][1] * b.g[bb][1]) +
                                aq * b.n[a] * b.n[bb] +
                                b.n[a] * (u[0] * b.g[bb][0] + u[1] * b.g[bb][1]);
                            mat[row * kLoc + d * 4 + a] += w * diag;
                            // b(w, u, v): couples components through grad u
                            for (int c = 0; c < 2; ++c)
                                mat[row * kLoc + c * 4 + a] += w * b.n[bb] * du[c][d] * b.n[a];
                        }
                        for (int j = 0; j < 3; ++j)
                            mat[row * kLoc + 8 + j] -= w * qp.lambda[j] * b.g[bb][d];

                        // rhs: (j_u, w) = mu*(Du, Dw) + (alpha u, w)
                        double visc = du[d][0] * b.g[bb][0] + du[d][1] * b.g[bb][1];
                        lrhs[row] += w * (mu * visc + aq * u[d] * b.n[bb]);
                    }
                for (int i = 0; i < 3; ++i) {
                    const int row = 8 + i;
                    for (int c = 0; c < 2; ++c)
                        for (int a = 0; a < 4; ++a)
                            mat[row * kLoc + c * 4 + a] += w * qp.lambda[i] * b.g[a][c];
                }
            }
        },
        mat_out, &rhs);

    apply_constraints(mat_out, rhs);
}

void FlowSystem::assemble_adjoint_rhs(const FlowState& state, const PhaseField& phi,
                                      Eigen::VectorXd& rhs, Exec exec) const {
    if (state.velocity.size() != vel_space_.dof_count || phi.values.size() != mesh_->vertex_count())
        throw Error("assemble_adjoint_rhs: dimension mismatch");
    const Permeability perm = permeability(phi, params_.alpha0);
    const double mu = params_.mu;

    assembler_->assemble_rhs(
        exec,
        [&](int t, double* lrhs) {
            const TriGeometry& geo = geom_[t];
            double uc[2][4], pl[3];
            Kernels::gather(*this, state, t, uc, pl);
            double al[3] = {perm.alpha[geo.v[0]], perm.alpha[geo.v[1]], perm.alpha[geo.v[2]]};
            LocalBasis b;
            for (const auto& qp : quad_.points) {
                basis_at(geo, qp.lambda, b);
                const double w = geo.area * qp.weight;
                double u[2] = {0, 0}, du[2][2] = {{0, 0}, {0, 0}};
                for (int c = 0; c < 2; ++c)
                    for (int a = 0; a < 4; ++a) {
                        u[c] += uc[c][a] * b.n[a];
                        du[c][0] += uc[c][a] * b.g[a][0];
                        du[c][1] += uc[c][a] * b.g[a][1];
                    }
                double aq = al[0] * qp.lambda[0] + al[1] * qp.lambda[1] + al[2] * qp.lambda[2];
                for (int d = 0; d < 2; ++d)
                    for (int bb = 0; bb < 4; ++bb) {
                        double visc = du[d][0] * b.g[bb][0] + du[d][1] * b.g[bb][1];
                        lrhs[d * 4 + bb] += w * (mu * visc + aq * u[d] * b.n[bb]);
                    }
            }
        },
        rhs);

    for (int dof : dirichlet_dofs_) rhs[dof] = 0.0;
    if (pin_pressure_) rhs[pressure_offset_] = 0.0;
}

FlowState FlowSystem::solve_adjoint_reusing_jacobian(const FlowState& state,
                                                     const PhaseField& phi) const {
    Eigen::VectorXd rhs;
    assemble_adjoint_rhs(state, phi, rhs);
    Eigen::VectorXd x = lu_.solve_transposed(rhs);
    double res = (lu_.multiply_transposed(x) - rhs).norm();
    if (!(res <= 1e-10 * std::max(1.0, rhs.norm())))
        throw SolverError("adjoint transposed solve residual too large: " + std::to_string(res),
                          {res});

    FlowState adj;
    adj.role = FlowState::Role::adjoint;
    adj.velocity = x.head(vel_space_.dof_count);
    // the transposed system determines the adjoint pressure with flipped sign
    adj.pressure = -x.tail(mesh_->vertex_count());
    for (int dof : dirichlet_dofs_) adj.velocity[dof] = 0.0;
    if (pin_pressure_) {
        double mean = pressure_lumped_.dot(adj.pressure) / mesh_->domain_area;
        adj.pressure.array() -= mean;
    }
    return adj;
}

FlowState FlowSystem::solve_navier_stokes(const PhaseField& phi, const FlowState* guess,
                                          NewtonReport* report) const {
    FlowState u = guess ? *guess : initial_state();
    u.role = FlowState::Role::state;

    NewtonReport rep;
    CsrMatrix jac;
    Eigen::VectorXd rhs;

    bool converged = false;
    for (int iter = 0; iter < params_.newton_max; ++iter) {
        assemble_oseen(u, phi, jac, rhs);
        if (iter == 0) rep.scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
        lu_.factorize(jac);
        Eigen::VectorXd delta = lu_.solve(rhs);
        double res = (jac.multiply(delta) - rhs).norm();
        if (!(res <= 1e-10 * std::max(1.0, rhs.norm())))
            throw SolverError("Newton linear solve residual too large: " + std::to_string(res),
                              {res});

        u.velocity += delta.head(vel_space_.dof_count);
        u.pressure += delta.tail(mesh_->vertex_count());
        double inc = delta.head(vel_space_.dof_count).lpNorm<Eigen::Infinity>();
        rep.increment_norms.push_back(inc);
        rep.iterations = iter + 1;
        if (inc < params_.newton_tol) {
            converged = true;
            break;
        }
    }
    rep.converged = converged;
    if (converged) {
        assemble_oseen(u, phi, jac, rhs);
        rep.final_residual_norm = rhs.lpNorm<Eigen::Infinity>();
    }
    if (pin_pressure_) {
        double mean = pressure_lumped_.dot(u.pressure) / mesh_->domain_area;
        u.pressure.array() -= mean;
    }
    if (report) *report = rep;
    if (!converged)
        throw NewtonError("Newton did not converge within " + std::to_string(params_.newton_max) +
                              " iterations (last increment " +
                              std::to_string(rep.increment_norms.empty()
                                                 ? 0.0
                                                 : rep.increment_norms.back()) +
                              ")",
                          rep);
    return u;
}

FlowState FlowSystem::solve_adjoint(const FlowState& state, const PhaseField& phi) const {
    CsrMatrix mat;
    Eigen::VectorXd rhs;
    assemble_adjoint(state, phi, mat, rhs);
    // local factorization: lu_ keeps the Newton Jacobian for the reuse path
    LuFactorization lu;
    lu.factorize(mat);
    Eigen::VectorXd x = lu.solve(rhs);
    double res = (mat.multiply(x) - rhs).norm();
    if (!(res <= 1e-10 * std::max(1.0, rhs.norm())))
        throw SolverError("adjoint linear solve residual too large: " + std::to_string(res), {res});

    FlowState adj;
    adj.role = FlowState::Role::adjoint;
    adj.velocity = x.head(vel_space_.dof_count);
    adj.pressure = x.tail(mesh_->vertex_count());
    if (pin_pressure_) {
        double mean = pressure_lumped_.dot(adj.pressure) / mesh_->domain_area;
        adj.pressure.array() -= mean;
    }
    return adj;
}

double FlowSystem::dissipation_energy(const FlowState& state, const PhaseField& phi) const {
    const Permeability perm = permeability(phi, params_.alpha0);
    const double mu = params_.mu;
    return deterministic_element_sum(mesh_->triangle_count(), Exec::parallel, [&](int t) {
        const TriGeometry& geo = geom_[t];
        double uc[2][4], pl[3];
        Kernels::gather(*this, state, t, uc, pl);
        double al[3] = {perm.alpha[geo.v[0]], perm.alpha[geo.v[1]], perm.alpha[geo.v[2]]};
        LocalBasis b;
        double acc = 0.0;
        for (const auto& qp : quad_.points) {
            basis_at(geo, qp.lambda, b);
            double u[2] = {0, 0}, du2 = 0.0;
            for (int c = 0; c < 2; ++c) {
                double dx = 0, dy = 0;
                for (int a = 0; a < 4; ++a) {
                    u[c] += uc[c][a] * b.n[a];
                    dx += uc[c][a] * b.g[a][0];
                    dy += uc[c][a] * b.g[a][1];
                }
                du2 += dx * dx + dy * dy;
            }
            double aq = al[0] * qp.lambda[0] + al[1] * qp.lambda[1] + al[2] * qp.lambda[2];
            acc += geo.area * qp.weight *
                   (0.5 * mu * du2 + 0.5 * aq * (u[0] * u[0] + u[1] * u[1]));
        }
        return acc;
    });
}

double FlowSystem::divergence_norm(const FlowState& state) const {
    double sq = deterministic_element_sum(mesh_->triangle_count(), Exec::parallel, [&](int t) {
        const TriGeometry& geo = geom_[t];
        double uc[2][4], pl[3];
        Kernels::gather(*this, state, t, uc, pl);
        LocalBasis b;
        double acc = 0.0;
        for (const auto& qp : quad_.points) {
            basis_at(geo, qp.lambda, b);
            double div = 0.0;
            for (int a = 0; a < 4; ++a) div += uc[0][a] * b.g[a][0] + uc[1][a] * b.g[a][1];
            acc += geo.area * qp.weight * div * div;
        }
        return acc;
    });
    return std::sqrt(std::max(0.0, sq));
}

double FlowSystem::trilinear_form(const FlowState& u, const FlowState& v,
                                  const FlowState& w) const {
    return deterministic_element_sum(mesh_->triangle_count(), Exec::parallel, [&](int t) {
        const TriGeometry& geo = geom_[t];
        double ucu[2][4], ucv[2][4], ucw[2][4], pl[3];
        Kernels::gather(*this, u, t, ucu, pl);
        Kernels::gather(*this, v, t, ucv, pl);
        Kernels::gather(*this, w, t, ucw, pl);
        LocalBasis b;
        double acc = 0.0;
        for (const auto& qp : quad_.points) {
            basis_at(geo, qp.lambda, b);
            double uu[2] = {0, 0}, ww[2] = {0, 0}, dv[2][2] = {{0, 0}, {0, 0}};
            for (int c = 0; c < 2; ++c)
                for (int a = 0; a < 4; ++a) {
                    uu[c] += ucu[c][a] * b.n[a];
                    ww[c] += ucw[c][a] * b.n[a];
                    dv[c][0] += ucv[c][a] * b.g[a][0];
                    dv[c][1] += ucv[c][a] * b.g[a][1];
                }
            double val = 0.0;
            for (int i = 0; i < 2; ++i) val += (uu[0] * dv[i][0] + uu[1] * dv[i][1]) * ww[i];
            acc += geo.area * qp.weight * val;
        }
        return acc;
    });
}

std::array<double, 2> FlowSystem::vertex_velocity(const FlowState& state, int vertex) const {
    return {state.velocity[vel_space_.vertex_dof(0, vertex)],
            state.velocity[vel_space_.vertex_dof(1, vertex)]};
}

FlowState FlowSystem::interpolate_velocity(
    const std::function<std::array<double, 2>(double, double)>& f) const {
    FlowState st;
    st.role = FlowState::Role::state;
    st.velocity.setZero(vel_space_.dof_count);
    st.pressure.setZero(mesh_->vertex_count());
    for (int v = 0; v < mesh_->vertex_count(); ++v) {
        auto val = f(mesh_->vertices[v][0], mesh_->vertices[v][1]);
        st.velocity[vel_space_.vertex_dof(0, v)] = val[0];
        st.velocity[vel_space_.vertex_dof(1, v)] = val[1];
    }
    return st;
}

double FlowSystem::velocity_error_l2(
    const FlowState& state,
    const std::function<std::array<double, 2>(double, double)>& exact) const {
    double sq = deterministic_element_sum(mesh_->triangle_count(), Exec::parallel, [&](int t) {
        const TriGeometry& geo = geom_[t];
        double uc[2][4], pl[3];
        Kernels::gather(*this, state, t, uc, pl);
        LocalBasis b;
        double acc = 0.0;
        for (const auto& qp : quad_.points) {
            basis_at(geo, qp.lambda, b);
            double x = qp.lambda[0] * geo.x[0] + qp.lambda[1] * geo.x[1] + qp.lambda[2] * geo.x[2];
            double y = qp.lambda[0] * geo.y[0] + qp.lambda[1] * geo.y[1] + qp.lambda[2] * geo.y[2];
            auto ue = exact(x, y);
            double u[2] = {0, 0};
            for (int c = 0; c < 2; ++c)
                for (int a = 0; a < 4; ++a) u[c] += uc[c][a] * b.n[a];
            double dx = u[0] - ue[0], dy = u[1] - ue[1];
            acc += geo.area * qp.weight * (dx * dx + dy * dy);
        }
        return acc;
    });
    return std::sqrt(std::max(0.0, sq));
}

}  // namespace topflow
