#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "topflow/error.hpp"
#include "topflow/mesh.hpp"
#include "topflow/phase_field.hpp"
#include "topflow/solvers.hpp"
#include "topflow/spaces.hpp"

namespace topflow {

struct FlowParams {
    double mu = 0.01;                  // viscosity
    double alpha0 = 1000.0;            // permeability ceiling
    std::function<std::array<double, 2>(double, double)> body_force;  // null = zero
    double newton_tol = 1e-8;          // L-inf increment tolerance
    int newton_max = 25;

    void validate() const;
};

// Mixed velocity/pressure coefficients on vector-MINI x scalar-P1.
struct FlowState {
    enum class Role { state, adjoint };
    Eigen::VectorXd velocity;  // 2*(V+T), component-blocked, bubbles after vertices
    Eigen::VectorXd pressure;  // V
    Role role = Role::state;
};

struct NewtonReport {
    std::vector<double> increment_norms;  // L-inf velocity increment per iteration
    int iterations = 0;
    bool converged = false;
    double final_residual_norm = 0.0;
    double scale = 1.0;  // residual norm at the initial guess
};

struct NewtonError : SolverError {
    NewtonError(const std::string& msg, NewtonReport rep)
        : SolverError(msg, rep.increment_norms), report(std::move(rep)) {}
    NewtonReport report;
};

// Stationary Navier-Stokes with Brinkman drag alpha(phi)*u on one mesh:
// Newton iteration on the state equations and the generalized-Stokes adjoint.
// Holds the boundary data, sparsity pattern and symbolic factorization, so
// repeated solves on the same mesh are cheap to set up.
class FlowSystem {
public:
    FlowSystem(const Mesh& mesh, const BoundarySpec& spec, FlowParams params);

    const Mesh& mesh() const { return *mesh_; }
    const FunctionSpace& velocity_space() const { return vel_space_; }
    const FlowParams& params() const { return params_; }
    bool pressure_pinned() const { return pin_pressure_; }

    // zero velocity with interpolated Dirichlet data, zero pressure
    FlowState initial_state() const;

    // Newton Jacobian and residual (negated into the right-hand side) at
    // `current`; Dirichlet rows are identity rows with zero rhs.
    void assemble_oseen(const FlowState& current, const PhaseField& phi, CsrMatrix& jac,
                        Eigen::VectorXd& rhs, Exec exec = Exec::parallel) const;

    void assemble_adjoint(const FlowState& state, const PhaseField& phi, CsrMatrix& mat,
                          Eigen::VectorXd& rhs, Exec exec = Exec::parallel) const;

    // adjoint load vector only: (j_u, w) = mu*(Du, Dw) + (alpha(phi) u, w)
    void assemble_adjoint_rhs(const FlowState& state, const PhaseField& phi, Eigen::VectorXd& rhs,
                              Exec exec = Exec::parallel) const;

    FlowState solve_navier_stokes(const PhaseField& phi, const FlowState* guess = nullptr,
                                  NewtonReport* report = nullptr) const;

    FlowState solve_adjoint(const FlowState& state, const PhaseField& phi) const;

    // Transposed back-substitution against the Jacobian factorized by the
    // most recent solve_navier_stokes call: the adjoint operator is the
    // transpose of the Newton matrix, so when `state` and `phi` are the pair
    // that solve just returned, this produces the adjoint without a new
    // factorization (up to O(newton_tol) from the last Newton update).
    FlowState solve_adjoint_reusing_jacobian(const FlowState& state, const PhaseField& phi) const;

    // J(phi, u) = integral of 0.5*mu*|Du|^2 + 0.5*alpha(phi)*|u|^2
    double dissipation_energy(const FlowState& state, const PhaseField& phi) const;

    double divergence_norm(const FlowState& state) const;

    // b(u, v, w) for property tests
    double trilinear_form(const FlowState& u, const FlowState& v, const FlowState& w) const;

    std::array<double, 2> vertex_velocity(const FlowState& state, int vertex) const;

    // vertex interpolation (bubble dofs zero)
    FlowState interpolate_velocity(const std::function<std::array<double, 2>(double, double)>& f) const;

    double velocity_error_l2(const FlowState& state,
                             const std::function<std::array<double, 2>(double, double)>& exact) const;

    const std::vector<int>& dirichlet_velocity_dofs() const { return dirichlet_dofs_; }

private:
    struct Kernels;
    friend struct Kernels;

    void apply_constraints(CsrMatrix& mat, Eigen::VectorXd& rhs) const;

    const Mesh* mesh_;
    FlowParams params_;
    FunctionSpace vel_space_;
    std::vector<TriGeometry> geom_;
    QuadratureRule quad_;
    std::vector<int> dirichlet_dofs_;       // velocity dofs carrying Dirichlet data
    std::vector<double> dirichlet_values_;  // matching prescribed values
    bool pin_pressure_ = false;
    int pressure_offset_ = 0;
    Eigen::VectorXd pressure_lumped_;  // for zero-mean recentering
    std::unique_ptr<FormAssembler> assembler_;
    mutable LuFactorization lu_;  // shared symbolic pattern for state and adjoint
};

}  // namespace topflow
