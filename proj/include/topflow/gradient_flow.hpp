#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "topflow/flow_solver.hpp"
#include "topflow/phase_field.hpp"
#include "topflow/solvers.hpp"
#include "topflow/spaces.hpp"

namespace topflow {

// Explicit forcing of the semi-implicit step, kept as separate nodal
// components whose sum is the total at every node. The flow force evaluates
// the velocity products at vertices, where the bubble part vanishes and the
// P1 values are exact.
struct SensitivityField {
    Eigen::VectorXd total;
    Eigen::VectorXd well_force;        // (1/eps2) * dwell(phi)
    Eigen::VectorXd flow_force;        // (eta1/eta2)(0.5*a'(phi)|u|^2 - a'(phi) u.v)
    Eigen::VectorXd volume_force;      // beta*(V - vhat)*V', V' = -1
    Eigen::VectorXd multiplier_force;  // ell*V'
    double eta2 = 1.0;
    bool normalization_skipped = false;  // eta2 fell below threshold
};

SensitivityField sensitivity_density(const PhaseField& phi, const FlowState& state,
                                     const FlowState& adjoint, const ModelParams& params,
                                     double ell, const FlowSystem& flow, const P1Operators& ops);

// Exact nodal gradient of the discrete reduced energy: dW(phi)[delta] =
// g . delta for the same adjoint pair, with the flow term integrated exactly
// against the P1 hat functions (including bubble contributions). Used by the
// verification suite; the time stepping uses the vertex-interpolated
// sensitivity_density above. No eta weighting, multiplier via ell*V'.
Eigen::VectorXd reduced_energy_gradient(const PhaseField& phi, const FlowState& state,
                                        const FlowState& adjoint, const ModelParams& params,
                                        double ell, const FlowSystem& flow,
                                        const P1Operators& ops);

struct StepReport {
    double energy_before = 0.0;  // filled by the orchestration layer
    double energy_after = 0.0;
    double dissipation_bound = 0.0;  // tau*(nu, G nu), nonpositive
    double phi_min_pre = 0.0, phi_max_pre = 0.0;  // before any projection
    int linear_iterations = 0;                    // 0 for the direct solvers
    double mass_before = 0.0, mass_after = 0.0;   // integral of phi (CH)
};

// One semi-implicit step of the L^2 gradient flow with stabilization
// S = s0 + s1*(-Laplacian): the system matrix (1/tau + s0)*M + (eps1+s1)*K is
// SPD and constant, so the factorization is reused across steps.
class AllenCahnStepper {
public:
    AllenCahnStepper(const P1Operators& ops, const ModelParams& params);
    PhaseField step(const PhaseField& phi, const SensitivityField& forcing, StepReport& report) const;

private:
    const P1Operators* ops_;
    ModelParams params_;
    SpdFactorization fact_;
};

// Mixed (phi, nu) step of the H^-1 gradient flow; conserves the mass
// integral of phi up to the linear-solver tolerance.
class CahnHilliardStepper {
public:
    CahnHilliardStepper(const P1Operators& ops, const ModelParams& params);
    std::pair<PhaseField, Eigen::VectorXd> step(const PhaseField& phi,
                                                const SensitivityField& forcing,
                                                StepReport& report) const;

private:
    const P1Operators* ops_;
    ModelParams params_;
    LuFactorization fact_;
};

// Free-function forms building the stepper per call.
std::pair<PhaseField, StepReport> allen_cahn_step(const PhaseField& phi,
                                                  const SensitivityField& forcing,
                                                  const ModelParams& params,
                                                  const P1Operators& ops);
std::tuple<PhaseField, Eigen::VectorXd, StepReport> cahn_hilliard_step(
    const PhaseField& phi, const SensitivityField& forcing, const ModelParams& params,
    const P1Operators& ops);

double uzawa_update(double ell, const PhaseField& phi, const ModelParams& params,
                    const P1Operators& ops);

struct DissipationReport {
    std::vector<int> flagged;  // indices where the total increased beyond tolerance
    double largest_increase = 0.0;
    int largest_index = -1;
};
DissipationReport dissipation_check(const std::vector<EnergyBreakdown>& history);

}  // namespace topflow
