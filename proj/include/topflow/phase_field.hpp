#pragma once

#include <Eigen/Dense>
#include <utility>

#include "topflow/expr.hpp"
#include "topflow/mesh.hpp"
#include "topflow/spaces.hpp"

namespace topflow {

struct FlowState;
class FlowSystem;

// Nodal P1 phase field; 1 marks fluid (zero drag), 0 marks solid (full drag),
// intermediate values the diffuse interface.
struct PhaseField {
    const Mesh* mesh = nullptr;
    Eigen::VectorXd values;
    double min_value = 0.0, max_value = 0.0;

    PhaseField() = default;
    PhaseField(const Mesh& m, Eigen::VectorXd v);
    static PhaseField constant(const Mesh& m, double c);
    static PhaseField interpolate(const Mesh& m, const Expr& expr);
};

enum class Scheme { allen_cahn, cahn_hilliard };
enum class WellQuadrature { lumped, exact };

struct ModelParams {
    double eps1 = 1e-3;  // gradient-energy weight
    double eps2 = 0.1;   // well-depth scale
    double beta = 0.0;   // volume penalty weight
    double vhat = 0.0;   // target solid volume
    double alpha0 = 1000.0;
    double eta1 = 1.0;
    bool normalize_sensitivity = true;
    double s0 = 0.0, s1 = 0.0;  // stabilization S = s0 + s1*(-Laplacian)
    double tau = 1e-3;
    Scheme scheme = Scheme::allen_cahn;
    int n_phi = 1;
    bool use_projection = true;
    WellQuadrature well_quadrature = WellQuadrature::lumped;

    void validate(double domain_area) const;
};

struct EnergyBreakdown {
    double gl_gradient = 0.0;      // 0.5*eps1*|grad phi|^2
    double gl_well = 0.0;          // (1/eps2) * integral of the double well
    double dissipation = 0.0;      // J(phi, u)
    double volume_penalty = 0.0;   // 0.5*beta*(V - vhat)^2
    double total = 0.0;
    double dissipation_bound = 0.0;  // tau*(nu, G nu) of the step that produced phi; <= 0
};

// Three-branch double well: phi^2 below 0, (1/4)phi^2(phi-1)^2 on [0,1],
// (phi-1)^2 above 1. C^1 across the branch points.
std::pair<double, double> double_well(double phi);

struct Permeability {
    Eigen::VectorXd alpha;   // alpha0 * (1 - clamp(phi,0,1)) nodally
    Eigen::VectorXd dalpha;  // -alpha0 inside (0,1), 0 in the clamped region
};
Permeability permeability(const PhaseField& phi, double alpha0);

// Nodal clamp to [0,1]; idempotent, leaves in-range coefficients bit-identical.
PhaseField project_unit_interval(const PhaseField& phi);

// V(phi) = integral of (1 - clamp(phi,0,1)), exact for the clamped P1 field.
double solid_volume(const PhaseField& phi, const P1Operators& ops);

// (gradient term, well term) of the Ginzburg-Landau energy.
std::pair<double, double> ginzburg_landau(const PhaseField& phi, const ModelParams& params,
                                          const P1Operators& ops);

EnergyBreakdown total_energy(const PhaseField& phi, const FlowState& state,
                             const ModelParams& params, const FlowSystem& flow,
                             const P1Operators& ops);

}  // namespace topflow
