#include "topflow/flow_solver.hpp"
#include "topflow/phase_field.hpp"

namespace topflow {

EnergyBreakdown total_energy(const PhaseField& phi, const FlowState& state,
                             const ModelParams& params, const FlowSystem& flow,
                             const P1Operators& ops) {
    EnergyBreakdown e;
    auto [grad_term, well_term] = ginzburg_landau(phi, params, ops);
    e.gl_gradient = grad_term;
    e.gl_well = well_term;
    e.dissipation = flow.dissipation_energy(state, phi);
    double verr = solid_volume(phi, ops) - params.vhat;
    e.volume_penalty = 0.5 * params.beta * verr * verr;
    e.total = e.gl_gradient + e.gl_well + e.dissipation + e.volume_penalty;
    return e;
}

}  // namespace topflow
