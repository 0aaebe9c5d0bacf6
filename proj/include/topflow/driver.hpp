#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "topflow/config.hpp"
#include "topflow/flow_solver.hpp"
#include "topflow/gradient_flow.hpp"
#include "topflow/phase_field.hpp"

namespace topflow {

enum class ExitStatus { completed, newton_failed, energy_violation };

struct IterationRecord {
    int iter = 0;
    EnergyBreakdown energy;  // state re-solved at this iteration's phi
    double volume = 0.0;
    double ell = 0.0;
    double phi_min = 0.0, phi_max = 0.0;  // of the recorded (post-projection) field
    int newton_iters = 0;
    std::vector<StepReport> steps;  // inner steps that produced this phi (empty at iter 0)
};

struct RunResult {
    PhaseField phi;
    FlowState state;
    std::vector<IterationRecord> history;
    ExitStatus status = ExitStatus::completed;
    double max_abs_phi_seen = 0.0;  // largest |phi| over all inner steps, pre-projection
    int tau_halvings = 0;
    double final_tau = 0.0;
};

struct RunHooks {
    std::ostream* log = nullptr;
    std::function<void(const IterationRecord&, const PhaseField&, const FlowState&)> on_record;
};

// Executes the outer optimization loop on the given mesh: per iteration a
// Newton state solve, an adjoint solve, n_phi semi-implicit phase steps
// (projected after each step for allen-cahn runs with projection), and for
// allen-cahn the multiplier update. History row k holds the energy of phi^k
// evaluated with its freshly solved state. Newton failure halves tau and
// retries the iteration, at most 5 times per run.
RunResult run_optimization(const RunConfig& config, const Mesh& mesh, const RunHooks& hooks = {});
RunResult run_optimization(const RunConfig& config, const RunHooks& hooks = {});

// CSV history; one row per outer iteration, full double precision.
void export_history(const RunResult& result, std::ostream& out);
void export_history(const RunResult& result, const std::string& path);

}  // namespace topflow
