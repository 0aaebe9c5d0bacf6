#include "topflow/driver.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "topflow/error.hpp"

namespace topflow {

namespace {

double bound_sum(const std::vector<StepReport>& steps) {
    double s = 0.0;
    for (const auto& r : steps) s += r.dissipation_bound;
    return s;
}

}  // namespace

RunResult run_optimization(const RunConfig& cfg, const Mesh& mesh, const RunHooks& hooks) {
    cfg.validate();
    ModelParams model = cfg.model;
    model.validate(mesh.domain_area);

    P1Operators ops = P1Operators::build(mesh);
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    const bool ac = model.scheme == Scheme::allen_cahn;
    const bool project = ac && model.use_projection;

    auto log = [&](const std::string& s) {
        if (hooks.log) *hooks.log << s << "\n";
    };
    auto fmt = [](const char* f, auto... args) {
        char buf[256];
        std::snprintf(buf, sizeof buf, f, args...);
        return std::string(buf);
    };

    RunResult res;
    PhaseField phi = PhaseField::interpolate(mesh, Expr::parse(cfg.phi0));
    if (project) phi = project_unit_interval(phi);
    res.max_abs_phi_seen = std::max(std::abs(phi.min_value), std::abs(phi.max_value));

    double ell = 0.0;
    std::unique_ptr<AllenCahnStepper> ac_stepper;
    std::unique_ptr<CahnHilliardStepper> ch_stepper;
    auto rebuild_steppers = [&] {
        if (ac)
            ac_stepper = std::make_unique<AllenCahnStepper>(ops, model);
        else
            ch_stepper = std::make_unique<CahnHilliardStepper>(ops, model);
    };
    rebuild_steppers();

    std::vector<StepReport> pending_steps;

    // Steps 3 and 4 of one outer iteration: n_phi semi-implicit steps with the
    // state and adjoint frozen (the local phi-dependent forcing terms are
    // re-evaluated every step), projection after each step in projected
    // allen-cahn runs, then the multiplier update.
    auto advance_phase = [&](int outer, const FlowState& st, const FlowState& adj) {
        log(fmt("outer %d: Step 3: %d %s gradient-flow step(s)%s", outer, model.n_phi,
                ac ? "allen-cahn" : "cahn-hilliard", project ? ", projected" : ""));
        pending_steps.clear();
        double frozen_energy = total_energy(phi, st, model, flow, ops).total;
        for (int k = 0; k < model.n_phi; ++k) {
            SensitivityField forcing =
                sensitivity_density(phi, st, adj, model, ac ? ell : 0.0, flow, ops);
            if (forcing.normalization_skipped)
                log(fmt("outer %d:   warning: sensitivity normalization skipped, eta2 below "
                        "threshold",
                        outer));
            StepReport rep;
            rep.energy_before = frozen_energy;
            if (ac) {
                PhaseField next = ac_stepper->step(phi, forcing, rep);
                res.max_abs_phi_seen =
                    std::max({res.max_abs_phi_seen, std::abs(rep.phi_min_pre),
                              std::abs(rep.phi_max_pre)});
                if (project) {
                    double g_before = ops.h1_seminorm_sq(next.values);
                    next = project_unit_interval(next);
                    double g_after = ops.h1_seminorm_sq(next.values);
                    if (g_after > g_before + 1e-12 * std::max(1.0, g_before))
                        log(fmt("outer %d:   warning: projection increased the gradient "
                                "seminorm (%.3e -> %.3e)",
                                outer, g_before, g_after));
                }
                phi = std::move(next);
            } else {
                auto [next, nu] = ch_stepper->step(phi, forcing, rep);
                if (std::abs(rep.mass_after - rep.mass_before) > 1e-10 * mesh.domain_area)
                    throw SolverError(fmt("cahn-hilliard mass drift %.3e exceeds 1e-10*|Omega|",
                                          rep.mass_after - rep.mass_before));
                res.max_abs_phi_seen =
                    std::max({res.max_abs_phi_seen, std::abs(rep.phi_min_pre),
                              std::abs(rep.phi_max_pre)});
                phi = std::move(next);
            }
            rep.energy_after = total_energy(phi, st, model, flow, ops).total;
            frozen_energy = rep.energy_after;
            pending_steps.push_back(rep);
        }
        if (ac) {
            ell = uzawa_update(ell, phi, model, ops);
            log(fmt("outer %d: Step 4: Uzawa multiplier update, ell = %.12g", outer, ell));
        }
    };

    // retry snapshots (state of affairs before Step 3 of the last iteration)
    PhaseField phi_snap;
    FlowState state_snap, adj_snap;
    double ell_snap = 0.0;
    bool have_snap = false;

    FlowState state;
    NewtonReport nrep;
    bool warm = false;
    double strict_tol = 0.0;

    int n = 1;
    for (;;) {
        const bool final_solve = n > cfg.n_outer;
        log(final_solve ? fmt("final: Step 1: solve Navier-Stokes state")
                        : fmt("outer %d: Step 1: solve Navier-Stokes state", n));
        bool solved = false;
        while (!solved) {
            try {
                FlowState next_state =
                    flow.solve_navier_stokes(phi, warm ? &state : nullptr, &nrep);
                state = std::move(next_state);
                solved = true;
            } catch (const NewtonError& err) {
                nrep = err.report;
                if (!have_snap || res.tau_halvings >= 5) {
                    log(fmt("Newton failed (%d iterations) with no retry left: %s", nrep.iterations,
                            err.what()));
                    res.status = ExitStatus::newton_failed;
                    res.phi = phi;
                    res.state = state;
                    res.final_tau = model.tau;
                    return res;
                }
                ++res.tau_halvings;
                model.tau *= 0.5;
                rebuild_steppers();
                log(fmt("outer %d: Newton diverged at the evolved phase field; halving tau to "
                        "%.6g and redoing the iteration",
                        n - 1, model.tau));
                phi = phi_snap;
                ell = ell_snap;
                advance_phase(n - 1, state_snap, adj_snap);
                state = state_snap;  // warm start for the retry
                warm = true;
            }
        }
        log(fmt("%s      Newton iterations: %d, final increment %.3e",
                final_solve ? "final:" : fmt("outer %d:", n).c_str(), nrep.iterations,
                nrep.increment_norms.empty() ? 0.0 : nrep.increment_norms.back()));

        IterationRecord rec;
        rec.iter = n - 1;
        rec.energy = total_energy(phi, state, model, flow, ops);
        rec.energy.dissipation_bound = bound_sum(pending_steps);
        rec.volume = solid_volume(phi, ops);
        rec.ell = ell;
        rec.phi_min = phi.min_value;
        rec.phi_max = phi.max_value;
        rec.newton_iters = nrep.iterations;
        rec.steps = pending_steps;
        res.history.push_back(rec);
        if (hooks.on_record) hooks.on_record(rec, phi, state);

        if (n == 1) {
            strict_tol = 1e-9 * std::max(1.0, std::abs(rec.energy.total));
        } else {
            const auto& prev = res.history[res.history.size() - 2];
            double dw = rec.energy.total - prev.energy.total;
            if (dw > rec.energy.dissipation_bound + strict_tol)
                log(fmt("outer %d:   note: energy change %.6e exceeds the dissipation bound %.6e",
                        n - 1, dw, rec.energy.dissipation_bound));
            if (dw > strict_tol) {
                log(fmt("outer %d:   energy increased by %.6e", n - 1, dw));
                if (cfg.strict_energy) {
                    res.status = ExitStatus::energy_violation;
                    break;
                }
            }
        }

        if (final_solve) break;

        log(fmt("outer %d: Step 2: solve adjoint", n));
        FlowState adj = flow.solve_adjoint_reusing_jacobian(state, phi);

        phi_snap = phi;
        ell_snap = ell;
        state_snap = state;
        adj_snap = adj;
        have_snap = true;

        advance_phase(n, state, adj);
        warm = true;
        ++n;
    }

    res.phi = phi;
    res.state = state;
    res.final_tau = model.tau;
    return res;
}

RunResult run_optimization(const RunConfig& cfg, const RunHooks& hooks) {
    Mesh mesh = cfg.build_mesh();
    return run_optimization(cfg, mesh, hooks);
}

void export_history(const RunResult& result, std::ostream& out) {
    out << "iter,W_total,W_gl_grad,W_gl_well,J_dissipation,W_volume,volume,ell,phi_min,phi_max,"
           "newton_iters,dissipation_bound\n";
    char buf[400];
    for (const auto& r : result.history) {
        std::snprintf(buf, sizeof buf,
                      "%d,%.17e,%.17e,%.17e,%.17e,%.17e,%.17e,%.17e,%.17e,%.17e,%d,%.17e\n",
                      r.iter, r.energy.total, r.energy.gl_gradient, r.energy.gl_well,
                      r.energy.dissipation, r.energy.volume_penalty, r.volume, r.ell, r.phi_min,
                      r.phi_max, r.newton_iters, r.energy.dissipation_bound);
        out << buf;
    }
    if (!out) throw Error("export_history: write failure");
}

void export_history(const RunResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("export_history: cannot open '" + path + "'");
    export_history(result, out);
    out.close();
    if (!out) throw Error("export_history: write failure on '" + path + "'");
}

}  // namespace topflow
