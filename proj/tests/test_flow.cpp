#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "topflow/config.hpp"
#include "topflow/error.hpp"
#include "topflow/flow_solver.hpp"
#include "topflow/solvers.hpp"

using namespace topflow;

namespace {

RunConfig wall_box(int n) {
    RunConfig cfg;
    cfg.geometry = Geometry::unit_square_wall;
    cfg.mesh_nx = n;
    cfg.mesh_ny = n;
    return cfg;
}

// divergence-free manufactured solution (stream-function curl) with the
// matching strong-form forcing for -mu*lap(u) + (u.grad)u + alpha(phi)u + grad p
struct Manufactured {
    double mu = 0.1;
    double alpha0 = 100.0;

    std::array<double, 2> velocity(double x, double y) const {
        return {std::sin(M_PI * x) * std::cos(M_PI * y),
                -std::cos(M_PI * x) * std::sin(M_PI * y)};
    }
    double alpha(double x, double y) const { return alpha0 * (0.7 - 0.25 * x - 0.15 * y); }
    std::array<double, 2> force(double x, double y) const {
        auto u = velocity(x, y);
        double a = alpha(x, y);
        double f1 = 2.0 * mu * M_PI * M_PI * u[0] + 0.5 * M_PI * std::sin(2 * M_PI * x) +
                    a * u[0] - M_PI * std::sin(M_PI * x) * std::cos(M_PI * y);
        double f2 = 2.0 * mu * M_PI * M_PI * u[1] + 0.5 * M_PI * std::sin(2 * M_PI * y) +
                    a * u[1] - M_PI * std::cos(M_PI * x) * std::sin(M_PI * y);
        return {f1, f2};
    }
};

double solve_mms_error(int n, const Manufactured& mms, NewtonReport* rep = nullptr) {
    RunConfig cfg = wall_box(n);
    cfg.inlet_ux = "sin(pi*x)*cos(pi*y)";
    cfg.inlet_uy = "-cos(pi*x)*sin(pi*y)";
    cfg.flow.mu = mms.mu;
    cfg.flow.alpha0 = mms.alpha0;
    cfg.model.alpha0 = mms.alpha0;
    cfg.flow.body_force = [mms](double x, double y) { return mms.force(x, y); };
    Mesh mesh = cfg.build_mesh();
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    PhaseField phi = PhaseField::interpolate(mesh, Expr::parse("0.3+0.25*x+0.15*y"));
    FlowState st = flow.solve_navier_stokes(phi, nullptr, rep);
    return flow.velocity_error_l2(st, [mms](double x, double y) { return mms.velocity(x, y); });
}

}  // namespace

TEST_CASE("plug flow on a fully driven box is reproduced exactly") {
    RunConfig cfg = wall_box(6);
    cfg.inlet_ux = "1";
    cfg.inlet_uy = "0";
    cfg.flow.mu = 1.0;
    Mesh mesh = cfg.build_mesh();
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    PhaseField phi = PhaseField::constant(mesh, 1.0);  // alpha = 0

    // the constant field is the exact solution: starting there, Newton stops
    // immediately; a cold start needs a couple of corrections
    FlowState guess = flow.interpolate_velocity(
        [](double, double) { return std::array<double, 2>{1.0, 0.0}; });
    NewtonReport rep;
    FlowState st = flow.solve_navier_stokes(phi, &guess, &rep);
    CHECK(rep.converged);
    CHECK(rep.iterations <= 2);

    NewtonReport cold;
    FlowState st_cold = flow.solve_navier_stokes(phi, nullptr, &cold);
    CHECK(cold.converged);
    CHECK((st_cold.velocity - st.velocity).lpNorm<Eigen::Infinity>() < 1e-7);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        auto uv = flow.vertex_velocity(st, v);
        CHECK(uv[0] == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(uv[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    }
    // pressure constant; recentered to zero mean
    CHECK(st.pressure.lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(flow.divergence_norm(st) < 1e-10);
}

TEST_CASE("oseen residual vanishes at the discrete solution") {
    RunConfig cfg = wall_box(6);
    cfg.inlet_ux = "1";
    cfg.inlet_uy = "0";
    cfg.flow.alpha0 = 50.0;
    cfg.model.alpha0 = 50.0;
    Mesh mesh = cfg.build_mesh();
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    PhaseField phi = PhaseField::interpolate(mesh, Expr::parse("0.4+0.2*x"));
    FlowState st = flow.solve_navier_stokes(phi);

    CsrMatrix jac;
    Eigen::VectorXd rhs;
    flow.assemble_oseen(st, phi, jac, rhs);
    CHECK(rhs.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, st.velocity.norm()));
}

TEST_CASE("alpha0 = 0 decouples the system from the phase field") {
    RunConfig cfg = wall_box(5);
    cfg.flow.alpha0 = 0.0;
    cfg.model.alpha0 = 0.0;
    Mesh mesh = cfg.build_mesh();
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    FlowState st = flow.initial_state();

    CsrMatrix j1, j2;
    Eigen::VectorXd r1, r2;
    flow.assemble_oseen(st, PhaseField::constant(mesh, 0.2), j1, r1);
    flow.assemble_oseen(st, PhaseField::interpolate(mesh, Expr::parse("x*y")), j2, r2);
    REQUIRE(j1.val.size() == j2.val.size());
    for (size_t k = 0; k < j1.val.size(); ++k) CHECK(j1.val[k] == j2.val[k]);
}

TEST_CASE("stokes-limit jacobian has a symmetric velocity block") {
    RunConfig cfg = wall_box(4);
    cfg.flow.mu = 1.0;
    Mesh mesh = cfg.build_mesh();
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    FlowState zero = flow.interpolate_velocity(
        [](double, double) { return std::array<double, 2>{0.0, 0.0}; });
    PhaseField phi = PhaseField::constant(mesh, 0.5);

    CsrMatrix jac;
    Eigen::VectorXd rhs;
    flow.assemble_oseen(zero, phi, jac, rhs);

    std::vector<char> dirichlet(flow.velocity_space().dof_count, 0);
    for (int dof : flow.dirichlet_velocity_dofs()) dirichlet[dof] = 1;
    const int nvel = flow.velocity_space().dof_count;
    double max_asym = 0.0, max_val = 0.0;
    for (int r = 0; r < nvel; ++r) {
        if (dirichlet[r]) continue;
        for (int k = jac.row_ptr[r]; k < jac.row_ptr[r + 1]; ++k) {
            int c = jac.col[k];
            if (c >= nvel || dirichlet[c]) continue;
            max_asym = std::max(max_asym, std::abs(jac.val[k] - jac.value_at(c, r)));
            max_val = std::max(max_val, std::abs(jac.val[k]));
        }
    }
    CHECK(max_asym <= 1e-12 * max_val);
}

TEST_CASE("manufactured solution converges at second order in L2") {
    Manufactured mms;
    double e1 = solve_mms_error(8, mms);
    double e2 = solve_mms_error(16, mms);
    double e3 = solve_mms_error(32, mms);
    double r1 = std::log2(e1 / e2);
    double r2 = std::log2(e2 / e3);
    INFO("errors ", e1, " ", e2, " ", e3, " rates ", r1, " ", r2);
    CHECK(r1 >= 1.8);
    CHECK(r2 >= 1.8);
}

TEST_CASE("newton converges from a cold start on benchmark-style configs") {
    for (double mu : {0.1, 0.01}) {
        RunConfig cfg = preset_config("diffuser-ac");
        cfg.mesh_nx = cfg.mesh_ny = 32;
        cfg.flow.mu = mu;
        Mesh mesh = cfg.build_mesh();
        FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
        NewtonReport rep;
        flow.solve_navier_stokes(PhaseField::constant(mesh, 0.5), nullptr, &rep);
        CHECK(rep.converged);
        CHECK(rep.iterations <= 15);

        RunConfig byp = preset_config("bypass-ac");
        byp.mesh_nx = 30;
        byp.mesh_ny = 20;
        byp.flow.mu = mu;
        Mesh bmesh = byp.build_mesh();
        FlowSystem bflow(bmesh, byp.boundary_spec(), byp.flow);
        PhaseField bphi = project_unit_interval(
            PhaseField::interpolate(bmesh, Expr::parse(byp.phi0)));
        NewtonReport brep;
        bflow.solve_navier_stokes(bphi, nullptr, &brep);
        CHECK(brep.converged);
        CHECK(brep.iterations <= 15);
    }
}

TEST_CASE("newton tail is quadratic on a diffuser-like field") {
    RunConfig cfg = preset_config("diffuser-ac");
    cfg.mesh_nx = cfg.mesh_ny = 32;
    Mesh mesh = cfg.build_mesh();
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    // channel-like field standing in for a mid-optimization state
    PhaseField phi = project_unit_interval(PhaseField::interpolate(
        mesh, Expr::parse("0.5+2*(0.25-abs(y-0.5))+0.3*x")));
    NewtonReport rep;
    flow.solve_navier_stokes(phi, nullptr, &rep);
    REQUIRE(rep.converged);
    REQUIRE(rep.iterations >= 3);
    // ratio |d_{k+1}| / |d_k|^2 stays bounded near convergence; the bound is
    // a regression constant frozen from the first measured runs
    double max_ratio = 0.0;
    for (size_t k = 0; k + 1 < rep.increment_norms.size(); ++k) {
        double dk = rep.increment_norms[k], dk1 = rep.increment_norms[k + 1];
        if (dk < 1e-1 && dk > 1e-12) max_ratio = std::max(max_ratio, dk1 / (dk * dk));
    }
    INFO("max quadratic-tail ratio ", max_ratio);
    CHECK(max_ratio <= 2000.0);
}

TEST_CASE("newton failure carries the report") {
    RunConfig cfg = preset_config("diffuser-ac");
    cfg.mesh_nx = cfg.mesh_ny = 12;
    cfg.flow.newton_max = 1;  // cannot converge in one step from cold start
    Mesh mesh = cfg.build_mesh();
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    try {
        flow.solve_navier_stokes(PhaseField::constant(mesh, 0.5));
        FAIL("expected NewtonError");
    } catch (const NewtonError& e) {
        CHECK(e.report.iterations == 1);
        CHECK(e.report.increment_norms.size() == 1);
        CHECK_FALSE(e.report.converged);
    }
}

TEST_CASE("zero state gives a zero adjoint") {
    RunConfig cfg = wall_box(5);  // zero Dirichlet data everywhere
    Mesh mesh = cfg.build_mesh();
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    PhaseField phi = PhaseField::constant(mesh, 0.5);
    FlowState st = flow.solve_navier_stokes(phi);
    CHECK(st.velocity.lpNorm<Eigen::Infinity>() < 1e-12);
    FlowState adj = flow.solve_adjoint(st, phi);
    CHECK(adj.velocity.lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(adj.pressure.lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("plug state with alpha = 0 gives a zero adjoint") {
    RunConfig cfg = wall_box(5);
    cfg.inlet_ux = "1";
    cfg.inlet_uy = "0";
    Mesh mesh = cfg.build_mesh();
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    PhaseField phi = PhaseField::constant(mesh, 1.0);
    FlowState st = flow.solve_navier_stokes(phi);
    FlowState adj = flow.solve_adjoint(st, phi);
    CHECK(adj.velocity.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("adjoint solve is linear in its right-hand side") {
    RunConfig cfg = wall_box(6);
    cfg.inlet_ux = "1";
    cfg.inlet_uy = "0";
    cfg.flow.alpha0 = 100.0;
    cfg.model.alpha0 = 100.0;
    Mesh mesh = cfg.build_mesh();
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    PhaseField phi = PhaseField::interpolate(mesh, Expr::parse("0.5+0.2*x"));
    FlowState st = flow.solve_navier_stokes(phi);

    CsrMatrix mat;
    Eigen::VectorXd rhs;
    flow.assemble_adjoint(st, phi, mat, rhs);
    Eigen::VectorXd x1 = solve_saddle(mat, rhs);
    Eigen::VectorXd x2 = solve_saddle(mat, (2.0 * rhs).eval());
    CHECK((x2 - 2.0 * x1).norm() <= 1e-10 * std::max(1.0, x1.norm()));
}

TEST_CASE("transposed-jacobian adjoint matches the assembled adjoint") {
    RunConfig cfg = preset_config("diffuser-ac");
    cfg.mesh_nx = cfg.mesh_ny = 16;
    Mesh mesh = cfg.build_mesh();
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    PhaseField phi = PhaseField::constant(mesh, 0.5);
    FlowState st = flow.solve_navier_stokes(phi);

    FlowState ref = flow.solve_adjoint(st, phi);
    FlowState fast = flow.solve_adjoint_reusing_jacobian(st, phi);
    double scale = ref.velocity.lpNorm<Eigen::Infinity>();
    CHECK((fast.velocity - ref.velocity).lpNorm<Eigen::Infinity>() <= 1e-6 * scale);
    double pscale = std::max(1.0, ref.pressure.lpNorm<Eigen::Infinity>());
    CHECK((fast.pressure - ref.pressure).lpNorm<Eigen::Infinity>() <= 1e-5 * pscale);
}

TEST_CASE("dissipation energy closed forms") {
    RunConfig cfg = wall_box(4);
    cfg.flow.mu = 1.0;
    Mesh mesh = cfg.build_mesh();
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    FlowState zero = flow.interpolate_velocity(
        [](double, double) { return std::array<double, 2>{0.0, 0.0}; });
    FlowState plug = flow.interpolate_velocity(
        [](double, double) { return std::array<double, 2>{1.0, 0.0}; });

    CHECK(flow.dissipation_energy(zero, PhaseField::constant(mesh, 0.3)) == doctest::Approx(0.0));
    CHECK(flow.dissipation_energy(plug, PhaseField::constant(mesh, 1.0)) ==
          doctest::Approx(0.0).scale(1.0));
    CHECK(flow.dissipation_energy(plug, PhaseField::constant(mesh, 0.0)) ==
          doctest::Approx(500.0).epsilon(1e-13));
}

TEST_CASE("divergence norm closed forms") {
    RunConfig cfg = wall_box(5);
    Mesh mesh = cfg.build_mesh();
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    FlowState c = flow.interpolate_velocity(
        [](double, double) { return std::array<double, 2>{2.0, -1.0}; });
    CHECK(flow.divergence_norm(c) == doctest::Approx(0.0).scale(1.0));

    FlowState rot = flow.interpolate_velocity(
        [](double x, double y) { return std::array<double, 2>{x, -y}; });
    CHECK(flow.divergence_norm(rot) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    FlowState shear = flow.interpolate_velocity(
        [](double x, double) { return std::array<double, 2>{x, 0.0}; });
    CHECK(flow.divergence_norm(shear) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("trilinear form vanishes on divergence-free fields") {
    // b(u, w, w) is controlled by the divergence residual of u
    Manufactured mms;
    for (int n : {8, 16, 32}) {
        RunConfig cfg = wall_box(n);
        cfg.inlet_ux = "sin(pi*x)*cos(pi*y)";
        cfg.inlet_uy = "-cos(pi*x)*sin(pi*y)";
        cfg.flow.mu = mms.mu;
        cfg.flow.alpha0 = mms.alpha0;
        cfg.model.alpha0 = mms.alpha0;
        cfg.flow.body_force = [mms](double x, double y) { return mms.force(x, y); };
        Mesh mesh = cfg.build_mesh();
        FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
        PhaseField phi = PhaseField::interpolate(mesh, Expr::parse("0.3+0.25*x+0.15*y"));
        FlowState u = flow.solve_navier_stokes(phi);

        // zero-trace test field with bubbles activated
        FlowState w = flow.interpolate_velocity([](double x, double y) {
            double s = x * (1 - x) * y * (1 - y);
            return std::array<double, 2>{16 * s, -8 * s};
        });
        for (int t = 0; t < mesh.triangle_count(); ++t) {
            w.velocity[flow.velocity_space().bubble_dof(0, t)] = 0.05;
            w.velocity[flow.velocity_space().bubble_dof(1, t)] = -0.03;
        }

        double b_val = std::abs(flow.trilinear_form(u, w, w));
        double div = flow.divergence_norm(u);
        INFO("n ", n, " b ", b_val, " div ", div);
        // bounded multiple of the divergence residual (integration by parts)
        CHECK(b_val <= 5.0 * div + 1e-12);
    }
}
