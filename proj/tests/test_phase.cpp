#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "topflow/config.hpp"
#include "topflow/flow_solver.hpp"
#include "topflow/phase_field.hpp"
#include "topflow/spaces.hpp"

using namespace topflow;

namespace {

RunConfig wall_box_config() {
    RunConfig cfg;
    cfg.geometry = Geometry::unit_square_wall;
    cfg.mesh_nx = 8;
    cfg.mesh_ny = 8;
    cfg.flow.mu = 1.0;
    cfg.flow.alpha0 = 1000.0;
    cfg.model.alpha0 = 1000.0;
    return cfg;
}

// independent quadrature path: Gauss-Legendre on the collapsed square
struct DuffyRule {
    std::vector<std::array<double, 3>> points;  // barycentric
    std::vector<double> weights;                // sum to 1
    DuffyRule() {
        // Gauss-Legendre nodes on [0,1] by Newton iteration on P_n
        const int n = 12;
        std::vector<double> gx(n), gw(n);
        for (int i = 0; i < n; ++i) {
            double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = t;
                for (int k = 2; k <= n; ++k) {
                    double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                double dp = n * (t * p1 - p0) / (t * t - 1.0);
                double dt = p1 / dp;
                t -= dt;
                if (std::abs(dt) < 1e-15) break;
            }
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (t * p1 - p0) / (t * t - 1.0);
            gx[i] = 0.5 * (1.0 + t);
            gw[i] = 1.0 / ((1.0 - t * t) * dp * dp);
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double u = gx[i], v = gx[j];
                double x = u * (1.0 - v), y = u * v;  // Duffy map, jacobian u
                points.push_back({1.0 - x - y, x, y});
                weights.push_back(gw[i] * gw[j] * 2.0 * u);
            }
    }
};

// second-path dissipation integral written directly from vertex data
double dissipation_reference(const Mesh& mesh, const FunctionSpace& mini, const FlowState& st,
                             const PhaseField& phi, double mu, double alpha0) {
    static const DuffyRule rule;
    double total = 0.0;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        double x0 = mesh.vertices[tri[0]][0], y0 = mesh.vertices[tri[0]][1];
        double x1 = mesh.vertices[tri[1]][0], y1 = mesh.vertices[tri[1]][1];
        double x2 = mesh.vertices[tri[2]][0], y2 = mesh.vertices[tri[2]][1];
        double twice = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0);
        double area = 0.5 * twice;
        double gl[3][2] = {{(y1 - y2) / twice, (x2 - x1) / twice},
                           {(y2 - y0) / twice, (x0 - x2) / twice},
                           {(y0 - y1) / twice, (x1 - x0) / twice}};
        double uc[2][4], av[3];
        for (int c = 0; c < 2; ++c) {
            for (int k = 0; k < 3; ++k) uc[c][k] = st.velocity[mini.vertex_dof(c, tri[k])];
            uc[c][3] = st.velocity[mini.bubble_dof(c, t)];
        }
        for (int k = 0; k < 3; ++k)
            av[k] = alpha0 * (1.0 - std::clamp(phi.values[tri[k]], 0.0, 1.0));

        for (size_t q = 0; q < rule.points.size(); ++q) {
            const auto& l = rule.points[q];
            double n[4] = {l[0], l[1], l[2], 27.0 * l[0] * l[1] * l[2]};
            double g[4][2];
            for (int k = 0; k < 3; ++k) {
                g[k][0] = gl[k][0];
                g[k][1] = gl[k][1];
            }
            for (int d = 0; d < 2; ++d)
                g[3][d] = 27.0 * (l[1] * l[2] * gl[0][d] + l[0] * l[2] * gl[1][d] +
                                  l[0] * l[1] * gl[2][d]);
            double uu[2] = {0, 0}, du2 = 0;
            for (int c = 0; c < 2; ++c) {
                double dx = 0, dy = 0;
                for (int a = 0; a < 4; ++a) {
                    uu[c] += uc[c][a] * n[a];
                    dx += uc[c][a] * g[a][0];
                    dy += uc[c][a] * g[a][1];
                }
                du2 += dx * dx + dy * dy;
            }
            double aq = av[0] * l[0] + av[1] * l[1] + av[2] * l[2];
            total += area * rule.weights[q] *
                     (0.5 * mu * du2 + 0.5 * aq * (uu[0] * uu[0] + uu[1] * uu[1]));
        }
    }
    return total;
}

}  // namespace

TEST_CASE("double well values and derivatives") {
    CHECK(double_well(0.0).first == 0.0);
    CHECK(double_well(0.0).second == 0.0);
    CHECK(double_well(1.0).first == 0.0);
    CHECK(double_well(1.0).second == 0.0);
    CHECK(double_well(0.5).first == doctest::Approx(0.015625).epsilon(1e-15));
    CHECK(double_well(0.5).second == doctest::Approx(0.0));
    CHECK(double_well(2.0).first == doctest::Approx(1.0));
    CHECK(double_well(2.0).second == doctest::Approx(2.0));
    CHECK(double_well(-1.0).first == doctest::Approx(1.0));
    CHECK(double_well(-1.0).second == doctest::Approx(-2.0));
}

TEST_CASE("double well is C1 across branch points and has Lipschitz derivative") {
    for (double p : {0.0, 1.0}) {
        double eps = 1e-9;
        auto lo = double_well(p - eps), hi = double_well(p + eps);
        CHECK(std::abs(lo.first - hi.first) < 1e-8);
        CHECK(std::abs(lo.second - hi.second) < 1e-8);
    }
    // |w'(a)-w'(b)| <= 2|a-b| sampled over a wide range
    std::mt19937 rng(3);
    auto smp = [&] { return (static_cast<double>(rng()) / 4294967296.0) * 6.0 - 3.0; };
    for (int i = 0; i < 2000; ++i) {
        double a = smp(), b = smp();
        CHECK(std::abs(double_well(a).second - double_well(b).second) <=
              2.0 * std::abs(a - b) + 1e-14);
        CHECK(double_well(a).first >= 0.0);
    }
}

TEST_CASE("permeability clamps and its derivative") {
    Mesh m = generate_rect_mesh(0, 1, 0, 1, 2, 2, preset_config("diffuser-ac").boundary_spec());
    Eigen::VectorXd v(m.vertex_count());
    v.setConstant(0.5);
    v[0] = 1.0;
    v[1] = 0.0;
    v[2] = 1.22;
    v[3] = -0.5;
    Permeability p = permeability(PhaseField(m, v), 1000.0);
    CHECK(p.alpha[0] == doctest::Approx(0.0));
    CHECK(p.alpha[1] == doctest::Approx(1000.0));
    CHECK(p.alpha[2] == doctest::Approx(0.0));     // clamped above
    CHECK(p.dalpha[2] == doctest::Approx(0.0));    // flat in the clamped region
    CHECK(p.alpha[3] == doctest::Approx(1000.0));  // clamped below
    CHECK(p.dalpha[3] == doctest::Approx(0.0));
    CHECK(p.alpha[4] == doctest::Approx(500.0));
    CHECK(p.dalpha[4] == doctest::Approx(-1000.0));
}

TEST_CASE("projection clamps nodally and is idempotent") {
    Mesh m = generate_rect_mesh(0, 1, 0, 1, 2, 2, preset_config("diffuser-ac").boundary_spec());
    Eigen::VectorXd v(m.vertex_count());
    for (int i = 0; i < v.size(); ++i) v[i] = 0.1 * i;
    v[0] = -0.06;
    v[1] = 0.5;
    v[2] = 1.37;
    PhaseField phi(m, v);
    PhaseField proj = project_unit_interval(phi);
    CHECK(proj.values[0] == 0.0);
    CHECK(proj.values[1] == 0.5);
    CHECK(proj.values[2] == 1.0);
    PhaseField proj2 = project_unit_interval(proj);
    for (int i = 0; i < v.size(); ++i) CHECK(proj2.values[i] == proj.values[i]);

    // already in range: bit-identical
    PhaseField inrange = PhaseField::constant(m, 0.65);
    PhaseField same = project_unit_interval(inrange);
    for (int i = 0; i < v.size(); ++i) CHECK(same.values[i] == inrange.values[i]);
    CHECK(same.min_value == 0.65);
    CHECK(same.max_value == 0.65);
}

TEST_CASE("solid volume") {
    Mesh unit = generate_rect_mesh(0, 1, 0, 1, 4, 4, preset_config("diffuser-ac").boundary_spec());
    P1Operators ops = P1Operators::build(unit);
    CHECK(solid_volume(PhaseField::constant(unit, 1.0), ops) == doctest::Approx(0.0));
    CHECK(solid_volume(PhaseField::constant(unit, 0.5), ops) ==
          doctest::Approx(0.5).epsilon(1e-13));

    Mesh byp = generate_rect_mesh(0, 1.5, -0.5, 0.5, 30, 20,
                                  preset_config("bypass-ac").boundary_spec());
    P1Operators bops = P1Operators::build(byp);
    CHECK(solid_volume(PhaseField::constant(byp, 0.65), bops) ==
          doctest::Approx(0.525).epsilon(1e-13));
}

TEST_CASE("ginzburg-landau terms") {
    Mesh m = generate_rect_mesh(0, 1, 0, 1, 6, 6, preset_config("diffuser-ac").boundary_spec());
    P1Operators ops = P1Operators::build(m);
    ModelParams params;
    params.eps1 = 0.001;
    params.eps2 = 0.1;

    auto [g0, w0] = ginzburg_landau(PhaseField::constant(m, 0.5), params, ops);
    CHECK(g0 == doctest::Approx(0.0));
    CHECK(w0 == doctest::Approx(0.15625).epsilon(1e-13));

    PhaseField linear = PhaseField::interpolate(m, Expr::parse("x"));
    auto [g1, w1] = ginzburg_landau(linear, params, ops);
    CHECK(g1 == doctest::Approx(0.0005).epsilon(1e-12));

    // exact well quadrature agrees with the lumped one for in-range fields up
    // to the quartic-vs-nodal difference; both are exact for constants
    params.well_quadrature = WellQuadrature::exact;
    auto [g2, w2] = ginzburg_landau(PhaseField::constant(m, 0.5), params, ops);
    CHECK(w2 == doctest::Approx(0.15625).epsilon(1e-13));
}

TEST_CASE("total energy breakdown") {
    RunConfig cfg = wall_box_config();
    Mesh m = cfg.build_mesh();
    P1Operators ops = P1Operators::build(m);
    FlowSystem flow(m, cfg.boundary_spec(), cfg.flow);

    SUBCASE("all zero components") {
        ModelParams params;
        params.vhat = 0.0;
        params.alpha0 = 1000.0;
        FlowState zero = flow.interpolate_velocity([](double, double) {
            return std::array<double, 2>{0.0, 0.0};
        });
        EnergyBreakdown e = total_energy(PhaseField::constant(m, 1.0), zero, params, flow, ops);
        CHECK(e.gl_gradient == 0.0);
        CHECK(e.gl_well == 0.0);
        CHECK(e.dissipation == doctest::Approx(0.0));
        CHECK(e.volume_penalty == doctest::Approx(0.0));
        CHECK(e.total == doctest::Approx(0.0));
    }

    SUBCASE("volume penalty with benchmark parameters") {
        ModelParams params;
        params.beta = 5.0;
        params.vhat = 0.4;
        params.eps2 = 0.1;
        params.alpha0 = 1000.0;
        FlowState plug = flow.interpolate_velocity([](double, double) {
            return std::array<double, 2>{1.0, 0.0};
        });
        EnergyBreakdown e = total_energy(PhaseField::constant(m, 0.5), plug, params, flow, ops);
        CHECK(e.volume_penalty == doctest::Approx(0.025).epsilon(1e-12));
        CHECK(e.total ==
              doctest::Approx(e.gl_gradient + e.gl_well + e.dissipation + e.volume_penalty)
                  .epsilon(1e-14));
    }
}

TEST_CASE("dual-path energy oracle on a solved state") {
    RunConfig cfg = wall_box_config();
    cfg.inlet_ux = "1";  // plug Dirichlet data drives a nontrivial solve
    cfg.inlet_uy = "0";
    cfg.flow.mu = 0.1;
    cfg.flow.alpha0 = 10.0;
    cfg.model.alpha0 = 10.0;
    Mesh m = cfg.build_mesh();
    P1Operators ops = P1Operators::build(m);
    FlowSystem flow(m, cfg.boundary_spec(), cfg.flow);
    PhaseField phi = PhaseField::interpolate(m, Expr::parse("0.5+0.3*x-0.2*y"));
    FlowState st = flow.solve_navier_stokes(phi);

    double j1 = flow.dissipation_energy(st, phi);
    double j2 = dissipation_reference(m, flow.velocity_space(), st, phi, cfg.flow.mu,
                                      cfg.flow.alpha0);
    CHECK(j1 == doctest::Approx(j2).epsilon(1e-12));

    // gradient term by direct per-triangle accumulation
    ModelParams params;
    params.eps1 = 0.001;
    params.eps2 = 0.1;
    params.alpha0 = 10.0;
    auto [g, w] = ginzburg_landau(phi, params, ops);
    double g2 = 0.0;
    for (int t = 0; t < m.triangle_count(); ++t) {
        const auto& tri = m.triangles[t];
        double x0 = m.vertices[tri[0]][0], y0 = m.vertices[tri[0]][1];
        double x1 = m.vertices[tri[1]][0], y1 = m.vertices[tri[1]][1];
        double x2 = m.vertices[tri[2]][0], y2 = m.vertices[tri[2]][1];
        double twice = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0);
        double gx = (phi.values[tri[0]] * (y1 - y2) + phi.values[tri[1]] * (y2 - y0) +
                     phi.values[tri[2]] * (y0 - y1)) /
                    twice;
        double gy = (phi.values[tri[0]] * (x2 - x1) + phi.values[tri[1]] * (x0 - x2) +
                     phi.values[tri[2]] * (x1 - x0)) /
                    twice;
        g2 += 0.5 * twice * (gx * gx + gy * gy);
    }
    g2 *= 0.5 * params.eps1;
    CHECK(g == doctest::Approx(g2).epsilon(1e-12));

    // well term against a per-triangle area/3 lumping
    double w2 = 0.0;
    for (int t = 0; t < m.triangle_count(); ++t) {
        const auto& tri = m.triangles[t];
        for (int k = 0; k < 3; ++k)
            w2 += m.tri_area[t] / 3.0 * double_well(phi.values[tri[k]]).first;
    }
    w2 /= params.eps2;
    CHECK(w == doctest::Approx(w2).epsilon(1e-12));
}

TEST_CASE("projection leaves permeability and solid volume exactly invariant") {
    Mesh m = generate_rect_mesh(0, 1, 0, 1, 5, 5, preset_config("diffuser-ac").boundary_spec());
    P1Operators ops = P1Operators::build(m);
    std::mt19937 rng(17);
    auto smp = [&] { return (static_cast<double>(rng()) / 4294967296.0) * 3.0 - 1.0; };
    for (int trial = 0; trial < 25; ++trial) {
        Eigen::VectorXd v(m.vertex_count());
        for (int i = 0; i < v.size(); ++i) v[i] = smp();
        PhaseField phi(m, v);
        PhaseField proj = project_unit_interval(phi);
        Permeability pa = permeability(phi, 1000.0);
        Permeability pb = permeability(proj, 1000.0);
        for (int i = 0; i < v.size(); ++i) CHECK(pa.alpha[i] == pb.alpha[i]);
        CHECK(solid_volume(phi, ops) == solid_volume(proj, ops));
    }
}

TEST_CASE("projection never increases the total energy") {
    RunConfig cfg = wall_box_config();
    cfg.inlet_ux = "1";
    cfg.inlet_uy = "0";
    Mesh m = cfg.build_mesh();
    P1Operators ops = P1Operators::build(m);
    FlowSystem flow(m, cfg.boundary_spec(), cfg.flow);
    ModelParams params;
    params.eps1 = 0.001;
    params.eps2 = 0.1;
    params.beta = 5.0;
    params.vhat = 0.4;
    params.alpha0 = 1000.0;
    FlowState plug = flow.interpolate_velocity(
        [](double, double) { return std::array<double, 2>{1.0, 0.0}; });

    std::mt19937 rng(11);
    auto smp = [&] { return (static_cast<double>(rng()) / 4294967296.0) * 4.0 - 1.5; };
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd v(m.vertex_count());
        for (int i = 0; i < v.size(); ++i) v[i] = smp();
        PhaseField phi(m, v);
        double before = total_energy(phi, plug, params, flow, ops).total;
        double after = total_energy(project_unit_interval(phi), plug, params, flow, ops).total;
        CHECK(after <= before + 1e-12 * std::max(1.0, std::abs(before)));
    }
}
