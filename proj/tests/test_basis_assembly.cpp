#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "topflow/config.hpp"
#include "topflow/error.hpp"
#include "topflow/flow_solver.hpp"
#include "topflow/mesh.hpp"
#include "topflow/solvers.hpp"
#include "topflow/spaces.hpp"

using namespace topflow;

namespace {

BoundarySpec wall_spec() {
    BoundarySpec spec;
    BoundarySegment wall;
    wall.label = "wall";
    wall.contains = [](double, double) { return true; };
    wall.ux = Expr::parse("0");
    wall.uy = Expr::parse("0");
    spec.segments.push_back(wall);
    return spec;
}

}  // namespace

TEST_CASE("dof counts per space kind") {
    Mesh m = generate_rect_mesh(0, 1, 0, 1, 3, 4, wall_spec());
    FunctionSpace p1 = make_scalar_p1(m);
    FunctionSpace mini = make_vector_mini(m);
    CHECK(p1.dof_count == m.vertex_count());
    CHECK(mini.dof_count == 2 * (m.vertex_count() + m.triangle_count()));
}

TEST_CASE("P1 basis is nodal and MINI bubble is 1 at the centroid") {
    Mesh m = generate_rect_mesh(0, 1, 0, 1, 2, 2, wall_spec());
    FunctionSpace p1 = make_scalar_p1(m);
    FunctionSpace mini = make_vector_mini(m);

    BasisEval at_v0 = eval_basis(p1, 0, {1.0, 0.0, 0.0});
    CHECK(at_v0.count == 3);
    CHECK(at_v0.value[0] == doctest::Approx(1.0));
    CHECK(at_v0.value[1] == doctest::Approx(0.0));
    CHECK(at_v0.value[2] == doctest::Approx(0.0));

    BasisEval centroid = eval_basis(mini, 0, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    CHECK(centroid.count == 4);
    CHECK(centroid.value[3] == doctest::Approx(1.0));

    // partition of unity: P1 gradients sum to zero
    BasisEval e = eval_basis(p1, 1, {0.2, 0.5, 0.3});
    double gx = e.grad[0][0] + e.grad[1][0] + e.grad[2][0];
    double gy = e.grad[0][1] + e.grad[1][1] + e.grad[2][1];
    CHECK(gx == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(gy == doctest::Approx(0.0).epsilon(1e-14));

    // bubble gradient vanishes at the centroid by symmetry
    CHECK(centroid.grad[3][0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(centroid.grad[3][1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("degenerate triangle is rejected") {
    Mesh m;
    m.vertices = {{0, 0}, {1, 0}, {2, 0}};
    m.triangles = {{0, 1, 2}};
    FunctionSpace p1{SpaceKind::scalar_p1, &m, 3};
    CHECK_THROWS_AS(eval_basis(p1, 0, {1. / 3, 1. / 3, 1. / 3}), MeshError);
}

TEST_CASE("P1 mass matrix row sums and total") {
    Mesh m = generate_rect_mesh(0, 2, 0, 1.5, 5, 4, wall_spec());
    P1Operators ops = P1Operators::build(m);
    Eigen::VectorXd rs = ops.mass.multiply(Eigen::VectorXd::Ones(m.vertex_count()));
    for (int i = 0; i < m.vertex_count(); ++i)
        CHECK(rs[i] == doctest::Approx(ops.lumped_mass[i]).epsilon(1e-14));
    CHECK(rs.sum() == doctest::Approx(3.0).epsilon(1e-12));  // |Omega| = 3
}

TEST_CASE("stiffness matrix annihilates constants") {
    Mesh m = generate_rect_mesh(0, 1, 0, 1, 6, 6, wall_spec());
    P1Operators ops = P1Operators::build(m);
    Eigen::VectorXd k1 = ops.stiffness.multiply(Eigen::VectorXd::Ones(m.vertex_count()));
    double kmax = 0.0;
    for (double v : ops.stiffness.val) kmax = std::max(kmax, std::abs(v));
    CHECK(k1.lpNorm<Eigen::Infinity>() <= 1e-12 * kmax);
}

TEST_CASE("MINI velocity mass matrix is SPD (Cholesky succeeds)") {
    Mesh m = generate_rect_mesh(0, 1, 0, 1, 3, 3, wall_spec());
    FunctionSpace mini = make_vector_mini(m);
    auto geom = compute_geometry(m);
    QuadratureRule quad = quadrature_rule(4);

    const int nt = m.triangle_count();
    std::vector<int> dofs(static_cast<size_t>(nt) * 8);
    for (int t = 0; t < nt; ++t)
        for (int c = 0; c < 2; ++c) {
            for (int k = 0; k < 3; ++k)
                dofs[t * 8 + c * 4 + k] = mini.vertex_dof(c, m.triangles[t][k]);
            dofs[t * 8 + c * 4 + 3] = mini.bubble_dof(c, t);
        }
    FormAssembler assembler(mini.dof_count, mini.dof_count, nt, 8, 8, dofs, dofs);
    CsrMatrix mass;
    assembler.assemble(
        Exec::parallel,
        [&](int t, double* local, double*) {
            const TriGeometry& g = geom[t];
            for (const auto& qp : quad.points) {
                double n[4] = {qp.lambda[0], qp.lambda[1], qp.lambda[2],
                               27.0 * qp.lambda[0] * qp.lambda[1] * qp.lambda[2]};
                for (int c = 0; c < 2; ++c)
                    for (int a = 0; a < 4; ++a)
                        for (int b = 0; b < 4; ++b)
                            local[(c * 4 + a) * 8 + c * 4 + b] +=
                                g.area * qp.weight * n[a] * n[b];
            }
        },
        mass);

    SpdFactorization chol;
    CHECK_NOTHROW(chol.factorize(mass));
}

TEST_CASE("serial and parallel assembly produce identical matrices") {
    RunConfig cfg = preset_config("diffuser-ac");
    cfg.mesh_nx = 12;
    cfg.mesh_ny = 12;
    Mesh m = cfg.build_mesh();
    FlowSystem flow(m, cfg.boundary_spec(), cfg.flow);
    PhaseField phi = PhaseField::interpolate(m, Expr::parse("0.3+0.2*x+0.1*y"));
    FlowState st = flow.initial_state();

    CsrMatrix js, jp;
    Eigen::VectorXd rs, rp;
    flow.assemble_oseen(st, phi, js, rs, Exec::serial);
    flow.assemble_oseen(st, phi, jp, rp, Exec::parallel);
    REQUIRE(js.val.size() == jp.val.size());
    for (size_t k = 0; k < js.val.size(); ++k) CHECK(js.val[k] == jp.val[k]);
    for (int i = 0; i < rs.size(); ++i) CHECK(rs[i] == rp[i]);

    CsrMatrix as, ap;
    Eigen::VectorXd ars, arp;
    flow.assemble_adjoint(st, phi, as, ars, Exec::serial);
    flow.assemble_adjoint(st, phi, ap, arp, Exec::parallel);
    for (size_t k = 0; k < as.val.size(); ++k) CHECK(as.val[k] == ap.val[k]);
    for (int i = 0; i < ars.size(); ++i) CHECK(ars[i] == arp[i]);
}
