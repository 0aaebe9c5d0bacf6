#include "topflow/spaces.hpp"

#include <cmath>

#include "topflow/error.hpp"

namespace topflow {

FunctionSpace make_scalar_p1(const Mesh& mesh) {
    return {SpaceKind::scalar_p1, &mesh, mesh.vertex_count()};
}

FunctionSpace make_vector_mini(const Mesh& mesh) {
    return {SpaceKind::vector_mini, &mesh,
            2 * (mesh.vertex_count() + mesh.triangle_count())};
}

namespace {

TriGeometry triangle_geometry(const Mesh& mesh, int t) {
    TriGeometry g;
    g.v = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
        g.x[k] = mesh.vertices[g.v[k]][0];
        g.y[k] = mesh.vertices[g.v[k]][1];
    }
    double twice = (g.x[1] - g.x[0]) * (g.y[2] - g.y[0]) - (g.y[1] - g.y[0]) * (g.x[2] - g.x[0]);
    g.area = 0.5 * twice;
    if (!(g.area > 0.0))
        throw MeshError("triangle " + std::to_string(t) + " is degenerate (area " +
                        std::to_string(g.area) + ")");
    // grad lambda_k is the inward normal of the opposite edge over 2*area
    for (int k = 0; k < 3; ++k) {
        int i = (k + 1) % 3, j = (k + 2) % 3;
        g.grad_lambda[k][0] = (g.y[i] - g.y[j]) / twice;
        g.grad_lambda[k][1] = (g.x[j] - g.x[i]) / twice;
    }
    return g;
}

}  // namespace

std::vector<TriGeometry> compute_geometry(const Mesh& mesh) {
    std::vector<TriGeometry> out(mesh.triangle_count());
#pragma omp parallel for schedule(static)
    for (int t = 0; t < mesh.triangle_count(); ++t) out[t] = triangle_geometry(mesh, t);
    return out;
}

BasisEval eval_basis(const FunctionSpace& space, int triangle, const std::array<double, 3>& bary) {
    const TriGeometry g = triangle_geometry(*space.mesh, triangle);
    BasisEval e{};
    e.count = space.kind == SpaceKind::scalar_p1 ? 3 : 4;
    for (int k = 0; k < 3; ++k) {
        e.value[k] = bary[k];
        e.grad[k] = g.grad_lambda[k];
    }
    if (e.count == 4) {
        e.value[3] = 27.0 * bary[0] * bary[1] * bary[2];
        for (int d = 0; d < 2; ++d)
            e.grad[3][d] = 27.0 * (bary[1] * bary[2] * g.grad_lambda[0][d] +
                                   bary[0] * bary[2] * g.grad_lambda[1][d] +
                                   bary[0] * bary[1] * g.grad_lambda[2][d]);
    }
    return e;
}

P1Operators P1Operators::build(const Mesh& mesh, Exec exec) {
    P1Operators ops;
    ops.mesh = &mesh;
    ops.geom = compute_geometry(mesh);
    ops.area = mesh.domain_area;

    const int nt = mesh.triangle_count();
    const int nv = mesh.vertex_count();
    std::vector<int> dofs(static_cast<size_t>(nt) * 3);
    for (int t = 0; t < nt; ++t)
        for (int k = 0; k < 3; ++k) dofs[static_cast<size_t>(t) * 3 + k] = mesh.triangles[t][k];

    FormAssembler assembler(nv, nv, nt, 3, 3, dofs, dofs);
    const QuadratureRule quad = quadrature_rule(2);
    const auto& geom = ops.geom;

    assembler.assemble(
        exec,
        [&](int t, double* local, double*) {
            const TriGeometry& g = geom[t];
            for (const auto& qp : quad.points)
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        local[a * 3 + b] += g.area * qp.weight * qp.lambda[a] * qp.lambda[b];
        },
        ops.mass);

    FormAssembler stiff_assembler(nv, nv, nt, 3, 3, dofs, dofs);
    stiff_assembler.assemble(
        exec,
        [&](int t, double* local, double*) {
            const TriGeometry& g = geom[t];
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    local[a * 3 + b] += g.area * (g.grad_lambda[a][0] * g.grad_lambda[b][0] +
                                                  g.grad_lambda[a][1] * g.grad_lambda[b][1]);
        },
        ops.stiffness);

    ops.lumped_mass = ops.mass.multiply(Eigen::VectorXd::Ones(nv));
    return ops;
}

double P1Operators::l2_norm(const Eigen::VectorXd& nodal) const {
    return std::sqrt(std::max(0.0, nodal.dot(mass.multiply(nodal))));
}

double P1Operators::h1_seminorm_sq(const Eigen::VectorXd& nodal) const {
    return nodal.dot(stiffness.multiply(nodal));
}

}  // namespace topflow
