#pragma once

#include <Eigen/Dense>
#include <array>

#include "topflow/mesh.hpp"
#include "topflow/quadrature.hpp"
#include "topflow/sparse.hpp"

namespace topflow {

enum class SpaceKind { scalar_p1, vector_mini };

// Dof layout:
//   scalar-P1:    dof v = vertex v, dof_count = V
//   vector-MINI:  component c in {0,1} occupies a block of V vertex dofs
//                 followed by T bubble dofs, dof_count = 2*(V+T)
struct FunctionSpace {
    SpaceKind kind;
    const Mesh* mesh;
    int dof_count;

    int component_stride() const {
        return mesh->vertex_count() + mesh->triangle_count();
    }
    int vertex_dof(int comp, int v) const { return comp * component_stride() + v; }
    int bubble_dof(int comp, int t) const {
        return comp * component_stride() + mesh->vertex_count() + t;
    }
};

FunctionSpace make_scalar_p1(const Mesh& mesh);
FunctionSpace make_vector_mini(const Mesh& mesh);

// Values and physical gradients of the scalar basis generators on one
// triangle at a barycentric point: the three hat functions and, for MINI,
// the cubic bubble 27*l1*l2*l3 (value 1 at the centroid).
struct BasisEval {
    int count;
    std::array<double, 4> value;
    std::array<std::array<double, 2>, 4> grad;
};
BasisEval eval_basis(const FunctionSpace& space, int triangle,
                     const std::array<double, 3>& bary);

// Per-triangle geometry used by every element kernel.
struct TriGeometry {
    std::array<int, 3> v;
    std::array<double, 3> x, y;
    double area;
    std::array<std::array<double, 2>, 3> grad_lambda;
};
std::vector<TriGeometry> compute_geometry(const Mesh& mesh);

// P1 mass and stiffness with lumped masses and the domain area; built once
// per mesh and shared by the phase-field and gradient-flow kernels.
struct P1Operators {
    const Mesh* mesh = nullptr;
    std::vector<TriGeometry> geom;
    CsrMatrix mass, stiffness;
    Eigen::VectorXd lumped_mass;
    double area = 0.0;

    static P1Operators build(const Mesh& mesh, Exec exec = Exec::parallel);

    double integral(const Eigen::VectorXd& nodal) const { return lumped_mass.dot(nodal); }
    double l2_norm(const Eigen::VectorXd& nodal) const;
    double h1_seminorm_sq(const Eigen::VectorXd& nodal) const;
};

}  // namespace topflow
