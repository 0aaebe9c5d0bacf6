#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "topflow/expr.hpp"

namespace topflow {

// One named piece of the boundary. Segments are tried in order and the first
// one containing both endpoints of a boundary edge labels it, so a catch-all
// (e.g. "wall") should come last. Dirichlet segments carry the prescribed
// velocity profile as closed-form expressions of (x, y).
struct BoundarySegment {
    std::string label;
    bool neumann = false;  // natural (do-nothing) outflow segment
    std::function<bool(double, double)> contains;
    Expr ux, uy;  // Dirichlet profile; ignored for neumann segments
};

struct BoundarySpec {
    std::vector<BoundarySegment> segments;
};

enum class BoundaryClass { dirichlet, neumann };

// Conforming 2D triangle mesh with labeled boundary edges. Immutable after
// construction/validation; safe to share read-only across threads.
struct Mesh {
    struct BoundaryEdge {
        int a, b;   // vertex indices
        int label;  // index into labels
    };

    std::vector<std::array<double, 2>> vertices;
    std::vector<std::array<int, 3>> triangles;  // counterclockwise
    std::vector<BoundaryEdge> boundary_edges;
    std::vector<std::string> labels;

    // caches filled by validate()
    std::vector<double> tri_area;
    double domain_area = 0.0;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }

    int label_id(const std::string& name) const;
    const std::string& label_name(int id) const { return labels[id]; }
    // Labels starting with "outlet" are natural-outflow (Neumann) segments;
    // every other label is a Dirichlet segment.
    bool label_is_neumann(int id) const;

    // Checks all structural invariants (orientation, edge manifoldness,
    // closed labeled boundary) and fills the area caches. Throws MeshError.
    void validate();
};

// Structured triangulation of [x0,x1]x[y0,y1] with nx*ny cells split along
// alternating diagonals (2*nx*ny triangles, (nx+1)*(ny+1) vertices).
Mesh generate_rect_mesh(double x0, double x1, double y0, double y1, int nx, int ny,
                        const BoundarySpec& spec);

// Line-oriented text format (see README); validation runs eagerly on load.
Mesh load_mesh(std::istream& in);
void save_mesh(const Mesh& mesh, std::ostream& out);

// Vertex indices on boundary edges of the requested class. At junctions where
// a vertex touches edges of both classes, Dirichlet wins.
std::vector<int> boundary_dofs(const Mesh& mesh, BoundaryClass cls);

// Vertices on Dirichlet boundary edges with the profile of the first matching
// segment (in spec order) evaluated at the vertex.
struct DirichletVelocity {
    std::vector<int> vertices;
    std::vector<std::array<double, 2>> values;
};
DirichletVelocity dirichlet_velocity_values(const Mesh& mesh, const BoundarySpec& spec);

}  // namespace topflow
