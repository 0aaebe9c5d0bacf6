#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "topflow/expr.hpp"
#include "topflow/flow_solver.hpp"
#include "topflow/mesh.hpp"
#include "topflow/phase_field.hpp"

namespace topflow {

// Built-in rectangular benchmark geometries; the boundary segments and their
// Dirichlet profiles come from here unless the mesh is loaded from a file.
enum class Geometry { diffuser, bypass, unit_square_wall, from_file };

struct RunConfig {
    std::string preset;  // empty when assembled key by key
    Geometry geometry = Geometry::unit_square_wall;
    std::string mesh_file;  // when set, overrides the generated geometry
    int mesh_nx = 64, mesh_ny = 64;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    std::string inlet_ux = "0", inlet_uy = "0";  // Dirichlet inlet profile

    FlowParams flow;
    ModelParams model;

    int n_outer = 100;
    std::string phi0 = "0.5";
    std::string outdir = "out";
    int export_every = 0;  // 0: final state only
    bool strict_energy = false;

    BoundarySpec boundary_spec() const;
    Mesh build_mesh() const;
    void validate() const;  // throws ConfigError / ParseError
};

// key = value text, '#' comments, unknown or duplicate keys rejected.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_file(const std::string& path);

std::vector<std::string> preset_names();
RunConfig preset_config(const std::string& name);
std::string preset_summary(const std::string& name);

}  // namespace topflow
