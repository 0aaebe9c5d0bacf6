#pragma once

#include <iosfwd>
#include <string>

#include "topflow/flow_solver.hpp"
#include "topflow/phase_field.hpp"

namespace topflow {

// Legacy-ASCII unstructured grid with POINT_DATA: scalar phi, scalar
// pressure, vector velocity (vertex part of the MINI field, z padded with 0).
// Output is byte-deterministic for identical inputs.
void export_vtk(const PhaseField& phi, const FlowState& state, std::ostream& out);
void export_vtk(const PhaseField& phi, const FlowState& state, const std::string& path);

}  // namespace topflow
