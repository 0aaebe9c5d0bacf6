#include "topflow/vtk.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "topflow/error.hpp"

namespace topflow {

void export_vtk(const PhaseField& phi, const FlowState& state, std::ostream& out) {
    const Mesh& mesh = *phi.mesh;
    const int nv = mesh.vertex_count();
    const int nt = mesh.triangle_count();
    const int stride = nv + nt;
    if (state.velocity.size() != 2 * stride || state.pressure.size() != nv)
        throw Error("export_vtk: state does not match the phase field's mesh");

    char buf[128];
    out << "# vtk DataFile Version 3.0\n";
    out << "topflow fields\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << nv << " double\n";
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "%.17e %.17e 0\n", v[0], v[1]);
        out << buf;
    }
    out << "CELLS " << nt << " " << 4 * nt << "\n";
    for (const auto& t : mesh.triangles) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    out << "CELL_TYPES " << nt << "\n";
    for (int t = 0; t < nt; ++t) out << "5\n";

    out << "POINT_DATA " << nv << "\n";
    out << "SCALARS phi double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (int i = 0; i < nv; ++i) {
        std::snprintf(buf, sizeof buf, "%.17e\n", phi.values[i]);
        out << buf;
    }
    out << "SCALARS pressure double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (int i = 0; i < nv; ++i) {
        std::snprintf(buf, sizeof buf, "%.17e\n", state.pressure[i]);
        out << buf;
    }
    out << "VECTORS velocity double\n";
    for (int i = 0; i < nv; ++i) {
        std::snprintf(buf, sizeof buf, "%.17e %.17e 0\n", state.velocity[i],
                      state.velocity[stride + i]);
        out << buf;
    }
    if (!out) throw Error("export_vtk: write failure");
}

void export_vtk(const PhaseField& phi, const FlowState& state, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("export_vtk: cannot open '" + path + "'");
    export_vtk(phi, state, out);
    out.close();
    if (!out) throw Error("export_vtk: write failure on '" + path + "'");
}

}  // namespace topflow
