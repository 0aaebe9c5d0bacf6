// Compares the serial reference element loops against the OpenMP path and
// checks that both produce identical matrices.

#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "topflow/config.hpp"
#include "topflow/flow_solver.hpp"
#include "topflow/phase_field.hpp"
#include "topflow/sparse.hpp"

using namespace topflow;
namespace chrono = std::chrono;

namespace {

double ms_since(chrono::steady_clock::time_point t0) {
    return chrono::duration<double, std::milli>(chrono::steady_clock::now() - t0).count();
}

void bench_mesh(int n, int reps) {
    RunConfig cfg = preset_config("diffuser-ac");
    cfg.mesh_nx = n;
    cfg.mesh_ny = n;
    Mesh mesh = cfg.build_mesh();
    FlowSystem flow(mesh, cfg.boundary_spec(), cfg.flow);
    PhaseField phi = PhaseField::constant(mesh, 0.5);
    FlowState state = flow.initial_state();

    CsrMatrix js, jp;
    Eigen::VectorXd rs, rp;
    flow.assemble_oseen(state, phi, js, rs, Exec::serial);  // warm up structures

    auto t0 = chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) flow.assemble_oseen(state, phi, js, rs, Exec::serial);
    double serial_ms = ms_since(t0) / reps;

    t0 = chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) flow.assemble_oseen(state, phi, jp, rp, Exec::parallel);
    double parallel_ms = ms_since(t0) / reps;

    double max_diff = 0.0;
    for (size_t k = 0; k < js.val.size(); ++k)
        max_diff = std::max(max_diff, std::abs(js.val[k] - jp.val[k]));
    max_diff = std::max(max_diff, (rs - rp).lpNorm<Eigen::Infinity>());

    std::printf("%4dx%-4d  %8d tris  serial %8.2f ms  openmp %8.2f ms  speedup %5.2fx  "
                "max|diff| %.3g\n",
                n, n, mesh.triangle_count(), serial_ms, parallel_ms, serial_ms / parallel_ms,
                max_diff);
}

}  // namespace

int main(int argc, char** argv) {
    int reps = argc > 1 ? std::stoi(argv[1]) : 5;
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled\n");
#endif
    for (int n : {48, 96, 144}) bench_mesh(n, reps);
    return 0;
}
