#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "topflow/config.hpp"
#include "topflow/driver.hpp"
#include "topflow/error.hpp"
#include "topflow/vtk.hpp"

namespace fs = std::filesystem;
using namespace topflow;

namespace {

int cmd_run(const std::string& config_path, const std::string& outdir_override, bool strict,
            int export_every_override) {
    RunConfig cfg = parse_config_file(config_path);
    if (!outdir_override.empty()) cfg.outdir = outdir_override;
    if (strict) cfg.strict_energy = true;
    if (export_every_override >= 0) cfg.export_every = export_every_override;

    fs::create_directories(cfg.outdir);
    std::ofstream log(fs::path(cfg.outdir) / "run.log");
    if (!log) throw Error("cannot open run.log in '" + cfg.outdir + "'");

    Mesh mesh = cfg.build_mesh();
    std::printf("mesh: %d vertices, %d triangles, area %.12g\n", mesh.vertex_count(),
                mesh.triangle_count(), mesh.domain_area);

    RunHooks hooks;
    hooks.log = &log;
    hooks.on_record = [&](const IterationRecord& rec, const PhaseField& phi,
                          const FlowState& state) {
        std::printf("iter %4d  W=%.10e  V=%.6f  ell=%.4g  phi=[%.3f,%.3f]  newton=%d\n", rec.iter,
                    rec.energy.total, rec.volume, rec.ell, rec.phi_min, rec.phi_max,
                    rec.newton_iters);
        std::fflush(stdout);
        if (cfg.export_every > 0 && rec.iter % cfg.export_every == 0) {
            char name[64];
            std::snprintf(name, sizeof name, "state_%04d.vtk", rec.iter);
            export_vtk(phi, state, (fs::path(cfg.outdir) / name).string());
        }
    };

    RunResult result = run_optimization(cfg, mesh, hooks);

    export_history(result, (fs::path(cfg.outdir) / "history.csv").string());
    if (result.phi.mesh != nullptr && result.state.velocity.size() > 0)
        export_vtk(result.phi, result.state, (fs::path(cfg.outdir) / "state_final.vtk").string());

    switch (result.status) {
        case ExitStatus::completed:
            std::printf("completed: %zu history rows, final volume %.6f, tau %.6g\n",
                        result.history.size(),
                        result.history.empty() ? 0.0 : result.history.back().volume,
                        result.final_tau);
            return 0;
        case ExitStatus::newton_failed:
            std::printf("newton_failed after %d tau halvings (%zu history rows)\n",
                        result.tau_halvings, result.history.size());
            return 2;
        case ExitStatus::energy_violation:
            std::printf("energy_violation: strict mode aborted the run (%zu history rows)\n",
                        result.history.size());
            return 3;
    }
    return 1;
}

int cmd_check(const std::string& config_path) {
    RunConfig cfg = parse_config_file(config_path);
    std::printf("config ok: scheme=%s mesh=%s n_outer=%d\n",
                cfg.model.scheme == Scheme::allen_cahn ? "allen-cahn" : "cahn-hilliard",
                cfg.mesh_file.empty()
                    ? (std::to_string(cfg.mesh_nx) + "x" + std::to_string(cfg.mesh_ny)).c_str()
                    : cfg.mesh_file.c_str(),
                cfg.n_outer);
    return 0;
}

int cmd_presets() {
    for (const auto& name : preset_names()) std::printf("%s\n", preset_summary(name).c_str());
    return 0;
}

int cmd_mesh_gen(const std::string& preset, const std::string& out_path, int nx, int ny) {
    RunConfig cfg;
    if (preset == "diffuser")
        cfg = preset_config("diffuser-ac");
    else if (preset == "bypass")
        cfg = preset_config("bypass-ac");
    else if (preset == "unit-square-wall")
        cfg.geometry = Geometry::unit_square_wall;
    else
        throw ConfigError("unknown mesh preset '" + preset +
                          "' (expected diffuser, bypass or unit-square-wall)");
    if (nx > 0) cfg.mesh_nx = nx;
    if (ny > 0) cfg.mesh_ny = ny;

    Mesh mesh = cfg.build_mesh();
    std::ofstream out(out_path);
    if (!out) throw Error("cannot open '" + out_path + "'");
    save_mesh(mesh, out);
    std::printf("wrote %s: %d vertices, %d triangles, %zu boundary edges\n", out_path.c_str(),
                mesh.vertex_count(), mesh.triangle_count(), mesh.boundary_edges.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"phase-field topology optimization of incompressible Navier-Stokes channels"};
    app.require_subcommand(1);

    std::string config_path, outdir, mesh_preset, mesh_out;
    bool strict = false;
    int export_every = -1, nx = 0, ny = 0;

    auto* run = app.add_subcommand("run", "run an optimization from a config file");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--outdir", outdir, "output directory (overrides config)");
    run->add_flag("--strict-energy", strict, "abort on any energy increase");
    run->add_option("--export-every", export_every, "VTK export cadence in outer iterations");

    auto* check = app.add_subcommand("check", "validate a config file");
    check->add_option("--config", config_path, "config file")->required();

    app.add_subcommand("presets", "list built-in configurations");

    auto* meshgen = app.add_subcommand("mesh-gen", "generate a benchmark mesh file");
    meshgen->add_option("--preset", mesh_preset, "diffuser | bypass | unit-square-wall")
        ->required();
    meshgen->add_option("--out", mesh_out, "output mesh file")->required();
    meshgen->add_option("--nx", nx, "cells in x");
    meshgen->add_option("--ny", ny, "cells in y");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("run")) return cmd_run(config_path, outdir, strict, export_every);
        if (app.got_subcommand("check")) return cmd_check(config_path);
        if (app.got_subcommand("presets")) return cmd_presets();
        if (app.got_subcommand("mesh-gen")) return cmd_mesh_gen(mesh_preset, mesh_out, nx, ny);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
