#include "topflow/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "topflow/error.hpp"

namespace topflow {

namespace {

constexpr double kGeoTol = 1e-9;

BoundarySegment dirichlet_segment(std::string label, std::function<bool(double, double)> contains,
                                  const std::string& ux, const std::string& uy) {
    BoundarySegment s;
    s.label = std::move(label);
    s.neumann = false;
    s.contains = std::move(contains);
    s.ux = Expr::parse(ux);
    s.uy = Expr::parse(uy);
    return s;
}

BoundarySegment neumann_segment(std::string label, std::function<bool(double, double)> contains) {
    BoundarySegment s;
    s.label = std::move(label);
    s.neumann = true;
    s.contains = std::move(contains);
    return s;
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

double to_double(const std::string& v, const std::string& key) {
    try {
        size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

int to_int(const std::string& v, const std::string& key) {
    try {
        size_t used = 0;
        int i = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    }
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

BoundarySpec RunConfig::boundary_spec() const {
    BoundarySpec spec;
    switch (geometry) {
        case Geometry::diffuser: {
            spec.segments.push_back(dirichlet_segment(
                "inlet", [](double x, double) { return std::abs(x) <= kGeoTol; }, inlet_ux,
                inlet_uy));
            spec.segments.push_back(neumann_segment("outlet", [](double x, double y) {
                return std::abs(x - 1.0) <= kGeoTol && y >= 1.0 / 3.0 - kGeoTol &&
                       y <= 2.0 / 3.0 + kGeoTol;
            }));
            spec.segments.push_back(
                dirichlet_segment("wall", [](double, double) { return true; }, "0", "0"));
            break;
        }
        case Geometry::bypass: {
            auto band = [](double y, double lo, double hi) {
                return y >= lo - kGeoTol && y <= hi + kGeoTol;
            };
            spec.segments.push_back(dirichlet_segment(
                "inlet-1",
                [band](double x, double y) { return std::abs(x) <= kGeoTol && band(y, 0.15, 0.35); },
                inlet_ux, inlet_uy));
            spec.segments.push_back(dirichlet_segment(
                "inlet-2",
                [band](double x, double y) {
                    return std::abs(x) <= kGeoTol && band(y, -0.35, -0.15);
                },
                inlet_ux, inlet_uy));
            spec.segments.push_back(neumann_segment("outlet-1", [band](double x, double y) {
                return std::abs(x - 1.5) <= kGeoTol && band(y, 0.15, 0.35);
            }));
            spec.segments.push_back(neumann_segment("outlet-2", [band](double x, double y) {
                return std::abs(x - 1.5) <= kGeoTol && band(y, -0.35, -0.15);
            }));
            spec.segments.push_back(
                dirichlet_segment("wall", [](double, double) { return true; }, "0", "0"));
            break;
        }
        case Geometry::unit_square_wall: {
            // single Dirichlet segment; the inlet expressions apply everywhere
            spec.segments.push_back(dirichlet_segment(
                "wall", [](double, double) { return true; }, inlet_ux, inlet_uy));
            break;
        }
        case Geometry::from_file: {
            // Labels come from the mesh file: inlet* segments take the inlet
            // profile, outlet* are natural, everything else is no-slip wall.
            spec.segments.push_back(dirichlet_segment(
                "inlet", [](double, double) { return false; }, inlet_ux, inlet_uy));
            break;
        }
    }
    return spec;
}

Mesh RunConfig::build_mesh() const {
    if (!mesh_file.empty()) {
        std::ifstream in(mesh_file);
        if (!in) throw ConfigError("cannot open mesh file '" + mesh_file + "'");
        return load_mesh(in);
    }
    return generate_rect_mesh(x0, x1, y0, y1, mesh_nx, mesh_ny, boundary_spec());
}

void RunConfig::validate() const {
    flow.validate();
    if (model.alpha0 != flow.alpha0)
        throw ConfigError("alpha0 mismatch between model and flow parameters");
    if (n_outer < 0) throw ConfigError("n_outer must be nonnegative");
    if (export_every < 0) throw ConfigError("export_every must be nonnegative");
    Expr::parse(phi0);
    Expr::parse(inlet_ux);
    Expr::parse(inlet_uy);
    if (!mesh_file.empty()) {
        std::ifstream in(mesh_file);
        if (!in) throw ConfigError("mesh file '" + mesh_file + "' does not exist");
    } else if (mesh_nx < 2 || mesh_ny < 2) {
        throw ConfigError("mesh_nx and mesh_ny must be at least 2");
    }
    double area = (x1 - x0) * (y1 - y0);
    if (mesh_file.empty()) model.validate(area);
}

std::vector<std::string> preset_names() {
    return {"diffuser-ac", "diffuser-ch", "bypass-ac", "bypass-ch"};
}

RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.preset = name;
    c.flow.newton_tol = 1e-8;
    c.flow.newton_max = 25;
    c.n_outer = 100;

    auto diffuser_geometry = [&] {
        c.geometry = Geometry::diffuser;
        c.x0 = 0;
        c.x1 = 1;
        c.y0 = 0;
        c.y1 = 1;
        c.mesh_nx = 96;
        c.mesh_ny = 96;
        c.inlet_ux = "1";
        c.inlet_uy = "0";
        c.model.vhat = 0.4;
    };
    auto bypass_geometry = [&] {
        c.geometry = Geometry::bypass;
        c.x0 = 0;
        c.x1 = 1.5;
        c.y0 = -0.5;
        c.y1 = 0.5;
        // endpoints of the inlet/outlet bands at y = +-0.15, +-0.35 must land
        // on grid lines, so ny is a multiple of 20
        c.mesh_nx = 120;
        c.mesh_ny = 80;
        c.inlet_ux = "-50*(y*y-0.35*0.35)*(y*y-0.15*0.15)";
        c.inlet_uy = "0";
        c.model.vhat = 0.85;
    };

    if (name == "diffuser-ac") {
        diffuser_geometry();
        c.flow.mu = 0.01;
        c.model.scheme = Scheme::allen_cahn;
        c.model.use_projection = true;
        c.model.tau = 0.005;
        c.model.eps1 = 0.001;
        c.model.eps2 = 0.1;
        c.model.beta = 5;
        c.model.eta1 = 1;
        c.model.s0 = 1;
        c.model.s1 = 0.1;
        c.model.n_phi = 10;
        c.phi0 = "0.5";
    } else if (name == "diffuser-ch") {
        diffuser_geometry();
        c.flow.mu = 0.01;
        c.model.scheme = Scheme::cahn_hilliard;
        c.model.use_projection = false;
        c.model.tau = 0.0025;
        c.model.eps1 = 0.001;
        c.model.eps2 = 0.1;
        c.model.beta = 5;
        c.model.eta1 = 1;
        c.model.s0 = 1;
        c.model.s1 = 0.5;
        c.model.n_phi = 1;
        c.phi0 = "0.65";
    } else if (name == "bypass-ac") {
        bypass_geometry();
        c.flow.mu = 0.01;
        c.model.scheme = Scheme::allen_cahn;
        c.model.use_projection = true;
        c.model.tau = 0.0005;
        c.model.eps1 = 0.001;
        c.model.eps2 = 0.1;
        c.model.beta = 500;
        c.model.eta1 = 90;
        c.model.s0 = 1;
        c.model.s1 = 0.5;
        c.model.n_phi = 10;
        c.phi0 = "min(abs(y-0.3)-0.1,abs(y+0.3)-0.1)";
    } else if (name == "bypass-ch") {
        bypass_geometry();
        c.flow.mu = 0.01;
        c.model.scheme = Scheme::cahn_hilliard;
        c.model.use_projection = false;
        c.model.tau = 0.00025;
        c.model.eps1 = 0.001;
        c.model.eps2 = 0.01;
        c.model.beta = 500;
        c.model.eta1 = 4;
        c.model.s0 = 1.0;
        c.model.s1 = 0.15;
        c.model.n_phi = 10;
        c.phi0 = "0.5";
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    c.model.alpha0 = 1000;
    c.flow.alpha0 = 1000;
    return c;
}

std::string preset_summary(const std::string& name) {
    RunConfig c = preset_config(name);
    std::ostringstream os;
    os << name << ": ";
    if (c.geometry == Geometry::diffuser)
        os << "diffuser benchmark on [0,1]^2, full-height inlet u=(1,0), outlet on the right "
              "third";
    else
        os << "bypass benchmark on [0,1.5]x[-0.5,0.5], two quartic-profile inlets, two outlets";
    os << "; scheme=" << (c.model.scheme == Scheme::allen_cahn ? "allen-cahn" : "cahn-hilliard")
       << ", mesh=" << c.mesh_nx << "x" << c.mesh_ny << ", mu=" << c.flow.mu
       << ", tau=" << c.model.tau << ", eps1=" << c.model.eps1 << ", eps2=" << c.model.eps2
       << ", beta=" << c.model.beta << ", eta1=" << c.model.eta1 << ", S0=" << c.model.s0
       << ", S1=" << c.model.s1 << ", n_phi=" << c.model.n_phi << ", vhat=" << c.model.vhat
       << ", phi0=\"" << c.phi0 << "\"";
    return os.str();
}

RunConfig parse_config(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::vector<long> entry_lines;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", lineno);
        if (value.empty()) throw ParseError("empty value for key '" + key + "'", lineno);
        for (const auto& e : entries)
            if (e.first == key) throw ParseError("duplicate key '" + key + "'", lineno);
        entries.emplace_back(key, value);
        entry_lines.push_back(lineno);
    }

    RunConfig c;
    bool have_preset = false;
    for (const auto& [key, value] : entries)
        if (key == "preset") {
            c = preset_config(value);
            have_preset = true;
        }

    for (size_t i = 0; i < entries.size(); ++i) {
        const auto& [key, value] = entries[i];
        long ln = entry_lines[i];
        try {
            if (key == "preset") {
                continue;
            } else if (key == "geometry") {
                if (value == "diffuser")
                    c.geometry = Geometry::diffuser;
                else if (value == "bypass")
                    c.geometry = Geometry::bypass;
                else if (value == "unit-square-wall")
                    c.geometry = Geometry::unit_square_wall;
                else
                    throw ConfigError("unknown geometry '" + value + "'");
            } else if (key == "mesh_file") {
                c.mesh_file = value;
                c.geometry = Geometry::from_file;
            } else if (key == "mesh_nx") {
                c.mesh_nx = to_int(value, key);
            } else if (key == "mesh_ny") {
                c.mesh_ny = to_int(value, key);
            } else if (key == "mu") {
                c.flow.mu = to_double(value, key);
            } else if (key == "alpha0") {
                c.flow.alpha0 = to_double(value, key);
                c.model.alpha0 = c.flow.alpha0;
            } else if (key == "newton_tol") {
                c.flow.newton_tol = to_double(value, key);
            } else if (key == "newton_max") {
                c.flow.newton_max = to_int(value, key);
            } else if (key == "eps1") {
                c.model.eps1 = to_double(value, key);
            } else if (key == "eps2") {
                c.model.eps2 = to_double(value, key);
            } else if (key == "beta") {
                c.model.beta = to_double(value, key);
            } else if (key == "vhat") {
                c.model.vhat = to_double(value, key);
            } else if (key == "eta1") {
                c.model.eta1 = to_double(value, key);
            } else if (key == "normalize_sensitivity") {
                c.model.normalize_sensitivity = to_bool(value, key);
            } else if (key == "s0") {
                c.model.s0 = to_double(value, key);
            } else if (key == "s1") {
                c.model.s1 = to_double(value, key);
            } else if (key == "tau") {
                c.model.tau = to_double(value, key);
            } else if (key == "scheme") {
                if (value == "allen-cahn")
                    c.model.scheme = Scheme::allen_cahn;
                else if (value == "cahn-hilliard")
                    c.model.scheme = Scheme::cahn_hilliard;
                else
                    throw ConfigError("unknown scheme '" + value + "'");
            } else if (key == "n_phi") {
                c.model.n_phi = to_int(value, key);
            } else if (key == "use_projection") {
                c.model.use_projection = to_bool(value, key);
            } else if (key == "well_quadrature") {
                if (value == "lumped")
                    c.model.well_quadrature = WellQuadrature::lumped;
                else if (value == "exact")
                    c.model.well_quadrature = WellQuadrature::exact;
                else
                    throw ConfigError("well_quadrature must be 'lumped' or 'exact'");
            } else if (key == "n_outer") {
                c.n_outer = to_int(value, key);
            } else if (key == "phi0") {
                c.phi0 = value;
            } else if (key == "inlet_ux") {
                c.inlet_ux = value;
            } else if (key == "inlet_uy") {
                c.inlet_uy = value;
            } else if (key == "outdir") {
                c.outdir = value;
            } else if (key == "export_every") {
                c.export_every = to_int(value, key);
            } else if (key == "strict_energy") {
                c.strict_energy = to_bool(value, key);
            } else {
                throw ParseError("unknown key '" + key + "'", ln);
            }
        } catch (const ParseError&) {
            throw;
        } catch (const Error& err) {
            throw ParseError(err.what(), ln);
        }
    }

    (void)have_preset;
    // full semantic validation (scheme/projection compatibility, ranges)
    c.validate();
    return c;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

}  // namespace topflow
