#include "topflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "topflow/error.hpp"

namespace topflow {

namespace {

double signed_area(const std::array<double, 2>& a, const std::array<double, 2>& b,
                   const std::array<double, 2>& c) {
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

bool valid_label_token(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::islower(static_cast<unsigned char>(c)) ||
              std::isdigit(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
            return false;
    return true;
}

}  // namespace

int Mesh::label_id(const std::string& name) const {
    for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == name) return static_cast<int>(i);
    return -1;
}

bool Mesh::label_is_neumann(int id) const {
    return labels[id].rfind("outlet", 0) == 0;
}

void Mesh::validate() {
    const int nv = vertex_count();
    const int nt = triangle_count();
    if (nv < 3 || nt < 1) throw MeshError("mesh needs at least 3 vertices and 1 triangle");

    for (int t = 0; t < nt; ++t)
        for (int k = 0; k < 3; ++k) {
            int v = triangles[t][k];
            if (v < 0 || v >= nv)
                throw MeshError("triangle " + std::to_string(t) + " references missing vertex " +
                                std::to_string(v));
        }
    for (size_t e = 0; e < boundary_edges.size(); ++e) {
        const auto& be = boundary_edges[e];
        if (be.a < 0 || be.a >= nv || be.b < 0 || be.b >= nv)
            throw MeshError("boundary edge " + std::to_string(e) + " references a missing vertex");
        if (be.label < 0 || be.label >= static_cast<int>(labels.size()))
            throw MeshError("boundary edge " + std::to_string(e) + " has an undefined label");
    }
    for (const auto& name : labels)
        if (!valid_label_token(name)) throw MeshError("invalid boundary label token '" + name + "'");

    tri_area.assign(nt, 0.0);
    domain_area = 0.0;
    for (int t = 0; t < nt; ++t) {
        const auto& tri = triangles[t];
        double a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        if (!(a > 0.0))
            throw MeshError("triangle " + std::to_string(t) +
                            " is degenerate or clockwise (signed area " + std::to_string(a) + ")");
        tri_area[t] = a;
        domain_area += a;
    }

    // Edge incidence counts; interior edges belong to exactly 2 triangles.
    std::map<std::pair<int, int>, int> edge_count;
    for (int t = 0; t < nt; ++t)
        for (int k = 0; k < 3; ++k) {
            int a = triangles[t][k], b = triangles[t][(k + 1) % 3];
            auto key = std::minmax(a, b);
            int& c = edge_count[{key.first, key.second}];
            if (++c > 2)
                throw MeshError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                ") shared by more than 2 triangles (triangle " + std::to_string(t) +
                                ")");
        }

    std::map<std::pair<int, int>, int> labeled;  // boundary edge -> list index
    for (size_t e = 0; e < boundary_edges.size(); ++e) {
        const auto& be = boundary_edges[e];
        auto key = std::minmax(be.a, be.b);
        auto it = edge_count.find({key.first, key.second});
        if (it == edge_count.end())
            throw MeshError("boundary edge " + std::to_string(e) + " is not an edge of any triangle");
        if (it->second != 1)
            throw MeshError("boundary edge " + std::to_string(e) + " is interior to the mesh");
        if (!labeled.emplace(std::pair<int, int>{key.first, key.second}, static_cast<int>(e)).second)
            throw MeshError("boundary edge " + std::to_string(e) + " is labeled more than once");
    }
    for (const auto& [key, cnt] : edge_count)
        if (cnt == 1 && labeled.find(key) == labeled.end())
            throw MeshError("unlabeled boundary edge (" + std::to_string(key.first) + "," +
                            std::to_string(key.second) + ")");

    // The labeled boundary must close up: every touched vertex has exactly 2
    // incident boundary edges.
    std::vector<int> incident(nv, 0);
    for (const auto& be : boundary_edges) {
        ++incident[be.a];
        ++incident[be.b];
    }
    for (int v = 0; v < nv; ++v)
        if (incident[v] != 0 && incident[v] != 2)
            throw MeshError("boundary is not a closed polygon at vertex " + std::to_string(v));
}

Mesh generate_rect_mesh(double x0, double x1, double y0, double y1, int nx, int ny,
                        const BoundarySpec& spec) {
    if (nx < 2 || ny < 2) throw ConfigError("generate_rect_mesh: nx and ny must be at least 2");
    if (!(x1 > x0) || !(y1 > y0)) throw ConfigError("generate_rect_mesh: degenerate interval");
    if (spec.segments.empty()) throw ConfigError("generate_rect_mesh: boundary spec has no segments");

    Mesh m;
    m.vertices.reserve(static_cast<size_t>(nx + 1) * (ny + 1));
    const double hx = (x1 - x0) / nx, hy = (y1 - y0) / ny;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m.vertices.push_back({i == nx ? x1 : x0 + i * hx, j == ny ? y1 : y0 + j * hy});

    auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

    m.triangles.reserve(static_cast<size_t>(2) * nx * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            if ((i + j) % 2 == 0) {
                m.triangles.push_back({v00, v10, v11});
                m.triangles.push_back({v00, v11, v01});
            } else {
                m.triangles.push_back({v00, v10, v01});
                m.triangles.push_back({v10, v11, v01});
            }
        }

    auto label_edge = [&](int a, int b) {
        const auto& pa = m.vertices[a];
        const auto& pb = m.vertices[b];
        const double mx = 0.5 * (pa[0] + pb[0]), my = 0.5 * (pa[1] + pb[1]);
        for (size_t s = 0; s < spec.segments.size(); ++s) {
            const auto& seg = spec.segments[s];
            // edges are assigned by midpoint, so segment ends not aligned
            // with the grid shift the split by at most half an edge
            if (seg.contains(mx, my)) {
                int id = m.label_id(seg.label);
                if (id < 0) {
                    id = static_cast<int>(m.labels.size());
                    m.labels.push_back(seg.label);
                }
                m.boundary_edges.push_back({a, b, id});
                return;
            }
        }
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "boundary spec does not cover the edge with midpoint (%.12g, %.12g)",
                      0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]));
        throw ConfigError(buf);
    };

    for (int i = 0; i < nx; ++i) label_edge(vid(i, 0), vid(i + 1, 0));          // bottom
    for (int j = 0; j < ny; ++j) label_edge(vid(nx, j), vid(nx, j + 1));        // right
    for (int i = nx; i > 0; --i) label_edge(vid(i, ny), vid(i - 1, ny));        // top
    for (int j = ny; j > 0; --j) label_edge(vid(0, j), vid(0, j - 1));          // left

    m.validate();
    return m;
}

Mesh load_mesh(std::istream& in) {
    Mesh m;
    long lineno = 0;
    std::string line;

    auto next_line = [&](const char* what) -> std::istringstream {
        while (std::getline(in, line)) {
            ++lineno;
            size_t first = line.find_first_not_of(" \t\r\n");
            if (first == std::string::npos) continue;
            return std::istringstream(line);
        }
        throw ParseError(std::string("unexpected end of mesh file, expected ") + what, lineno);
    };

    {
        auto ls = next_line("header 'mesh2d 1'");
        std::string magic;
        int version = 0;
        if (!(ls >> magic >> version) || magic != "mesh2d" || version != 1)
            throw ParseError("bad mesh header, expected 'mesh2d 1'", lineno);
    }

    auto read_count = [&](const char* keyword) -> long {
        auto ls = next_line(keyword);
        std::string kw;
        long n = -1;
        if (!(ls >> kw >> n) || kw != keyword || n < 0)
            throw ParseError(std::string("expected '") + keyword + " N'", lineno);
        return n;
    };

    long nv = read_count("vertices");
    m.vertices.reserve(nv);
    for (long i = 0; i < nv; ++i) {
        auto ls = next_line("vertex coordinates");
        double x, y;
        if (!(ls >> x >> y)) throw ParseError("bad vertex line", lineno);
        m.vertices.push_back({x, y});
    }

    long nt = read_count("triangles");
    m.triangles.reserve(nt);
    for (long t = 0; t < nt; ++t) {
        auto ls = next_line("triangle indices");
        long a, b, c;
        if (!(ls >> a >> b >> c)) throw ParseError("bad triangle line", lineno);
        if (a < 0 || a >= nv || b < 0 || b >= nv || c < 0 || c >= nv)
            throw ParseError("triangle " + std::to_string(t) + " references a missing vertex", lineno);
        m.triangles.push_back({static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)});
    }

    long nb = read_count("boundary_edges");
    m.boundary_edges.reserve(nb);
    for (long e = 0; e < nb; ++e) {
        auto ls = next_line("boundary edge");
        long a, b;
        std::string label;
        if (!(ls >> a >> b >> label)) throw ParseError("bad boundary edge line", lineno);
        if (a < 0 || a >= nv || b < 0 || b >= nv)
            throw ParseError("boundary edge " + std::to_string(e) + " references a missing vertex",
                             lineno);
        if (!valid_label_token(label))
            throw ParseError("invalid boundary label '" + label + "'", lineno);
        int id = m.label_id(label);
        if (id < 0) {
            id = static_cast<int>(m.labels.size());
            m.labels.push_back(label);
        }
        m.boundary_edges.push_back({static_cast<int>(a), static_cast<int>(b), id});
    }

    m.validate();
    return m;
}

void save_mesh(const Mesh& mesh, std::ostream& out) {
    char buf[96];
    out << "mesh2d 1\n";
    out << "vertices " << mesh.vertices.size() << "\n";
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v[0], v[1]);
        out << buf;
    }
    out << "triangles " << mesh.triangles.size() << "\n";
    for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
    out << "boundary_edges " << mesh.boundary_edges.size() << "\n";
    for (const auto& e : mesh.boundary_edges)
        out << e.a << " " << e.b << " " << mesh.labels[e.label] << "\n";
}

std::vector<int> boundary_dofs(const Mesh& mesh, BoundaryClass cls) {
    const int nv = mesh.vertex_count();
    std::vector<char> dir(nv, 0), neu(nv, 0);
    for (const auto& be : mesh.boundary_edges) {
        auto& mark = mesh.label_is_neumann(be.label) ? neu : dir;
        mark[be.a] = 1;
        mark[be.b] = 1;
    }
    std::vector<int> out;
    for (int v = 0; v < nv; ++v) {
        bool is_d = dir[v] != 0;
        bool wanted = (cls == BoundaryClass::dirichlet) ? is_d : (neu[v] && !is_d);
        if (wanted) out.push_back(v);
    }
    return out;
}

DirichletVelocity dirichlet_velocity_values(const Mesh& mesh, const BoundarySpec& spec) {
    const int nv = mesh.vertex_count();
    // Map mesh labels to spec segment indices.
    std::vector<int> seg_of_label(mesh.labels.size(), -1);
    for (size_t l = 0; l < mesh.labels.size(); ++l)
        for (size_t s = 0; s < spec.segments.size(); ++s)
            if (spec.segments[s].label == mesh.labels[l]) {
                seg_of_label[l] = static_cast<int>(s);
                break;
            }

    // A junction vertex takes the profile of its first segment in spec order.
    constexpr int kNone = 1 << 30;
    std::vector<int> best(nv, kNone);
    for (const auto& be : mesh.boundary_edges) {
        if (mesh.label_is_neumann(be.label)) continue;
        int s = seg_of_label[be.label];
        if (s < 0)
            throw ConfigError("mesh boundary label '" + mesh.labels[be.label] +
                              "' is not described by the boundary spec");
        best[be.a] = std::min(best[be.a], s);
        best[be.b] = std::min(best[be.b], s);
    }

    DirichletVelocity out;
    for (int v = 0; v < nv; ++v) {
        if (best[v] == kNone) continue;
        const auto& seg = spec.segments[best[v]];
        const auto& p = mesh.vertices[v];
        out.vertices.push_back(v);
        out.values.push_back({seg.ux.eval(p[0], p[1]), seg.uy.eval(p[0], p[1])});
    }
    return out;
}

}  // namespace topflow
