#include "lsc/io.hpp"

#include <cstdio>
#include <fstream>

namespace lsc {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ScalarField read_level_set_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("read_level_set_text: cannot open ", path);
    int nx = 0, ny = 0;
    double h = 0, ox = 0, oy = 0;
    if (!(in >> nx >> ny >> h >> ox >> oy))
        fail("read_level_set_text: bad header in ", path);
    const Grid g({ox, oy}, h, nx, ny);
    ScalarField f(g);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            if (!(in >> f(i, j))) fail("read_level_set_text: truncated data in ", path);
    return f;
}

void write_level_set_text(const std::string& path, const ScalarField& f) {
    std::ofstream out(path);
    if (!out) fail("write_level_set_text: cannot open ", path);
    const Grid& g = f.grid();
    out << g.nx() << " " << g.ny() << " " << format_double(g.h()) << " "
        << format_double(g.origin().x) << " " << format_double(g.origin().y) << "\n";
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) out << format_double(f(i, j)) << (i + 1 < g.nx() ? " " : "");
        out << "\n";
    }
}

std::vector<Vec2> read_polygon_vertices(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("read_polygon_vertices: cannot open ", path);
    std::vector<Vec2> verts;
    double x, y;
    while (in >> x >> y) verts.push_back({x, y});
    if (verts.size() < 3) fail("read_polygon_vertices: fewer than 3 vertices in ", path);
    return verts;
}

void write_body_vtk(const std::string& path, const Body& body,
                    const std::vector<MaterialPoint>& points) {
    std::ofstream out(path);
    if (!out) fail("write_body_vtk: cannot open ", path);
    const Grid& g = body.grid();

    out << "# vtk DataFile Version 3.0\n";
    out << "body " << body.name << "\n";
    out << "ASCII\nDATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << g.nx() << " " << g.ny() << " 1\n";
    out << "ORIGIN " << format_double(g.origin().x) << " " << format_double(g.origin().y)
        << " 0\n";
    out << "SPACING " << format_double(g.h()) << " " << format_double(g.h()) << " 1\n";
    out << "POINT_DATA " << g.node_count() << "\n";

    out << "SCALARS phi double 1\nLOOKUP_TABLE default\n";
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) out << format_double(body.ls.phi()(i, j)) << "\n";

    out << "VECTORS displacement double\n";
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            Vec2 u{0, 0};
            if (body.rigid) {
                u = body.motion.displacement_at(g.node_pos(i, j));
            } else if (!body.u.empty()) {
                const std::size_t n = static_cast<std::size_t>(g.node_id(i, j));
                u = {body.u[2 * n], body.u[2 * n + 1]};
            }
            out << format_double(u.x) << " " << format_double(u.y) << " 0\n";
        }

    // Stress invariants reconstructed from the body's material points; nodes
    // without nearby points report zero.
    std::vector<Vec2> xs;
    std::vector<double> s1v, vmv;
    for (const MaterialPoint& p : points)
        if (p.body == body.id) xs.push_back(p.x);
    if (!xs.empty()) {
        const PointCloud cloud(xs, g.h());
        std::vector<double> comp[3];
        for (int c = 0; c < 3; ++c) {
            for (const MaterialPoint& p : points)
                if (p.body == body.id) comp[c].push_back(p.stress(c));
        }
        MlsConfig cfg;
        s1v.resize(static_cast<std::size_t>(g.node_count()), 0.0);
        vmv.resize(static_cast<std::size_t>(g.node_count()), 0.0);
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                if (body.ls.phi()(i, j) > g.h()) continue;
                double s[3] = {0, 0, 0};
                bool ok = true;
                for (int c = 0; c < 3 && ok; ++c) {
                    try {
                        s[c] = mls_reconstruct(cloud, comp[c], g.node_pos(i, j), g.h(), cfg);
                    } catch (const Error&) {
                        ok = false;
                    }
                }
                if (!ok) continue;
                const std::size_t n = static_cast<std::size_t>(g.node_id(i, j));
                s1v[n] = max_principal_stress(s[0], s[1], s[2]);
                const double m = 0.5 * (s[0] + s[1]);
                vmv[n] = std::sqrt(0.25 * (s[0] - s[1]) * (s[0] - s[1]) + s[2] * s[2] + m * m);
            }
    }
    out << "SCALARS s1 double 1\nLOOKUP_TABLE default\n";
    for (int n = 0; n < g.node_count(); ++n)
        out << format_double(s1v.empty() ? 0.0 : s1v[static_cast<std::size_t>(n)]) << "\n";
    out << "SCALARS shear_measure double 1\nLOOKUP_TABLE default\n";
    for (int n = 0; n < g.node_count(); ++n)
        out << format_double(vmv.empty() ? 0.0 : vmv[static_cast<std::size_t>(n)]) << "\n";
}

void write_points_csv(const std::string& path, const std::vector<MaterialPoint>& points) {
    std::ofstream out(path);
    if (!out) fail("write_points_csv: cannot open ", path);
    out << "x,y,volume,sxx,syy,sxy,body\n";
    for (const MaterialPoint& p : points)
        out << format_double(p.x.x) << "," << format_double(p.x.y) << ","
            << format_double(p.volume) << "," << format_double(p.stress(0)) << ","
            << format_double(p.stress(1)) << "," << format_double(p.stress(2)) << "," << p.body
            << "\n";
}

void write_pair_csv(const std::string& path, const ContactPair& pair) {
    std::ofstream out(path);
    if (!out) fail("write_pair_csv: cannot open ", path);
    out << "x,y,n_x,n_y,g_n,g_t,g_t_plastic,tau_n,tau_t,active\n";
    for (const ContactPoint& p : pair.points)
        out << format_double(p.x.x) << "," << format_double(p.x.y) << "," << format_double(p.n.x)
            << "," << format_double(p.n.y) << "," << format_double(p.gn) << ","
            << format_double(p.gt) << "," << format_double(p.gt_plastic) << ","
            << format_double(p.tau_n) << "," << format_double(p.tau_t) << ","
            << (p.active ? 1 : 0) << "\n";
}

void write_traction_profile_csv(const std::string& path, const ContactPair& pair) {
    std::ofstream out(path);
    if (!out) fail("write_traction_profile_csv: cannot open ", path);
    out << "arc,x,y,tau_n,tau_t\n";
    for (const ContactPoint& p : pair.points)
        out << format_double(p.arc) << "," << format_double(p.x.x) << "," << format_double(p.x.y)
            << "," << format_double(p.tau_n) << "," << format_double(p.tau_t) << "\n";
}

}  // namespace lsc
