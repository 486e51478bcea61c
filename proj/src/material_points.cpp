#include "lsc/material_points.hpp"

namespace lsc {

std::vector<MaterialPoint> seed_points(int body, const QuadratureSet& quad) {
    if (quad.points.empty()) fail("seed_points: empty quadrature for body ", body);
    std::vector<MaterialPoint> pts;
    pts.reserve(quad.points.size());
    for (const QuadPoint& q : quad.points) {
        MaterialPoint p;
        p.x = q.x;
        p.volume = q.w;
        p.body = body;
        pts.push_back(p);
    }
    return pts;
}

void update_points(std::vector<MaterialPoint>& points, const Body& body) {
    const Grid& g = body.grid();
    const Eigen::Matrix3d d = body.mat.stiffness();

    // Points should sit in quadrature-active cells; one living in a skipped
    // sliver cut cell is evaluated through the nearest active neighbor cell
    // instead. Only points with no active cell nearby are corrupt state.
    auto evaluation_cell = [&](const Vec2& x) -> CellIndex {
        const CellIndex c = g.cell_of(x);
        if (body.cell_active[static_cast<std::size_t>(g.cell_id(c.i, c.j))]) return c;
        double best = std::numeric_limits<double>::max();
        CellIndex best_c{-1, -1};
        for (int dj = -2; dj <= 2; ++dj)
            for (int di = -2; di <= 2; ++di) {
                const int ci = c.i + di, cj = c.j + dj;
                if (ci < 0 || ci >= g.nx() - 1 || cj < 0 || cj >= g.ny() - 1) continue;
                if (!body.cell_active[static_cast<std::size_t>(g.cell_id(ci, cj))]) continue;
                const Vec2 center = g.cell_origin({ci, cj}) + Vec2{g.h() / 2, g.h() / 2};
                const double d2 = norm2(center - x);
                if (d2 < best) {
                    best = d2;
                    best_c = {ci, cj};
                }
            }
        if (best_c.i < 0)
            fail("update_points: point (", x.x, ", ", x.y, ") of body ", body.id,
                 " is outside all active cells");
        return best_c;
    };

    for (MaterialPoint& p : points) {
        const CellIndex c = evaluation_cell(p.x);

        const auto nodes = cell_nodes(g, c);
        Eigen::Matrix<double, 8, 1> ue;
        for (int a = 0; a < 4; ++a) {
            ue(2 * a) = body.u[static_cast<std::size_t>(2 * nodes[static_cast<std::size_t>(a)])];
            ue(2 * a + 1) =
                body.u[static_cast<std::size_t>(2 * nodes[static_cast<std::size_t>(a)] + 1)];
        }
        const Eigen::Vector3d strain = bmatrix(g, c, p.x) * ue;
        const auto shape = shape_values(g, c, p.x);
        Vec2 disp{0, 0};
        for (int a = 0; a < 4; ++a) {
            disp.x += shape[static_cast<std::size_t>(a)] * ue(2 * a);
            disp.y += shape[static_cast<std::size_t>(a)] * ue(2 * a + 1);
        }
        p.stress += d * strain;
        p.x += disp;
    }
}

std::vector<Eigen::Vector3d> project_state(const std::vector<MaterialPoint>& points,
                                           const QuadratureSet& quad, double h,
                                           const MlsConfig& cfg) {
    std::vector<Vec2> xs;
    xs.reserve(points.size());
    for (const MaterialPoint& p : points) xs.push_back(p.x);
    const PointCloud cloud(xs, h);

    std::vector<Eigen::Vector3d> out(quad.points.size(), Eigen::Vector3d::Zero());
    std::vector<double> comp(points.size());
    for (int c = 0; c < 3; ++c) {
        for (std::size_t k = 0; k < points.size(); ++k) comp[k] = points[k].stress(c);
        for (std::size_t q = 0; q < quad.points.size(); ++q) {
            try {
                out[q](c) = mls_reconstruct(cloud, comp, quad.points[q].x, h, cfg);
            } catch (const Error& e) {
                fail("project_state: quadrature point (", quad.points[q].x.x, ", ",
                     quad.points[q].x.y, "): ", e.what());
            }
        }
    }
    return out;
}

double total_volume(const std::vector<MaterialPoint>& points) {
    double v = 0.0;
    for (const MaterialPoint& p : points) v += p.volume;
    return v;
}

}  // namespace lsc
