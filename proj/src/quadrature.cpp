#include "lsc/quadrature.hpp"

#include <cmath>

namespace lsc {

namespace {

double poly_area(const std::vector<Vec2>& v) {
    double a = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) a += cross(v[k], v[(k + 1) % v.size()]);
    return 0.5 * a;
}

// Perimeter walk collecting inside corners and edge crossings for the given
// subset of inside corners (mask over 4 corners).
std::vector<Vec2> walk(const Vec2 p[4], const double f[4], int inside_mask) {
    std::vector<Vec2> poly;
    for (int k = 0; k < 4; ++k) {
        const int k2 = (k + 1) % 4;
        if (inside_mask & (1 << k)) poly.push_back(p[k]);
        const bool in_k = (inside_mask & (1 << k)) != 0;
        const bool in_k2 = (inside_mask & (1 << k2)) != 0;
        if (in_k != in_k2) {
            const double t = f[k] / (f[k] - f[k2]);
            poly.push_back(p[k] + t * (p[k2] - p[k]));
        }
    }
    return poly;
}

}  // namespace

std::vector<std::vector<Vec2>> cut_cell_polygons(const ScalarField& phi, const CellIndex& c) {
    const Grid& g = phi.grid();
    const Vec2 p[4] = {g.node_pos(c.i, c.j), g.node_pos(c.i + 1, c.j), g.node_pos(c.i + 1, c.j + 1),
                       g.node_pos(c.i, c.j + 1)};
    const double f[4] = {phi(c.i, c.j), phi(c.i + 1, c.j), phi(c.i + 1, c.j + 1),
                         phi(c.i, c.j + 1)};

    int code = 0;
    for (int k = 0; k < 4; ++k)
        if (f[k] < 0.0) code |= 1 << k;

    std::vector<std::vector<Vec2>> polys;
    if (code == 0) return polys;
    if (code == 15) {
        polys.push_back({p[0], p[1], p[2], p[3]});
        return polys;
    }
    if (code == 5 || code == 10) {
        // Saddle: decide connectivity from the center value.
        const double center = 0.25 * (f[0] + f[1] + f[2] + f[3]);
        const bool joined = center < 0.0;
        if (joined) {
            polys.push_back(walk(p, f, code));  // one band across the cell
        } else {
            const int c0 = code == 5 ? 0 : 1;
            const int c1 = code == 5 ? 2 : 3;
            polys.push_back(walk(p, f, 1 << c0));
            polys.push_back(walk(p, f, 1 << c1));
        }
        return polys;
    }
    polys.push_back(walk(p, f, code));
    return polys;
}

QuadratureSet build_quadrature(const LevelSet& ls) {
    const Grid& g = ls.grid();
    const ScalarField& phi = ls.phi();
    const double h = g.h();

    QuadratureSet qs;
    qs.cell_begin.assign(static_cast<std::size_t>(g.cell_count()), 0);
    qs.cell_end.assign(static_cast<std::size_t>(g.cell_count()), 0);

    const double goff = h / (2.0 * std::sqrt(3.0));
    const double area_floor = 1e-3 * h * h;
    const double degenerate = 1e-12 * h * h;

    for (int j = 0; j < g.ny() - 1; ++j) {
        for (int i = 0; i < g.nx() - 1; ++i) {
            const CellIndex c{i, j};
            const int cid = g.cell_id(i, j);
            qs.cell_begin[static_cast<std::size_t>(cid)] = static_cast<int>(qs.points.size());

            const CellClass cls = classify_cell(phi, c);
            if (cls == CellClass::Interior) {
                const Vec2 mid = g.cell_origin(c) + Vec2{h / 2, h / 2};
                for (int sy : {-1, 1})
                    for (int sx : {-1, 1}) {
                        qs.points.push_back(
                            {mid + Vec2{sx * goff, sy * goff}, h * h / 4.0, QuadKind::FullGauss});
                        qs.cell_of_point.push_back(cid);
                    }
            } else if (cls == CellClass::Cut) {
                double cell_area = 0.0;
                std::vector<std::pair<Vec2, double>> tri_pts;
                for (const auto& poly : cut_cell_polygons(phi, c)) {
                    if (poly.size() < 3) continue;
                    Vec2 centroid{0, 0};
                    for (const Vec2& v : poly) centroid += v;
                    centroid *= 1.0 / static_cast<double>(poly.size());
                    for (std::size_t k = 0; k < poly.size(); ++k) {
                        const Vec2& a = poly[k];
                        const Vec2& b = poly[(k + 1) % poly.size()];
                        const double area = 0.5 * std::abs(cross(a - centroid, b - centroid));
                        if (area < degenerate) continue;
                        tri_pts.push_back({(centroid + a + b) * (1.0 / 3.0), area});
                        cell_area += area;
                    }
                }
                if (cell_area < area_floor) {
                    if (!tri_pts.empty() || cell_area > 0.0) ++qs.skipped_cells;
                } else {
                    for (const auto& [x, w] : tri_pts) {
                        qs.points.push_back({x, w, QuadKind::SubTriangle});
                        qs.cell_of_point.push_back(cid);
                    }
                }
            }
            qs.cell_end[static_cast<std::size_t>(cid)] = static_cast<int>(qs.points.size());
        }
    }

    for (const QuadPoint& q : qs.points) qs.total_weight += q.w;
    return qs;
}

}  // namespace lsc
