#include "lsc/grid.hpp"

#include <cmath>

namespace lsc {

Grid::Grid(Vec2 origin, double h, int nx, int ny) : origin_(origin), h_(h), nx_(nx), ny_(ny) {
    if (!(h > 0.0)) fail("Grid: spacing must be positive, got ", h);
    if (nx < 4 || ny < 4) fail("Grid: need at least 4 nodes per axis, got ", nx, " x ", ny);
}

Grid Grid::covering(const Aabb& box, double h, int halo) {
    if (!box.valid()) fail("Grid::covering: invalid box");
    const Vec2 origin{box.lo.x - halo * h, box.lo.y - halo * h};
    const int nx = static_cast<int>(std::ceil((box.hi.x - box.lo.x) / h - 1e-12)) + 1 + 2 * halo;
    const int ny = static_cast<int>(std::ceil((box.hi.y - box.lo.y) / h - 1e-12)) + 1 + 2 * halo;
    return Grid(origin, h, nx, ny);
}

CellIndex Grid::cell_of(const Vec2& p) const {
    int i = static_cast<int>(std::floor((p.x - origin_.x) / h_));
    int j = static_cast<int>(std::floor((p.y - origin_.y) / h_));
    i = std::clamp(i, 0, nx_ - 2);
    j = std::clamp(j, 0, ny_ - 2);
    return {i, j};
}

namespace detail {

void check_in_bounds(const Grid& g, const Vec2& p, const char* op) {
    const Aabb b = g.bounds();
    if (!b.contains(p))
        fail(op, ": point (", p.x, ", ", p.y, ") outside grid [", b.lo.x, ", ", b.hi.x, "] x [",
             b.lo.y, ", ", b.hi.y, "]");
}

CellLocal locate(const Grid& g, const Vec2& p) {
    const CellIndex c = g.cell_of(p);
    const Vec2 o = g.cell_origin(c);
    return {c, (p.x - o.x) / g.h(), (p.y - o.y) / g.h()};
}

}  // namespace detail

Vec2 node_gradient(const ScalarField& f, int i, int j) {
    const Grid& g = f.grid();
    const int il = g.clamp_i(i - 1), ir = g.clamp_i(i + 1);
    const int jd = g.clamp_j(j - 1), ju = g.clamp_j(j + 1);
    const double dx = (ir - il) * g.h();
    const double dy = (ju - jd) * g.h();
    return {(f(ir, j) - f(il, j)) / dx, (f(i, ju) - f(i, jd)) / dy};
}

Vec2 gradient(const ScalarField& f, const Vec2& p) {
    detail::check_in_bounds(f.grid(), p, "gradient");
    const auto [c, xi, eta] = detail::locate(f.grid(), p);
    const Vec2 g00 = node_gradient(f, c.i, c.j), g10 = node_gradient(f, c.i + 1, c.j);
    const Vec2 g01 = node_gradient(f, c.i, c.j + 1), g11 = node_gradient(f, c.i + 1, c.j + 1);
    return g00 * ((1 - xi) * (1 - eta)) + g10 * (xi * (1 - eta)) + g01 * ((1 - xi) * eta) +
           g11 * (xi * eta);
}

CellClass classify_cell(const ScalarField& phi, const CellIndex& c) {
    const double v[4] = {phi(c.i, c.j), phi(c.i + 1, c.j), phi(c.i + 1, c.j + 1),
                         phi(c.i, c.j + 1)};
    bool all_neg = true, all_pos = true;
    for (double x : v) {
        all_neg = all_neg && x < 0.0;
        all_pos = all_pos && x > 0.0;
    }
    if (all_neg) return CellClass::Interior;
    if (all_pos) return CellClass::Exterior;
    return CellClass::Cut;
}

}  // namespace lsc
