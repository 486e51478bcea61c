#include "lsc/level_set.hpp"

#include <cmath>

namespace lsc {

namespace {

constexpr double kDegenerateGrad = 1e-8;
constexpr int kCppMaxIter = 50;

void check_margin(const Grid& g, const Aabb& shape_box, const char* what) {
    const double m = 3.0 * g.h();
    const Aabb b = g.bounds();
    if (shape_box.lo.x < b.lo.x + m || shape_box.lo.y < b.lo.y + m ||
        shape_box.hi.x > b.hi.x - m || shape_box.hi.y > b.hi.y - m)
        fail(what, ": shape must keep a 3h margin to the grid boundary");
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

}  // namespace

Vec2 LevelSet::normal_at(const Vec2& p) const {
    const Vec2 gr = gradient_at(p);
    const double n = norm(gr);
    if (n <= kDegenerateGrad)
        fail("normal: degenerate level-set gradient ", n, " at (", p.x, ", ", p.y, ")");
    return gr / n;
}

Vec2 LevelSet::closest_point(const Vec2& x0) const {
    const double h = grid().h();
    const double tol = 1e-3 * h;

    // Residuals of the projection conditions at x: distance to the contour
    // along the gradient and the tangential misalignment correction.
    auto residuals = [&](const Vec2& x, Vec2& d1, Vec2& d2) {
        const Vec2 gr = gradient_at(x);
        const double gg = dot(gr, gr);
        if (gg <= kDegenerateGrad * kDegenerateGrad)
            fail("closest_point: degenerate gradient at (", x.x, ", ", x.y, ")");
        const double phi_x = value_at(x);
        d1 = -(phi_x / gg) * gr;
        const Vec2 r = x0 - x;
        d2 = r - (dot(r, gr) / gg) * gr;
        return std::abs(phi_x);
    };

    Vec2 x = x0;
    Vec2 d1, d2;
    double phi_abs = residuals(x, d1, d2);
    for (int k = 0; k < kCppMaxIter; ++k) {
        if (phi_abs < tol && norm(d2) < tol) return x;

        // Full alternating step; the tangential correction is backtracked
        // when it overshoots (interpolated fields bend sharply around
        // corners and the full correction can cycle there).
        const double merit = phi_abs + norm(d2);
        double lambda = 1.0;
        Vec2 xn;
        Vec2 d1n, d2n;
        double phin = 0.0;
        for (int bt = 0; bt < 9; ++bt) {
            xn = x + d1 + lambda * d2;
            if (!grid().contains(xn)) {
                lambda *= 0.5;
                continue;
            }
            phin = residuals(xn, d1n, d2n);
            if (phin + norm(d2n) <= merit || bt == 8) break;
            lambda *= 0.5;
        }
        if (!grid().contains(xn))
            fail("closest_point: iterate left the grid starting from (", x0.x, ", ", x0.y, ")");
        x = xn;
        d1 = d1n;
        d2 = d2n;
        phi_abs = phin;
    }
    fail("closest_point: no convergence after ", kCppMaxIter, " iterations from (", x0.x, ", ",
         x0.y, "); |phi| = ", phi_abs, ", tangential residual = ", norm(d2));
}

LevelSet make_circle(int body, const Grid& g, const Vec2& center, double radius,
                     bool do_check) {
    if (!(radius > 0.0)) fail("make_circle: radius must be positive");
    Aabb box;
    box.extend(center - Vec2{radius, radius});
    box.extend(center + Vec2{radius, radius});
    if (do_check) check_margin(g, box, "make_circle");

    ScalarField phi(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) phi(i, j) = norm(g.node_pos(i, j) - center) - radius;
    return {body, std::move(phi)};
}

LevelSet make_rectangle(int body, const Grid& g, const Vec2& lo, const Vec2& hi) {
    if (!(lo.x < hi.x && lo.y < hi.y)) fail("make_rectangle: empty rectangle");
    check_margin(g, {lo, hi}, "make_rectangle");

    const Vec2 c = 0.5 * (lo + hi);
    const Vec2 half = 0.5 * (hi - lo);
    ScalarField phi(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const Vec2 p = g.node_pos(i, j);
            const Vec2 q{std::abs(p.x - c.x) - half.x, std::abs(p.y - c.y) - half.y};
            const Vec2 qp{std::max(q.x, 0.0), std::max(q.y, 0.0)};
            phi(i, j) = norm(qp) + std::min(std::max(q.x, q.y), 0.0);
        }
    return {body, std::move(phi)};
}

double polygon_area(std::span<const Vec2> v) {
    double a = 0.0;
    const std::size_t n = v.size();
    for (std::size_t k = 0; k < n; ++k) a += cross(v[k], v[(k + 1) % n]);
    return 0.5 * a;
}

bool polygon_self_intersects(std::span<const Vec2> v) {
    const int n = static_cast<int>(v.size());
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            // Skip adjacent edges (shared vertex).
            if (b == a || (b + 1) % n == a || (a + 1) % n == b) continue;
            if (segments_intersect(v[static_cast<std::size_t>(a)],
                                   v[static_cast<std::size_t>((a + 1) % n)],
                                   v[static_cast<std::size_t>(b)],
                                   v[static_cast<std::size_t>((b + 1) % n)]))
                return true;
        }
    }
    return false;
}

double polygon_signed_distance(std::span<const Vec2> v, const Vec2& p) {
    const std::size_t n = v.size();
    double d = std::numeric_limits<double>::max();
    int winding = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2& a = v[k];
        const Vec2& b = v[(k + 1) % n];
        d = std::min(d, segment_distance(p, a, b));
        if (a.y <= p.y) {
            if (b.y > p.y && cross(b - a, p - a) > 0) ++winding;
        } else {
            if (b.y <= p.y && cross(b - a, p - a) < 0) --winding;
        }
    }
    return winding != 0 ? -d : d;
}

LevelSet make_polygon(int body, const Grid& g, std::span<const Vec2> vertices) {
    if (vertices.size() < 3) fail("make_polygon: need at least 3 vertices");
    if (polygon_self_intersects(vertices)) fail("make_polygon: polygon self-intersects");

    Aabb box;
    for (const Vec2& p : vertices) box.extend(p);
    check_margin(g, box, "make_polygon");

    ScalarField phi(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            phi(i, j) = polygon_signed_distance(vertices, g.node_pos(i, j));
    return {body, std::move(phi)};
}

}  // namespace lsc
