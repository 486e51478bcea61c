#pragma once

#include <span>
#include <vector>

#include "lsc/contour.hpp"
#include "lsc/grid.hpp"

namespace lsc {

// Signed-distance convention: phi < 0 inside the body, 0 on the boundary,
// > 0 outside.
class LevelSet {
public:
    LevelSet(int body, ScalarField phi) : body_(body), phi_(std::move(phi)) {}

    int body() const { return body_; }
    const Grid& grid() const { return phi_.grid(); }
    const ScalarField& phi() const { return phi_; }
    ScalarField& phi() { return phi_; }

    double value_at(const Vec2& p) const { return interpolate(phi_, p); }
    Vec2 gradient_at(const Vec2& p) const { return gradient(phi_, p); }

    // Outward unit normal grad(phi)/|grad(phi)|; throws on degenerate gradient.
    Vec2 normal_at(const Vec2& p) const;

    // Closest point projection onto the zero isocontour via the alternating
    // surface-Newton / tangential-correction iteration. Converged when
    // |phi| < 1e-3 h and the tangential correction is below the same scale.
    Vec2 closest_point(const Vec2& x0) const;

private:
    int body_;
    ScalarField phi_;
};

// Exact signed distance primitives. All shapes must keep a 3h margin to the
// grid boundary; violations throw.
LevelSet make_circle(int body, const Grid& g, const Vec2& center, double radius,
                     bool check_margin = true);
LevelSet make_rectangle(int body, const Grid& g, const Vec2& lo, const Vec2& hi);
// Per-segment distance with winding-number sign. Self-intersecting input throws.
LevelSet make_polygon(int body, const Grid& g, std::span<const Vec2> vertices);

double polygon_signed_distance(std::span<const Vec2> vertices, const Vec2& p);
bool polygon_self_intersects(std::span<const Vec2> vertices);
double polygon_area(std::span<const Vec2> vertices);

}  // namespace lsc
