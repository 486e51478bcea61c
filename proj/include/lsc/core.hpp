#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lsc {

class Error : public std::runtime_error {
public:
    explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}
};

template <class... Parts>
std::string cat(Parts&&... parts) {
    std::ostringstream os;
    os.precision(17);
    (os << ... << parts);
    return os.str();
}

template <class... Parts>
[[noreturn]] void fail(Parts&&... parts) {
    throw Error(cat(std::forward<Parts>(parts)...));
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator-() const { return {-x, -y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm2(const Vec2& v) { return v.x * v.x + v.y * v.y; }
inline double norm(const Vec2& v) { return std::sqrt(norm2(v)); }

// +90 degree rotation; used as the tangent convention t = rot90(n).
inline Vec2 rot90(const Vec2& v) { return {-v.y, v.x}; }

inline Vec2 rotate(const Vec2& v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

struct Aabb {
    Vec2 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
    Vec2 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};

    void extend(const Vec2& p) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
    bool valid() const { return lo.x <= hi.x && lo.y <= hi.y; }
    bool contains(const Vec2& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
    bool overlaps(const Aabb& o) const {
        return valid() && o.valid() && lo.x <= o.hi.x && o.lo.x <= hi.x && lo.y <= o.hi.y &&
               o.lo.y <= hi.y;
    }
    Aabb inflated(double r) const { return {{lo.x - r, lo.y - r}, {hi.x + r, hi.y + r}}; }
};

// Distance from p to segment [a,b] and the closest point on it.
inline Vec2 closest_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 d = b - a;
    const double len2 = norm2(d);
    if (len2 == 0.0) return a;
    double t = dot(p - a, d) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return a + t * d;
}

inline double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    return norm(p - closest_on_segment(p, a, b));
}

}  // namespace lsc
