#pragma once

#include <cstdint>
#include <vector>

#include "lsc/core.hpp"

namespace lsc {

struct NodeIndex {
    int i = 0;
    int j = 0;
};

struct CellIndex {
    int i = 0;
    int j = 0;
    bool operator==(const CellIndex&) const = default;
};

enum class CellClass : std::uint8_t { Interior, Cut, Exterior };

// Uniform node-centered Cartesian lattice. Isotropic spacing. Grids are small
// value types; fields copy them so there are no lifetime ties.
class Grid {
public:
    Grid(Vec2 origin, double h, int nx, int ny);

    // Grid whose nodes cover `box` plus `halo` extra node layers on each side.
    static Grid covering(const Aabb& box, double h, int halo = 3);

    const Vec2& origin() const { return origin_; }
    double h() const { return h_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int node_count() const { return nx_ * ny_; }
    int cell_count() const { return (nx_ - 1) * (ny_ - 1); }

    int node_id(int i, int j) const { return j * nx_ + i; }
    int cell_id(int i, int j) const { return j * (nx_ - 1) + i; }
    Vec2 node_pos(int i, int j) const { return {origin_.x + i * h_, origin_.y + j * h_}; }
    Vec2 cell_origin(const CellIndex& c) const { return node_pos(c.i, c.j); }

    Aabb bounds() const { return {origin_, node_pos(nx_ - 1, ny_ - 1)}; }
    bool contains(const Vec2& p) const { return bounds().contains(p); }

    int clamp_i(int i) const { return i < 0 ? 0 : (i >= nx_ ? nx_ - 1 : i); }
    int clamp_j(int j) const { return j < 0 ? 0 : (j >= ny_ ? ny_ - 1 : j); }

    // Cell containing p, clamped to the valid cell range.
    CellIndex cell_of(const Vec2& p) const;

    bool operator==(const Grid& o) const {
        return origin_.x == o.origin_.x && origin_.y == o.origin_.y && h_ == o.h_ &&
               nx_ == o.nx_ && ny_ == o.ny_;
    }

private:
    Vec2 origin_;
    double h_;
    int nx_;
    int ny_;
};

template <class T>
class NodalField {
public:
    NodalField() : grid_({0, 0}, 1.0, 4, 4), values_(16) {}
    explicit NodalField(const Grid& g, T init = T{})
        : grid_(g), values_(static_cast<std::size_t>(g.node_count()), init) {}

    const Grid& grid() const { return grid_; }

    T& operator()(int i, int j) { return values_[static_cast<std::size_t>(grid_.node_id(i, j))]; }
    const T& operator()(int i, int j) const {
        return values_[static_cast<std::size_t>(grid_.node_id(i, j))];
    }

    // Clamped read: constant extrapolation outside the lattice, which is the
    // halo boundary condition used by all stencils.
    const T& at_clamped(int i, int j) const {
        return values_[static_cast<std::size_t>(grid_.node_id(grid_.clamp_i(i), grid_.clamp_j(j)))];
    }

    std::vector<T>& data() { return values_; }
    const std::vector<T>& data() const { return values_; }

private:
    Grid grid_;
    std::vector<T> values_;
};

using ScalarField = NodalField<double>;
using VectorField = NodalField<Vec2>;

namespace detail {
void check_in_bounds(const Grid& g, const Vec2& p, const char* op);

struct CellLocal {
    CellIndex cell;
    double xi;   // in [0,1]
    double eta;  // in [0,1]
};
CellLocal locate(const Grid& g, const Vec2& p);
}  // namespace detail

// Bilinear interpolation of the 4 surrounding nodal values; exact at nodes.
template <class T>
T interpolate(const NodalField<T>& f, const Vec2& p) {
    detail::check_in_bounds(f.grid(), p, "interpolate");
    const auto [c, xi, eta] = detail::locate(f.grid(), p);
    const T f00 = f(c.i, c.j), f10 = f(c.i + 1, c.j);
    const T f01 = f(c.i, c.j + 1), f11 = f(c.i + 1, c.j + 1);
    return f00 * ((1 - xi) * (1 - eta)) + f10 * (xi * (1 - eta)) + f01 * ((1 - xi) * eta) +
           f11 * (xi * eta);
}

// Central-difference nodal gradients, bilinearly interpolated to p.
Vec2 gradient(const ScalarField& f, const Vec2& p);

// Nodal central-difference gradient (clamped at lattice edges).
Vec2 node_gradient(const ScalarField& f, int i, int j);

// Interior iff all corners phi < 0, Exterior iff all > 0, Cut otherwise
// (a corner exactly at zero counts as Cut).
CellClass classify_cell(const ScalarField& phi, const CellIndex& c);

}  // namespace lsc
