#pragma once

#include <vector>

#include "lsc/level_set.hpp"

namespace lsc {

enum class QuadKind : std::uint8_t { FullGauss, SubTriangle };

struct QuadPoint {
    Vec2 x;
    double w = 0.0;
    QuadKind kind = QuadKind::FullGauss;
};

// Volume quadrature over the interior of a level-set body: 2x2 Gauss points
// on fully interior cells, centroid points of a fan sub-triangulation of the
// interior polygon on cut cells (interface treated as a straight chord per
// cell). Cut cells with interior area below 1e-3 h^2 are skipped and counted.
struct QuadratureSet {
    std::vector<QuadPoint> points;
    std::vector<int> cell_of_point;   // flat cell id per point
    std::vector<int> cell_begin;      // per-cell [begin,end) into points
    std::vector<int> cell_end;
    int skipped_cells = 0;
    double total_weight = 0.0;

    bool cell_has_points(int cell_id) const {
        return cell_end[static_cast<std::size_t>(cell_id)] >
               cell_begin[static_cast<std::size_t>(cell_id)];
    }
};

QuadratureSet build_quadrature(const LevelSet& ls);

// Interior polygon(s) of one cell clipped by the linear-edge interface.
// Exposed for tests.
std::vector<std::vector<Vec2>> cut_cell_polygons(const ScalarField& phi, const CellIndex& c);

}  // namespace lsc
