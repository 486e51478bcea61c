#pragma once

#include <vector>

#include "lsc/grid.hpp"

namespace lsc {

struct ContourSegment {
    Vec2 a;
    Vec2 b;
    CellIndex cell;
};

// Marching squares on the zero isocontour of phi. Values >= 0 are treated as
// outside; crossings come from linear interpolation along cell edges. Saddle
// cells are disambiguated with the corner average. Degenerate segments
// (shorter than 1e-12 h) are dropped.
std::vector<ContourSegment> extract_zero_contour(const ScalarField& phi);

// Same, restricted to cells for which cell_filter(cell_id) is true.
std::vector<ContourSegment> extract_zero_contour(const ScalarField& phi,
                                                 const std::vector<std::uint8_t>& cell_filter);

// Stitches segments into polylines by matching endpoints within tol. A closed
// polyline repeats its first point at the end.
std::vector<std::vector<Vec2>> chain_segments(const std::vector<ContourSegment>& segs, double tol);

}  // namespace lsc
