#pragma once

#include "lsc/level_set.hpp"

namespace lsc {

// Rebuilds a signed-distance field from the extracted zero contour: marching
// squares, exact point-segment distances for nodes of cut cells, then a
// fast-marching sweep outward on each side. The zero contour is preserved;
// a field of uniform sign throws ("no interface").
ScalarField reinitialize(const ScalarField& phi);
LevelSet reinitialize(const LevelSet& ls);

// Constant extrapolation along outward normals: interior values (phi <= 0)
// are kept, exterior nodes are visited in fast-marching order of increasing
// phi and receive the upwind-weighted value satisfying n . grad f = 0.
// Throws when there are no interior nodes. phi should be reinitialized.
template <class T>
NodalField<T> extrapolate_field(const ScalarField& phi, const NodalField<T>& f);

}  // namespace lsc
