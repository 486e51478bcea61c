#pragma once

#include "lsc/level_set.hpp"

namespace lsc {

enum class AdvectScheme { Weno5, Upwind };

// Advances phi_t + v . grad(phi) = 0 over the given pseudo time with CFL
// substepping (max |v| dt / h <= cfl). Weno5 pairs HJ-WENO5 space with
// TVD-RK3 time stepping; Upwind is first-order space with forward Euler.
// Velocity must be defined on the whole grid and finite.
LevelSet advect(const LevelSet& ls, const VectorField& v, double pseudo_dt,
                AdvectScheme scheme = AdvectScheme::Weno5, double cfl = 0.5);

}  // namespace lsc
