#pragma once

#include "lsc/core.hpp"

namespace lsc {

// Closed-form cylinder-on-plane contact for identical elastic bodies,
// 2a = sqrt(F (1 - nu^2) R / (pi E)) with F per unit thickness.
struct HertzSolution {
    double force = 0.0;
    double radius = 0.0;
    double young = 0.0;
    double poisson = 0.0;
    double half_width = 0.0;
    double peak_pressure = 0.0;

    HertzSolution(double f, double r, double e, double nu);

    // Elliptical profile p(x) = p_max sqrt(1 - (x/a)^2) for |x| <= a.
    double pressure(double x) const;
    // Quadrature of the profile, for the internal consistency check.
    double integrated_force(int intervals = 20000) const;
};

double hertz_half_width(double force, double radius, double young, double poisson);

enum class InclineState { Slip, Stick };

// Slip iff mu < slope (slope = tan of the incline angle), stick otherwise.
InclineState incline_state(double mu, double slope);

}  // namespace lsc
