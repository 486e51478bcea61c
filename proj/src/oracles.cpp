#include "lsc/oracles.hpp"

#include <cmath>
#include <numbers>

namespace lsc {

double hertz_half_width(double force, double radius, double young, double poisson) {
    if (force < 0.0) fail("hertz_half_width: force must be nonnegative, got ", force);
    if (!(radius > 0.0) || !(young > 0.0))
        fail("hertz_half_width: radius and modulus must be positive, got R = ", radius,
             ", E = ", young);
    if (force == 0.0) return 0.0;
    return 0.5 * std::sqrt(force * (1.0 - poisson * poisson) * radius / (std::numbers::pi * young));
}

HertzSolution::HertzSolution(double f, double r, double e, double nu)
    : force(f), radius(r), young(e), poisson(nu) {
    half_width = hertz_half_width(f, r, e, nu);
    peak_pressure = half_width > 0.0 ? 2.0 * force / (std::numbers::pi * half_width) : 0.0;
}

double HertzSolution::pressure(double x) const {
    if (half_width <= 0.0) return 0.0;
    const double s = x / half_width;
    if (std::abs(s) >= 1.0) return 0.0;
    return peak_pressure * std::sqrt(1.0 - s * s);
}

double HertzSolution::integrated_force(int intervals) const {
    if (half_width <= 0.0) return 0.0;
    // Midpoint rule; the integrand is continuous and vanishes at the ends.
    const double dx = 2.0 * half_width / intervals;
    double sum = 0.0;
    for (int k = 0; k < intervals; ++k) sum += pressure(-half_width + (k + 0.5) * dx) * dx;
    return sum;
}

InclineState incline_state(double mu, double slope) {
    if (slope < 0.0) fail("incline_state: slope must be nonnegative, got ", slope);
    return mu < slope ? InclineState::Slip : InclineState::Stick;
}

}  // namespace lsc
