#pragma once

#include <Eigen/Dense>

#include "lsc/core.hpp"

namespace lsc {

// Linear elastic material under plane strain. Voigt order {sxx, syy, sxy}
// against {exx, eyy, 2exy}.
struct Material {
    double young = 0.0;
    double poisson = 0.0;

    Material() = default;
    Material(double e, double nu) : young(e), poisson(nu) {
        if (!(e > 0.0)) fail("Material: Young's modulus must be positive, got ", e);
        if (nu < 0.0 || nu >= 0.5) fail("Material: Poisson ratio must be in [0, 0.5), got ", nu);
    }

    Eigen::Matrix3d stiffness() const {
        const double c = young / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
        Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
        d(0, 0) = d(1, 1) = c * (1.0 - poisson);
        d(0, 1) = d(1, 0) = c * poisson;
        d(2, 2) = c * (1.0 - 2.0 * poisson) / 2.0;
        return d;
    }
};

inline double max_principal_stress(double sxx, double syy, double sxy) {
    const double m = 0.5 * (sxx + syy);
    const double r = std::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
    return m + r;
}

}  // namespace lsc
