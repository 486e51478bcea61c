#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lsc/mechanics.hpp"
#include "lsc/mls.hpp"

namespace lsc {

// Persistent state carrier: one point per quadrature point of the undeformed
// body, moving and accumulating stress with the converged solution.
struct MaterialPoint {
    Vec2 x;
    double volume = 0.0;
    Eigen::Vector3d stress = Eigen::Vector3d::Zero();
    int body = -1;
};

std::vector<MaterialPoint> seed_points(int body, const QuadratureSet& quad);

// x_p += u(x_p); sigma_p += D sym(grad u)(x_p), strain from the containing
// cell's B-matrix. Throws when a point sits outside every active cell.
void update_points(std::vector<MaterialPoint>& points, const Body& body);

// Reconstructs each stress component at the new quadrature points from the
// scattered material points of the same body.
std::vector<Eigen::Vector3d> project_state(const std::vector<MaterialPoint>& points,
                                           const QuadratureSet& quad, double h,
                                           const MlsConfig& cfg = {});

double total_volume(const std::vector<MaterialPoint>& points);

}  // namespace lsc
