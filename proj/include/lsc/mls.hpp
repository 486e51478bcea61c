#pragma once

#include <span>
#include <vector>

#include "lsc/core.hpp"

namespace lsc {

struct MlsConfig {
    double support_factor = 1.5;  // quadratic spline support in units of h
    int min_neighbors = 3;
    double cond_max = 1e8;        // condition bound before the Shepard fallback
};

// Quadratic spline weight; r is distance over grid spacing.
//   3/4 - r^2            for r <= 1/2
//   (3/2 - r)^2 / 2      for 1/2 <= r <= 3/2
//   0                    for r >= 3/2
double mls_weight(double r);

// Bucket grid over a fixed point cloud for radius queries.
class PointCloud {
public:
    PointCloud(std::span<const Vec2> points, double h);
    void query(const Vec2& x, double radius, std::vector<int>& out) const;
    int size() const { return static_cast<int>(points_.size()); }
    const Vec2& point(int k) const { return points_[static_cast<std::size_t>(k)]; }

private:
    std::vector<Vec2> points_;
    double cell_ = 1.0;
    Vec2 origin_;
    int nx_ = 0, ny_ = 0;
    std::vector<std::vector<int>> buckets_;
};

// Moving-least-squares reconstruction with a linear basis {1, x, y} and the
// quadratic spline weight. Falls back to Shepard (degree 0) when the moment
// matrix is ill-conditioned; throws when fewer than min_neighbors points
// carry weight at x.
double mls_reconstruct(const PointCloud& cloud, std::span<const double> values, const Vec2& x,
                       double h, const MlsConfig& cfg = {});

}  // namespace lsc
