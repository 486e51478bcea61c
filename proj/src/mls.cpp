#include "lsc/mls.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace lsc {

double mls_weight(double r) {
    if (r < 0.5) return 0.75 - r * r;
    if (r < 1.5) {
        const double q = 1.5 - r;
        return 0.5 * q * q;
    }
    return 0.0;
}

PointCloud::PointCloud(std::span<const Vec2> points, double h)
    : points_(points.begin(), points.end()), cell_(h) {
    Aabb box;
    for (const Vec2& p : points_) box.extend(p);
    if (!box.valid()) box = {{0, 0}, {1, 1}};
    origin_ = box.lo;
    nx_ = std::max(1, static_cast<int>(std::floor((box.hi.x - box.lo.x) / cell_)) + 1);
    ny_ = std::max(1, static_cast<int>(std::floor((box.hi.y - box.lo.y) / cell_)) + 1);
    buckets_.assign(static_cast<std::size_t>(nx_ * ny_), {});
    for (int k = 0; k < static_cast<int>(points_.size()); ++k) {
        const Vec2& p = points_[static_cast<std::size_t>(k)];
        const int i = std::clamp(static_cast<int>((p.x - origin_.x) / cell_), 0, nx_ - 1);
        const int j = std::clamp(static_cast<int>((p.y - origin_.y) / cell_), 0, ny_ - 1);
        buckets_[static_cast<std::size_t>(j * nx_ + i)].push_back(k);
    }
}

void PointCloud::query(const Vec2& x, double radius, std::vector<int>& out) const {
    out.clear();
    const int i0 = std::clamp(static_cast<int>(std::floor((x.x - radius - origin_.x) / cell_)), 0,
                              nx_ - 1);
    const int i1 = std::clamp(static_cast<int>(std::floor((x.x + radius - origin_.x) / cell_)), 0,
                              nx_ - 1);
    const int j0 = std::clamp(static_cast<int>(std::floor((x.y - radius - origin_.y) / cell_)), 0,
                              ny_ - 1);
    const int j1 = std::clamp(static_cast<int>(std::floor((x.y + radius - origin_.y) / cell_)), 0,
                              ny_ - 1);
    const double r2 = radius * radius;
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i)
            for (int k : buckets_[static_cast<std::size_t>(j * nx_ + i)])
                if (norm2(points_[static_cast<std::size_t>(k)] - x) < r2) out.push_back(k);
}

double mls_reconstruct(const PointCloud& cloud, std::span<const double> values, const Vec2& x,
                       double h, const MlsConfig& cfg) {
    if (static_cast<std::size_t>(cloud.size()) != values.size())
        fail("mls_reconstruct: ", cloud.size(), " points vs ", values.size(), " values");

    thread_local std::vector<int> nbr;
    cloud.query(x, cfg.support_factor * h, nbr);

    // Basis shifted to the query point and scaled by h: the reconstruction
    // is the constant coefficient, and the moment matrix stays well scaled.
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    double wsum = 0.0, fsum = 0.0;
    int used = 0;
    for (int k : nbr) {
        const Vec2 d = cloud.point(k) - x;
        const double w = mls_weight(norm(d) / h);
        if (w <= 0.0) continue;
        ++used;
        const Eigen::Vector3d p(1.0, d.x / h, d.y / h);
        m += w * p * p.transpose();
        b += w * values[static_cast<std::size_t>(k)] * p;
        wsum += w;
        fsum += w * values[static_cast<std::size_t>(k)];
    }
    if (used < cfg.min_neighbors)
        fail("mls_reconstruct: only ", used, " neighbors with support at (", x.x, ", ", x.y,
             "), need ", cfg.min_neighbors);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(m);
    const double lmin = eig.eigenvalues()(0);
    const double lmax = eig.eigenvalues()(2);
    if (!(lmin > 0.0) || lmax / lmin > cfg.cond_max) return fsum / wsum;  // Shepard fallback

    const Eigen::Vector3d a = m.ldlt().solve(b);
    return a(0);
}

}  // namespace lsc
