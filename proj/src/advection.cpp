#include "lsc/advection.hpp"

#include <cmath>

namespace lsc {

namespace {

// Jiang-Peng HJ-WENO5 combination of five consecutive one-sided differences.
double weno5(double v1, double v2, double v3, double v4, double v5) {
    const double p1 = v1 / 3.0 - 7.0 * v2 / 6.0 + 11.0 * v3 / 6.0;
    const double p2 = -v2 / 6.0 + 5.0 * v3 / 6.0 + v4 / 3.0;
    const double p3 = v3 / 3.0 + 5.0 * v4 / 6.0 - v5 / 6.0;

    const double s1 = 13.0 / 12.0 * (v1 - 2 * v2 + v3) * (v1 - 2 * v2 + v3) +
                      0.25 * (v1 - 4 * v2 + 3 * v3) * (v1 - 4 * v2 + 3 * v3);
    const double s2 =
        13.0 / 12.0 * (v2 - 2 * v3 + v4) * (v2 - 2 * v3 + v4) + 0.25 * (v2 - v4) * (v2 - v4);
    const double s3 = 13.0 / 12.0 * (v3 - 2 * v4 + v5) * (v3 - 2 * v4 + v5) +
                      0.25 * (3 * v3 - 4 * v4 + v5) * (3 * v3 - 4 * v4 + v5);

    double vmax = std::abs(v1);
    for (double v : {v2, v3, v4, v5}) vmax = std::max(vmax, std::abs(v));
    const double eps = 1e-6 * vmax * vmax + 1e-99;

    const double a1 = 0.1 / ((s1 + eps) * (s1 + eps));
    const double a2 = 0.6 / ((s2 + eps) * (s2 + eps));
    const double a3 = 0.3 / ((s3 + eps) * (s3 + eps));
    return (a1 * p1 + a2 * p2 + a3 * p3) / (a1 + a2 + a3);
}

struct Derivatives {
    double minus;
    double plus;
};

class Stencil {
public:
    Stencil(const ScalarField& phi, AdvectScheme scheme) : phi_(phi), scheme_(scheme) {}

    Derivatives dx(int i, int j) const {
        const double h = phi_.grid().h();
        auto d = [&](int k) { return (phi_.at_clamped(k, j) - phi_.at_clamped(k - 1, j)) / h; };
        if (scheme_ == AdvectScheme::Upwind) return {d(i), d(i + 1)};
        return {weno5(d(i - 2), d(i - 1), d(i), d(i + 1), d(i + 2)),
                weno5(d(i + 3), d(i + 2), d(i + 1), d(i), d(i - 1))};
    }

    Derivatives dy(int i, int j) const {
        const double h = phi_.grid().h();
        auto d = [&](int k) { return (phi_.at_clamped(i, k) - phi_.at_clamped(i, k - 1)) / h; };
        if (scheme_ == AdvectScheme::Upwind) return {d(j), d(j + 1)};
        return {weno5(d(j - 2), d(j - 1), d(j), d(j + 1), d(j + 2)),
                weno5(d(j + 3), d(j + 2), d(j + 1), d(j), d(j - 1))};
    }

private:
    const ScalarField& phi_;
    AdvectScheme scheme_;
};

ScalarField rhs(const ScalarField& phi, const VectorField& v, AdvectScheme scheme) {
    const Grid& g = phi.grid();
    ScalarField out(g);
    const Stencil st(phi, scheme);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const Vec2 vel = v(i, j);
            const auto [dxm, dxp] = st.dx(i, j);
            const auto [dym, dyp] = st.dy(i, j);
            const double phix = vel.x >= 0.0 ? dxm : dxp;
            const double phiy = vel.y >= 0.0 ? dym : dyp;
            out(i, j) = -(vel.x * phix + vel.y * phiy);
        }
    return out;
}

void axpy(ScalarField& y, double a, const ScalarField& x) {
    for (std::size_t n = 0; n < y.data().size(); ++n) y.data()[n] += a * x.data()[n];
}

void lincomb(ScalarField& y, double a, const ScalarField& xa, double b, const ScalarField& xb) {
    for (std::size_t n = 0; n < y.data().size(); ++n)
        y.data()[n] = a * xa.data()[n] + b * xb.data()[n];
}

}  // namespace

LevelSet advect(const LevelSet& ls, const VectorField& v, double pseudo_dt, AdvectScheme scheme,
                double cfl) {
    if (!(ls.grid() == v.grid())) fail("advect: velocity grid mismatch");
    double vmax = 0.0;
    for (const Vec2& u : v.data()) {
        if (!std::isfinite(u.x) || !std::isfinite(u.y)) fail("advect: non-finite velocity");
        vmax = std::max(vmax, norm(u));
    }

    ScalarField phi = ls.phi();
    if (vmax == 0.0 || pseudo_dt == 0.0) return {ls.body(), std::move(phi)};

    const double h = ls.grid().h();
    const int nsub = std::max(1, static_cast<int>(std::ceil(pseudo_dt * vmax / (cfl * h))));
    const double dt = pseudo_dt / nsub;

    for (int s = 0; s < nsub; ++s) {
        if (scheme == AdvectScheme::Upwind) {
            const ScalarField k1 = rhs(phi, v, scheme);
            axpy(phi, dt, k1);
            continue;
        }
        // TVD-RK3 (Shu-Osher).
        ScalarField phi1 = phi;
        axpy(phi1, dt, rhs(phi, v, scheme));

        ScalarField phi2 = phi1;
        axpy(phi2, dt, rhs(phi1, v, scheme));
        lincomb(phi2, 0.75, phi, 0.25, phi2);

        ScalarField phi3 = phi2;
        axpy(phi3, dt, rhs(phi2, v, scheme));
        lincomb(phi, 1.0 / 3.0, phi, 2.0 / 3.0, phi3);
    }
    return {ls.body(), std::move(phi)};
}

}  // namespace lsc
