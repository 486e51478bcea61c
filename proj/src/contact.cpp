#include "lsc/contact.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lsc/contour.hpp"

namespace lsc {

FrictionLaw::FrictionLaw(double mu_, double eps_n_, double eps_t_)
    : mu(mu_), eps_n(eps_n_), eps_t(eps_t_) {
    if (mu < 0.0) fail("FrictionLaw: mu must be nonnegative, got ", mu);
    if (!(eps_n > 0.0) || !(eps_t > 0.0))
        fail("FrictionLaw: penalty compliances must be positive, got ", eps_n, ", ", eps_t);
}

FrictionLaw FrictionLaw::scaled(double mu, double h, double young_avg, double eps0) {
    const double eps = eps0 * h / young_avg;
    return FrictionLaw(mu, eps, eps);
}

int ContactPair::active_count() const {
    int n = 0;
    for (const ContactPoint& p : points) n += p.active ? 1 : 0;
    return n;
}

ScalarField min_level_set(const ScalarField& phi_i, const ScalarField& phi_j) {
    if (!(phi_i.grid() == phi_j.grid())) fail("min_level_set: grid mismatch");
    ScalarField out = phi_i;
    for (std::size_t n = 0; n < out.data().size(); ++n)
        out.data()[n] = std::min(phi_i.data()[n], phi_j.data()[n]);
    return out;
}

std::vector<std::uint8_t> contact_region(const ScalarField& phi_i, const ScalarField& phi_j,
                                         double eps) {
    if (!(phi_i.grid() == phi_j.grid())) fail("contact_region: grid mismatch");
    const Grid& g = phi_i.grid();
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(g.node_count()), 0);

    ScalarField shifted = min_level_set(phi_i, phi_j);
    for (double& v : shifted.data()) v -= eps;

    bool has_neg = false, has_pos = false;
    for (double v : shifted.data()) {
        has_neg = has_neg || v < 0.0;
        has_pos = has_pos || v > 0.0;
    }
    if (!has_neg || !has_pos) return mask;  // shifted field has no interface

    const ScalarField bridge = reinitialize(shifted);
    for (std::size_t n = 0; n < mask.size(); ++n)
        mask[n] = phi_i.data()[n] > 0.0 && phi_j.data()[n] > 0.0 && bridge.data()[n] + eps < 0.0;
    return mask;
}

std::vector<std::uint8_t> proximity_mask(const ScalarField& phi_i, const ScalarField& phi_j,
                                         double eps) {
    if (!(phi_i.grid() == phi_j.grid())) fail("proximity_mask: grid mismatch");
    std::vector<std::uint8_t> mask(phi_i.data().size(), 0);
    for (std::size_t n = 0; n < mask.size(); ++n)
        mask[n] = phi_i.data()[n] < eps && phi_j.data()[n] < eps;
    return mask;
}

namespace {

// Order points along the chained contour and store cumulative arc length.
void assign_arc_coordinates(ContactPair& pair, const std::vector<ContourSegment>& segs,
                            double tol) {
    if (pair.points.empty()) return;
    const std::vector<std::vector<Vec2>> chains = chain_segments(segs, tol);

    // Map each point to (chain, offset along chain) by nearest polyline point.
    double chain_base = 0.0;
    std::vector<std::pair<double, int>> keyed;
    keyed.reserve(pair.points.size());
    for (int pi = 0; pi < static_cast<int>(pair.points.size()); ++pi) {
        const Vec2& x = pair.points[static_cast<std::size_t>(pi)].x;
        double best = std::numeric_limits<double>::max();
        double best_arc = 0.0;
        chain_base = 0.0;
        for (const auto& chain : chains) {
            double arc = 0.0;
            for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
                const Vec2 cp = closest_on_segment(x, chain[k], chain[k + 1]);
                const double d = norm(x - cp);
                if (d < best) {
                    best = d;
                    best_arc = chain_base + arc + norm(cp - chain[k]);
                }
                arc += norm(chain[k + 1] - chain[k]);
            }
            chain_base += arc + 1.0;  // keep different chains apart
        }
        keyed.push_back({best_arc, pi});
    }
    std::sort(keyed.begin(), keyed.end());

    std::vector<ContactPoint> sorted;
    sorted.reserve(pair.points.size());
    for (const auto& [arc, pi] : keyed) {
        sorted.push_back(pair.points[static_cast<std::size_t>(pi)]);
        sorted.back().arc = arc;
    }
    pair.points = std::move(sorted);
}

}  // namespace

ContactPair build_intermediate_surface(const LevelSet& ls_i, const LevelSet& ls_j,
                                       const std::vector<std::uint8_t>& node_mask,
                                       double shift_eps) {
    if (!(ls_i.grid() == ls_j.grid())) fail("build_intermediate_surface: grid mismatch");
    if (ls_i.body() == ls_j.body())
        fail("build_intermediate_surface: a body cannot contact itself (body ", ls_i.body(), ")");
    const Grid& g = ls_i.grid();

    ScalarField phi_int(g);
    for (std::size_t n = 0; n < phi_int.data().size(); ++n)
        phi_int.data()[n] = 0.5 * (ls_i.phi().data()[n] - ls_j.phi().data()[n]);

    // Cells with at least one masked node are eligible for extraction.
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(g.cell_count()), 0);
    bool any = false;
    for (int j = 0; j < g.ny() - 1; ++j)
        for (int i = 0; i < g.nx() - 1; ++i) {
            const bool hit = node_mask[static_cast<std::size_t>(g.node_id(i, j))] ||
                             node_mask[static_cast<std::size_t>(g.node_id(i + 1, j))] ||
                             node_mask[static_cast<std::size_t>(g.node_id(i + 1, j + 1))] ||
                             node_mask[static_cast<std::size_t>(g.node_id(i, j + 1))];
            cells[static_cast<std::size_t>(g.cell_id(i, j))] = hit;
            any = any || hit;
        }
    if (!any) fail("build_intermediate_surface: empty node mask");

    const std::vector<ContourSegment> segs = extract_zero_contour(phi_int, cells);

    ContactPair pair;
    pair.body_i = ls_i.body();
    pair.body_j = ls_j.body();
    pair.shift_eps = shift_eps;

    const double h = g.h();
    for (const ContourSegment& s : segs) {
        ContactPoint pt;
        pt.x = 0.5 * (s.a + s.b);
        pt.weight = norm(s.b - s.a);

        // Polish the midpoint onto the bilinear zero contour of phi_int.
        for (int k = 0; k < 3; ++k) {
            const double v = interpolate(phi_int, pt.x);
            if (std::abs(v) < 1e-4 * h) break;
            const Vec2 gr = gradient(phi_int, pt.x);
            const double gg = dot(gr, gr);
            if (gg < 1e-16) break;
            pt.x -= (v / gg) * gr;
        }

        const Vec2 gr = gradient(phi_int, pt.x);
        const double gn = norm(gr);
        if (gn <= 1e-8) {
            ++pair.dropped_projections;
            continue;
        }
        pt.n = gr / gn;
        pt.t = rot90(pt.n);

        try {
            pt.proj_i = ls_i.closest_point(pt.x);
            pt.proj_j = ls_j.closest_point(pt.x);
        } catch (const Error&) {
            ++pair.dropped_projections;
            continue;
        }
        pt.gn0 = dot(pt.proj_j - pt.proj_i, pt.n);
        pt.gn = pt.gn0;
        pair.points.push_back(pt);
    }

    assign_arc_coordinates(pair, segs, 1e-9 * h);
    return pair;
}

void evaluate_gaps(ContactPair& pair, const std::function<Vec2(const Vec2&)>& u_i,
                   const std::function<Vec2(const Vec2&)>& u_j) {
    for (ContactPoint& p : pair.points) {
        const Vec2 rel = u_j(p.proj_j) - u_i(p.proj_i);
        p.gn = p.gn0 + dot(rel, p.n);
        p.gt = dot(rel, p.t);
    }
}

ReturnMapResult return_map(double gn, double gt, double gt_plastic, const FrictionLaw& law) {
    ReturnMapResult r;
    r.tau_n = gn / law.eps_n;
    const double tau_t_trial = (gt - gt_plastic) / law.eps_t;
    const double phi_trial = std::abs(tau_t_trial) - law.mu * std::abs(r.tau_n);
    if (phi_trial <= 0.0) {
        r.tau_t = tau_t_trial;
        r.gt_plastic = gt_plastic;
        r.slipped = false;
    } else {
        const double sign = tau_t_trial >= 0.0 ? 1.0 : -1.0;
        const double dgamma = law.eps_t * phi_trial;
        // tau_t_trial - (dgamma/eps_t) sign lands on the yield surface; the
        // canceled form keeps it there to the last bit.
        r.tau_t = sign * law.mu * std::abs(r.tau_n);
        r.gt_plastic = gt_plastic + dgamma * sign;
        r.slipped = true;
    }
    return r;
}

void update_active_set(ContactPair& pair) {
    for (ContactPoint& p : pair.points) p.active = p.tau_n < 0.0;
}

void transfer_plastic_history(const ContactPair& old_pair, ContactPair& fresh, double radius) {
    const bool straight = old_pair.body_i == fresh.body_i && old_pair.body_j == fresh.body_j;
    const bool swapped = old_pair.body_i == fresh.body_j && old_pair.body_j == fresh.body_i &&
                         old_pair.body_i != old_pair.body_j;
    if (!straight && !swapped)
        fail("transfer_plastic_history: pairs reference different bodies (", old_pair.body_i, ",",
             old_pair.body_j, ") vs (", fresh.body_i, ",", fresh.body_j, ")");

    // The tangential slip is invariant under swapping the pair order (both
    // the relative displacement and the tangent flip), so history copies
    // unchanged either way.
    const double r2 = radius * radius;
    for (ContactPoint& p : fresh.points) {
        double best = r2;
        double value = 0.0;
        for (const ContactPoint& q : old_pair.points) {
            const double d2 = norm2(p.x - q.x);
            if (d2 <= best) {
                best = d2;
                value = q.gt_plastic;
            }
        }
        p.gt_plastic = value;
    }
}

}  // namespace lsc
