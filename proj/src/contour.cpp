#include "lsc/contour.hpp"

#include <array>
#include <cmath>
#include <map>

namespace lsc {

namespace {

Vec2 edge_crossing(const Vec2& pa, const Vec2& pb, double fa, double fb) {
    const double t = fa / (fa - fb);
    return pa + t * (pb - pa);
}

void emit(std::vector<ContourSegment>& out, const Vec2& a, const Vec2& b, const CellIndex& c,
          double min_len) {
    if (norm(b - a) < min_len) return;
    out.push_back({a, b, c});
}

void cell_segments(const ScalarField& phi, const CellIndex& c, std::vector<ContourSegment>& out) {
    const Grid& g = phi.grid();
    // Corners counterclockwise from the lower left, edges k between corner k
    // and corner (k+1)%4.
    const Vec2 p[4] = {g.node_pos(c.i, c.j), g.node_pos(c.i + 1, c.j), g.node_pos(c.i + 1, c.j + 1),
                       g.node_pos(c.i, c.j + 1)};
    const double f[4] = {phi(c.i, c.j), phi(c.i + 1, c.j), phi(c.i + 1, c.j + 1),
                         phi(c.i, c.j + 1)};

    int code = 0;
    for (int k = 0; k < 4; ++k)
        if (f[k] < 0.0) code |= 1 << k;
    if (code == 0 || code == 15) return;

    Vec2 x[4];
    bool has[4] = {false, false, false, false};
    for (int k = 0; k < 4; ++k) {
        const int k2 = (k + 1) % 4;
        if ((f[k] < 0.0) != (f[k2] < 0.0)) {
            x[k] = edge_crossing(p[k], p[k2], f[k], f[k2]);
            has[k] = true;
        }
    }

    const double min_len = 1e-12 * g.h();
    auto seg = [&](int ea, int eb) {
        if (has[ea] && has[eb]) emit(out, x[ea], x[eb], c, min_len);
    };

    switch (code) {
        case 1: case 14: seg(3, 0); break;
        case 2: case 13: seg(0, 1); break;
        case 4: case 11: seg(1, 2); break;
        case 8: case 7:  seg(2, 3); break;
        case 3: case 12: seg(3, 1); break;
        case 6: case 9:  seg(0, 2); break;
        case 5: {  // corners 0 and 2 inside
            const double center = 0.25 * (f[0] + f[1] + f[2] + f[3]);
            if (center < 0.0) { seg(0, 1); seg(2, 3); }
            else { seg(3, 0); seg(1, 2); }
            break;
        }
        case 10: {  // corners 1 and 3 inside
            const double center = 0.25 * (f[0] + f[1] + f[2] + f[3]);
            if (center < 0.0) { seg(3, 0); seg(1, 2); }
            else { seg(0, 1); seg(2, 3); }
            break;
        }
        default: break;
    }
}

}  // namespace

std::vector<ContourSegment> extract_zero_contour(const ScalarField& phi) {
    std::vector<ContourSegment> out;
    const Grid& g = phi.grid();
    for (int j = 0; j < g.ny() - 1; ++j)
        for (int i = 0; i < g.nx() - 1; ++i) cell_segments(phi, {i, j}, out);
    return out;
}

std::vector<ContourSegment> extract_zero_contour(const ScalarField& phi,
                                                 const std::vector<std::uint8_t>& cell_filter) {
    std::vector<ContourSegment> out;
    const Grid& g = phi.grid();
    for (int j = 0; j < g.ny() - 1; ++j)
        for (int i = 0; i < g.nx() - 1; ++i)
            if (cell_filter[static_cast<std::size_t>(g.cell_id(i, j))])
                cell_segments(phi, {i, j}, out);
    return out;
}

std::vector<std::vector<Vec2>> chain_segments(const std::vector<ContourSegment>& segs, double tol) {
    // Snap endpoints onto a lattice of size tol to build adjacency.
    auto key = [tol](const Vec2& p) {
        return std::pair<long long, long long>{static_cast<long long>(std::llround(p.x / tol)),
                                               static_cast<long long>(std::llround(p.y / tol))};
    };
    std::multimap<std::pair<long long, long long>, int> ends;
    for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
        ends.insert({key(segs[s].a), s});
        ends.insert({key(segs[s].b), s});
    }

    std::vector<bool> used(segs.size(), false);
    std::vector<std::vector<Vec2>> chains;

    auto next_at = [&](const Vec2& p, int skip) -> int {
        auto [lo, hi] = ends.equal_range(key(p));
        for (auto it = lo; it != hi; ++it)
            if (!used[static_cast<std::size_t>(it->second)] && it->second != skip)
                return it->second;
        return -1;
    };

    for (int s0 = 0; s0 < static_cast<int>(segs.size()); ++s0) {
        if (used[static_cast<std::size_t>(s0)]) continue;
        used[static_cast<std::size_t>(s0)] = true;
        std::vector<Vec2> chain{segs[s0].a, segs[s0].b};
        // Grow forward from the tail, then backward from the head.
        for (int pass = 0; pass < 2; ++pass) {
            while (true) {
                const Vec2& tip = chain.back();
                const int s = next_at(tip, -1);
                if (s < 0) break;
                used[static_cast<std::size_t>(s)] = true;
                const auto& sg = segs[static_cast<std::size_t>(s)];
                chain.push_back(norm(sg.a - tip) <= norm(sg.b - tip) ? sg.b : sg.a);
            }
            std::reverse(chain.begin(), chain.end());
        }
        chains.push_back(std::move(chain));
    }
    return chains;
}

}  // namespace lsc
