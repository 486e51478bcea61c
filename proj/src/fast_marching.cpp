#include "lsc/fast_marching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace lsc {

namespace {

struct HeapEntry {
    double value;
    int node;
    bool operator>(const HeapEntry& o) const {
        return value > o.value || (value == o.value && node > o.node);
    }
};

using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<HeapEntry>>;

// Upwind eikonal update |grad d| = 1 from finalized neighbor values.
double eikonal_update(double a, double b, double h) {
    const double inf = std::numeric_limits<double>::max();
    if (a > b) std::swap(a, b);
    if (b == inf) return a + h;
    if (b - a >= h) return a + h;
    return 0.5 * (a + b + std::sqrt(2.0 * h * h - (b - a) * (b - a)));
}

// Distance march over the subset of nodes where side[n] is true, seeded by
// finalized band values in dist.
void march_side(const Grid& g, const std::vector<std::uint8_t>& side,
                std::vector<std::uint8_t>& done, std::vector<double>& dist) {
    const double inf = std::numeric_limits<double>::max();
    const int nx = g.nx(), ny = g.ny();
    const double h = g.h();

    auto neighbor_min = [&](int i, int j, int di, int dj) {
        const int ii = i + di, jj = j + dj;
        if (ii < 0 || ii >= nx || jj < 0 || jj >= ny) return inf;
        const int n = g.node_id(ii, jj);
        return (done[static_cast<std::size_t>(n)] && side[static_cast<std::size_t>(n)])
                   ? dist[static_cast<std::size_t>(n)]
                   : inf;
    };
    auto candidate = [&](int i, int j) {
        const double a = std::min(neighbor_min(i, j, -1, 0), neighbor_min(i, j, 1, 0));
        const double b = std::min(neighbor_min(i, j, 0, -1), neighbor_min(i, j, 0, 1));
        if (a == inf && b == inf) return inf;
        return eikonal_update(a, b, h);
    };

    MinHeap heap;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int n = g.node_id(i, j);
            if (!side[static_cast<std::size_t>(n)] || done[static_cast<std::size_t>(n)]) continue;
            const double c = candidate(i, j);
            if (c < inf) heap.push({c, n});
        }

    while (!heap.empty()) {
        const auto [value, n] = heap.top();
        heap.pop();
        if (done[static_cast<std::size_t>(n)]) continue;
        done[static_cast<std::size_t>(n)] = 1;
        dist[static_cast<std::size_t>(n)] = value;

        const int i = n % nx, j = n / nx;
        const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
            const int ii = i + di[k], jj = j + dj[k];
            if (ii < 0 || ii >= nx || jj < 0 || jj >= ny) continue;
            const int m = g.node_id(ii, jj);
            if (done[static_cast<std::size_t>(m)] || !side[static_cast<std::size_t>(m)]) continue;
            const double c = candidate(ii, jj);
            if (c < inf) heap.push({c, m});
        }
    }
}

}  // namespace

ScalarField reinitialize(const ScalarField& phi) {
    const Grid& g = phi.grid();
    const double h = g.h();

    const std::vector<ContourSegment> segs = extract_zero_contour(phi);
    if (segs.empty()) fail("reinitialize: no interface (field has uniform sign)");

    // Bin segments by cell for local exact-distance queries.
    const int ncx = g.nx() - 1, ncy = g.ny() - 1;
    std::vector<std::vector<int>> bins(static_cast<std::size_t>(ncx * ncy));
    for (int s = 0; s < static_cast<int>(segs.size()); ++s)
        bins[static_cast<std::size_t>(g.cell_id(segs[static_cast<std::size_t>(s)].cell.i,
                                                 segs[static_cast<std::size_t>(s)].cell.j))]
            .push_back(s);

    const double inf = std::numeric_limits<double>::max();
    std::vector<double> dist(static_cast<std::size_t>(g.node_count()), inf);
    std::vector<std::uint8_t> done(static_cast<std::size_t>(g.node_count()), 0);

    // Exact distances on nodes of cut cells; widen the sweep radius until the
    // local bins guarantee the true nearest segment is seen.
    auto exact_distance = [&](int i, int j) {
        const Vec2 p = g.node_pos(i, j);
        double best = inf;
        for (int r = 1; r <= std::max(ncx, ncy); ++r) {
            for (int cj = std::max(0, j - r - 1); cj <= std::min(ncy - 1, j + r); ++cj)
                for (int ci = std::max(0, i - r - 1); ci <= std::min(ncx - 1, i + r); ++ci)
                    for (int s : bins[static_cast<std::size_t>(g.cell_id(ci, cj))])
                        best = std::min(best, segment_distance(p, segs[static_cast<std::size_t>(s)].a,
                                                               segs[static_cast<std::size_t>(s)].b));
            if (best <= (r - 1) * h) break;  // nothing outside the ring can beat this
        }
        return best;
    };

    for (const ContourSegment& s : segs) {
        const int corners[4][2] = {{s.cell.i, s.cell.j},
                                   {s.cell.i + 1, s.cell.j},
                                   {s.cell.i + 1, s.cell.j + 1},
                                   {s.cell.i, s.cell.j + 1}};
        for (const auto& c : corners) {
            const int n = g.node_id(c[0], c[1]);
            if (done[static_cast<std::size_t>(n)]) continue;
            done[static_cast<std::size_t>(n)] = 1;
            dist[static_cast<std::size_t>(n)] = exact_distance(c[0], c[1]);
        }
    }

    // March each side independently; band nodes seed both sides.
    std::vector<std::uint8_t> side_pos(static_cast<std::size_t>(g.node_count()), 0);
    std::vector<std::uint8_t> side_neg(static_cast<std::size_t>(g.node_count()), 0);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const int n = g.node_id(i, j);
            const double v = phi(i, j);
            const bool band = done[static_cast<std::size_t>(n)] != 0;
            side_pos[static_cast<std::size_t>(n)] = band || v > 0.0;
            side_neg[static_cast<std::size_t>(n)] = band || v < 0.0;
        }
    {
        std::vector<std::uint8_t> done_pos = done;
        std::vector<std::uint8_t> done_neg = done;
        std::vector<double> dist_pos = dist;
        std::vector<double> dist_neg = dist;
        march_side(g, side_pos, done_pos, dist_pos);
        march_side(g, side_neg, done_neg, dist_neg);
        for (int n = 0; n < g.node_count(); ++n) {
            if (done[static_cast<std::size_t>(n)]) continue;
            const std::size_t u = static_cast<std::size_t>(n);
            if (done_pos[u] && dist_pos[u] < inf)
                dist[u] = dist_pos[u];
            else if (done_neg[u] && dist_neg[u] < inf)
                dist[u] = dist_neg[u];
        }
    }

    ScalarField out(g);
    double dmax = 0.0;
    for (int n = 0; n < g.node_count(); ++n)
        if (dist[static_cast<std::size_t>(n)] < inf)
            dmax = std::max(dmax, dist[static_cast<std::size_t>(n)]);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const std::size_t n = static_cast<std::size_t>(g.node_id(i, j));
            const double v = phi(i, j);
            double d = dist[n];
            if (d == inf) d = dmax + h;  // unreachable pocket, keep a sane magnitude
            out(i, j) = v < 0.0 ? -d : (v > 0.0 ? d : 0.0);
        }
    return out;
}

LevelSet reinitialize(const LevelSet& ls) { return {ls.body(), reinitialize(ls.phi())}; }

template <class T>
NodalField<T> extrapolate_field(const ScalarField& phi, const NodalField<T>& f) {
    if (!(phi.grid() == f.grid())) fail("extrapolate_field: grid mismatch");
    const Grid& g = phi.grid();

    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(g.node_count()));
    bool any_interior = false;
    for (int n = 0; n < g.node_count(); ++n) {
        if (phi.data()[static_cast<std::size_t>(n)] <= 0.0)
            any_interior = true;
        else
            order.push_back(n);
    }
    if (!any_interior) fail("extrapolate_field: level set has no interior nodes");

    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double pa = phi.data()[static_cast<std::size_t>(a)];
        const double pb = phi.data()[static_cast<std::size_t>(b)];
        return pa < pb || (pa == pb && a < b);
    });

    NodalField<T> out = f;
    const int nx = g.nx();
    for (int n : order) {
        const int i = n % nx, j = n / nx;
        const double phi_n = phi(i, j);
        const Vec2 nrm = node_gradient(phi, i, j);

        T acc{};
        double wsum = 0.0;
        auto try_dir = [&](int di, int dj, double w) {
            if (w <= 0.0) return;
            const int ii = g.clamp_i(i + di), jj = g.clamp_j(j + dj);
            if (ii == i && jj == j) return;
            if (phi(ii, jj) < phi_n) {  // strictly upwind: already visited
                acc += out(ii, jj) * w;
                wsum += w;
            }
        };
        try_dir(nrm.x > 0 ? -1 : 1, 0, std::abs(nrm.x));
        try_dir(0, nrm.y > 0 ? -1 : 1, std::abs(nrm.y));

        if (wsum > 0.0) {
            out(i, j) = acc * (1.0 / wsum);
        } else {
            // No strictly-upwind neighbor (flat or tied phi): copy the
            // smallest-phi 4-neighbor.
            double best = std::numeric_limits<double>::max();
            T val = out(i, j);
            const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
            for (int k = 0; k < 4; ++k) {
                const int ii = i + di[k], jj = j + dj[k];
                if (ii < 0 || ii >= nx || jj < 0 || jj >= g.ny()) continue;
                if (phi(ii, jj) < best) {
                    best = phi(ii, jj);
                    val = out(ii, jj);
                }
            }
            out(i, j) = val;
        }
    }
    return out;
}

template ScalarField extrapolate_field<double>(const ScalarField&, const ScalarField&);
template VectorField extrapolate_field<Vec2>(const ScalarField&, const VectorField&);

}  // namespace lsc
