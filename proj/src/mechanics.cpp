#include "lsc/mechanics.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace lsc {

namespace {
constexpr double kCbrtEps = 6.055454452393343e-06;  // cbrt(machine epsilon)
}

std::array<int, 4> cell_nodes(const Grid& g, const CellIndex& c) {
    return {g.node_id(c.i, c.j), g.node_id(c.i + 1, c.j), g.node_id(c.i + 1, c.j + 1),
            g.node_id(c.i, c.j + 1)};
}

std::array<double, 4> shape_values(const Grid& g, const CellIndex& c, const Vec2& x) {
    const Vec2 o = g.cell_origin(c);
    const double xi = (x.x - o.x) / g.h();
    const double eta = (x.y - o.y) / g.h();
    return {(1 - xi) * (1 - eta), xi * (1 - eta), xi * eta, (1 - xi) * eta};
}

Eigen::Matrix<double, 3, 8> bmatrix(const Grid& g, const CellIndex& c, const Vec2& x) {
    const Vec2 o = g.cell_origin(c);
    const double h = g.h();
    const double xi = (x.x - o.x) / h;
    const double eta = (x.y - o.y) / h;

    const double dndx[4] = {-(1 - eta) / h, (1 - eta) / h, eta / h, -eta / h};
    const double dndy[4] = {-(1 - xi) / h, -xi / h, xi / h, (1 - xi) / h};

    Eigen::Matrix<double, 3, 8> b = Eigen::Matrix<double, 3, 8>::Zero();
    for (int a = 0; a < 4; ++a) {
        b(0, 2 * a) = dndx[a];
        b(1, 2 * a + 1) = dndy[a];
        b(2, 2 * a) = dndy[a];
        b(2, 2 * a + 1) = dndx[a];
    }
    return b;
}

Eigen::Matrix<double, 8, 8> element_stiffness(const Grid& g, const CellIndex& c,
                                              const QuadratureSet& quad, int cell_id,
                                              const Eigen::Matrix3d& d) {
    Eigen::Matrix<double, 8, 8> ke = Eigen::Matrix<double, 8, 8>::Zero();
    const int begin = quad.cell_begin[static_cast<std::size_t>(cell_id)];
    const int end = quad.cell_end[static_cast<std::size_t>(cell_id)];
    for (int q = begin; q < end; ++q) {
        const QuadPoint& qp = quad.points[static_cast<std::size_t>(q)];
        const Eigen::Matrix<double, 3, 8> b = bmatrix(g, c, qp.x);
        ke += qp.w * b.transpose() * d * b;
    }
    return ke;
}

Vec2 Body::displacement_at(const Vec2& x) const {
    if (rigid) return motion.displacement_at(x);
    const Grid& g = grid();
    const CellIndex c = g.cell_of(x);
    const auto nodes = cell_nodes(g, c);
    const auto shape = shape_values(g, c, x);

    double wsum = 0.0;
    Vec2 out{0, 0};
    for (int a = 0; a < 4; ++a) {
        const int n = nodes[static_cast<std::size_t>(a)];
        if (!node_present[static_cast<std::size_t>(n)]) continue;
        wsum += shape[static_cast<std::size_t>(a)];
        out.x += shape[static_cast<std::size_t>(a)] * u[static_cast<std::size_t>(2 * n)];
        out.y += shape[static_cast<std::size_t>(a)] * u[static_cast<std::size_t>(2 * n + 1)];
    }
    if (wsum <= 0.0) return {0, 0};
    return out / wsum;
}

StepSolver::StepSolver(std::vector<Body>& bodies, FrictionLaw law, NewtonOptions opt)
    : bodies_(bodies), law_(law), opt_(opt) {}

void StepSolver::set_dirichlet(const std::vector<DirichletPatch>& patches) { patches_ = patches; }
void StepSolver::set_edge_loads(const std::vector<EdgeLoad>& loads) { loads_ = loads; }

void StepSolver::build_dofs() {
    const std::size_t nb = bodies_.size();
    slot_eq_.assign(nb, {});
    slot_state_.assign(nb, {});
    slot_patch_.assign(nb, {});
    f_ext_.assign(nb, {});
    residual_.assign(nb, {});
    n_free_ = 0;

    for (std::size_t b = 0; b < nb; ++b) {
        Body& body = bodies_[b];
        const Grid& g = body.grid();
        const std::size_t nn = static_cast<std::size_t>(g.node_count());

        body.cell_active.assign(static_cast<std::size_t>(g.cell_count()), 0);
        body.node_present.assign(nn, 0);
        body.u.assign(2 * nn, 0.0);
        slot_eq_[b].assign(2 * nn, -1);
        slot_state_[b].assign(2 * nn, 0);
        slot_patch_[b].assign(2 * nn, -1);
        f_ext_[b].assign(2 * nn, 0.0);
        residual_[b].assign(2 * nn, 0.0);
        if (body.rigid) continue;

        for (int cid = 0; cid < g.cell_count(); ++cid) {
            if (!body.quad.cell_has_points(cid)) continue;
            body.cell_active[static_cast<std::size_t>(cid)] = 1;
            const int ci = cid % (g.nx() - 1), cj = cid / (g.nx() - 1);
            for (int n : cell_nodes(g, {ci, cj})) body.node_present[static_cast<std::size_t>(n)] = 1;
        }

        for (std::size_t n = 0; n < nn; ++n)
            if (body.node_present[n]) {
                slot_state_[b][2 * n] = 1;
                slot_state_[b][2 * n + 1] = 1;
            }

        for (int p = 0; p < static_cast<int>(patches_.size()); ++p) {
            const DirichletPatch& patch = patches_[static_cast<std::size_t>(p)];
            if (patch.body != body.id) continue;
            for (int j = 0; j < g.ny(); ++j)
                for (int i = 0; i < g.nx(); ++i) {
                    const std::size_t n = static_cast<std::size_t>(g.node_id(i, j));
                    if (!body.node_present[n] || !patch.box.contains(g.node_pos(i, j))) continue;
                    if (patch.ux) {
                        slot_state_[b][2 * n] = 2;
                        slot_patch_[b][2 * n] = p;
                        body.u[2 * n] = *patch.ux;
                    }
                    if (patch.uy) {
                        slot_state_[b][2 * n + 1] = 2;
                        slot_patch_[b][2 * n + 1] = p;
                        body.u[2 * n + 1] = *patch.uy;
                    }
                }
        }

    }
}

// A cut cell whose interior hugs the corner opposite a node leaves that node
// with vanishing shape gradients at every quadrature point; such DOFs carry
// no stiffness and are dropped before numbering.
void StepSolver::prune_and_number() {
    for (std::size_t b = 0; b < bodies_.size(); ++b) {
        Body& body = bodies_[b];
        if (body.rigid) continue;
        std::vector<double> diag(body.u.size(), 0.0);
        for (const ElementCache& ec : caches_[b])
            for (int a = 0; a < 4; ++a) {
                diag[static_cast<std::size_t>(2 * ec.nodes[static_cast<std::size_t>(a)])] +=
                    ec.ke(2 * a, 2 * a);
                diag[static_cast<std::size_t>(2 * ec.nodes[static_cast<std::size_t>(a)] + 1)] +=
                    ec.ke(2 * a + 1, 2 * a + 1);
            }
        double dmax = 0.0;
        for (double v : diag) dmax = std::max(dmax, v);
        const double floor = 1e-10 * dmax;
        for (std::size_t n = 0; n < body.u.size() / 2; ++n) {
            if (!body.node_present[n]) continue;
            const bool weak_x = slot_state_[b][2 * n] == 1 && diag[2 * n] <= floor;
            const bool weak_y = slot_state_[b][2 * n + 1] == 1 && diag[2 * n + 1] <= floor;
            if (weak_x) slot_state_[b][2 * n] = 0;
            if (weak_y) slot_state_[b][2 * n + 1] = 0;
            if (slot_state_[b][2 * n] == 0 && slot_state_[b][2 * n + 1] == 0) {
                body.node_present[n] = 0;
                body.u[2 * n] = 0.0;
                body.u[2 * n + 1] = 0.0;
            }
        }
    }
    n_free_ = 0;
    for (std::size_t b = 0; b < bodies_.size(); ++b)
        for (std::size_t s = 0; s < slot_state_[b].size(); ++s)
            if (slot_state_[b][s] == 1) slot_eq_[b][s] = n_free_++;
}

void StepSolver::build_caches() {
    caches_.assign(bodies_.size(), {});
    for (std::size_t b = 0; b < bodies_.size(); ++b) {
        Body& body = bodies_[b];
        if (body.rigid) continue;
        const Grid& g = body.grid();
        const Eigen::Matrix3d d = body.mat.stiffness();
        for (int cid = 0; cid < g.cell_count(); ++cid) {
            if (!body.cell_active[static_cast<std::size_t>(cid)]) continue;
            const CellIndex c{cid % (g.nx() - 1), cid / (g.nx() - 1)};
            ElementCache ec;
            ec.cell = c;
            ec.cid = cid;
            ec.nodes = cell_nodes(g, c);
            ec.ke = element_stiffness(g, c, body.quad, cid, d);
            ec.f0.setZero();
            const int begin = body.quad.cell_begin[static_cast<std::size_t>(cid)];
            const int end = body.quad.cell_end[static_cast<std::size_t>(cid)];
            for (int q = begin; q < end; ++q) {
                const QuadPoint& qp = body.quad.points[static_cast<std::size_t>(q)];
                const Eigen::Matrix<double, 3, 8> bm = bmatrix(g, c, qp.x);
                ec.f0 += qp.w * bm.transpose() * body.sigma0[static_cast<std::size_t>(q)];
            }
            caches_[b].push_back(std::move(ec));
        }
    }
}

void StepSolver::build_external_loads() {
    for (const EdgeLoad& load : loads_) {
        int bi = -1;
        for (std::size_t b = 0; b < bodies_.size(); ++b)
            if (bodies_[b].id == load.body) bi = static_cast<int>(b);
        if (bi < 0) fail("edge load references unknown body ", load.body);
        Body& body = bodies_[static_cast<std::size_t>(bi)];
        const Grid& g = body.grid();

        const double len = norm(load.b - load.a);
        if (len <= 0.0) fail("edge load with empty edge");
        const Vec2 dir = (load.b - load.a) / len;

        // Subdivide per grid cell, 2-point Gauss per piece (exact for the
        // linear shape functions against a quadratic traction).
        const int pieces = std::max(1, static_cast<int>(std::ceil(len / g.h())));
        const double ds = len / pieces;
        const double gauss = 1.0 / (2.0 * std::sqrt(3.0));
        for (int k = 0; k < pieces; ++k) {
            for (int q = 0; q < 2; ++q) {
                const double s = (k + 0.5 + (q == 0 ? -gauss : gauss)) * ds;
                const Vec2 x = load.a + s * dir;
                const double tx = load.tx[0] + load.tx[1] * s + load.tx[2] * s * s;
                const double ty = load.ty[0] + load.ty[1] * s + load.ty[2] * s * s;
                const CellIndex c = g.cell_of(x);
                const auto nodes = cell_nodes(g, c);
                const auto shape = shape_values(g, c, x);
                const double w = 0.5 * ds;
                for (int a = 0; a < 4; ++a) {
                    const std::size_t n = static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)]);
                    f_ext_[static_cast<std::size_t>(bi)][2 * n] +=
                        w * shape[static_cast<std::size_t>(a)] * tx;
                    f_ext_[static_cast<std::size_t>(bi)][2 * n + 1] +=
                        w * shape[static_cast<std::size_t>(a)] * ty;
                }
            }
        }
    }
}

Vec2 StepSolver::total_edge_load() const {
    Vec2 total{0, 0};
    for (std::size_t b = 0; b < bodies_.size(); ++b)
        for (std::size_t n = 0; n < f_ext_[b].size() / 2; ++n) {
            total.x += f_ext_[b][2 * n];
            total.y += f_ext_[b][2 * n + 1];
        }
    return total;
}

StepSolver::ContactSide StepSolver::side_info(int body_index, const Vec2& proj) const {
    ContactSide side;
    side.body_index = body_index;
    const Body& body = bodies_[static_cast<std::size_t>(body_index)];
    if (body.rigid) return side;

    side.deformable = true;
    const Grid& g = body.grid();
    const CellIndex c = g.cell_of(proj);
    side.nodes = cell_nodes(g, c);
    auto shape = shape_values(g, c, proj);
    double wsum = 0.0;
    for (int a = 0; a < 4; ++a) {
        if (!body.node_present[static_cast<std::size_t>(side.nodes[static_cast<std::size_t>(a)])])
            shape[static_cast<std::size_t>(a)] = 0.0;
        wsum += shape[static_cast<std::size_t>(a)];
    }
    if (wsum <= 1e-12) {
        side.deformable = false;  // no support; treated as immovable
        return side;
    }
    for (int a = 0; a < 4; ++a) side.shape[static_cast<std::size_t>(a)] = shape[static_cast<std::size_t>(a)] / wsum;
    return side;
}

void StepSolver::add_contact_residual(const ContactPair& pair) {
    int bi = -1, bj = -1;
    for (std::size_t b = 0; b < bodies_.size(); ++b) {
        if (bodies_[b].id == pair.body_i) bi = static_cast<int>(b);
        if (bodies_[b].id == pair.body_j) bj = static_cast<int>(b);
    }
    if (bi < 0 || bj < 0) fail("contact pair references unknown body");

    for (const ContactPoint& p : pair.points) {
        if (!p.active) continue;
        const Vec2 tau = p.tau_n * p.n + p.tau_t * p.t;
        const Vec2 fi = -p.weight * tau;  // residual contribution on body i
        const Vec2 fj = p.weight * tau;

        for (const auto& [side, f] : {std::pair{side_info(bi, p.proj_i), fi},
                                      std::pair{side_info(bj, p.proj_j), fj}}) {
            if (!side.deformable) continue;
            auto& res = residual_[static_cast<std::size_t>(side.body_index)];
            for (int a = 0; a < 4; ++a) {
                const std::size_t n =
                    static_cast<std::size_t>(side.nodes[static_cast<std::size_t>(a)]);
                res[2 * n] += side.shape[static_cast<std::size_t>(a)] * f.x;
                res[2 * n + 1] += side.shape[static_cast<std::size_t>(a)] * f.y;
            }
        }
    }
}

void StepSolver::assemble_residual(std::vector<ContactPair>& pairs, bool update_tractions) {
    for (std::size_t b = 0; b < bodies_.size(); ++b)
        std::fill(residual_[b].begin(), residual_[b].end(), 0.0);

    // Bulk internal forces minus external loads.
    for (std::size_t b = 0; b < bodies_.size(); ++b) {
        Body& body = bodies_[b];
        if (body.rigid) continue;
        for (const ElementCache& ec : caches_[b]) {
            Eigen::Matrix<double, 8, 1> ue;
            for (int a = 0; a < 4; ++a) {
                ue(2 * a) = body.u[static_cast<std::size_t>(2 * ec.nodes[static_cast<std::size_t>(a)])];
                ue(2 * a + 1) =
                    body.u[static_cast<std::size_t>(2 * ec.nodes[static_cast<std::size_t>(a)] + 1)];
            }
            const Eigen::Matrix<double, 8, 1> fe = ec.ke * ue + ec.f0;
            for (int a = 0; a < 4; ++a) {
                residual_[b][static_cast<std::size_t>(2 * ec.nodes[static_cast<std::size_t>(a)])] +=
                    fe(2 * a);
                residual_[b][static_cast<std::size_t>(2 * ec.nodes[static_cast<std::size_t>(a)] + 1)] +=
                    fe(2 * a + 1);
            }
        }
        for (std::size_t s = 0; s < residual_[b].size(); ++s) residual_[b][s] -= f_ext_[b][s];
    }

    // Contact tractions.
    for (ContactPair& pair : pairs) {
        if (update_tractions) {
            int bi = -1, bj = -1;
            for (std::size_t b = 0; b < bodies_.size(); ++b) {
                if (bodies_[b].id == pair.body_i) bi = static_cast<int>(b);
                if (bodies_[b].id == pair.body_j) bj = static_cast<int>(b);
            }
            const Body& body_i = bodies_[static_cast<std::size_t>(bi)];
            const Body& body_j = bodies_[static_cast<std::size_t>(bj)];
            evaluate_gaps(
                pair, [&](const Vec2& x) { return body_i.displacement_at(x); },
                [&](const Vec2& x) { return body_j.displacement_at(x); });
            for (ContactPoint& p : pair.points) {
                const ReturnMapResult rm = return_map(p.gn, p.gt, p.gt_plastic, law_);
                p.tau_n = rm.tau_n;
                p.tau_t = rm.tau_t;
            }
            update_active_set(pair);
        }
        add_contact_residual(pair);
    }
}

double StepSolver::free_residual_norm() const {
    double s = 0.0;
    for (std::size_t b = 0; b < bodies_.size(); ++b)
        for (std::size_t i = 0; i < residual_[b].size(); ++i)
            if (slot_state_[b][i] == 1) s += residual_[b][i] * residual_[b][i];
    return std::sqrt(s);
}

Eigen::VectorXd StepSolver::free_residual() const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n_free_);
    for (std::size_t b = 0; b < bodies_.size(); ++b)
        for (std::size_t i = 0; i < residual_[b].size(); ++i)
            if (slot_state_[b][i] == 1) r(slot_eq_[b][i]) = residual_[b][i];
    return r;
}

void StepSolver::contact_fd_blocks(const ContactPair& pair,
                                   std::vector<Eigen::Triplet<double>>& trips) const {
    int bi = -1, bj = -1;
    for (std::size_t b = 0; b < bodies_.size(); ++b) {
        if (bodies_[b].id == pair.body_i) bi = static_cast<int>(b);
        if (bodies_[b].id == pair.body_j) bj = static_cast<int>(b);
    }

    for (const ContactPoint& p : pair.points) {
        if (!p.active) continue;
        const ContactSide side_i = side_info(bi, p.proj_i);
        const ContactSide side_j = side_info(bj, p.proj_j);
        if (!side_i.deformable && !side_j.deformable) continue;

        // Local layout: 8 slots for side i then 8 for side j.
        auto local_rows = [&](const Vec2& tau, Eigen::Matrix<double, 16, 1>& r) {
            r.setZero();
            if (side_i.deformable)
                for (int a = 0; a < 4; ++a) {
                    r(2 * a) = -side_i.shape[static_cast<std::size_t>(a)] * p.weight * tau.x;
                    r(2 * a + 1) = -side_i.shape[static_cast<std::size_t>(a)] * p.weight * tau.y;
                }
            if (side_j.deformable)
                for (int a = 0; a < 4; ++a) {
                    r(8 + 2 * a) = side_j.shape[static_cast<std::size_t>(a)] * p.weight * tau.x;
                    r(8 + 2 * a + 1) = side_j.shape[static_cast<std::size_t>(a)] * p.weight * tau.y;
                }
        };

        // Differencing freezes the return-map state: the plastic slip and the
        // branch taken at the current iterate (an on-cone point would
        // otherwise pick up the slip slope even for elastic unloading probes).
        const ReturnMapResult rm0 = return_map(p.gn, p.gt, p.gt_plastic, law_);
        const double slip_sign = (p.gt - p.gt_plastic) >= 0.0 ? 1.0 : -1.0;
        auto frozen_tau = [&](double gn1, double gt1) {
            const double tau_n = gn1 / law_.eps_n;
            const double tau_t = rm0.slipped ? slip_sign * law_.mu * std::abs(tau_n)
                                             : (gt1 - p.gt_plastic) / law_.eps_t;
            return tau_n * p.n + tau_t * p.t;
        };

        const Vec2 tau0 = frozen_tau(p.gn, p.gt);
        Eigen::Matrix<double, 16, 1> r0;
        local_rows(tau0, r0);

        // Row equation ids (free slots only).
        std::array<int, 16> row_eq;
        row_eq.fill(-1);
        auto fill_rows = [&](const ContactSide& side, int base) {
            if (!side.deformable) return;
            const auto& eq = slot_eq_[static_cast<std::size_t>(side.body_index)];
            for (int a = 0; a < 4; ++a) {
                const int n = side.nodes[static_cast<std::size_t>(a)];
                row_eq[static_cast<std::size_t>(base + 2 * a)] = eq[static_cast<std::size_t>(2 * n)];
                row_eq[static_cast<std::size_t>(base + 2 * a + 1)] =
                    eq[static_cast<std::size_t>(2 * n + 1)];
            }
        };
        fill_rows(side_i, 0);
        fill_rows(side_j, 8);

        for (int col = 0; col < 16; ++col) {
            const ContactSide& side = col < 8 ? side_i : side_j;
            if (!side.deformable) continue;
            const int a = (col % 8) / 2;
            const int comp = col % 2;
            const int eq = row_eq[static_cast<std::size_t>(col)];
            if (eq < 0) continue;  // prescribed or absent

            const Body& body = bodies_[static_cast<std::size_t>(side.body_index)];
            const double uq =
                body.u[static_cast<std::size_t>(2 * side.nodes[static_cast<std::size_t>(a)] + comp)];

            // Relative perturbation with the mesh size as the floor scale.
            // The step has to stay well inside the current stick/slip branch
            // (gap scales are h * strain), which a displacement-relative step
            // guarantees while keeping the difference quotient exact on the
            // piecewise-linear traction laws.
            const double hbar = kCbrtEps * std::max(std::abs(uq), body.grid().h());

            // The perturbation enters only through the relative displacement
            // at this point; plastic state and activity stay frozen.
            const double sgn = col < 8 ? -1.0 : 1.0;
            const Vec2 dir = comp == 0 ? Vec2{1, 0} : Vec2{0, 1};
            const Vec2 drel = sgn * side.shape[static_cast<std::size_t>(a)] * hbar * dir;
            const double gn1 = p.gn + dot(drel, p.n);
            const double gt1 = p.gt + dot(drel, p.t);
            const Vec2 tau1 = frozen_tau(gn1, gt1);

            Eigen::Matrix<double, 16, 1> r1;
            local_rows(tau1, r1);

            for (int row = 0; row < 16; ++row) {
                if (row_eq[static_cast<std::size_t>(row)] < 0) continue;
                const double v = (r1(row) - r0(row)) / hbar;
                if (v != 0.0)
                    trips.emplace_back(row_eq[static_cast<std::size_t>(row)], eq, v);
            }
        }
    }
}

Eigen::SparseMatrix<double> StepSolver::assemble_tangent(
    const std::vector<ContactPair>& pairs) const {
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t b = 0; b < bodies_.size(); ++b) {
        const Body& body = bodies_[b];
        if (body.rigid) continue;
        for (const ElementCache& ec : caches_[b]) {
            std::array<int, 8> eq;
            for (int a = 0; a < 4; ++a) {
                eq[static_cast<std::size_t>(2 * a)] =
                    slot_eq_[b][static_cast<std::size_t>(2 * ec.nodes[static_cast<std::size_t>(a)])];
                eq[static_cast<std::size_t>(2 * a + 1)] = slot_eq_[b][static_cast<std::size_t>(
                    2 * ec.nodes[static_cast<std::size_t>(a)] + 1)];
            }
            for (int r = 0; r < 8; ++r) {
                if (eq[static_cast<std::size_t>(r)] < 0) continue;
                for (int c = 0; c < 8; ++c) {
                    if (eq[static_cast<std::size_t>(c)] < 0) continue;
                    trips.emplace_back(eq[static_cast<std::size_t>(r)],
                                       eq[static_cast<std::size_t>(c)], ec.ke(r, c));
                }
            }
        }
    }
    for (const ContactPair& pair : pairs) contact_fd_blocks(pair, trips);

    for (const Eigen::Triplet<double>& tr : trips)
        if (!std::isfinite(tr.value()))
            fail("assemble_tangent: non-finite entry at (", tr.row(), ", ", tr.col(), ")");

    Eigen::SparseMatrix<double> t(n_free_, n_free_);
    t.setFromTriplets(trips.begin(), trips.end());
    return t;
}

void StepSolver::prepare() {
    build_dofs();
    build_caches();
    prune_and_number();
    build_external_loads();
}

NewtonReport StepSolver::solve(std::vector<ContactPair>& pairs) {
    const bool debug_trace = std::getenv("LSC_NEWTON_TRACE") != nullptr;
    prepare();

    if (n_free_ == 0) {
        // Nothing to solve (all rigid or fully prescribed); still evaluate
        // tractions once for reporting.
        assemble_residual(pairs, true);
        for (ContactPair& pair : pairs)
            for (ContactPoint& p : pair.points)
                if (p.active) p.gt_plastic = return_map(p.gn, p.gt, p.gt_plastic, law_).gt_plastic;
        NewtonReport rep;
        rep.converged = true;
        rep.iterations = 1;
        rep.residual_norms.push_back(0.0);
        return rep;
    }

    NewtonReport rep;
    double r0norm = -1.0;
    int solves = 0;
    const double h_grid = bodies_.front().grid().h();
    const double cap_max = opt_.step_cap_max > 0.0 ? opt_.step_cap_max : 1e6 * h_grid;
    double step_cap = std::min(0.5 * h_grid, cap_max);

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

    auto save_state = [&]() {
        std::vector<std::vector<double>> u;
        for (const Body& body : bodies_) u.push_back(body.u);
        return u;
    };
    auto restore_state = [&](const std::vector<std::vector<double>>& u) {
        for (std::size_t b = 0; b < bodies_.size(); ++b) bodies_[b].u = u[b];
    };
    auto apply_update = [&](const Eigen::VectorXd& du, double scale) {
        for (std::size_t b = 0; b < bodies_.size(); ++b) {
            Body& body = bodies_[b];
            if (body.rigid) continue;
            for (std::size_t s = 0; s < body.u.size(); ++s)
                if (slot_eq_[b][s] >= 0) body.u[s] += scale * du(slot_eq_[b][s]);
        }
    };

    assemble_residual(pairs, true);
    double rnorm = free_residual_norm();
    int stall_count = 0;
    double stall_ref = -1.0;

    for (int it = 1; it <= opt_.max_iter; ++it) {
        int active = 0;
        for (const ContactPair& pair : pairs) active += pair.active_count();
        rep.active_points.push_back(active);
        rep.residual_norms.push_back(rnorm);
        if (!std::isfinite(rnorm)) fail("newton_solve: non-finite residual at iteration ", it);
        if (r0norm < 0.0) r0norm = rnorm;

        if (debug_trace)
            std::fprintf(stderr, "    [newton] it %d |r| %.6e active %d cap %.2e\n", it, rnorm,
                         active, step_cap);

        if (rnorm <= std::max(opt_.tol_abs, opt_.tol_rel * r0norm)) {
            // Commit the plastic slip accumulated over this load step. The
            // trial state is measured from the step-start history throughout
            // the iteration; committing per iteration makes on-cone points
            // flip their slip direction against the elastic rebound and the
            // iteration cycles instead of converging.
            for (ContactPair& pair : pairs)
                for (ContactPoint& p : pair.points)
                    if (p.active)
                        p.gt_plastic = return_map(p.gn, p.gt, p.gt_plastic, law_).gt_plastic;
            rep.converged = true;
            rep.iterations = std::max(1, solves);
            return rep;
        }

        Eigen::SparseMatrix<double> t = assemble_tangent(pairs);
        lu.compute(t);
        if (lu.info() != Eigen::Success) {
            // A body hanging on marginal contacts leaves near-free rigid
            // modes; the factorization can empty their columns. Retry with a
            // progressively larger diagonal shift, which only damps the
            // floating modes and leaves the Newton target untouched.
            double diag_ref = 0.0;
            for (int k = 0; k < t.outerSize(); ++k)
                for (Eigen::SparseMatrix<double>::InnerIterator itt(t, k); itt; ++itt)
                    if (itt.row() == itt.col())
                        diag_ref = std::max(diag_ref, std::abs(itt.value()));
            Eigen::SparseMatrix<double> eye(n_free_, n_free_);
            eye.setIdentity();
            for (double lambda = 1e-10; lambda <= 1.1e-6 && lu.info() != Eigen::Success;
                 lambda *= 100.0) {
                t = assemble_tangent(pairs) + (lambda * diag_ref) * eye;
                lu.compute(t);
            }
        }
        if (lu.info() != Eigen::Success)
            fail("newton_solve: singular tangent at iteration ", it, " (", n_free_,
                 " free DOFs); factorization reported: ", lu.lastErrorMessage());

        const Eigen::VectorXd rfree = free_residual();
        Eigen::VectorXd du = lu.solve(-rfree);
        if (lu.info() != Eigen::Success) fail("newton_solve: sparse solve failed");
        du += lu.solve(-(t * du + rfree));  // one iterative refinement pass
        const double linres = (t * du + rfree).norm();
        if (!std::isfinite(linres) || linres > 1e-2 * rnorm)
            fail("newton_solve: singular or ill-conditioned tangent at iteration ", it, " (",
                 n_free_, " free DOFs, linear solve residual ", linres, " vs |r| = ", rnorm, ")");

        const double du_max = du.lpNorm<Eigen::Infinity>();
        if (du_max > step_cap) du *= step_cap / du_max;
        ++solves;

        // Line search on the Newton step with the state saved; full steps can
        // orbit between active-set equilibria near kinks of the traction law.
        const std::vector<std::vector<double>> saved = save_state();
        const double accept_bound = rnorm * (1.0 + 1e-12);
        bool accepted = false;
        double rn = rnorm;
        double best_rn = std::numeric_limits<double>::max();
        Eigen::VectorXd best_dir;
        double best_scale = 0.0;
        auto probe = [&](const Eigen::VectorXd& dir, double scale) {
            restore_state(saved);
            apply_update(dir, scale);
            assemble_residual(pairs, true);
            rn = free_residual_norm();
            if (rn < best_rn) {
                best_rn = rn;
                best_dir = dir;
                best_scale = scale;
            }
            return rn <= accept_bound;
        };

        for (const double scale : {1.0, 0.5, 0.25, 0.0625, 0.015625}) {
            if ((accepted = probe(du, scale))) break;
        }
        if (!accepted) {
            // Residual-descent fallback: -T^T r decreases |r|^2 away from
            // stationary points even when the Newton direction overshoots a
            // kink.
            const Eigen::VectorXd g = t.transpose() * rfree;
            const double gmax = g.lpNorm<Eigen::Infinity>();
            if (gmax > 0.0)
                for (double scale = step_cap / gmax; scale > 1e-5 * step_cap / gmax;
                     scale *= 0.125)
                    if ((accepted = probe(g, -scale))) break;
        }
        if (!accepted) {
            // Nonmonotone escape with the least-bad probe; staying put would
            // cycle forever.
            restore_state(saved);
            apply_update(best_dir, best_scale);
            assemble_residual(pairs, true);
            rn = free_residual_norm();
        }
        step_cap = accepted ? std::min(1.8 * step_cap, cap_max)
                            : std::max(0.35 * step_cap, 0.1 * h_grid);

        // Watchdog: a fresh contact can put a residual ridge between the
        // iterate and the equilibrium valley, starving the monotone search.
        // After a run of stalled iterations, jump with the full Newton step.
        if (stall_ref > 0.0 && rn > 0.995 * stall_ref)
            ++stall_count;
        else
            stall_count = 0;
        stall_ref = rn;
        if (stall_count >= 5 && !opt_.allow_unconverged) {
            restore_state(saved);
            Eigen::VectorXd jump = du;
            const double jmax = jump.lpNorm<Eigen::Infinity>();
            const double jcap = std::max(step_cap, 2.0 * h_grid);
            if (jmax > jcap) jump *= jcap / jmax;
            apply_update(jump, 1.0);
            assemble_residual(pairs, true);
            rn = free_residual_norm();
            stall_count = 0;
            stall_ref = -1.0;
        }
        rnorm = rn;
    }

    if (opt_.allow_unconverged) {
        for (ContactPair& pair : pairs)
            for (ContactPoint& p : pair.points)
                if (p.active) p.gt_plastic = return_map(p.gn, p.gt, p.gt_plastic, law_).gt_plastic;
        rep.converged = false;
        rep.iterations = solves;
        return rep;
    }
    std::string hist;
    for (double r : rep.residual_norms) hist += cat(" ", r);
    fail("newton_solve: no convergence after ", opt_.max_iter, " iterations; residual history:",
         hist);
}

Vec2 StepSolver::reaction(const std::string& face_name) const {
    Vec2 r{0, 0};
    bool found = false;
    for (std::size_t b = 0; b < bodies_.size(); ++b)
        for (std::size_t s = 0; s < residual_[b].size(); ++s) {
            const int p = slot_patch_[b][s];
            if (p < 0 || patches_[static_cast<std::size_t>(p)].name != face_name) continue;
            found = true;
            if (s % 2 == 0)
                r.x -= residual_[b][s];
            else
                r.y -= residual_[b][s];
        }
    if (!found) fail("reaction: no prescribed DOFs tagged '", face_name, "'");
    return r;
}

}  // namespace lsc
