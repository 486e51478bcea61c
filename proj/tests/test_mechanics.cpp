#include <random>
#include <set>

#include "doctest.h"
#include "lsc/mechanics.hpp"

using namespace lsc;

namespace {

// Independent Q4 plane-strain stiffness oracle: dense Gauss-Legendre
// integration with its own shape-derivative expressions.
Eigen::Matrix<double, 8, 8> q4_oracle(double h, double young, double poisson) {
    const double c = young / ((1 + poisson) * (1 - 2 * poisson));
    Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
    d(0, 0) = d(1, 1) = c * (1 - poisson);
    d(0, 1) = d(1, 0) = c * poisson;
    d(2, 2) = c * (1 - 2 * poisson) / 2;

    // 5-point Gauss on [0,1].
    const double gp[5] = {0.04691007703066800, 0.23076534494715845, 0.5, 0.76923465505284155,
                          0.95308992296933200};
    const double gw[5] = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
                          0.23931433524968324, 0.11846344252809454};

    Eigen::Matrix<double, 8, 8> ke = Eigen::Matrix<double, 8, 8>::Zero();
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) {
            const double xi = gp[a], eta = gp[b];
            const double dndx[4] = {-(1 - eta) / h, (1 - eta) / h, eta / h, -eta / h};
            const double dndy[4] = {-(1 - xi) / h, -xi / h, xi / h, (1 - xi) / h};
            Eigen::Matrix<double, 3, 8> bm = Eigen::Matrix<double, 3, 8>::Zero();
            for (int k = 0; k < 4; ++k) {
                bm(0, 2 * k) = dndx[k];
                bm(1, 2 * k + 1) = dndy[k];
                bm(2, 2 * k) = dndy[k];
                bm(2, 2 * k + 1) = dndx[k];
            }
            ke += gw[a] * gw[b] * h * h * bm.transpose() * d * bm;
        }
    return ke;
}

struct TwoBlockFixture {
    Grid grid;
    std::vector<Body> bodies;
    FrictionLaw law;

    TwoBlockFixture(double mu, double h = 0.1)
        : grid(Grid::covering({{0, 0}, {2, 2}}, h)), law(FrictionLaw::scaled(mu, h, 1.0)) {
        bodies.emplace_back(0, "lower", Material(1.0, 0.0), false,
                            make_rectangle(0, grid, {0.4, 0.4}, {1.6, 1.0}));
        bodies.emplace_back(1, "upper", Material(1.0, 0.0), false,
                            make_rectangle(1, grid, {0.4, 1.0}, {1.6, 1.6}));
        for (Body& b : bodies) {
            b.quad = build_quadrature(b.ls);
            b.sigma0.assign(b.quad.points.size(), Eigen::Vector3d::Zero());
        }
    }

    std::vector<ContactPair> make_pairs() const {
        const double eps = 1.5 * grid.h();
        const auto mask = proximity_mask(bodies[0].ls.phi(), bodies[1].ls.phi(), eps);
        std::vector<ContactPair> pairs;
        pairs.push_back(build_intermediate_surface(bodies[0].ls, bodies[1].ls, mask, eps));
        return pairs;
    }

    std::vector<DirichletPatch> clamp_and_press(double uy) const {
        DirichletPatch bottom{"bottom", 0, {{0.3, 0.35}, {1.7, 0.45}}, 0.0, 0.0};
        DirichletPatch top{"top", 1, {{0.3, 1.55}, {1.7, 1.65}}, 0.0, uy};
        return {bottom, top};
    }
};

}  // namespace

TEST_CASE("element stiffness: symmetry, rigid modes, oracle match") {
    const double h = 0.25;
    const Grid g({0, 0}, h, 4, 4);
    // All-interior level set so every cell carries full Gauss quadrature.
    ScalarField phi(g, -1.0);
    LevelSet inside(1, std::move(phi));
    QuadratureSet qs = build_quadrature(inside);
    const CellIndex c{1, 1};
    const int cid = g.cell_id(1, 1);

    const Material mat(1.0, 0.0);
    const auto ke = element_stiffness(g, c, qs, cid, mat.stiffness());

    CHECK((ke - ke.transpose()).norm() < 1e-10 * ke.norm());

    Eigen::Matrix<double, 8, 1> tx, ty;
    tx << 1, 0, 1, 0, 1, 0, 1, 0;
    ty << 0, 1, 0, 1, 0, 1, 0, 1;
    CHECK((ke * tx).norm() < 1e-12 * ke.norm());
    CHECK((ke * ty).norm() < 1e-12 * ke.norm());

    const auto oracle = q4_oracle(h, 1.0, 0.0);
    CHECK((ke - oracle).norm() < 1e-10 * oracle.norm());

    const Material mat2(230.0, 0.3);
    const auto ke2 = element_stiffness(g, c, qs, cid, mat2.stiffness());
    const auto oracle2 = q4_oracle(h, 230.0, 0.3);
    CHECK((ke2 - oracle2).norm() < 1e-10 * oracle2.norm());
}

TEST_CASE("material validation") {
    CHECK_THROWS_AS(Material(-1.0, 0.3), Error);
    CHECK_THROWS_AS(Material(1.0, 0.5), Error);
    const Eigen::Matrix3d d = Material(100.0, 0.25).stiffness();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(d);
    CHECK(eig.eigenvalues()(0) > 0.0);  // SPD
    CHECK((d - d.transpose()).norm() == 0.0);
}

TEST_CASE("zero displacement, zero loads, no contact: zero residual") {
    TwoBlockFixture fx(0.5);
    StepSolver solver(fx.bodies, fx.law, {});
    solver.prepare();
    std::vector<ContactPair> none;
    solver.assemble_residual(none, true);
    CHECK(solver.free_residual_norm() == 0.0);
}

TEST_CASE("uniform traction on a straight edge gives consistent nodal loads") {
    TwoBlockFixture fx(0.5);
    // Unit traction in +x on the left face of the lower block, edge length 0.6.
    EdgeLoad load;
    load.body = 0;
    load.a = {0.4, 0.4};
    load.b = {0.4, 1.0};
    load.tx = {2.5, 0, 0};

    StepSolver solver(fx.bodies, fx.law, {});
    solver.set_edge_loads({load});
    solver.prepare();

    const Vec2 total = solver.total_edge_load();
    CHECK(total.x == doctest::Approx(2.5 * 0.6).epsilon(1e-12));
    CHECK(total.y == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    // Interior edge nodes carry tL/(pieces) style shares; the two end nodes
    // get half shares. With h = 0.1 and t = 2.5: interior 0.25, ends 0.125.
    std::vector<ContactPair> none;
    solver.assemble_residual(none, true);
    const auto& r = solver.full_residual(0);
    const Grid& g = fx.grid;
    int interior = 0, ends = 0;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const Vec2 p = g.node_pos(i, j);
            if (std::abs(p.x - 0.4) > 1e-12) continue;
            const double fx_node = -r[static_cast<std::size_t>(2 * g.node_id(i, j))];
            if (p.y > 0.4 + 1e-12 && p.y < 1.0 - 1e-12 && fx_node > 0) {
                CHECK(fx_node == doctest::Approx(0.25).epsilon(1e-10));
                ++interior;
            } else if ((std::abs(p.y - 0.4) < 1e-12 || std::abs(p.y - 1.0) < 1e-12)) {
                CHECK(fx_node == doctest::Approx(0.125).epsilon(1e-10));
                ++ends;
            }
        }
    CHECK(interior == 5);
    CHECK(ends == 2);
}

TEST_CASE("contact residual obeys Newton's third law across the pair") {
    TwoBlockFixture fx(0.5);
    std::vector<ContactPair> pairs = fx.make_pairs();
    REQUIRE(!pairs.empty());
    REQUIRE(!pairs[0].points.empty());

    StepSolver solver(fx.bodies, fx.law, {});
    solver.prepare();

    // Force a uniform compressive state on all points.
    for (ContactPoint& p : pairs[0].points) {
        p.tau_n = -3.0;
        p.tau_t = 1.0;
        p.active = true;
    }
    solver.assemble_residual(pairs, false);

    Vec2 sum_i{0, 0}, sum_j{0, 0};
    const auto& ri = solver.full_residual(0);
    const auto& rj = solver.full_residual(1);
    for (std::size_t n = 0; n < ri.size() / 2; ++n) {
        sum_i += Vec2{ri[2 * n], ri[2 * n + 1]};
        sum_j += Vec2{rj[2 * n], rj[2 * n + 1]};
    }
    CHECK(sum_i.x == doctest::Approx(-sum_j.x).epsilon(1e-12));
    CHECK(sum_i.y == doctest::Approx(-sum_j.y).epsilon(1e-12));
}

TEST_CASE("FD contact Jacobian: inactive pairs give a zero block and locality holds") {
    TwoBlockFixture fx(0.5);
    std::vector<ContactPair> pairs = fx.make_pairs();
    StepSolver solver(fx.bodies, fx.law, {});
    solver.prepare();

    for (ContactPoint& p : pairs[0].points) p.active = false;
    const Eigen::SparseMatrix<double> t_inactive = solver.assemble_tangent(pairs);
    std::vector<ContactPair> none;
    const Eigen::SparseMatrix<double> t_bulk = solver.assemble_tangent(none);
    CHECK((t_inactive - t_bulk).norm() == 0.0);

    // Locality: activating points adds entries only on DOFs of cells holding
    // the projections.
    for (ContactPoint& p : pairs[0].points) {
        p.active = true;
        p.tau_n = -1.0;
        p.tau_t = 0.2;
    }
    Eigen::SparseMatrix<double> diff = solver.assemble_tangent(pairs) - t_bulk;
    diff.prune(1e-300);
    std::set<int> touched;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it) {
            touched.insert(it.row());
            touched.insert(it.col());
        }
    std::set<int> allowed;
    for (const ContactPoint& p : pairs[0].points)
        for (int side = 0; side < 2; ++side) {
            const Body& body = fx.bodies[static_cast<std::size_t>(side)];
            const CellIndex c = fx.grid.cell_of(side == 0 ? p.proj_i : p.proj_j);
            for (int n : cell_nodes(fx.grid, c))
                for (int comp = 0; comp < 2; ++comp) {
                    const int eq = solver.slot_equation(side, n, comp);
                    if (eq >= 0) allowed.insert(eq);
                }
            (void)body;
        }
    for (int eq : touched) CHECK(allowed.count(eq) == 1);
}

TEST_CASE("FD contact Jacobian matches the analytic stick tangent") {
    TwoBlockFixture fx(0.8);
    std::vector<ContactPair> pairs = fx.make_pairs();
    REQUIRE(!pairs[0].points.empty());

    StepSolver solver(fx.bodies, fx.law, {});
    solver.prepare();

    // Small random displacements that keep every point compressed and
    // sticking: gn < 0 and |gt| << mu |gn|.
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(-1e-5, 1e-5);
    for (Body& b : fx.bodies)
        for (std::size_t s = 0; s < b.u.size(); ++s)
            if (b.node_present[s / 2]) b.u[s] = dist(rng);
    for (ContactPoint& p : pairs[0].points) p.gn0 = -1e-3;

    solver.assemble_residual(pairs, true);
    for (const ContactPoint& p : pairs[0].points) {
        REQUIRE(p.active);
        REQUIRE(std::abs(p.tau_t) < fx.law.mu * std::abs(p.tau_n));  // stick
    }

    std::vector<ContactPair> none;
    const Eigen::MatrixXd contact_fd = Eigen::MatrixXd(solver.assemble_tangent(pairs)) -
                                       Eigen::MatrixXd(solver.assemble_tangent(none));

    // Analytic penalty tangent: w M^T [n t] diag(1/eps) [n t]^T M.
    Eigen::MatrixXd analytic = Eigen::MatrixXd::Zero(solver.free_dof_count(),
                                                     solver.free_dof_count());
    for (const ContactPoint& p : pairs[0].points) {
        std::vector<std::pair<int, Eigen::Vector2d>> cols;  // eq, d(rel)/du
        for (int side = 0; side < 2; ++side) {
            const Vec2 proj = side == 0 ? p.proj_i : p.proj_j;
            const double sgn = side == 0 ? -1.0 : 1.0;
            const CellIndex c = fx.grid.cell_of(proj);
            const auto nodes = cell_nodes(fx.grid, c);
            const auto shape = shape_values(fx.grid, c, proj);
            for (int a = 0; a < 4; ++a)
                for (int comp = 0; comp < 2; ++comp) {
                    const int eq = solver.slot_equation(side, nodes[static_cast<std::size_t>(a)],
                                                        comp);
                    if (eq < 0) continue;
                    Eigen::Vector2d drel = Eigen::Vector2d::Zero();
                    drel(comp) = sgn * shape[static_cast<std::size_t>(a)];
                    cols.push_back({eq, drel});
                }
        }
        Eigen::Matrix2d nt;
        nt << p.n.x, p.t.x, p.n.y, p.t.y;
        Eigen::Matrix2d compliance = Eigen::Matrix2d::Zero();
        compliance(0, 0) = 1.0 / fx.law.eps_n;
        compliance(1, 1) = 1.0 / fx.law.eps_t;
        const Eigen::Matrix2d kblock = p.weight * nt * compliance * nt.transpose();
        for (const auto& [er, dr] : cols)
            for (const auto& [ec, dc] : cols) analytic(er, ec) += dr.dot(kblock * dc);
    }
    CHECK((contact_fd - analytic).norm() < 1e-5 * analytic.norm());
}

TEST_CASE("bulk tangent matches finite differences of the bulk residual") {
    TwoBlockFixture fx(0.5, 0.2);
    StepSolver solver(fx.bodies, fx.law, {});
    solver.prepare();

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-1e-3, 1e-3);
    for (Body& b : fx.bodies)
        for (std::size_t s = 0; s < b.u.size(); ++s)
            if (b.node_present[s / 2]) b.u[s] = dist(rng);

    std::vector<ContactPair> none;
    const Eigen::MatrixXd t = Eigen::MatrixXd(solver.assemble_tangent(none));

    solver.assemble_residual(none, true);
    const Eigen::VectorXd r0 = solver.free_residual();

    const double hstep = 1e-6;
    Eigen::MatrixXd fd(solver.free_dof_count(), solver.free_dof_count());
    for (std::size_t b = 0; b < fx.bodies.size(); ++b) {
        Body& body = fx.bodies[b];
        for (int n = 0; n < body.grid().node_count(); ++n)
            for (int comp = 0; comp < 2; ++comp) {
                const int eq = solver.slot_equation(static_cast<int>(b), n, comp);
                if (eq < 0) continue;
                const std::size_t s = static_cast<std::size_t>(2 * n + comp);
                const double saved = body.u[s];
                body.u[s] = saved + hstep;
                solver.assemble_residual(none, true);
                fd.col(eq) = (solver.free_residual() - r0) / hstep;
                body.u[s] = saved;
            }
    }
    CHECK((fd - t).norm() < 1e-5 * t.norm());
}

TEST_CASE("newton: linear problem without contact converges in one iteration") {
    TwoBlockFixture fx(0.5);
    // Separate the blocks so no contact pair forms.
    fx.bodies[1].ls = make_rectangle(1, fx.grid, {0.4, 1.2}, {1.6, 1.8});
    fx.bodies[1].quad = build_quadrature(fx.bodies[1].ls);
    fx.bodies[1].sigma0.assign(fx.bodies[1].quad.points.size(), Eigen::Vector3d::Zero());

    NewtonOptions opt;
    opt.tol_abs = 1e-14;
    StepSolver solver(fx.bodies, fx.law, opt);
    DirichletPatch bottom{"bottom", 0, {{0.3, 0.35}, {1.7, 0.45}}, 0.0, 0.0};
    DirichletPatch top0{"top0", 0, {{0.3, 0.95}, {1.7, 1.05}}, 0.0, -1e-3};
    DirichletPatch lo1{"lo1", 1, {{0.3, 1.15}, {1.7, 1.25}}, 0.0, 0.0};
    DirichletPatch hi1{"hi1", 1, {{0.3, 1.75}, {1.7, 1.85}}, std::nullopt, 0.0};
    solver.set_dirichlet({bottom, top0, lo1, hi1});

    std::vector<ContactPair> pairs;
    const NewtonReport rep = solver.solve(pairs);
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);

    // Opposing prescribed faces of the compressed block balance.
    const Vec2 rb = solver.reaction("bottom");
    const Vec2 rt = solver.reaction("top0");
    CHECK(std::abs(rb.y + rt.y) < 1e-9 * std::abs(rt.y));
    // The unloaded upper block carries no reaction.
    CHECK(norm(solver.reaction("lo1")) < 1e-12);
}

TEST_CASE("newton: two pressed blocks with contact converge") {
    TwoBlockFixture fx(0.5);
    NewtonOptions opt;
    opt.tol_abs = 1e-16;
    StepSolver solver(fx.bodies, fx.law, opt);
    solver.set_dirichlet(fx.clamp_and_press(-1e-3));

    std::vector<ContactPair> pairs = fx.make_pairs();
    const NewtonReport rep = solver.solve(pairs);
    CHECK(rep.converged);
    CHECK(rep.iterations <= 10);
    CHECK(pairs[0].active_count() > 0);

    for (const ContactPoint& p : pairs[0].points) {
        if (!p.active) continue;
        CHECK(p.tau_n < 0.0);
        CHECK(std::abs(p.tau_t) <= fx.law.mu * std::abs(p.tau_n) + 1e-9 * std::abs(p.tau_n));
        // Penalty identity: penetration matches eps_n tau_n exactly.
        CHECK(std::abs(p.gn) == doctest::Approx(fx.law.eps_n * std::abs(p.tau_n)).epsilon(1e-12));
    }

    // Global equilibrium: reactions balance (no external loads).
    const Vec2 rb = solver.reaction("bottom");
    const Vec2 rt = solver.reaction("top");
    CHECK(norm(rb + rt) < 1e-7 * norm(rt));
}

TEST_CASE("newton: singular system reports an error") {
    // A floating block with no BCs, no contact, and a net applied load: the
    // tangent has rigid-mode nullspace and the system is inconsistent.
    const Grid g = Grid::covering({{0, 0}, {1, 1}}, 0.1);
    std::vector<Body> bodies;
    bodies.emplace_back(0, "floater", Material(1.0, 0.0), false,
                        make_rectangle(0, g, {0.4, 0.4}, {0.6, 0.6}));
    bodies[0].quad = build_quadrature(bodies[0].ls);
    bodies[0].sigma0.assign(bodies[0].quad.points.size(), Eigen::Vector3d::Zero());

    EdgeLoad pull;
    pull.body = 0;
    pull.a = {0.4, 0.4};
    pull.b = {0.4, 0.6};
    pull.tx = {1.0, 0, 0};

    StepSolver solver(bodies, FrictionLaw::scaled(0.5, 0.1, 1.0), {});
    solver.set_edge_loads({pull});
    std::vector<ContactPair> pairs;
    CHECK_THROWS_AS(static_cast<void>(solver.solve(pairs)), Error);
}
