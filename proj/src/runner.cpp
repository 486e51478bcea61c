#include "lsc/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include "json.hpp"

namespace lsc {

namespace {

LevelSet transformed_shape(const ShapeSpec& shape, int body_id, const Grid& grid,
                           const std::string& base_dir, double angle, const Vec2& offset) {
    ShapeSpec s = shape;
    // Compose the cumulative rigid map after the shape's own placement.
    const double a0 = s.rotate_deg * std::numbers::pi / 180.0;
    s.rotate_deg = (a0 + angle) * 180.0 / std::numbers::pi;
    s.translate = rotate(s.translate, angle) + offset;
    return build_shape_level_set(s, body_id, grid, base_dir);
}

}  // namespace

Runner::Runner(Scenario sc, RunnerOptions opt) : scenario_(std::move(sc)), opt_(std::move(opt)) {
    if (opt_.steps_override) scenario_.steps = *opt_.steps_override;
    if (opt_.h_override) scenario_.h = *opt_.h_override;
    if (opt_.advect_override) scenario_.advect = *opt_.advect_override;
    validate_scenario(scenario_);
    init();
}

int Runner::body_index(const std::string& name) const {
    for (std::size_t b = 0; b < bodies_.size(); ++b)
        if (bodies_[b].name == name) return static_cast<int>(b);
    fail("unknown body '", name, "'");
}

void Runner::init() {
    grid_ = std::make_unique<Grid>(Grid::covering(scenario_.domain, scenario_.h));

    double young_sum = 0.0;
    int young_n = 0;
    for (const BodySpec& b : scenario_.bodies)
        if (!b.rigid) {
            young_sum += b.young;
            ++young_n;
        }
    const double young_avg = young_sum / young_n;
    law_ = FrictionLaw::scaled(scenario_.mu, scenario_.h, young_avg, scenario_.eps0);
    options_newton_.tol_abs = 1e-12 * young_avg * scenario_.h;

    bodies_.clear();
    rigid_state_.clear();
    for (int b = 0; b < static_cast<int>(scenario_.bodies.size()); ++b) {
        const BodySpec& spec = scenario_.bodies[static_cast<std::size_t>(b)];
        LevelSet ls = build_shape_level_set(spec.shape, b, *grid_, scenario_.base_dir);
        Material mat = spec.rigid ? Material(1.0, 0.0) : Material(spec.young, spec.poisson);
        bodies_.emplace_back(b, spec.name, mat, spec.rigid, std::move(ls));
        rigid_state_.push_back({});
    }


    points_.assign(bodies_.size(), {});
    for (Body& body : bodies_) {
        if (body.rigid) continue;
        body.quad = build_quadrature(body.ls);
        if (body.quad.points.empty()) fail("body '", body.name, "' has no quadrature points");
        body.sigma0.assign(body.quad.points.size(), Eigen::Vector3d::Zero());
        points_[static_cast<std::size_t>(body.id)] = seed_points(body.id, body.quad);
    }

    patches_.clear();
    for (const DirichletSpec& d : scenario_.dirichlet) {
        DirichletPatch p;
        p.name = d.name;
        p.body = body_index(d.body);
        p.box = d.box;
        p.ux = d.ux;
        p.uy = d.uy;
        patches_.push_back(p);
    }
    loads_.clear();
    for (const NeumannSpec& n : scenario_.neumann) {
        EdgeLoad l;
        l.body = body_index(n.body);
        l.a = n.a;
        l.b = n.b;
        l.tx = n.tx;
        l.ty = n.ty;
        loads_.push_back(l);
    }
}

std::vector<std::pair<int, int>> Runner::broadphase() const {
    const double eps = scenario_.shift_factor * scenario_.h;
    std::vector<Aabb> boxes(bodies_.size());
    for (std::size_t b = 0; b < bodies_.size(); ++b) {
        const Grid& g = bodies_[b].grid();
        Aabb box;
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i)
                if (bodies_[b].ls.phi()(i, j) < eps) box.extend(g.node_pos(i, j));
        boxes[b] = box.inflated(g.h());
    }
    std::vector<std::pair<int, int>> out;
    for (std::size_t i = 0; i < bodies_.size(); ++i)
        for (std::size_t j = i + 1; j < bodies_.size(); ++j) {
            if (bodies_[i].rigid && bodies_[j].rigid) continue;
            if (boxes[i].overlaps(boxes[j])) out.push_back({static_cast<int>(i), static_cast<int>(j)});
        }
    return out;
}

void Runner::build_pairs() {
    prev_pairs_ = std::move(pairs_);
    pairs_.clear();
    const double eps = scenario_.shift_factor * scenario_.h;
    for (const auto& [i, j] : broadphase()) {
        const std::vector<std::uint8_t> mask =
            proximity_mask(bodies_[static_cast<std::size_t>(i)].ls.phi(),
                           bodies_[static_cast<std::size_t>(j)].ls.phi(), eps);
        bool any = false;
        for (std::uint8_t m : mask) any = any || m;
        if (!any) continue;
        ContactPair pair = build_intermediate_surface(bodies_[static_cast<std::size_t>(i)].ls,
                                                      bodies_[static_cast<std::size_t>(j)].ls,
                                                      mask, eps);
        if (pair.points.empty()) continue;
        for (const ContactPair& old : prev_pairs_)
            if ((old.body_i == pair.body_i && old.body_j == pair.body_j) ||
                (old.body_i == pair.body_j && old.body_j == pair.body_i)) {
                transfer_plastic_history(old, pair, 2.0 * scenario_.h);
                break;
            }
        pairs_.push_back(std::move(pair));
    }
}

StepReport Runner::execute_step(int step, bool preconsolidation, int depth) {
    const auto t0 = std::chrono::steady_clock::now();

    // Prescribed rigid increments for this step (none during preconsolidation).
    for (Body& body : bodies_) body.motion = RigidMotion{};
    if (!preconsolidation)
        for (const RigidMotionSpec& m : scenario_.motions) {
            const int b = body_index(m.body);
            const RigidState& rs = rigid_state_[static_cast<std::size_t>(b)];
            RigidMotion motion;
            motion.translation = m.translate;
            motion.rotation = m.rotate_deg * std::numbers::pi / 180.0;
            motion.pivot = rotate(m.pivot, rs.angle) + rs.offset;
            bodies_[static_cast<std::size_t>(b)].motion = motion;
        }

    build_pairs();

    NewtonOptions opts = options_newton_;
    // Preconsolidation relaxation steps rebuild the contact geometry often;
    // mid-settle steps are cheap, bounded and allowed to return unconverged.
    if (preconsolidation) {
        opts.max_iter = precon_final_ ? 300 : 60;
        opts.tol_rel = 1e-5;
        opts.step_cap_max = 0.5 * bodies_.front().grid().h();
        opts.allow_unconverged = !precon_final_;
    }
    solver_ = std::make_unique<StepSolver>(bodies_, law_, opts);
    if (!preconsolidation) {
        solver_->set_dirichlet(patches_);
        solver_->set_edge_loads(loads_);
    }
    NewtonReport nr;
    try {
        nr = solver_->solve(pairs_);
    } catch (const Error& e) {
        // A load increment that lands a fresh contact too deep can defeat the
        // solver; halve the increments and take the step in two.
        if (preconsolidation || depth >= 3) throw;
        if (opt_.log_level >= 1)
            std::cout << scenario_.name << " step " << step << ": subdividing after: " << e.what()
                      << "\n";
        auto halve = [&](double f) {
            for (DirichletPatch& p : patches_) {
                if (p.ux) *p.ux *= f;
                if (p.uy) *p.uy *= f;
            }
            for (RigidMotionSpec& m : scenario_.motions) {
                m.translate *= f;
                m.rotate_deg *= f;
            }
        };
        halve(0.5);
        StepReport first = execute_step(step, false, depth + 1);
        evolve_geometry(false);
        StepReport second = execute_step(step, false, depth + 1);
        halve(2.0);
        second.iterations += first.iterations;
        second.residuals.insert(second.residuals.begin(), first.residuals.begin(),
                                first.residuals.end());
        second.wall_seconds += first.wall_seconds;
        return second;
    }

    StepReport rep;
    rep.step = step;
    rep.iterations = nr.iterations;
    rep.converged = nr.converged;
    rep.residuals = nr.residual_norms;
    rep.tol_abs = options_newton_.tol_abs;
    rep.applied_edge_load = solver_->total_edge_load();

    for (const ContactPair& pair : pairs_) {
        PairSummary ps;
        ps.body_i = pair.body_i;
        ps.body_j = pair.body_j;
        ps.points = static_cast<int>(pair.points.size());
        ps.active = pair.active_count();
        ps.dropped = pair.dropped_projections;
        bool first = true;
        for (const ContactPoint& p : pair.points) {
            if (!p.active) continue;
            const Vec2 f = p.weight * (p.tau_n * p.n + p.tau_t * p.t);
            ps.force_i -= f;
            ps.force_j += f;
            if (first || p.arc < ps.arc_min) ps.arc_min = p.arc;
            if (first || p.arc > ps.arc_max) ps.arc_max = p.arc;
            first = false;
        }
        rep.pairs.push_back(ps);
        rep.body_contact_force[bodies_[static_cast<std::size_t>(pair.body_i)].name] += ps.force_i;
        rep.body_contact_force[bodies_[static_cast<std::size_t>(pair.body_j)].name] += ps.force_j;
    }

    if (!preconsolidation)
        for (const DirichletPatch& p : patches_)
            if (!rep.reactions.count(p.name)) rep.reactions[p.name] = solver_->reaction(p.name);

    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (opt_.log_level >= 1) {
        std::cout << scenario_.name << (preconsolidation ? " precon" : " step ")
                  << (preconsolidation ? "" : std::to_string(step)) << ": " << rep.iterations
                  << " iterations, |r| = " << rep.residuals.back() << ", pairs = " << pairs_.size()
                  << ", wall = " << rep.wall_seconds << " s\n";
        if (opt_.log_level >= 2)
            for (std::size_t k = 0; k < rep.residuals.size(); ++k)
                std::cout << "    it " << k << ": |r| = " << rep.residuals[k] << "\n";
    }
    return rep;
}

void Runner::evolve_geometry(bool reset_state) {
    // Material points move with the converged increment.
    for (Body& body : bodies_) {
        if (body.rigid) continue;
        update_points(points_[static_cast<std::size_t>(body.id)], body);
    }

    // Level sets follow: deformable bodies by extrapolated-displacement
    // advection, rigid bodies by their exact prescribed transform.
    for (Body& body : bodies_) {
        if (body.rigid) {
            if (body.motion.moving()) {
                // Compose this step's motion after the cumulative map
                // x -> R_a x + o:  new offset = p + R_dt (o - p) + dt.
                RigidState& rs = rigid_state_[static_cast<std::size_t>(body.id)];
                const double dtheta = body.motion.rotation;
                const Vec2 pivot = body.motion.pivot;
                rs.offset = pivot + rotate(rs.offset - pivot, dtheta) + body.motion.translation;
                rs.angle += dtheta;
                body.ls = transformed_shape(
                    scenario_.bodies[static_cast<std::size_t>(body.id)].shape, body.id, *grid_,
                    scenario_.base_dir, rs.angle, rs.offset);
            }
            continue;
        }
        VectorField u_field(body.grid());
        for (int n = 0; n < body.grid().node_count(); ++n)
            u_field.data()[static_cast<std::size_t>(n)] = {
                body.u[static_cast<std::size_t>(2 * n)],
                body.u[static_cast<std::size_t>(2 * n + 1)]};
        const VectorField u_ext = extrapolate_field(body.ls.phi(), u_field);
        body.ls = reinitialize(advect(body.ls, u_ext, 1.0, scenario_.advect));
    }

    // Fresh quadrature on the updated geometry, stresses projected from the
    // material points.
    for (Body& body : bodies_) {
        if (body.rigid) continue;
        body.quad = build_quadrature(body.ls);
        if (body.quad.points.empty()) fail("body '", body.name, "' lost all quadrature points");
        if (std::getenv("LSC_CHECK_ISLANDS")) {
            const Grid& g = body.grid();
            std::vector<int> label(static_cast<std::size_t>(g.cell_count()), -1);
            int ncomp = 0;
            for (int c0 = 0; c0 < g.cell_count(); ++c0) {
                if (!body.quad.cell_has_points(c0) || label[static_cast<std::size_t>(c0)] >= 0)
                    continue;
                std::vector<int> stack{c0};
                label[static_cast<std::size_t>(c0)] = ncomp;
                int size = 0;
                while (!stack.empty()) {
                    const int c = stack.back();
                    stack.pop_back();
                    ++size;
                    const int ci = c % (g.nx() - 1), cj = c / (g.nx() - 1);
                    const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
                    for (int k = 0; k < 4; ++k) {
                        const int ii = ci + di[k], jj = cj + dj[k];
                        if (ii < 0 || ii >= g.nx() - 1 || jj < 0 || jj >= g.ny() - 1) continue;
                        const int cc = jj * (g.nx() - 1) + ii;
                        if (body.quad.cell_has_points(cc) && label[static_cast<std::size_t>(cc)] < 0) {
                            label[static_cast<std::size_t>(cc)] = ncomp;
                            stack.push_back(cc);
                        }
                    }
                }
                if (ncomp > 0)
                    std::cerr << "[islands] body " << body.name << " component " << ncomp
                              << " size " << size << std::endl;
                ++ncomp;
            }
        }
        auto& pts = points_[static_cast<std::size_t>(body.id)];
        if (reset_state) {
            for (MaterialPoint& p : pts) p.stress.setZero();
            body.sigma0.assign(body.quad.points.size(), Eigen::Vector3d::Zero());
        } else {
            body.sigma0 = project_state(pts, body.quad, scenario_.h);
        }
    }
    if (reset_state) {
        pairs_.clear();
        prev_pairs_.clear();
    }
}

std::vector<StepReport> Runner::run() {
    std::vector<StepReport> reports;

    if (!opt_.out_dir.empty()) {
        std::filesystem::create_directories(opt_.out_dir);
        write_loading_header();
    }

    if (scenario_.preconsolidate_inflate) {
        // Inflate the deformable boundaries in stages; after each stage run
        // relaxation steps (a quasi-static simulation with fixed plates and
        // no external increments, contact surfaces rebuilt each step) until a
        // step opens already equilibrated. The carried state is then reset:
        // the deformed configuration becomes the initial one.
        const double total = *scenario_.preconsolidate_inflate;
        const int stages = std::max(1, static_cast<int>(std::ceil(total / 0.1)));
        int precon_step = -100;
        for (int stage = 0; stage < stages; ++stage) {
            const double shift = (total / stages) * scenario_.h;
            for (Body& body : bodies_) {
                if (body.rigid) continue;
                for (double& v : body.ls.phi().data()) v -= shift;
                body.quad = build_quadrature(body.ls);
                body.sigma0.assign(body.quad.points.size(), Eigen::Vector3d::Zero());
            }
            for (int relax = 0; relax < 25; ++relax) {
                const StepReport rep = execute_step(precon_step++, true);
                const bool settled = rep.converged && rep.iterations <= 2;
                evolve_geometry(false);
                if (settled) break;
            }
        }
        // The settle phase must end in a genuinely converged state.
        precon_final_ = true;
        for (int relax = 0; relax < 10; ++relax) {
            const StepReport rep = execute_step(precon_step++, true);
            const bool settled = rep.converged && rep.iterations <= 2;
            evolve_geometry(false);
            if (settled) break;
        }
        precon_final_ = false;
        // Reset stresses, displacements and contact history.
        for (Body& body : bodies_) {
            if (body.rigid) continue;
            for (MaterialPoint& p : points_[static_cast<std::size_t>(body.id)]) p.stress.setZero();
            body.sigma0.assign(body.quad.points.size(), Eigen::Vector3d::Zero());
        }
        pairs_.clear();
        prev_pairs_.clear();
    }

    for (int step = 1; step <= scenario_.steps; ++step) {
        StepReport rep = execute_step(step, false);
        if (!opt_.out_dir.empty()) write_outputs(step, rep);
        evolve_geometry(false);
        reports.push_back(std::move(rep));
    }
    return reports;
}

void Runner::write_loading_header() {
    std::ofstream out(std::filesystem::path(opt_.out_dir) / "loading.csv");
    out << "step";
    for (const DirichletSpec& d : scenario_.dirichlet) out << ",r_" << d.name << "_x,r_" << d.name << "_y";
    for (const BodySpec& b : scenario_.bodies) out << ",c_" << b.name << "_x,c_" << b.name << "_y";
    out << "\n";
}

void Runner::append_loading_row(const StepReport& rep) {
    std::ofstream out(std::filesystem::path(opt_.out_dir) / "loading.csv", std::ios::app);
    out << rep.step;
    for (const DirichletSpec& d : scenario_.dirichlet) {
        Vec2 r{0, 0};
        if (auto it = rep.reactions.find(d.name); it != rep.reactions.end()) r = it->second;
        out << "," << format_double(r.x) << "," << format_double(r.y);
    }
    for (const BodySpec& b : scenario_.bodies) {
        Vec2 f{0, 0};
        if (auto it = rep.body_contact_force.find(b.name); it != rep.body_contact_force.end())
            f = it->second;
        out << "," << format_double(f.x) << "," << format_double(f.y);
    }
    out << "\n";
}

void Runner::write_outputs(int step, const StepReport& rep) {
    namespace fs = std::filesystem;
    const fs::path dir(opt_.out_dir);

    std::vector<MaterialPoint> all_points;
    for (const auto& pts : points_) all_points.insert(all_points.end(), pts.begin(), pts.end());

    for (const Body& body : bodies_)
        write_body_vtk((dir / cat("body_", body.name, "_step_", step, ".vtk")).string(), body,
                       all_points);
    write_points_csv((dir / cat("points_step_", step, ".csv")).string(), all_points);
    for (const ContactPair& pair : pairs_) {
        write_pair_csv(
            (dir / cat("pair_", pair.body_i, "_", pair.body_j, "_step_", step, ".csv")).string(),
            pair);
        write_traction_profile_csv(
            (dir / cat("tractions_", pair.body_i, "_", pair.body_j, "_step_", step, ".csv"))
                .string(),
            pair);
    }
    append_loading_row(rep);

    nlohmann::json j;
    j["step"] = rep.step;
    j["iterations"] = rep.iterations;
    j["converged"] = rep.converged;
    j["residuals"] = rep.residuals;
    j["wall_seconds"] = rep.wall_seconds;
    j["pairs"] = nlohmann::json::array();
    for (const PairSummary& p : rep.pairs)
        j["pairs"].push_back({{"body_i", p.body_i},
                              {"body_j", p.body_j},
                              {"points", p.points},
                              {"active", p.active},
                              {"force_i", {p.force_i.x, p.force_i.y}},
                              {"force_j", {p.force_j.x, p.force_j.y}}});
    for (const auto& [name, r] : rep.reactions) j["reactions"][name] = {r.x, r.y};
    std::ofstream out(dir / "steps.jsonl", std::ios::app);
    out << j.dump() << "\n";
}

}  // namespace lsc
