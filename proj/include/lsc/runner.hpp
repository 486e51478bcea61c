#pragma once

#include <map>
#include <memory>
#include <optional>

#include "lsc/io.hpp"
#include "lsc/scenario.hpp"

namespace lsc {

struct PairSummary {
    int body_i = -1;
    int body_j = -1;
    int points = 0;
    int active = 0;
    int dropped = 0;
    Vec2 force_i{0, 0};  // total contact force on body i
    Vec2 force_j{0, 0};
    double arc_min = 0.0;  // arc range of the active points
    double arc_max = 0.0;
};

struct StepReport {
    int step = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> residuals;
    std::vector<PairSummary> pairs;
    std::map<std::string, Vec2> reactions;
    std::map<std::string, Vec2> body_contact_force;
    Vec2 applied_edge_load{0, 0};
    double tol_abs = 0.0;
    double wall_seconds = 0.0;
};

struct RunnerOptions {
    std::string out_dir;  // empty: no files written
    std::optional<int> steps_override;
    std::optional<double> h_override;
    std::optional<AdvectScheme> advect_override;
    int log_level = 1;  // 0 silent, 1 per step, 2 per iteration
};

// Drives the full load-step procedure: level-set init, material point
// seeding, per step pair detection, surface construction, plastic history
// transfer, Newton solve, point update, displacement extrapolation, level-set
// advection and reinitialization, quadrature rebuild, and stress projection.
class Runner {
public:
    Runner(Scenario sc, RunnerOptions opt = {});

    std::vector<StepReport> run();

    const Scenario& scenario() const { return scenario_; }
    const Grid& grid() const { return *grid_; }
    const FrictionLaw& law() const { return law_; }
    const std::vector<Body>& bodies() const { return bodies_; }
    std::vector<Body>& bodies() { return bodies_; }
    const std::vector<ContactPair>& pairs() const { return pairs_; }
    const std::vector<MaterialPoint>& points(int body_index) const {
        return points_[static_cast<std::size_t>(body_index)];
    }
    const StepSolver* solver() const { return solver_.get(); }
    int body_index(const std::string& name) const;
    double newton_tol_abs() const { return options_newton_.tol_abs; }

private:
    void init();
    std::vector<std::pair<int, int>> broadphase() const;
    void build_pairs();
    StepReport execute_step(int step, bool preconsolidation, int depth = 0);
    void evolve_geometry(bool reset_state);
    void write_outputs(int step, const StepReport& rep);
    void write_loading_header();
    void append_loading_row(const StepReport& rep);

    Scenario scenario_;
    RunnerOptions opt_;

    std::unique_ptr<Grid> grid_;
    FrictionLaw law_;
    NewtonOptions options_newton_;
    std::vector<Body> bodies_;
    std::vector<std::vector<MaterialPoint>> points_;  // per body (deformable)
    std::vector<ContactPair> pairs_;
    std::vector<ContactPair> prev_pairs_;
    std::unique_ptr<StepSolver> solver_;

    // Cumulative rigid transform per body: x -> rotate(x, angle) + offset.
    struct RigidState {
        double angle = 0.0;
        Vec2 offset{0, 0};
    };
    std::vector<RigidState> rigid_state_;

    std::vector<DirichletPatch> patches_;
    std::vector<EdgeLoad> loads_;
    bool precon_final_ = false;
};

}  // namespace lsc
