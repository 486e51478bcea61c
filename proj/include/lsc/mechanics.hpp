#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "lsc/contact.hpp"
#include "lsc/material.hpp"
#include "lsc/quadrature.hpp"

namespace lsc {

// Prescribed incremental motion of a rigid body within one load step,
// linearized for small rotations.
struct RigidMotion {
    Vec2 translation{0, 0};
    double rotation = 0.0;  // radians about pivot
    Vec2 pivot{0, 0};

    Vec2 displacement_at(const Vec2& x) const {
        return translation + rotation * rot90(x - pivot);
    }
    bool moving() const { return translation.x != 0 || translation.y != 0 || rotation != 0; }
};

// One body on the shared background grid. Deformable bodies own nodal
// unknowns on their active cells; rigid bodies carry no DOFs and move by
// prescribed increments.
struct Body {
    int id = -1;
    std::string name;
    Material mat;
    bool rigid = false;
    LevelSet ls;
    QuadratureSet quad;
    std::vector<Eigen::Vector3d> sigma0;  // carried stress at quadrature points
    RigidMotion motion;                   // current step increment

    // Step discretization, rebuilt by StepSolver.
    std::vector<std::uint8_t> cell_active;
    std::vector<std::uint8_t> node_present;
    std::vector<double> u;  // 2 per node, full length; zero on absent nodes

    Body(int id_, std::string name_, Material mat_, bool rigid_, LevelSet ls_)
        : id(id_), name(std::move(name_)), mat(mat_), rigid(rigid_), ls(std::move(ls_)) {}

    const Grid& grid() const { return ls.grid(); }

    // Incremental displacement sampler used for gaps and point updates.
    Vec2 displacement_at(const Vec2& x) const;
};

// Dirichlet increments on all present nodes of `body` inside `box`.
struct DirichletPatch {
    std::string name;
    int body = -1;
    Aabb box;
    std::optional<double> ux;
    std::optional<double> uy;
};

// Straight Neumann edge from a to b; traction components are quadratic
// polynomials in the arc length s from a: t(s) = c0 + c1 s + c2 s^2.
struct EdgeLoad {
    int body = -1;
    Vec2 a, b;
    std::array<double, 3> tx{0, 0, 0};
    std::array<double, 3> ty{0, 0, 0};
};

struct NewtonOptions {
    double tol_rel = 1e-8;
    double tol_abs = 0.0;
    int max_iter = 50;
    double step_cap_max = 0.0;  // bound on |du|_inf; 0 lets the cap grow freely
    bool allow_unconverged = false;  // relaxation mode: return instead of throwing
};

struct NewtonReport {
    bool converged = false;
    int iterations = 0;
    std::vector<double> residual_norms;
    std::vector<int> active_points;
};

Eigen::Matrix<double, 3, 8> bmatrix(const Grid& g, const CellIndex& c, const Vec2& x);
std::array<double, 4> shape_values(const Grid& g, const CellIndex& c, const Vec2& x);
std::array<int, 4> cell_nodes(const Grid& g, const CellIndex& c);

// Element stiffness from the cell's quadrature points.
Eigen::Matrix<double, 8, 8> element_stiffness(const Grid& g, const CellIndex& c,
                                              const QuadratureSet& quad, int cell_id,
                                              const Eigen::Matrix3d& d);

// Assembles and solves one quasi-static load step: per-iteration traction
// update by return mapping, active set, bulk-analytic plus contact-FD
// tangent, direct sparse solve. Keeps the final full residual for reactions.
class StepSolver {
public:
    StepSolver(std::vector<Body>& bodies, FrictionLaw law, NewtonOptions opt);

    void set_dirichlet(const std::vector<DirichletPatch>& patches);
    void set_edge_loads(const std::vector<EdgeLoad>& loads);

    NewtonReport solve(std::vector<ContactPair>& pairs);

    // Force transmitted by the body to the prescribed face (load-cell sign).
    Vec2 reaction(const std::string& face_name) const;
    // Sum of applied Neumann loads, for equilibrium checks.
    Vec2 total_edge_load() const;

    const std::vector<double>& full_residual(int body_index) const {
        return residual_[static_cast<std::size_t>(body_index)];
    }
    int free_dof_count() const { return n_free_; }

    // Exposed for gradient-check tests: residual and tangent at the current
    // state of the bodies' displacement fields. prepare() builds the DOF
    // layout, element caches and external loads without solving.
    void prepare();
    void assemble_residual(std::vector<ContactPair>& pairs, bool update_tractions);
    Eigen::SparseMatrix<double> assemble_tangent(const std::vector<ContactPair>& pairs) const;
    double free_residual_norm() const;
    Eigen::VectorXd free_residual() const;
    int slot_equation(int body_index, int node, int comp) const {
        return slot_eq_[static_cast<std::size_t>(body_index)]
                       [static_cast<std::size_t>(2 * node + comp)];
    }

private:
    struct ElementCache {
        CellIndex cell;
        int cid = 0;
        std::array<int, 4> nodes{};
        Eigen::Matrix<double, 8, 8> ke;
        Eigen::Matrix<double, 8, 1> f0;
    };

    struct ContactSide {
        bool deformable = false;
        int body_index = -1;
        std::array<int, 4> nodes{};
        std::array<double, 4> shape{};  // renormalized over present nodes
    };

    void build_dofs();
    void build_caches();
    void prune_and_number();
    void build_external_loads();
    ContactSide side_info(int body_index, const Vec2& proj) const;
    void add_contact_residual(const ContactPair& pair);
    void contact_fd_blocks(const ContactPair& pair,
                           std::vector<Eigen::Triplet<double>>& trips) const;

    std::vector<Body>& bodies_;
    FrictionLaw law_;
    NewtonOptions opt_;

    std::vector<DirichletPatch> patches_;
    std::vector<EdgeLoad> loads_;

    // Per body: slot -> free equation id (-1 prescribed/absent), slot state,
    // external load and residual vectors (2 per node).
    std::vector<std::vector<int>> slot_eq_;
    std::vector<std::vector<std::int8_t>> slot_state_;  // 0 absent, 1 free, 2 prescribed
    std::vector<std::vector<int>> slot_patch_;          // prescribing patch index or -1
    std::vector<std::vector<double>> f_ext_;
    std::vector<std::vector<double>> residual_;
    std::vector<std::vector<ElementCache>> caches_;
    int n_free_ = 0;
};

}  // namespace lsc
