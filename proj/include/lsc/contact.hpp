#pragma once

#include <functional>
#include <vector>

#include "lsc/fast_marching.hpp"
#include "lsc/level_set.hpp"

namespace lsc {

// Penalty compliances; eps_n = eps_t = eps0 h / Ebar with eps0 = 1 by default.
struct FrictionLaw {
    double mu = 0.0;
    double eps_n = 0.0;
    double eps_t = 0.0;

    FrictionLaw() = default;
    FrictionLaw(double mu_, double eps_n_, double eps_t_);
    static FrictionLaw scaled(double mu, double h, double young_avg, double eps0 = 1.0);
};

struct ContactPoint {
    Vec2 x;              // point on the intermediate surface
    double weight = 0;   // segment measure d(gamma)
    Vec2 n;              // unit normal, oriented from body i toward body j
    Vec2 t;              // rot90(n)
    Vec2 proj_i;         // closest point on body i's boundary
    Vec2 proj_j;         // closest point on body j's boundary
    double gn0 = 0;      // undeformed normal gap (positive = open)
    double gn = 0;       // current normal gap
    double gt = 0;       // current tangential slip
    double gt_plastic = 0;
    double tau_n = 0;
    double tau_t = 0;
    bool active = false;
    double arc = 0;      // arc-length coordinate along the chained surface
};

struct ContactPair {
    int body_i = -1;
    int body_j = -1;
    double shift_eps = 0;  // shift parameter used to build the surface
    std::vector<ContactPoint> points;
    int dropped_projections = 0;

    int active_count() const;
};

// Nodewise minimum of two level-set fields on the same grid.
ScalarField min_level_set(const ScalarField& phi_i, const ScalarField& phi_j);

// Node mask of the contact region:
//   phi_i > 0  and  phi_j > 0  and  reinitialize(phi_min - eps) + eps < 0.
// Empty masks are fine (no contact). Both inputs should be reinitialized.
std::vector<std::uint8_t> contact_region(const ScalarField& phi_i, const ScalarField& phi_j,
                                         double eps);

// Node mask of the proximity band {phi_i < eps and phi_j < eps}. Unlike the
// contact-region mask this also covers touching and overlapping interfaces,
// which is what the load-step driver needs once bodies are in contact.
std::vector<std::uint8_t> proximity_mask(const ScalarField& phi_i, const ScalarField& phi_j,
                                         double eps);

// Builds the unbiased intermediate surface for one pair: the zero contour of
// phi_int = (phi_i - phi_j)/2 extracted over cells touching the node mask.
// One integration point per contour segment at its midpoint, weight = segment
// length, normals from grad(phi_int), projections onto both bodies, and the
// undeformed gap gn0 = (Pj - Pi) . n. Points whose projection fails are
// dropped and counted.
ContactPair build_intermediate_surface(const LevelSet& ls_i, const LevelSet& ls_j,
                                       const std::vector<std::uint8_t>& node_mask,
                                       double shift_eps);

// Updates gn, gt of every point from the two displacement samplers
// (gn = gn0 + (uj(Pj) - ui(Pi)).n, gt = (uj(Pj) - ui(Pi)).t).
void evaluate_gaps(ContactPair& pair, const std::function<Vec2(const Vec2&)>& u_i,
                   const std::function<Vec2(const Vec2&)>& u_j);

struct ReturnMapResult {
    double tau_n = 0;
    double tau_t = 0;
    double gt_plastic = 0;
    bool slipped = false;
};

// Elastoplastic Coulomb update: trial tractions from the penalty law, slip
// check phi = |tau_t| - mu |tau_n|, and a return to the yield surface with
// plastic slip accumulation when the trial is inadmissible.
ReturnMapResult return_map(double gn, double gt, double gt_plastic, const FrictionLaw& law);

// active  <=>  tau_n < 0 (strict).
void update_active_set(ContactPair& pair);

// Seeds gt_plastic of each fresh point from the nearest old point within
// `radius`; points with no old neighbor start at zero.
void transfer_plastic_history(const ContactPair& old_pair, ContactPair& fresh, double radius);

}  // namespace lsc
