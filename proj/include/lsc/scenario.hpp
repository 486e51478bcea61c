#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lsc/advection.hpp"
#include "lsc/mechanics.hpp"

namespace lsc {

struct ShapeSpec {
    enum class Type { Circle, Rectangle, Polygon, PolygonFile, LevelSetFile };
    Type type = Type::Circle;

    Vec2 center{0, 0};
    double radius = 0.0;
    Vec2 lo{0, 0}, hi{0, 0};
    std::vector<Vec2> vertices;
    std::string path;

    // Applied to polygon/circle geometry: scale about the origin, rotate,
    // then translate.
    double scale = 1.0;
    double rotate_deg = 0.0;
    Vec2 translate{0, 0};

    std::optional<double> clip_y_min;
    std::optional<double> clip_y_max;
};

struct BodySpec {
    std::string name;
    bool rigid = false;
    double young = 0.0;
    double poisson = 0.0;
    ShapeSpec shape;
};

struct DirichletSpec {
    std::string name;
    std::string body;
    Aabb box;
    std::optional<double> ux;  // per-step increments
    std::optional<double> uy;
};

struct NeumannSpec {
    std::string body;
    Vec2 a, b;
    std::array<double, 3> tx{0, 0, 0};
    std::array<double, 3> ty{0, 0, 0};
};

struct RigidMotionSpec {
    std::string body;
    Vec2 translate{0, 0};  // per-step increments
    double rotate_deg = 0.0;
    Vec2 pivot{0, 0};
};

struct Scenario {
    std::string name;
    std::string description;
    Aabb domain;
    double h = 0.0;
    double mu = 0.0;
    double eps0 = 1.0;           // penalty factor in eps_n = eps_t = eps0 h / Ebar
    double shift_factor = 1.5;   // contact shift eps = shift_factor * h
    int steps = 1;
    AdvectScheme advect = AdvectScheme::Weno5;
    std::optional<double> preconsolidate_inflate;  // boundary offset in units of h

    std::vector<BodySpec> bodies;
    std::vector<DirichletSpec> dirichlet;
    std::vector<NeumannSpec> neumann;
    std::vector<RigidMotionSpec> motions;

    std::string base_dir;  // directory of the scenario file, for relative paths
};

Scenario load_scenario(const std::string& path);
void validate_scenario(const Scenario& sc);

// Signed-distance level set for a shape spec (clips are followed by a
// reinitialization so the field stays a distance function).
LevelSet build_shape_level_set(const ShapeSpec& shape, int body_id, const Grid& grid,
                               const std::string& base_dir);

std::vector<std::string> list_scenarios(const std::string& dir);

}  // namespace lsc
