#include "lsc/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "json.hpp"
#include "lsc/fast_marching.hpp"
#include "lsc/io.hpp"

namespace lsc {

namespace {

using nlohmann::json;

Vec2 vec2_of(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2) fail("scenario: ", what, " must be a [x, y] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

Aabb box_of(const json& j, const char* what) {
    if (!j.contains("lo") || !j.contains("hi")) fail("scenario: ", what, " needs lo and hi");
    return {vec2_of(j["lo"], what), vec2_of(j["hi"], what)};
}

std::array<double, 3> poly_of(const json& j, const char* what) {
    std::array<double, 3> c{0, 0, 0};
    if (j.is_number()) {
        c[0] = j.get<double>();
        return c;
    }
    if (!j.is_array() || j.size() > 3) fail("scenario: ", what, " must be up to 3 coefficients");
    for (std::size_t k = 0; k < j.size(); ++k) c[k] = j[k].get<double>();
    return c;
}

ShapeSpec parse_shape(const json& j) {
    ShapeSpec s;
    const std::string type = j.at("type").get<std::string>();
    if (type == "circle") {
        s.type = ShapeSpec::Type::Circle;
        s.center = vec2_of(j.at("center"), "circle center");
        s.radius = j.at("radius").get<double>();
    } else if (type == "rectangle") {
        s.type = ShapeSpec::Type::Rectangle;
        s.lo = vec2_of(j.at("lo"), "rectangle lo");
        s.hi = vec2_of(j.at("hi"), "rectangle hi");
    } else if (type == "polygon") {
        s.type = ShapeSpec::Type::Polygon;
        for (const json& v : j.at("vertices")) s.vertices.push_back(vec2_of(v, "polygon vertex"));
    } else if (type == "polygon_file") {
        s.type = ShapeSpec::Type::PolygonFile;
        s.path = j.at("path").get<std::string>();
    } else if (type == "levelset_file") {
        s.type = ShapeSpec::Type::LevelSetFile;
        s.path = j.at("path").get<std::string>();
    } else {
        fail("scenario: unknown shape type '", type, "'");
    }
    s.scale = j.value("scale", 1.0);
    s.rotate_deg = j.value("rotate_deg", 0.0);
    if (j.contains("translate")) s.translate = vec2_of(j["translate"], "translate");
    if (j.contains("clip_y_min")) s.clip_y_min = j["clip_y_min"].get<double>();
    if (j.contains("clip_y_max")) s.clip_y_max = j["clip_y_max"].get<double>();
    return s;
}

}  // namespace

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("load_scenario: cannot open ", path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail("load_scenario: ", path, ": ", e.what());
    }

    Scenario sc;
    sc.base_dir = std::filesystem::path(path).parent_path().string();
    sc.name = j.value("name", std::filesystem::path(path).stem().string());
    sc.description = j.value("description", "");
    sc.domain = box_of(j.at("domain"), "domain");
    sc.h = j.at("h").get<double>();
    sc.mu = j.at("mu").get<double>();
    sc.eps0 = j.value("eps0", 1.0);
    sc.shift_factor = j.value("contact_shift_factor", 1.5);
    sc.steps = j.value("steps", 1);
    const std::string adv = j.value("advect", "weno5");
    if (adv == "weno5")
        sc.advect = AdvectScheme::Weno5;
    else if (adv == "upwind")
        sc.advect = AdvectScheme::Upwind;
    else
        fail("scenario: advect must be weno5 or upwind, got '", adv, "'");

    if (j.contains("preconsolidate"))
        sc.preconsolidate_inflate = j["preconsolidate"].value("inflate_h", 0.5);

    for (const json& jb : j.at("bodies")) {
        BodySpec b;
        b.name = jb.at("name").get<std::string>();
        b.rigid = jb.value("rigid", false);
        if (!b.rigid) {
            b.young = jb.at("E").get<double>();
            b.poisson = jb.at("nu").get<double>();
        }
        b.shape = parse_shape(jb.at("shape"));
        sc.bodies.push_back(std::move(b));
    }

    for (const json& jd : j.value("dirichlet", json::array())) {
        DirichletSpec d;
        d.name = jd.at("name").get<std::string>();
        d.body = jd.at("body").get<std::string>();
        d.box = box_of(jd.at("box"), "dirichlet box");
        if (jd.contains("ux") && !jd["ux"].is_null()) d.ux = jd["ux"].get<double>();
        if (jd.contains("uy") && !jd["uy"].is_null()) d.uy = jd["uy"].get<double>();
        sc.dirichlet.push_back(std::move(d));
    }

    for (const json& jn : j.value("neumann", json::array())) {
        NeumannSpec n;
        n.body = jn.at("body").get<std::string>();
        n.a = vec2_of(jn.at("a"), "neumann a");
        n.b = vec2_of(jn.at("b"), "neumann b");
        if (jn.contains("tx")) n.tx = poly_of(jn["tx"], "tx");
        if (jn.contains("ty")) n.ty = poly_of(jn["ty"], "ty");
        sc.neumann.push_back(std::move(n));
    }

    for (const json& jm : j.value("rigid_motion", json::array())) {
        RigidMotionSpec m;
        m.body = jm.at("body").get<std::string>();
        if (jm.contains("translate")) m.translate = vec2_of(jm["translate"], "translate");
        m.rotate_deg = jm.value("rotate_deg", 0.0);
        if (jm.contains("pivot")) m.pivot = vec2_of(jm["pivot"], "pivot");
        sc.motions.push_back(std::move(m));
    }

    validate_scenario(sc);
    return sc;
}

void validate_scenario(const Scenario& sc) {
    if (!(sc.h > 0.0)) fail("scenario: h must be positive");
    if (sc.steps < 1) fail("scenario: steps must be >= 1");
    if (sc.mu < 0.0) fail("scenario: mu must be nonnegative");
    if (!sc.domain.valid()) fail("scenario: invalid domain box");
    if (sc.bodies.empty()) fail("scenario: no bodies");

    std::set<std::string> names;
    bool any_deformable = false;
    for (const BodySpec& b : sc.bodies) {
        if (!names.insert(b.name).second) fail("scenario: duplicate body name '", b.name, "'");
        if (!b.rigid) {
            any_deformable = true;
            Material(b.young, b.poisson);  // validates
        }
    }
    if (!any_deformable) fail("scenario: need at least one deformable body");

    auto has_body = [&](const std::string& n) { return names.count(n) > 0; };
    for (const DirichletSpec& d : sc.dirichlet)
        if (!has_body(d.body)) fail("scenario: dirichlet '", d.name, "' on unknown body ", d.body);
    for (const NeumannSpec& n : sc.neumann)
        if (!has_body(n.body)) fail("scenario: neumann load on unknown body ", n.body);
    for (const RigidMotionSpec& m : sc.motions) {
        if (!has_body(m.body)) fail("scenario: rigid motion on unknown body ", m.body);
        bool rigid = false;
        for (const BodySpec& b : sc.bodies)
            if (b.name == m.body) rigid = b.rigid;
        if (!rigid) fail("scenario: rigid motion on deformable body ", m.body);
    }
    for (const DirichletSpec& d : sc.dirichlet)
        for (const BodySpec& b : sc.bodies)
            if (b.name == d.body && b.rigid)
                fail("scenario: dirichlet '", d.name, "' on rigid body ", d.body);
}

LevelSet build_shape_level_set(const ShapeSpec& shape, int body_id, const Grid& grid,
                               const std::string& base_dir) {
    auto transformed = [&](std::vector<Vec2> verts) {
        const double angle = shape.rotate_deg * std::numbers::pi / 180.0;
        for (Vec2& v : verts) v = rotate(v * shape.scale, angle) + shape.translate;
        return verts;
    };
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        if (fp.is_absolute() || base_dir.empty()) return p;
        return (std::filesystem::path(base_dir) / fp).string();
    };

    std::optional<LevelSet> ls;
    switch (shape.type) {
        case ShapeSpec::Type::Circle: {
            const double angle = shape.rotate_deg * std::numbers::pi / 180.0;
            const Vec2 c = rotate(shape.center * shape.scale, angle) + shape.translate;
            const double r = shape.radius * shape.scale;
            // Clipped circles are checked against the clipped extent below.
            const bool clipped = shape.clip_y_min || shape.clip_y_max;
            if (clipped) {
                Aabb box{{c.x - r, c.y - r}, {c.x + r, c.y + r}};
                if (shape.clip_y_max) box.hi.y = std::min(box.hi.y, *shape.clip_y_max);
                if (shape.clip_y_min) box.lo.y = std::max(box.lo.y, *shape.clip_y_min);
                const double m = 3.0 * grid.h();
                const Aabb b = grid.bounds();
                if (box.lo.x < b.lo.x + m || box.lo.y < b.lo.y + m || box.hi.x > b.hi.x - m ||
                    box.hi.y > b.hi.y - m)
                    fail("scenario: clipped circle must keep a 3h margin to the grid boundary");
            }
            ls = make_circle(body_id, grid, c, r, !clipped);
            break;
        }
        case ShapeSpec::Type::Rectangle: {
            if (shape.rotate_deg != 0.0) {
                const std::vector<Vec2> v = transformed({shape.lo,
                                                         {shape.hi.x, shape.lo.y},
                                                         shape.hi,
                                                         {shape.lo.x, shape.hi.y}});
                ls = make_polygon(body_id, grid, v);
            } else {
                ls = make_rectangle(body_id, grid, shape.lo * shape.scale + shape.translate,
                                    shape.hi * shape.scale + shape.translate);
            }
            break;
        }
        case ShapeSpec::Type::Polygon:
            ls = make_polygon(body_id, grid, transformed(shape.vertices));
            break;
        case ShapeSpec::Type::PolygonFile:
            ls = make_polygon(body_id, grid, transformed(read_polygon_vertices(resolve(shape.path))));
            break;
        case ShapeSpec::Type::LevelSetFile: {
            ScalarField raw = read_level_set_text(resolve(shape.path));
            if (!(raw.grid() == grid)) {
                // Resample onto the scenario grid.
                ScalarField resampled(grid);
                for (int j = 0; j < grid.ny(); ++j)
                    for (int i = 0; i < grid.nx(); ++i) {
                        Vec2 p = grid.node_pos(i, j);
                        const Aabb b = raw.grid().bounds();
                        p.x = std::clamp(p.x, b.lo.x, b.hi.x);
                        p.y = std::clamp(p.y, b.lo.y, b.hi.y);
                        resampled(i, j) = interpolate(raw, p);
                    }
                raw = std::move(resampled);
            }
            ls = reinitialize(LevelSet(body_id, std::move(raw)));
            break;
        }
    }

    if (shape.clip_y_min || shape.clip_y_max) {
        ScalarField& phi = ls->phi();
        for (int j = 0; j < grid.ny(); ++j)
            for (int i = 0; i < grid.nx(); ++i) {
                const double y = grid.node_pos(i, j).y;
                double v = phi(i, j);
                if (shape.clip_y_max) v = std::max(v, y - *shape.clip_y_max);
                if (shape.clip_y_min) v = std::max(v, *shape.clip_y_min - y);
                phi(i, j) = v;
            }
        ls = reinitialize(*ls);
    }
    return std::move(*ls);
}

std::vector<std::string> list_scenarios(const std::string& dir) {
    std::vector<std::string> names;
    if (!std::filesystem::is_directory(dir)) return names;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            names.push_back(entry.path().stem().string());
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace lsc
