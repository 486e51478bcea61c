#pragma once

#include <string>
#include <vector>

#include "lsc/contact.hpp"
#include "lsc/material_points.hpp"
#include "lsc/mechanics.hpp"

namespace lsc {

// Structured text grid format: "nx ny h ox oy" header then nx*ny values
// row-major (j outer, i inner).
ScalarField read_level_set_text(const std::string& path);
void write_level_set_text(const std::string& path, const ScalarField& f);

// One "x y" vertex per line, polygon closed implicitly.
std::vector<Vec2> read_polygon_vertices(const std::string& path);

// Legacy ASCII VTK structured points with phi, displacement and stress
// invariants sampled at the nodes.
void write_body_vtk(const std::string& path, const Body& body,
                    const std::vector<MaterialPoint>& points);

void write_points_csv(const std::string& path, const std::vector<MaterialPoint>& points);

// Debug emitter: one row per contact point.
void write_pair_csv(const std::string& path, const ContactPair& pair);

// Traction profile sorted by arc coordinate.
void write_traction_profile_csv(const std::string& path, const ContactPair& pair);

std::string format_double(double v);

}  // namespace lsc
