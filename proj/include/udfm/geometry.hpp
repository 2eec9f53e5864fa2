#pragma once

#include <optional>
#include <vector>

#include "udfm/types.hpp"

namespace udfm {

/// Ordered coplanar vertex loop. Empty means "no intersection".
struct PlanarPolygon {
  std::vector<Vec3> vertices;
  Vec3 plane_normal = Vec3::UnitZ();

  bool empty() const { return vertices.size() < 3; }
};

inline constexpr int kDefaultPolygonVertices = 32;
inline constexpr double kDefaultIntersectionEps = 1e-9;

/// Regular m-gon inscribed in the fracture disc, wound counter-clockwise
/// about the fracture normal.
PlanarPolygon disc_to_polygon(const Fracture& f, int m_vertices = kDefaultPolygonVertices);

/// Sutherland-Hodgman clip against the six half-spaces of `box`.
/// Outputs with fewer than three distinct vertices collapse to empty.
PlanarPolygon clip_polygon_to_box(const PlanarPolygon& poly, const Box& box);

/// Single-sided area (fan triangulation projected on the plane normal).
double polygon_area(const PlanarPolygon& poly);

/// Positive-area contact between polygon and box. An intersection counts
/// only if its clipped area exceeds `rel_area_eps` times the smallest box
/// face area.
bool polygon_intersects_box(const PlanarPolygon& poly, const Box& box,
                            double rel_area_eps = 1e-12);

/// Area of `poly` inside `box` (0 for no positive-area contact).
double clipped_area(const PlanarPolygon& poly, const Box& box, double rel_area_eps = 1e-12);

/// Overlap length of the two chords cut by the plane-plane intersection
/// line. Returns nullopt for parallel planes or when either disc misses
/// the line. When `clip_box` is given the overlap is further restricted to
/// the part of the line inside the box.
std::optional<double> chord_overlap(const Fracture& f1, const Fracture& f2,
                                    const Box* clip_box = nullptr);

/// Exact disc-disc intersection test: chord overlap longer than `eps`.
bool discs_intersect(const Fracture& f1, const Fracture& f2,
                     double eps = kDefaultIntersectionEps);

/// Same test restricted to the portion of the intersection inside `box`.
bool discs_intersect_in_box(const Fracture& f1, const Fracture& f2, const Box& box,
                            double eps = kDefaultIntersectionEps);

/// Orthonormal in-plane pair (u, v) with u x v = n.
std::pair<Vec3, Vec3> plane_basis(const Vec3& n);

}  // namespace udfm
