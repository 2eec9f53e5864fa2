#include "udfm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace udfm {

std::pair<Vec3, Vec3> plane_basis(const Vec3& n) {
  // Seed with the axis least aligned with n.
  Vec3 seed = Vec3::UnitX();
  const Vec3 a = n.cwiseAbs();
  if (a.y() <= a.x() && a.y() <= a.z()) {
    seed = Vec3::UnitY();
  } else if (a.z() <= a.x() && a.z() <= a.y()) {
    seed = Vec3::UnitZ();
  }
  Vec3 u = seed - seed.dot(n) * n;
  u.normalize();
  Vec3 v = n.cross(u);
  return {u, v};
}

PlanarPolygon disc_to_polygon(const Fracture& f, int m_vertices) {
  PlanarPolygon poly;
  poly.plane_normal = f.normal;
  const auto [u, v] = plane_basis(f.normal);
  poly.vertices.reserve(static_cast<std::size_t>(m_vertices));
  for (int k = 0; k < m_vertices; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / m_vertices;
    poly.vertices.push_back(f.center + f.radius * (std::cos(theta) * u + std::sin(theta) * v));
  }
  return poly;
}

namespace {

// Keeps the side x[axis] >= bound (keep_above) or x[axis] <= bound.
std::vector<Vec3> clip_half_space(const std::vector<Vec3>& in, int axis, double bound,
                                  bool keep_above) {
  std::vector<Vec3> out;
  if (in.empty()) return out;
  out.reserve(in.size() + 2);
  auto inside = [&](const Vec3& p) { return keep_above ? p[axis] >= bound : p[axis] <= bound; };
  auto cut = [&](const Vec3& p, const Vec3& q) {
    const double t = (bound - p[axis]) / (q[axis] - p[axis]);
    Vec3 r = p + t * (q - p);
    r[axis] = bound;
    return r;
  };
  const std::size_t n = in.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& p = in[(i + n - 1) % n];
    const Vec3& q = in[i];
    const bool pin = inside(p);
    const bool qin = inside(q);
    if (qin) {
      if (!pin) out.push_back(cut(p, q));
      out.push_back(q);
    } else if (pin) {
      out.push_back(cut(p, q));
    }
  }
  return out;
}

void drop_duplicates(std::vector<Vec3>& pts, double tol) {
  if (pts.empty()) return;
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    if (out.empty() || (p - out.back()).norm() > tol) out.push_back(p);
  }
  while (out.size() > 1 && (out.front() - out.back()).norm() <= tol) out.pop_back();
  pts.swap(out);
}

}  // namespace

PlanarPolygon clip_polygon_to_box(const PlanarPolygon& poly, const Box& box) {
  PlanarPolygon out;
  out.plane_normal = poly.plane_normal;
  if (poly.empty()) return out;
  std::vector<Vec3> pts = poly.vertices;
  for (int axis = 0; axis < 3 && !pts.empty(); ++axis) {
    pts = clip_half_space(pts, axis, box.min[axis], true);
    pts = clip_half_space(pts, axis, box.max[axis], false);
  }
  const double tol = 1e-13 * std::max(1.0, box.extent().maxCoeff());
  drop_duplicates(pts, tol);
  if (pts.size() >= 3) out.vertices = std::move(pts);
  return out;
}

double polygon_area(const PlanarPolygon& poly) {
  if (poly.empty()) return 0.0;
  const Vec3& o = poly.vertices.front();
  Vec3 acc = Vec3::Zero();
  for (std::size_t i = 1; i + 1 < poly.vertices.size(); ++i) {
    acc += (poly.vertices[i] - o).cross(poly.vertices[i + 1] - o);
  }
  return 0.5 * std::abs(acc.dot(poly.plane_normal));
}

double clipped_area(const PlanarPolygon& poly, const Box& box, double rel_area_eps) {
  const double a = polygon_area(clip_polygon_to_box(poly, box));
  const Vec3 e = box.extent();
  const double min_face = std::min({e.x() * e.y(), e.y() * e.z(), e.x() * e.z()});
  return a > rel_area_eps * min_face ? a : 0.0;
}

bool polygon_intersects_box(const PlanarPolygon& poly, const Box& box, double rel_area_eps) {
  return clipped_area(poly, box, rel_area_eps) > 0.0;
}

namespace {
// Strict weak order used to make the pairwise test argument-order independent.
bool canonical_less(const Fracture& a, const Fracture& b) {
  for (int k = 0; k < 3; ++k) {
    if (a.center[k] != b.center[k]) return a.center[k] < b.center[k];
  }
  for (int k = 0; k < 3; ++k) {
    if (a.normal[k] != b.normal[k]) return a.normal[k] < b.normal[k];
  }
  return a.radius < b.radius;
}
}  // namespace

std::optional<double> chord_overlap(const Fracture& g1, const Fracture& g2, const Box* clip_box) {
  const bool swap_args = canonical_less(g2, g1);
  const Fracture& f1 = swap_args ? g2 : g1;
  const Fracture& f2 = swap_args ? g1 : g2;
  const Vec3 dir = f1.normal.cross(f2.normal);
  const double s = dir.norm();
  if (s < 1e-12) return std::nullopt;
  const Vec3 u = dir / s;

  // Point on the line as a combination of the two normals.
  const double c = f1.normal.dot(f2.normal);
  const double d1 = f1.normal.dot(f1.center);
  const double d2 = f2.normal.dot(f2.center);
  const double det = 1.0 - c * c;
  const double a = (d1 - c * d2) / det;
  const double b = (d2 - c * d1) / det;
  const Vec3 p0 = a * f1.normal + b * f2.normal;

  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const Fracture* f : {&f1, &f2}) {
    const Vec3 w = f->center - p0;
    const double t = w.dot(u);
    const double dist2 = std::max(0.0, w.squaredNorm() - t * t);
    const double r2 = f->radius * f->radius;
    if (dist2 > r2) return std::nullopt;
    const double h = std::sqrt(r2 - dist2);
    lo = std::max(lo, t - h);
    hi = std::min(hi, t + h);
  }
  if (clip_box != nullptr) {
    for (int k = 0; k < 3; ++k) {
      if (std::abs(u[k]) < 1e-15) {
        if (p0[k] < clip_box->min[k] || p0[k] > clip_box->max[k]) return std::nullopt;
        continue;
      }
      double t1 = (clip_box->min[k] - p0[k]) / u[k];
      double t2 = (clip_box->max[k] - p0[k]) / u[k];
      if (t1 > t2) std::swap(t1, t2);
      lo = std::max(lo, t1);
      hi = std::min(hi, t2);
    }
  }
  return hi - lo;
}

bool discs_intersect(const Fracture& f1, const Fracture& f2, double eps) {
  const auto overlap = chord_overlap(f1, f2);
  return overlap && *overlap > eps;
}

bool discs_intersect_in_box(const Fracture& f1, const Fracture& f2, const Box& box, double eps) {
  const auto overlap = chord_overlap(f1, f2, &box);
  return overlap && *overlap > eps;
}

}  // namespace udfm
