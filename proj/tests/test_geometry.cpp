#include <doctest.h>

#include <cmath>
#include <numbers>

#include "udfm/geometry.hpp"
#include "udfm/rng.hpp"

using namespace udfm;

namespace {

Fracture disc(Vec3 c, Vec3 n, double r) { return Fracture{0, c, n.normalized(), r, 5e-4}; }

PlanarPolygon square(double half, double z = 0.0) {
  PlanarPolygon p;
  p.plane_normal = Vec3::UnitZ();
  p.vertices = {Vec3(-half, -half, z), Vec3(half, -half, z), Vec3(half, half, z), Vec3(-half, half, z)};
  return p;
}

double inscribed_area(int m, double r) { return 0.5 * m * r * r * std::sin(2.0 * std::numbers::pi / m); }

}  // namespace

TEST_CASE("disc polygon: inscribed area and planarity") {
  const auto p32 = disc_to_polygon(disc(Vec3::Zero(), Vec3::UnitZ(), 1.0), 32);
  REQUIRE(p32.vertices.size() == 32);
  CHECK(polygon_area(p32) == doctest::Approx(inscribed_area(32, 1.0)).epsilon(1e-12));
  CHECK(polygon_area(p32) == doctest::Approx(3.1214).epsilon(1e-4));
  for (const auto& v : p32.vertices) {
    CHECK(std::abs(v.z()) < 1e-15);
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-14));
  }
  const auto p64 = disc_to_polygon(disc(Vec3::Zero(), Vec3::UnitZ(), 1.0), 64);
  CHECK(polygon_area(p64) > polygon_area(p32));
  CHECK(polygon_area(p64) < std::numbers::pi);
}

TEST_CASE("disc polygon winds counter-clockwise about the normal") {
  CounterRng rng(4);
  for (int i = 0; i < 50; ++i) {
    const Vec3 n = Vec3(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5).normalized();
    const Vec3 c(rng.uniform(), rng.uniform(), rng.uniform());
    const auto p = disc_to_polygon(disc(c, n, 2.0), 16);
    Vec3 sum = Vec3::Zero();
    for (std::size_t k = 0; k < p.vertices.size(); ++k) {
      const Vec3& a = p.vertices[k];
      const Vec3& b = p.vertices[(k + 1) % p.vertices.size()];
      sum += (a - c).cross(b - c);
      CHECK(std::abs((a - c).dot(n)) < 1e-12);
    }
    CHECK(sum.dot(n) > 0.0);
  }
}

TEST_CASE("polygon area examples") {
  CHECK(polygon_area(PlanarPolygon{}) == 0.0);
  CHECK(polygon_area(square(0.5)) == doctest::Approx(1.0));
  const auto p = disc_to_polygon(disc(Vec3(1, 2, 3), Vec3(1, 1, 0), 2.0), 32);
  CHECK(polygon_area(p) == doctest::Approx(16.0 * 4.0 * std::sin(2.0 * std::numbers::pi / 32.0)).epsilon(1e-12));
}

TEST_CASE("area converges to the disc at second order") {
  double prev = std::numbers::pi - polygon_area(disc_to_polygon(disc(Vec3::Zero(), Vec3::UnitZ(), 1.0), 16));
  for (int m : {32, 64, 128}) {
    const double err = std::numbers::pi - polygon_area(disc_to_polygon(disc(Vec3::Zero(), Vec3::UnitZ(), 1.0), m));
    CHECK(prev / err == doctest::Approx(4.0).epsilon(0.02));
    prev = err;
  }
}

TEST_CASE("clipping examples") {
  const Box big{Vec3(-10, -10, -10), Vec3(10, 10, 10)};
  const auto sq = square(0.5);
  const auto inside = clip_polygon_to_box(sq, big);
  CHECK(polygon_area(inside) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(inside.vertices.size() == 4);

  const Box above{Vec3(-1, -1, 1), Vec3(1, 1, 2)};
  CHECK(clip_polygon_to_box(sq, above).empty());

  const Box quadrant{Vec3(0, 0, 0), Vec3(10, 10, 10)};
  CHECK(polygon_area(clip_polygon_to_box(sq, quadrant)) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("clipping is idempotent") {
  CounterRng rng(12);
  for (int i = 0; i < 100; ++i) {
    const Vec3 n = Vec3(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5).normalized();
    const auto p = disc_to_polygon(disc(Vec3(rng.uniform(), rng.uniform(), rng.uniform()) * 4.0, n, 3.0));
    const Box b{Vec3(0, 0, 0), Vec3(2.5, 2.5, 2.5)};
    const auto once = clip_polygon_to_box(p, b);
    const auto twice = clip_polygon_to_box(once, b);
    CHECK(polygon_area(twice) == doctest::Approx(polygon_area(once)).epsilon(1e-12));
    CHECK(once.empty() == twice.empty());
  }
}

TEST_CASE("clipped areas are additive over the octants of a box") {
  CounterRng rng(99);
  const Box b{Vec3(-2, -2, -2), Vec3(2, 2, 2)};
  for (int i = 0; i < 200; ++i) {
    const Vec3 n = Vec3(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5).normalized();
    const Vec3 c = Vec3(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5) * 4.0;
    const auto p = disc_to_polygon(disc(c, n, 1.0 + 3.0 * rng.uniform()));
    const double whole = polygon_area(clip_polygon_to_box(p, b));
    double parts = 0.0;
    for (int o = 0; o < 8; ++o) {
      Box q;
      for (int a = 0; a < 3; ++a) {
        const bool hi = (o >> a) & 1;
        q.min[a] = hi ? 0.0 : -2.0;
        q.max[a] = hi ? 2.0 : 0.0;
      }
      parts += polygon_area(clip_polygon_to_box(p, q));
    }
    CHECK(parts == doctest::Approx(whole).epsilon(1e-9));
  }
}

TEST_CASE("polygon-box intersection respects positive area") {
  const auto sq = square(0.5);
  CHECK(polygon_intersects_box(sq, Box{Vec3(-1, -1, -1), Vec3(1, 1, 1)}));
  CHECK_FALSE(polygon_intersects_box(sq, Box{Vec3(-1, -1, 0.5), Vec3(1, 1, 1)}));
  // Square corner touches the box corner only.
  CHECK_FALSE(polygon_intersects_box(sq, Box{Vec3(0.5, 0.5, -1), Vec3(1.5, 1.5, 1)}));
  // Square lying on a box face: zero thickness contact still has area inside the closed box.
  CHECK(clipped_area(sq, Box{Vec3(-1, -1, 0), Vec3(1, 1, 1)}) == doctest::Approx(1.0));
}

TEST_CASE("disc intersection examples") {
  CHECK_FALSE(discs_intersect(disc(Vec3(0, 0, 0), Vec3::UnitX(), 1.0), disc(Vec3(0, 0, 3), Vec3::UnitY(), 1.0)));
  const auto a = disc(Vec3::Zero(), Vec3::UnitZ(), 1.0);
  const auto b = disc(Vec3::Zero(), Vec3::UnitX(), 1.0);
  CHECK(discs_intersect(a, b));
  CHECK(*chord_overlap(a, b) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(discs_intersect(a, disc(Vec3(0, 1.999, 0), Vec3::UnitX(), 1.0)));
  CHECK_FALSE(discs_intersect(a, disc(Vec3(0, 2.001, 0), Vec3::UnitX(), 1.0)));
  // Parallel and coplanar discs are declared disjoint.
  CHECK_FALSE(discs_intersect(a, disc(Vec3(0.5, 0, 0), Vec3::UnitZ(), 1.0)));
}

TEST_CASE("chord overlap against an independent construction") {
  // Horizontal disc and a vertical one offset in y: the line is x-parallel at
  // (y0, z=0); half-chords are sqrt(r^2 - d^2) about each center's projection.
  const double r1 = 2.0, r2 = 1.5, y0 = 0.7, x2 = 1.2;
  const auto a = disc(Vec3(0, 0, 0), Vec3::UnitZ(), r1);
  const auto b = disc(Vec3(x2, y0, 0.4), Vec3::UnitY(), r2);
  const double h1 = std::sqrt(r1 * r1 - y0 * y0);
  const double h2 = std::sqrt(r2 * r2 - 0.4 * 0.4);
  const double lo = std::max(-h1, x2 - h2), hi = std::min(h1, x2 + h2);
  CHECK(*chord_overlap(a, b) == doctest::Approx(hi - lo).epsilon(1e-12));
  const Box clip{Vec3(-10, -10, -10), Vec3(1.0, 10, 10)};
  CHECK(*chord_overlap(a, b, &clip) == doctest::Approx(1.0 - lo).epsilon(1e-12));
}

TEST_CASE("disc intersection is symmetric") {
  CounterRng rng(5150);
  int hits = 0;
  for (int i = 0; i < 2000; ++i) {
    auto rnd = [&] { return Vec3(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5); };
    const auto a = disc(rnd() * 6.0, rnd(), 0.5 + 2.0 * rng.uniform());
    const auto b = disc(rnd() * 6.0, rnd(), 0.5 + 2.0 * rng.uniform());
    const bool ab = discs_intersect(a, b);
    CHECK(ab == discs_intersect(b, a));
    hits += ab;
  }
  CHECK(hits > 0);
}

TEST_CASE("disc intersection agrees with dense point sampling") {
  // Independent oracle: sample points on disc A, test membership in disc B's
  // slab of half-thickness h; intersecting pairs must show a hit.
  CounterRng rng(7);
  for (int i = 0; i < 200; ++i) {
    auto rnd = [&] { return Vec3(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5); };
    const auto a = disc(rnd() * 3.0, rnd(), 1.0);
    const auto b = disc(rnd() * 3.0, rnd(), 1.0);
    const auto overlap = chord_overlap(a, b);
    if (overlap && *overlap > 0.05) {
      const auto [u, v] = plane_basis(a.normal);
      bool found = false;
      const int m = 400;
      for (int s = 0; s < m && !found; ++s) {
        for (int t = 0; t < m && !found; ++t) {
          const double x = -1.0 + 2.0 * (s + 0.5) / m, y = -1.0 + 2.0 * (t + 0.5) / m;
          if (x * x + y * y > 1.0) continue;
          const Vec3 p = a.center + x * u + y * v;
          const double h = (p - b.center).dot(b.normal);
          found = std::abs(h) < 0.01 && (p - h * b.normal - b.center).norm() < 1.0;
        }
      }
      CHECK(found);
    }
  }
}

TEST_CASE("plane basis is orthonormal and right-handed") {
  for (const Vec3& n : {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0.3, -0.4, 0.866).normalized()}) {
    const auto [u, v] = plane_basis(n);
    CHECK(u.norm() == doctest::Approx(1.0));
    CHECK(v.norm() == doctest::Approx(1.0));
    CHECK(std::abs(u.dot(n)) < 1e-14);
    CHECK(std::abs(u.dot(v)) < 1e-14);
    CHECK((u.cross(v) - n).norm() < 1e-14);
  }
}
