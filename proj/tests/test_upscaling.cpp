#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "fixtures.hpp"
#include "udfm/octree.hpp"
#include "udfm/upscaling.hpp"

using namespace udfm;

namespace {

Mat3 random_rotation(CounterRng& rng) {
  const Vec3 axis = Vec3(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5).normalized();
  return Eigen::AngleAxisd(6.283185307179586 * rng.uniform(), axis).toRotationMatrix();
}

Mat3 random_spd(CounterRng& rng) {
  Mat3 a;
  for (int i = 0; i < 9; ++i) a.data()[i] = rng.uniform() - 0.5;
  return a * a.transpose();
}

CellFractureData square_data() {
  // 1 m^2 square, aperture 5e-4, inside a 2.5 m cell.
  CellFractureData d;
  d.area = 1.0;
  d.aperture = 5e-4;
  d.volume = 5e-4;
  d.porosity = 5e-4 / 15.625;
  d.normal = Vec3::UnitZ();
  return d;
}

}  // namespace

TEST_CASE("transformation tensor entries") {
  CHECK(transformation_tensor(Vec3::UnitZ()).isApprox(Vec3(1, 1, 0).asDiagonal().toDenseMatrix()));
  CHECK(transformation_tensor(Vec3::UnitX()).isApprox(Vec3(0, 1, 1).asDiagonal().toDenseMatrix()));
  Mat3 expected;
  expected << 0.5, -0.5, 0, -0.5, 0.5, 0, 0, 0, 1;
  const Mat3 a = transformation_tensor(Vec3(1, 1, 0) / std::sqrt(2.0));
  CHECK((a - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("transformation tensor is a rank-two projector") {
  CounterRng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Vec3 n = Vec3(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5).normalized();
    const Mat3 a = transformation_tensor(n);
    const Vec3 ev = Eigen::SelfAdjointEigenSolver<Mat3>(a).eigenvalues();
    CHECK(std::abs(ev[0]) < 1e-12);
    CHECK(ev[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ev[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((a * n).norm() < 1e-14);
  }
}

TEST_CASE("cell fracture data from a square polygon") {
  FractureNetwork net = fixtures::make_network(10.0, {Fracture{0, Vec3(1.25, 1.25, 1.0), Vec3::UnitZ(), 0.5, 5e-4}});
  PlanarPolygon sq;
  sq.plane_normal = Vec3::UnitZ();
  sq.vertices = {Vec3(0.75, 0.75, 1.0), Vec3(1.75, 0.75, 1.0), Vec3(1.75, 1.75, 1.0), Vec3(0.75, 1.75, 1.0)};
  const std::vector<PlanarPolygon> polys{sq};
  const Box cell{Vec3(0, 0, 0), Vec3(2.5, 2.5, 2.5)};
  const std::vector<int> ids{0};
  const auto data = cell_fracture_data(cell, ids, net, polys);
  REQUIRE(data.size() == 1);
  CHECK(data[0].area == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(data[0].volume == doctest::Approx(5e-4).epsilon(1e-14));
  CHECK(data[0].porosity == doctest::Approx(3.2e-5).epsilon(1e-12));

  CHECK(cell_fracture_data(cell, std::vector<int>{}, net, polys).empty());

  int dropped = 0;
  const Box far{Vec3(5, 5, 5), Vec3(7.5, 7.5, 7.5)};
  CHECK(cell_fracture_data(far, ids, net, polys, &dropped).empty());
  CHECK(dropped == 1);
}

TEST_CASE("fracture area splits additively across two cells") {
  const auto net = fixtures::make_network(10.0, {fixtures::disc(0, {0.0, 1.25, 1.0}, {0, 0, 1}, 1.0)});
  const auto polys = network_polygons(net, kDefaultPolygonVertices);
  const std::vector<int> ids{0};
  const auto left = cell_fracture_data(Box{Vec3(-2.5, 0, 0), Vec3(0, 2.5, 2.5)}, ids, net, polys);
  const auto right = cell_fracture_data(Box{Vec3(0, 0, 0), Vec3(2.5, 2.5, 2.5)}, ids, net, polys);
  REQUIRE(left.size() == 1);
  REQUIRE(right.size() == 1);
  CHECK(left[0].area + right[0].area == doctest::Approx(polygon_area(polys[0])).epsilon(1e-9));
}

TEST_CASE("permeability tensor of a single fracture") {
  const std::vector<CellFractureData> one{square_data()};
  const Mat3 k = cell_permeability_tensor(one);
  const double scalar = 3.2e-5 * 2.5e-7 / 12.0;  // independent (1/12) phi b^2
  CHECK(k(0, 0) == doctest::Approx(scalar).epsilon(1e-12));
  CHECK(k(1, 1) == doctest::Approx(scalar).epsilon(1e-12));
  CHECK(k(2, 2) == 0.0);
  CHECK(scalar == doctest::Approx(6.667e-13).epsilon(1e-3));
  CHECK(spectral_radius(k) == doctest::Approx(scalar).epsilon(1e-12));

  CHECK(cell_permeability_tensor(std::vector<CellFractureData>{}).isZero());
  const std::vector<CellFractureData> two{square_data(), square_data()};
  CHECK(cell_permeability_tensor(two).isApprox(2.0 * k, 1e-15));
}

TEST_CASE("doubling aperture scales k_F by eight") {
  CellFractureData d = square_data();
  const double k1 = spectral_radius(cell_permeability_tensor(std::vector<CellFractureData>{d}));
  d.aperture *= 2.0;
  d.volume *= 2.0;
  d.porosity *= 2.0;
  const double k2 = spectral_radius(cell_permeability_tensor(std::vector<CellFractureData>{d}));
  CHECK(k2 == doctest::Approx(8.0 * k1).epsilon(1e-14));
}

TEST_CASE("spectral radius examples and properties") {
  CHECK(spectral_radius(Vec3(1, 2, 3).asDiagonal().toDenseMatrix()) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(spectral_radius(Mat3::Zero()) == 0.0);
  CounterRng rng(21);
  for (int i = 0; i < 500; ++i) {
    const Mat3 k = random_spd(rng) * 1e-12;
    const Vec3 ev = Eigen::SelfAdjointEigenSolver<Mat3>(k).eigenvalues();
    const Vec3 mine = symmetric_eigenvalues(k);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(mine[j] - ev[j]) <= 1e-14 * ev.cwiseAbs().maxCoeff() + 1e-40);
    const double rho = spectral_radius(k);
    CHECK(rho == doctest::Approx(ev.cwiseAbs().maxCoeff()).epsilon(1e-13));
    CHECK(spectral_radius(3.5 * k) == doctest::Approx(3.5 * rho).epsilon(1e-13));
    const Mat3 r = random_rotation(rng);
    CHECK(spectral_radius(r * k * r.transpose()) == doctest::Approx(rho).epsilon(1e-12));
  }
}

TEST_CASE("spectral radius of degenerate spectra") {
  // Repeated eigenvalues stress the closed form.
  CounterRng rng(8);
  for (int i = 0; i < 200; ++i) {
    const Mat3 r = random_rotation(rng);
    const Mat3 k = r * Vec3(2e-13, 2e-13, 0.0).asDiagonal() * r.transpose();
    CHECK(spectral_radius(k) == doctest::Approx(2e-13).epsilon(1e-12));
    const Mat3 iso = r * Vec3(1.0, 1.0, 1.0).asDiagonal() * r.transpose();
    CHECK(spectral_radius(iso) == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("upscale_cell combines matrix and fracture") {
  const double km = 1e-16, phim = 0.01, vc = 15.625;
  const auto matrix = upscale_cell(std::vector<CellFractureData>{}, km, phim, vc);
  CHECK(matrix.k == km);
  CHECK(matrix.phi == phim);
  CHECK_FALSE(matrix.is_fracture);
  CHECK(matrix.phi_f == 0.0);

  const std::vector<CellFractureData> one{square_data()};
  const auto cell = upscale_cell(one, km, phim, vc);
  const double phi_f = 3.2e-5;
  const double expected_k = (1.0 - phi_f) * km + phi_f * 2.5e-7 / 12.0;
  CHECK(cell.k == doctest::Approx(expected_k).epsilon(1e-12));
  CHECK(cell.k == doctest::Approx(6.668e-13).epsilon(1e-3));
  CHECK(cell.phi_f == doctest::Approx(phi_f).epsilon(1e-12));
  CHECK(cell.phi == doctest::Approx(phi_f + (1.0 - phi_f) * phim).epsilon(1e-12));
  CHECK(cell.is_fracture);
  CHECK(upscale_cell(one, km, phim, vc, true).phi == doctest::Approx(phi_f).epsilon(1e-12));

  CellFractureData zero = square_data();
  zero.aperture = 0.0;
  zero.volume = 0.0;
  zero.porosity = 0.0;
  CHECK(upscale_cell(std::vector<CellFractureData>{zero}, km, phim, vc).k == km);

  CHECK_THROWS_AS(upscale_cell(one, 0.0, phim, vc), std::invalid_argument);
  CHECK_THROWS_AS(upscale_cell(one, km, 1.0, vc), std::invalid_argument);
  CellFractureData huge = square_data();
  huge.volume = 2.0 * vc;
  huge.porosity = 2.0;
  CHECK_THROWS_AS(upscale_cell(std::vector<CellFractureData>{huge}, km, phim, vc), std::domain_error);
}

TEST_CASE("upscale_mesh: empty network is uniform matrix") {
  const auto net = fixtures::make_network(25.0, {});
  MeshParams mp;
  mp.orl = 1;
  const auto mesh = build_mesh(net, mp);
  const auto field = upscale_mesh(mesh, net, UpscaleOptions{});
  for (const auto& c : field.cells) {
    CHECK(c.k == 1e-16);
    CHECK(c.phi == 0.01);
  }
  CHECK(field.summary.fracture_cells == 0);
  CHECK(field.summary.fracture_volume == 0.0);
}

TEST_CASE("upscale_mesh conserves fracture volume across refinement") {
  GenerationParams p;
  p.L = 25.0;
  p.n_fractures = 150;
  p.seed = 4;
  const auto net = generate_network(p);
  const auto polys = network_polygons(net, kDefaultPolygonVertices);
  double expected = 0.0;
  for (std::size_t f = 0; f < net.size(); ++f) expected += clipped_area(polys[f], net.domain) * net.fractures[f].aperture;
  for (int orl : {1, 2, 3}) {
    MeshParams mp;
    mp.orl = orl;
    const auto mesh = build_mesh(net, mp);
    const auto field = upscale_mesh(mesh, net, UpscaleOptions{});
    double vf = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      const auto& c = field.cells[i];
      vf += c.phi_f * mesh.cells()[i].volume();
      CHECK(c.k >= 1e-16);
      CHECK((c.k == 1e-16) == (c.phi_f == 0.0));
      CHECK(c.phi > 0.0);
      CHECK(c.phi <= 1.0);
    }
    CHECK(vf == doctest::Approx(expected).epsilon(1e-6));
    CHECK(field.summary.fracture_volume == doctest::Approx(expected).epsilon(1e-6));
    CHECK(field.summary.dropped_fractures == 0);
  }
}
