#include "udfm/upscaling.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

#include "udfm/parallel.hpp"

namespace udfm {

Mat3 transformation_tensor(const Vec3& n) {
  Mat3 a;
  a << n.y() * n.y() + n.z() * n.z(), -n.x() * n.y(), -n.z() * n.x(),
      -n.x() * n.y(), n.z() * n.z() + n.x() * n.x(), -n.y() * n.z(),
      -n.z() * n.x(), -n.y() * n.z(), n.x() * n.x() + n.y() * n.y();
  return a;
}

std::vector<CellFractureData> cell_fracture_data(const Box& cell, std::span<const int> fracture_ids,
                                                 const FractureNetwork& network,
                                                 std::span<const PlanarPolygon> polygons,
                                                 int* dropped) {
  std::vector<CellFractureData> out;
  out.reserve(fracture_ids.size());
  const double vc = cell.volume();
  for (int fid : fracture_ids) {
    const auto idx = static_cast<std::size_t>(fid);
    const double area = clipped_area(polygons[idx], cell);
    if (area <= 0.0) {
      if (dropped != nullptr) ++*dropped;
      continue;
    }
    const Fracture& f = network.fractures[idx];
    CellFractureData d;
    d.fracture_id = fid;
    d.area = area;
    d.aperture = f.aperture;
    d.volume = area * f.aperture;
    d.porosity = d.volume / vc;
    d.normal = f.normal;
    out.push_back(d);
  }
  return out;
}

Mat3 cell_permeability_tensor(std::span<const CellFractureData> data) {
  Mat3 k = Mat3::Zero();
  for (const auto& d : data) {
    k += d.porosity * d.aperture * d.aperture * transformation_tensor(d.normal);
  }
  return k / 12.0;
}

namespace {

Eigen::Vector3d jacobi_eigenvalues(Mat3 a) {
  for (int sweep = 0; sweep < 50; ++sweep) {
    const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double scale = a.diagonal().squaredNorm();
    if (off <= 1e-32 * scale || off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Mat3 rot = Mat3::Identity();
        rot(p, p) = c;
        rot(q, q) = c;
        rot(p, q) = s;
        rot(q, p) = -s;
        a = rot.transpose() * a * rot;
      }
    }
  }
  Eigen::Vector3d ev = a.diagonal();
  std::sort(ev.data(), ev.data() + 3);
  return ev;
}

}  // namespace

Eigen::Vector3d symmetric_eigenvalues(const Mat3& K) {
  const double p1 = K(0, 1) * K(0, 1) + K(0, 2) * K(0, 2) + K(1, 2) * K(1, 2);
  Eigen::Vector3d ev;
  if (p1 == 0.0) {
    ev = K.diagonal();
    std::sort(ev.data(), ev.data() + 3);
    return ev;
  }
  // Closed-form trigonometric solution of the characteristic cubic.
  const double q = K.trace() / 3.0;
  const double p2 = (K(0, 0) - q) * (K(0, 0) - q) + (K(1, 1) - q) * (K(1, 1) - q) +
                    (K(2, 2) - q) * (K(2, 2) - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  const Mat3 b = (K - q * Mat3::Identity()) / p;
  const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e_hi = q + 2.0 * p * std::cos(phi);
  const double e_lo = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  ev << e_lo, 3.0 * q - e_hi - e_lo, e_hi;

  // Residual check on the characteristic polynomial; fall back to Jacobi.
  const double scale = std::max(K.cwiseAbs().maxCoeff(), 1e-300);
  for (int i = 0; i < 3; ++i) {
    const double det = (K - ev[i] * Mat3::Identity()).determinant();
    if (!std::isfinite(det) || std::abs(det) > 1e-10 * scale * scale * scale) {
      return jacobi_eigenvalues(K);
    }
  }
  std::sort(ev.data(), ev.data() + 3);
  return ev;
}

double spectral_radius(const Mat3& K) {
  const auto ev = symmetric_eigenvalues(K);
  return std::max(std::abs(ev[0]), std::abs(ev[2]));
}

CellProperties upscale_cell(std::span<const CellFractureData> data, double k_matrix,
                            double phi_matrix, double cell_volume, bool strict_fracture_porosity) {
  if (!(k_matrix > 0.0)) throw std::invalid_argument("matrix permeability must be positive");
  if (!(phi_matrix > 0.0 && phi_matrix < 1.0)) throw std::invalid_argument("matrix porosity must lie in (0, 1)");
  CellProperties props;
  props.is_fracture = !data.empty();
  double v_fracture = 0.0;
  for (const auto& d : data) v_fracture += d.volume;
  props.phi_f = v_fracture / cell_volume;
  if (props.phi_f >= 1.0) {
    throw std::domain_error("fracture porosity " + std::to_string(props.phi_f) +
                            " >= 1: fracture volume exceeds cell volume");
  }
  const double k_fracture = data.empty() ? 0.0 : spectral_radius(cell_permeability_tensor(data));
  props.k = (1.0 - props.phi_f) * k_matrix + k_fracture;
  if (strict_fracture_porosity && props.phi_f > 0.0) {
    props.phi = props.phi_f;
  } else {
    props.phi = props.phi_f + (1.0 - props.phi_f) * phi_matrix;
  }
  return props;
}

PropertyField upscale_mesh(const OctreeMesh& mesh, const FractureNetwork& network,
                           const UpscaleOptions& options) {
  const auto polys = network_polygons(network, options.polygon_vertices);
  PropertyField field;
  const auto& cells = mesh.cells();
  field.cells.resize(cells.size());
  std::vector<int> dropped(cells.size(), 0);
  parallel_for(cells.size(), [&](std::size_t i) {
    const Cell& c = cells[i];
    std::vector<CellFractureData> data;
    if (c.is_fracture) data = cell_fracture_data(c.box, c.fracture_ids, network, polys, &dropped[i]);
    field.cells[i] = upscale_cell(data, options.k_matrix, options.phi_matrix, c.volume(),
                                  options.strict_fracture_porosity);
  });

  auto& s = field.summary;
  if (cells.empty()) return field;
  s.k_min = s.k_max = field.cells[0].k;
  s.phi_min = s.phi_max = field.cells[0].phi;
  double volume = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& p = field.cells[i];
    const double v = cells[i].volume();
    s.k_min = std::min(s.k_min, p.k);
    s.k_max = std::max(s.k_max, p.k);
    s.phi_min = std::min(s.phi_min, p.phi);
    s.phi_max = std::max(s.phi_max, p.phi);
    s.k_mean += p.k * v;
    s.phi_mean += p.phi * v;
    s.fracture_volume += p.phi_f * v;
    volume += v;
    if (p.is_fracture) ++s.fracture_cells;
    s.dropped_fractures += dropped[i];
  }
  s.k_mean /= volume;
  s.phi_mean /= volume;
  if (s.dropped_fractures > 0) {
    std::clog << "udfm: warning: " << s.dropped_fractures
              << " tagged fracture/cell pairs had empty clips and were skipped\n";
  }
  return field;
}

}  // namespace udfm
