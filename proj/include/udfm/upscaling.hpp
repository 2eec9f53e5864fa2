#pragma once

#include <span>
#include <vector>

#include "udfm/geometry.hpp"
#include "udfm/network.hpp"
#include "udfm/octree.hpp"
#include "udfm/types.hpp"

namespace udfm {

/// Upscaled hydraulic properties of one control volume.
struct CellProperties {
  double k = 0.0;        // scalar permeability, m^2
  double phi = 0.0;      // total porosity
  bool is_fracture = false;
  double phi_f = 0.0;    // fracture porosity
};

/// Geometry of one fracture restricted to one cell.
struct CellFractureData {
  int fracture_id = 0;
  double area = 0.0;      // a_f, m^2
  double aperture = 0.0;  // b_f, m
  double volume = 0.0;    // v_f = a_f b_f, m^3
  double porosity = 0.0;  // v_f / v_c
  Vec3 normal = Vec3::UnitZ();
};

struct UpscaleOptions {
  double k_matrix = 1e-16;
  double phi_matrix = 0.01;
  /// Fracture cells get phi = phi_F instead of the matrix blend.
  bool strict_fracture_porosity = false;
  int polygon_vertices = kDefaultPolygonVertices;

  bool operator==(const UpscaleOptions&) const = default;
};

struct UpscaleSummary {
  double k_min = 0.0, k_max = 0.0, k_mean = 0.0;
  double phi_min = 0.0, phi_max = 0.0, phi_mean = 0.0;
  double fracture_volume = 0.0;  // sum of phi_F v_c
  int fracture_cells = 0;
  int dropped_fractures = 0;     // tagged but empty after clipping
};

struct PropertyField {
  std::vector<CellProperties> cells;
  UpscaleSummary summary;
};

/// I - n n^T.
Mat3 transformation_tensor(const Vec3& normal);

/// Per-fracture clip data inside `cell`. Fractures whose clip is empty are
/// skipped and counted in `dropped` (when non-null).
std::vector<CellFractureData> cell_fracture_data(const Box& cell, std::span<const int> fracture_ids,
                                                 const FractureNetwork& network,
                                                 std::span<const PlanarPolygon> polygons,
                                                 int* dropped = nullptr);

/// (1/12) sum phi_f A_f b_f^2.
Mat3 cell_permeability_tensor(std::span<const CellFractureData> data);

/// Largest absolute eigenvalue of a symmetric 3x3 tensor.
double spectral_radius(const Mat3& K);

/// Eigenvalues of a symmetric 3x3 tensor in ascending order.
Eigen::Vector3d symmetric_eigenvalues(const Mat3& K);

CellProperties upscale_cell(std::span<const CellFractureData> data, double k_matrix,
                            double phi_matrix, double cell_volume,
                            bool strict_fracture_porosity = false);

PropertyField upscale_mesh(const OctreeMesh& mesh, const FractureNetwork& network,
                           const UpscaleOptions& options);

}  // namespace udfm
