#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "udfm/geometry.hpp"
#include "udfm/network.hpp"
#include "udfm/types.hpp"

namespace udfm {

struct MeshParams {
  double l = 5.0;  // initial (coarsest) cell edge, m
  int orl = 0;     // octree refinement levels
  bool balance_2to1 = true;
  int polygon_vertices = kDefaultPolygonVertices;

  bool operator==(const MeshParams&) const = default;
};

enum class BoundaryPlane : std::int8_t { None = -1, XMin = 0, XMax = 1, YMin = 2, YMax = 3, ZMin = 4, ZMax = 5 };

inline BoundaryPlane boundary_plane(int axis, int side) {
  return static_cast<BoundaryPlane>(2 * axis + (side > 0 ? 1 : 0));
}

/// Leaf hexahedron. `ijk` are integer coordinates at the cell's own level.
struct Cell {
  int id = 0;
  int level = 0;
  std::array<int, 3> ijk{0, 0, 0};
  Box box;
  bool is_fracture = false;
  std::vector<int> fracture_ids;  // ascending

  double volume() const { return box.volume(); }
  double edge() const { return box.extent().x(); }
};

inline constexpr int kBoundaryCell = -1;

/// Planar contact between two leaves (or a leaf and the domain boundary).
struct Face {
  int cell_a = 0;
  int cell_b = kBoundaryCell;
  BoundaryPlane plane = BoundaryPlane::None;  // set for boundary faces only
  int axis = 0;                               // normal axis; normal points a -> b
  double area = 0.0;
  double d_a = 0.0;  // perpendicular distance cell_a center -> face plane
  double d_b = 0.0;

  bool is_boundary() const { return cell_b == kBoundaryCell; }
};

class OctreeMesh {
 public:
  OctreeMesh() = default;
  OctreeMesh(const Box& domain, double base_edge, std::array<int, 3> base_counts);

  const Box& domain() const { return domain_; }
  double base_edge() const { return base_edge_; }
  const std::array<int, 3>& base_counts() const { return base_counts_; }
  double edge_at(int level) const;
  int max_level() const;

  std::vector<Cell>& cells() { return cells_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<Face>& faces() const { return faces_; }
  std::vector<Face>& faces() { return faces_; }
  std::size_t size() const { return cells_.size(); }

  /// Leaf id at exactly (level, ijk), or -1.
  int find_leaf(int level, const std::array<int, 3>& ijk) const;

  /// Leaves sharing a positive-area face with `cell` on side `side` (+1/-1)
  /// of `axis`. Returns false when that side is the domain boundary.
  bool face_neighbors(int cell, int axis, int side, std::vector<int>& out) const;

  bool touches(const Cell& c, BoundaryPlane plane) const;

  /// Renumbers ids in storage order and rebuilds the lookup index.
  void reindex();

  Box cell_box(int level, const std::array<int, 3>& ijk) const;

 private:
  void collect_finer(int level, const std::array<int, 3>& ijk, int axis, int side,
                     std::vector<int>& out) const;

  Box domain_;
  double base_edge_ = 1.0;
  std::array<int, 3> base_counts_{1, 1, 1};
  std::vector<Cell> cells_;
  std::vector<Face> faces_;
  std::unordered_map<std::uint64_t, int> index_;
};

/// Uniform level-0 grid with edge l; every domain extent must be a multiple of l.
OctreeMesh build_initial_grid(const Box& domain, double l);

/// Tags every leaf whose box meets a fracture polygon with positive area.
/// `polygons[i]` belongs to fracture id i.
void tag_fracture_cells(OctreeMesh& mesh, std::span<const PlanarPolygon> polygons);
void tag_fracture_cells(OctreeMesh& mesh, const FractureNetwork& network,
                        int polygon_vertices = kDefaultPolygonVertices);

/// `orl` passes splitting fracture cells and their face neighbours, then
/// optional 2:1 face balancing. Children are retagged from the parent's list.
OctreeMesh refine(const OctreeMesh& mesh, std::span<const PlanarPolygon> polygons, int orl,
                  bool balance);
OctreeMesh refine(const OctreeMesh& mesh, const FractureNetwork& network, int orl, bool balance,
                  int polygon_vertices = kDefaultPolygonVertices);

/// Populates mesh.faces(). Throws std::logic_error if `require_balance`
/// and some face joins leaves more than one level apart.
void build_face_adjacency(OctreeMesh& mesh, bool require_balance);

/// (L / dx + 1)^3 with dx = l / 2^orl.
std::uint64_t equivalent_hex_count(double L, double l, int orl);

/// Initial grid + tagging + refinement + faces in one call.
OctreeMesh build_mesh(const FractureNetwork& network, const MeshParams& params);

std::vector<PlanarPolygon> network_polygons(const FractureNetwork& network, int polygon_vertices);

}  // namespace udfm
