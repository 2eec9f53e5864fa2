#include "udfm/octree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "udfm/parallel.hpp"

namespace udfm {

namespace {

std::uint64_t pack_key(int level, const std::array<int, 3>& ijk) {
  return (static_cast<std::uint64_t>(level) << 60) | (static_cast<std::uint64_t>(ijk[0]) << 40) |
         (static_cast<std::uint64_t>(ijk[1]) << 20) | static_cast<std::uint64_t>(ijk[2]);
}

std::vector<int> tag_child(const Box& box, const std::vector<int>& candidates,
                           std::span<const PlanarPolygon> polygons) {
  std::vector<int> ids;
  for (int fid : candidates) {
    if (polygon_intersects_box(polygons[static_cast<std::size_t>(fid)], box)) ids.push_back(fid);
  }
  return ids;
}

// Splits every marked cell into its 8 children in place of the parent.
void split_marked(OctreeMesh& mesh, const std::vector<char>& marked,
                  std::span<const PlanarPolygon> polygons) {
  const auto& old_cells = mesh.cells();
  std::vector<std::size_t> offset(old_cells.size() + 1, 0);
  for (std::size_t i = 0; i < old_cells.size(); ++i) offset[i + 1] = offset[i] + (marked[i] ? 8 : 1);

  std::vector<Cell> next(offset.back());
  parallel_for(old_cells.size(), [&](std::size_t i) {
    const Cell& parent = old_cells[i];
    if (!marked[i]) {
      next[offset[i]] = parent;
      return;
    }
    std::size_t slot = offset[i];
    for (int dz = 0; dz < 2; ++dz) {
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          Cell child;
          child.level = parent.level + 1;
          child.ijk = {2 * parent.ijk[0] + dx, 2 * parent.ijk[1] + dy, 2 * parent.ijk[2] + dz};
          child.box = mesh.cell_box(child.level, child.ijk);
          child.fracture_ids = tag_child(child.box, parent.fracture_ids, polygons);
          child.is_fracture = !child.fracture_ids.empty();
          next[slot++] = std::move(child);
        }
      }
    }
  });
  mesh.cells() = std::move(next);
  mesh.reindex();
}

}  // namespace

OctreeMesh::OctreeMesh(const Box& domain, double base_edge, std::array<int, 3> base_counts)
    : domain_(domain), base_edge_(base_edge), base_counts_(base_counts) {}

double OctreeMesh::edge_at(int level) const { return std::ldexp(base_edge_, -level); }

int OctreeMesh::max_level() const {
  int m = 0;
  for (const auto& c : cells_) m = std::max(m, c.level);
  return m;
}

Box OctreeMesh::cell_box(int level, const std::array<int, 3>& ijk) const {
  const double h = edge_at(level);
  Box b;
  for (int k = 0; k < 3; ++k) {
    b.min[k] = domain_.min[k] + ijk[k] * h;
    b.max[k] = domain_.min[k] + (ijk[k] + 1) * h;
  }
  return b;
}

void OctreeMesh::reindex() {
  index_.clear();
  index_.reserve(cells_.size() * 2);
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    cells_[i].id = static_cast<int>(i);
    index_.emplace(pack_key(cells_[i].level, cells_[i].ijk), static_cast<int>(i));
  }
}

int OctreeMesh::find_leaf(int level, const std::array<int, 3>& ijk) const {
  const auto it = index_.find(pack_key(level, ijk));
  return it == index_.end() ? -1 : it->second;
}

bool OctreeMesh::touches(const Cell& c, BoundaryPlane plane) const {
  const int axis = static_cast<int>(plane) / 2;
  const bool upper = static_cast<int>(plane) % 2 == 1;
  if (!upper) return c.ijk[axis] == 0;
  return c.ijk[axis] == (base_counts_[axis] << c.level) - 1;
}

void OctreeMesh::collect_finer(int level, const std::array<int, 3>& ijk, int axis, int side,
                               std::vector<int>& out) const {
  const int child_level = level + 1;
  if (child_level > 30) throw std::logic_error("octree neighbour search exceeded depth limit");
  const int a1 = (axis + 1) % 3;
  const int a2 = (axis + 2) % 3;
  // The contact face lies on the side of the region facing the querying cell.
  const int along = side > 0 ? 0 : 1;
  for (int p = 0; p < 2; ++p) {
    for (int q = 0; q < 2; ++q) {
      std::array<int, 3> c{};
      c[axis] = 2 * ijk[axis] + along;
      c[a1] = 2 * ijk[a1] + p;
      c[a2] = 2 * ijk[a2] + q;
      const int leaf = find_leaf(child_level, c);
      if (leaf >= 0) {
        out.push_back(leaf);
      } else {
        collect_finer(child_level, c, axis, side, out);
      }
    }
  }
}

bool OctreeMesh::face_neighbors(int cell, int axis, int side, std::vector<int>& out) const {
  const Cell& c = cells_[static_cast<std::size_t>(cell)];
  std::array<int, 3> adj = c.ijk;
  adj[axis] += side;
  if (adj[axis] < 0 || adj[axis] >= (base_counts_[axis] << c.level)) return false;

  const int same = find_leaf(c.level, adj);
  if (same >= 0) {
    out.push_back(same);
    return true;
  }
  for (int lv = c.level - 1; lv >= 0; --lv) {
    const int shift = c.level - lv;
    const int coarse = find_leaf(lv, {adj[0] >> shift, adj[1] >> shift, adj[2] >> shift});
    if (coarse >= 0) {
      out.push_back(coarse);
      return true;
    }
  }
  collect_finer(c.level, adj, axis, side, out);
  return true;
}

OctreeMesh build_initial_grid(const Box& domain, double l) {
  if (!(l > 0.0) || !domain.valid()) throw std::invalid_argument("invalid domain or cell edge");
  std::array<int, 3> counts{};
  for (int k = 0; k < 3; ++k) {
    const double ratio = domain.extent()[k] / l;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
      throw std::invalid_argument("domain extent is not an integer multiple of the cell edge");
    }
    counts[k] = static_cast<int>(rounded);
  }
  OctreeMesh mesh(domain, l, counts);
  auto& cells = mesh.cells();
  cells.reserve(static_cast<std::size_t>(counts[0]) * counts[1] * counts[2]);
  for (int k = 0; k < counts[2]; ++k) {
    for (int j = 0; j < counts[1]; ++j) {
      for (int i = 0; i < counts[0]; ++i) {
        Cell c;
        c.level = 0;
        c.ijk = {i, j, k};
        c.box = mesh.cell_box(0, c.ijk);
        cells.push_back(std::move(c));
      }
    }
  }
  mesh.reindex();
  return mesh;
}

std::vector<PlanarPolygon> network_polygons(const FractureNetwork& network, int polygon_vertices) {
  std::vector<PlanarPolygon> polys;
  polys.reserve(network.size());
  for (const auto& f : network.fractures) polys.push_back(disc_to_polygon(f, polygon_vertices));
  return polys;
}

void tag_fracture_cells(OctreeMesh& mesh, std::span<const PlanarPolygon> polygons) {
  auto& cells = mesh.cells();
  for (auto& c : cells) {
    c.fracture_ids.clear();
    c.is_fracture = false;
  }
  // Candidate cells per fracture from the polygon bounding box, at each
  // cell's own level; then exact positive-area tests.
  std::vector<std::vector<int>> candidates(cells.size());
  const Box& dom = mesh.domain();
  for (std::size_t fid = 0; fid < polygons.size(); ++fid) {
    const auto& poly = polygons[fid];
    if (poly.empty()) continue;
    Vec3 lo = poly.vertices.front();
    Vec3 hi = lo;
    for (const auto& v : poly.vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    if ((hi.array() < dom.min.array()).any() || (lo.array() > dom.max.array()).any()) continue;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      const Box& b = cells[ci].box;
      if ((b.max.array() < lo.array()).any() || (b.min.array() > hi.array()).any()) continue;
      candidates[ci].push_back(static_cast<int>(fid));
    }
  }
  parallel_for(cells.size(), [&](std::size_t ci) {
    cells[ci].fracture_ids = tag_child(cells[ci].box, candidates[ci], polygons);
    cells[ci].is_fracture = !cells[ci].fracture_ids.empty();
  });
}

void tag_fracture_cells(OctreeMesh& mesh, const FractureNetwork& network, int polygon_vertices) {
  const auto polys = network_polygons(network, polygon_vertices);
  tag_fracture_cells(mesh, polys);
}

OctreeMesh refine(const OctreeMesh& input, std::span<const PlanarPolygon> polygons, int orl,
                  bool balance) {
  if (orl < 0) throw std::invalid_argument("orl must be non-negative");
  OctreeMesh mesh = input;
  mesh.faces().clear();
  std::vector<int> nbrs;
  for (int pass = 0; pass < orl; ++pass) {
    std::vector<char> marked(mesh.size(), 0);
    for (const auto& c : mesh.cells()) {
      if (!c.is_fracture) continue;
      marked[static_cast<std::size_t>(c.id)] = 1;
      for (int axis = 0; axis < 3; ++axis) {
        for (int side : {-1, 1}) {
          nbrs.clear();
          mesh.face_neighbors(c.id, axis, side, nbrs);
          for (int n : nbrs) marked[static_cast<std::size_t>(n)] = 1;
        }
      }
    }
    split_marked(mesh, marked, polygons);
  }
  if (balance) {
    for (;;) {
      std::vector<char> marked(mesh.size(), 0);
      bool any = false;
      for (const auto& c : mesh.cells()) {
        for (int axis = 0; axis < 3 && !marked[static_cast<std::size_t>(c.id)]; ++axis) {
          for (int side : {-1, 1}) {
            nbrs.clear();
            mesh.face_neighbors(c.id, axis, side, nbrs);
            const bool deep = std::any_of(nbrs.begin(), nbrs.end(), [&](int n) {
              return mesh.cells()[static_cast<std::size_t>(n)].level > c.level + 1;
            });
            if (deep) {
              marked[static_cast<std::size_t>(c.id)] = 1;
              any = true;
              break;
            }
          }
        }
      }
      if (!any) break;
      split_marked(mesh, marked, polygons);
    }
  }
  return mesh;
}

OctreeMesh refine(const OctreeMesh& mesh, const FractureNetwork& network, int orl, bool balance,
                  int polygon_vertices) {
  const auto polys = network_polygons(network, polygon_vertices);
  return refine(mesh, polys, orl, balance);
}

void build_face_adjacency(OctreeMesh& mesh, bool require_balance) {
  auto& faces = mesh.faces();
  faces.clear();
  std::vector<int> nbrs;
  for (const auto& c : mesh.cells()) {
    const double h = c.edge();
    for (int axis = 0; axis < 3; ++axis) {
      for (int side : {-1, 1}) {
        nbrs.clear();
        const bool interior = mesh.face_neighbors(c.id, axis, side, nbrs);
        if (!interior) {
          Face f;
          f.cell_a = c.id;
          f.plane = boundary_plane(axis, side);
          f.axis = axis;
          f.area = h * h;
          f.d_a = 0.5 * h;
          faces.push_back(f);
          continue;
        }
        if (side < 0) continue;  // interior contacts are emitted from the lower side
        for (int n : nbrs) {
          const Cell& nb = mesh.cells()[static_cast<std::size_t>(n)];
          if (require_balance && std::abs(nb.level - c.level) > 1) {
            throw std::logic_error("unbalanced octree: face joins levels " +
                                   std::to_string(c.level) + " and " + std::to_string(nb.level));
          }
          const double hn = nb.edge();
          Face f;
          f.cell_a = c.id;
          f.cell_b = n;
          f.axis = axis;
          f.area = std::min(h, hn) * std::min(h, hn);
          f.d_a = 0.5 * h;
          f.d_b = 0.5 * hn;
          faces.push_back(f);
        }
      }
    }
  }
}

std::uint64_t equivalent_hex_count(double L, double l, int orl) {
  if (orl < 0) throw std::invalid_argument("orl must be non-negative");
  const double divisions = std::round(std::ldexp(L / l, orl));
  const auto per_axis = static_cast<std::uint64_t>(divisions) + 1;
  return per_axis * per_axis * per_axis;
}

OctreeMesh build_mesh(const FractureNetwork& network, const MeshParams& params) {
  const auto polys = network_polygons(network, params.polygon_vertices);
  OctreeMesh mesh = build_initial_grid(network.domain, params.l);
  tag_fracture_cells(mesh, polys);
  mesh = refine(mesh, polys, params.orl, params.balance_2to1);
  build_face_adjacency(mesh, params.balance_2to1);
  return mesh;
}

}  // namespace udfm
