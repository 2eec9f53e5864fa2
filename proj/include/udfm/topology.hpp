#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "udfm/network.hpp"
#include "udfm/octree.hpp"
#include "udfm/upscaling.hpp"

namespace udfm {

/// Fracture intersection graph with virtual inflow/outflow nodes.
/// Fracture i is node i; SOURCE is node n, SINK is node n + 1.
struct IntersectionGraph {
  int num_fractures = 0;
  std::vector<std::pair<int, int>> edges;  // i < j, sorted, unique

  int source() const { return num_fractures; }
  int sink() const { return num_fractures + 1; }
  int num_nodes() const { return num_fractures + 2; }
  bool has_edge(int a, int b) const;
  std::vector<std::vector<int>> adjacency() const;
};

struct GraphOptions {
  double eps = kDefaultIntersectionEps;
  /// Only count intersections whose chord overlap lies inside the domain.
  bool clip_to_domain = true;
  int polygon_vertices = kDefaultPolygonVertices;
};

IntersectionGraph build_intersection_graph(const FractureNetwork& network,
                                           const GraphOptions& options = {});

/// SOURCE and SINK connected.
bool dfn_percolates(const IntersectionGraph& graph);

struct IsolatedRemoval {
  FractureNetwork network;            // renumbered 0..n_hat-1
  std::vector<int> kept_original_ids;
  std::int64_t n_total = 0;
  std::int64_t n_retained = 0;

  double retained_fraction() const {
    return n_total == 0 ? 0.0 : static_cast<double>(n_retained) / static_cast<double>(n_total);
  }
};

/// Keeps the fractures of components touching both SOURCE and SINK.
IsolatedRemoval remove_isolated(const FractureNetwork& network, const IntersectionGraph& graph);

struct FalseConnectionReport {
  std::int64_t num_false_pairs = 0;       // #f, each pair once network-wide
  std::int64_t num_false_incidences = 0;  // pair-cell incidences
  std::int64_t cells_with_false = 0;      // fc
  std::int64_t total_fracture_cells = 0;
  std::int64_t total_cells = 0;           // vc
  std::uint64_t equivalent_cells = 0;     // n
  double fc_over_vc = 0.0;                // percent
  double vc_over_n = 0.0;                 // percent

  /// #f as reported: unique pairs, or incidences when `per_cell_pairs`.
  std::int64_t reported_false(bool per_cell_pairs) const {
    return per_cell_pairs ? num_false_incidences : num_false_pairs;
  }
};

/// `cell_fracture_map[c]` lists the fractures in fracture cell c (ascending).
FalseConnectionReport count_false_connections(std::span<const std::vector<int>> cell_fracture_map,
                                              const IntersectionGraph& graph,
                                              std::int64_t total_cells,
                                              std::uint64_t equivalent_cells = 0);

FalseConnectionReport count_false_connections(const OctreeMesh& mesh,
                                              const IntersectionGraph& graph,
                                              std::uint64_t equivalent_cells = 0);

/// Face-connected fracture cells join the x-min and x-max domain faces.
bool mesh_percolates(const OctreeMesh& mesh, std::span<const CellProperties> props);

/// Same query on the mesh's own fracture tags.
bool mesh_percolates(const OctreeMesh& mesh);

}  // namespace udfm
