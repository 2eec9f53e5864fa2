#include "udfm/topology.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "udfm/union_find.hpp"

namespace udfm {

namespace {

std::uint64_t pair_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

bool IntersectionGraph::has_edge(int a, int b) const {
  if (a > b) std::swap(a, b);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(a, b));
}

std::vector<std::vector<int>> IntersectionGraph::adjacency() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(num_nodes()));
  for (const auto& [a, b] : edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  return adj;
}

IntersectionGraph build_intersection_graph(const FractureNetwork& network,
                                           const GraphOptions& options) {
  IntersectionGraph g;
  const auto& fr = network.fractures;
  g.num_fractures = static_cast<int>(fr.size());
  const Box& dom = network.domain;

  // Sweep over bounding-sphere x extents to prune the all-pairs test.
  std::vector<int> order(fr.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double la = fr[static_cast<std::size_t>(a)].center.x() - fr[static_cast<std::size_t>(a)].radius;
    const double lb = fr[static_cast<std::size_t>(b)].center.x() - fr[static_cast<std::size_t>(b)].radius;
    return la < lb || (la == lb && a < b);
  });
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const Fracture& fi = fr[static_cast<std::size_t>(order[oi])];
    const double hi = fi.center.x() + fi.radius;
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const Fracture& fj = fr[static_cast<std::size_t>(order[oj])];
      if (fj.center.x() - fj.radius > hi) break;
      if ((fi.center - fj.center).norm() > fi.radius + fj.radius) continue;
      const bool hit = options.clip_to_domain ? discs_intersect_in_box(fi, fj, dom, options.eps)
                                              : discs_intersect(fi, fj, options.eps);
      if (hit) g.edges.emplace_back(std::min(order[oi], order[oj]), std::max(order[oi], order[oj]));
    }
  }

  const double tol = 1e-9 * dom.extent().maxCoeff();
  for (std::size_t i = 0; i < fr.size(); ++i) {
    const auto clipped = clip_polygon_to_box(disc_to_polygon(fr[i], options.polygon_vertices), dom);
    if (polygon_area(clipped) <= 0.0) continue;
    double xmin = clipped.vertices.front().x();
    double xmax = xmin;
    for (const auto& v : clipped.vertices) {
      xmin = std::min(xmin, v.x());
      xmax = std::max(xmax, v.x());
    }
    if (xmin <= dom.min.x() + tol) g.edges.emplace_back(static_cast<int>(i), g.source());
    if (xmax >= dom.max.x() - tol) g.edges.emplace_back(static_cast<int>(i), g.sink());
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

bool dfn_percolates(const IntersectionGraph& graph) {
  UnionFind uf(static_cast<std::size_t>(graph.num_nodes()));
  for (const auto& [a, b] : graph.edges) uf.unite(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  return uf.connected(static_cast<std::size_t>(graph.source()), static_cast<std::size_t>(graph.sink()));
}

IsolatedRemoval remove_isolated(const FractureNetwork& network, const IntersectionGraph& graph) {
  UnionFind uf(static_cast<std::size_t>(graph.num_nodes()));
  for (const auto& [a, b] : graph.edges) uf.unite(static_cast<std::size_t>(a), static_cast<std::size_t>(b));

  IsolatedRemoval out;
  out.network.domain = network.domain;
  out.network.params = network.params;
  out.n_total = static_cast<std::int64_t>(network.size());
  const auto src = static_cast<std::size_t>(graph.source());
  const auto snk = static_cast<std::size_t>(graph.sink());
  if (uf.connected(src, snk)) {
    const std::size_t root = uf.find(src);
    for (std::size_t i = 0; i < network.size(); ++i) {
      if (uf.find(i) != root) continue;
      Fracture f = network.fractures[i];
      out.kept_original_ids.push_back(f.id);
      f.id = static_cast<int>(out.network.fractures.size());
      out.network.fractures.push_back(f);
    }
  }
  out.n_retained = static_cast<std::int64_t>(out.network.size());
  return out;
}

FalseConnectionReport count_false_connections(std::span<const std::vector<int>> cell_fracture_map,
                                              const IntersectionGraph& graph,
                                              std::int64_t total_cells,
                                              std::uint64_t equivalent_cells) {
  std::unordered_set<std::uint64_t> edge_set;
  edge_set.reserve(graph.edges.size() * 2);
  for (const auto& [a, b] : graph.edges) edge_set.insert(pair_key(a, b));

  FalseConnectionReport r;
  std::unordered_set<std::uint64_t> false_pairs;
  for (const auto& ids : cell_fracture_map) {
    if (ids.empty()) continue;
    ++r.total_fracture_cells;
    bool cell_has_false = false;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        const std::uint64_t key = pair_key(ids[i], ids[j]);
        if (edge_set.contains(key)) continue;
        ++r.num_false_incidences;
        false_pairs.insert(key);
        cell_has_false = true;
      }
    }
    if (cell_has_false) ++r.cells_with_false;
  }
  r.num_false_pairs = static_cast<std::int64_t>(false_pairs.size());
  r.total_cells = total_cells;
  r.equivalent_cells = equivalent_cells;
  r.fc_over_vc = total_cells > 0 ? 100.0 * static_cast<double>(r.cells_with_false) / static_cast<double>(total_cells) : 0.0;
  r.vc_over_n = equivalent_cells > 0 ? 100.0 * static_cast<double>(total_cells) / static_cast<double>(equivalent_cells) : 0.0;
  return r;
}

FalseConnectionReport count_false_connections(const OctreeMesh& mesh,
                                              const IntersectionGraph& graph,
                                              std::uint64_t equivalent_cells) {
  std::vector<std::vector<int>> map;
  map.reserve(mesh.size());
  for (const auto& c : mesh.cells()) {
    if (c.is_fracture) map.push_back(c.fracture_ids);
  }
  return count_false_connections(map, graph, static_cast<std::int64_t>(mesh.size()), equivalent_cells);
}

namespace {

template <typename IsFracture>
bool percolates_impl(const OctreeMesh& mesh, IsFracture&& is_fracture) {
  const std::size_t n = mesh.size();
  UnionFind uf(n + 2);
  const std::size_t src = n;
  const std::size_t snk = n + 1;
  std::vector<int> nbrs;
  for (const auto& c : mesh.cells()) {
    if (!is_fracture(c.id)) continue;
    const auto id = static_cast<std::size_t>(c.id);
    if (mesh.touches(c, BoundaryPlane::XMin)) uf.unite(id, src);
    if (mesh.touches(c, BoundaryPlane::XMax)) uf.unite(id, snk);
    for (int axis = 0; axis < 3; ++axis) {
      nbrs.clear();
      mesh.face_neighbors(c.id, axis, +1, nbrs);
      for (int nb : nbrs) {
        if (is_fracture(nb)) uf.unite(id, static_cast<std::size_t>(nb));
      }
    }
  }
  return uf.connected(src, snk);
}

}  // namespace

bool mesh_percolates(const OctreeMesh& mesh, std::span<const CellProperties> props) {
  return percolates_impl(mesh, [&](int i) { return props[static_cast<std::size_t>(i)].is_fracture; });
}

bool mesh_percolates(const OctreeMesh& mesh) {
  return percolates_impl(mesh, [&](int i) { return mesh.cells()[static_cast<std::size_t>(i)].is_fracture; });
}

}  // namespace udfm
