// SPDX-License-Identifier: Apache-2.0

#ifndef MLSG_MESH_HPP
#define MLSG_MESH_HPP

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "mlsg/common.hpp"

namespace mlsg {

namespace detail {
struct Refiner;
}

struct Vertex {
  double x = 0.0;
  double y = 0.0;
  bool on_boundary = false;
};

/// Triangle with the convention that the refinement edge is (v[0], v[1])
/// and v[2] is the newest vertex.
struct Element {
  std::array<int, 3> v{-1, -1, -1};
  int level = 0;
  int ancestor = 0;
};

/// Prospective bisection vertices, identified by their (sorted) parent-edge
/// vertex pair rather than by coordinates.
class MarkedVertexSet {
public:
  MarkedVertexSet() = default;
  explicit MarkedVertexSet(std::vector<Edge> edges) : edges_(std::move(edges)) {
    canonicalize();
  }

  void insert(const Edge& e) {
    edges_.push_back(e);
    canonicalize();
  }
  void merge(const MarkedVertexSet& other) {
    edges_.insert(edges_.end(), other.edges_.begin(), other.edges_.end());
    canonicalize();
  }

  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }
  bool contains(const Edge& e) const {
    return std::binary_search(edges_.begin(), edges_.end(), e);
  }

private:
  void canonicalize() {
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  }
  std::vector<Edge> edges_;
};

/// Conforming 2D triangulation under newest vertex bisection. Immutable after
/// construction; refinement operations return new meshes. A refined mesh
/// keeps the vertex ids of its source mesh and appends the new midpoints.
class Mesh {
public:
  Mesh() = default;

  static Mesh from_raw(std::vector<Vertex> vertices,
                       std::vector<Element> elements, int n_ancestors) {
    Mesh m;
    m.vertices_ = std::move(vertices);
    m.elements_ = std::move(elements);
    m.n_ancestors_ = n_ancestors;
    m.finalize();
    return m;
  }

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_elements() const { return static_cast<int>(elements_.size()); }
  int n_interior() const { return static_cast<int>(dof_vertex_.size()); }
  int n_ancestors() const { return n_ancestors_; }

  const Vertex& vertex(int i) const { return vertices_[i]; }
  const Element& element(int i) const { return elements_[i]; }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Element>& elements() const { return elements_; }

  Vec2 position(int vertex_id) const {
    return {vertices_[vertex_id].x, vertices_[vertex_id].y};
  }

  Triangle triangle(int element_id) const {
    const auto& e = elements_[element_id];
    return {{position(e.v[0]), position(e.v[1]), position(e.v[2])}};
  }

  double area(int element_id) const { return triangle(element_id).area(); }

  double total_area() const {
    double s = 0.0;
    for (int i = 0; i < n_elements(); ++i) s += area(i);
    return s;
  }

  /// Interior dof index for a vertex, or -1 on the boundary.
  int dof_of_vertex(int vertex_id) const { return interior_dof_[vertex_id]; }
  int vertex_of_dof(int dof) const { return dof_vertex_[dof]; }

  /// All mesh edges, sorted.
  const std::vector<Edge>& edges() const { return edges_; }
  bool is_boundary_edge(const Edge& e) const {
    auto it = edge_use_.find(e);
    return it != edge_use_.end() && it->second == 1;
  }
  bool has_edge(const Edge& e) const { return edge_use_.count(e) > 0; }

  /// For a mesh produced by refine()/uniform_refine(): vertex id of the
  /// midpoint created on a source-mesh edge, or -1 if that edge was kept.
  int midpoint_of_parent_edge(const Edge& e) const {
    auto it = parent_midpoints_.find(e);
    return it == parent_midpoints_.end() ? -1 : it->second;
  }
  const std::map<Edge, int>& parent_midpoints() const {
    return parent_midpoints_;
  }

  void dump(std::ostream& os) const {
    os << n_vertices() << ' ' << n_elements() << '\n';
    os.precision(17);
    for (const auto& v : vertices_) {
      os << v.x << ' ' << v.y << ' ' << (v.on_boundary ? 1 : 0) << '\n';
    }
    for (const auto& e : elements_) {
      os << e.v[0] << ' ' << e.v[1] << ' ' << e.v[2] << ' ' << e.level << ' '
         << e.ancestor << '\n';
    }
  }

  static Mesh parse(std::istream& is) {
    int nv = 0, ne = 0;
    if (!(is >> nv >> ne)) throw Error("mesh parse: bad header");
    std::vector<Vertex> vs(nv);
    for (auto& v : vs) {
      int flag = 0;
      if (!(is >> v.x >> v.y >> flag)) throw Error("mesh parse: bad vertex");
      v.on_boundary = flag != 0;
    }
    std::vector<Element> es(ne);
    int max_anc = 0;
    for (auto& e : es) {
      if (!(is >> e.v[0] >> e.v[1] >> e.v[2] >> e.level >> e.ancestor)) {
        throw Error("mesh parse: bad element");
      }
      max_anc = std::max(max_anc, e.ancestor);
    }
    return from_raw(std::move(vs), std::move(es), max_anc + 1);
  }

private:
  friend struct detail::Refiner;

  void finalize() {
    edge_use_.clear();
    for (const auto& el : elements_) {
      if (triangle_signed_area(el) <= 0.0) {
        throw Error("mesh: element with non-positive area");
      }
      for (int k = 0; k < 3; ++k) {
        const Edge e(el.v[k], el.v[(k + 1) % 3]);
        if (++edge_use_[e] > 2) throw Error("mesh: edge shared by >2 elements");
      }
    }
    edges_.clear();
    edges_.reserve(edge_use_.size());
    for (auto& v : vertices_) v.on_boundary = false;
    for (const auto& [e, uses] : edge_use_) {
      edges_.push_back(e);
      if (uses == 1) {
        vertices_[e.a].on_boundary = true;
        vertices_[e.b].on_boundary = true;
      }
    }
    std::sort(edges_.begin(), edges_.end());

    interior_dof_.assign(vertices_.size(), -1);
    dof_vertex_.clear();
    for (int i = 0; i < n_vertices(); ++i) {
      if (!vertices_[i].on_boundary) {
        interior_dof_[i] = static_cast<int>(dof_vertex_.size());
        dof_vertex_.push_back(i);
      }
    }
  }

  double triangle_signed_area(const Element& el) const {
    const Vec2 a = position(el.v[0]);
    const Vec2 b = position(el.v[1]);
    const Vec2 c = position(el.v[2]);
    return 0.5 * (b - a).cross(c - a);
  }

  std::vector<Vertex> vertices_;
  std::vector<Element> elements_;
  int n_ancestors_ = 0;

  std::vector<Edge> edges_;
  std::unordered_map<Edge, int, EdgeHash> edge_use_;
  std::vector<int> interior_dof_;
  std::vector<int> dof_vertex_;
  std::map<Edge, int> parent_midpoints_;
};

enum class Domain { unit_square, l_shape };

namespace detail {

/// Reorders element vertices so that the refinement edge (v0, v1) is the
/// longest edge, ties broken by lowest opposite-vertex id; preserves
/// orientation.
inline void assign_refinement_edge(const std::vector<Vertex>& vs, Element& el) {
  auto len2 = [&](int a, int b) {
    const double dx = vs[a].x - vs[b].x;
    const double dy = vs[a].y - vs[b].y;
    return dx * dx + dy * dy;
  };
  int best = 0;  // index of the opposite vertex of the chosen edge
  double best_len = -1.0;
  for (int k = 0; k < 3; ++k) {
    const double l = len2(el.v[(k + 1) % 3], el.v[(k + 2) % 3]);
    if (l > best_len + 1e-14 * (l + best_len) ||
        (std::abs(l - best_len) <= 1e-14 * (l + best_len) &&
         el.v[k] < el.v[best])) {
      best = k;
      best_len = l;
    }
  }
  // rotate so that the opposite vertex of the longest edge is v2
  const Element src = el;
  for (int k = 0; k < 3; ++k) el.v[k] = src.v[(best + 1 + k) % 3];
}

struct Refiner {
  std::vector<Vertex> verts;
  struct WElem {
    std::array<int, 3> v;
    int level;
    int ancestor;
    bool alive;
  };
  std::vector<WElem> elems;
  std::unordered_map<Edge, std::array<int, 2>, EdgeHash> edge_elems;
  std::map<Edge, int> midpoints;
  int n_parent_vertices = 0;

  explicit Refiner(const Mesh& m) {
    verts = m.vertices();
    n_parent_vertices = m.n_vertices();
    elems.reserve(m.n_elements() * 4);
    for (const auto& el : m.elements()) {
      elems.push_back({el.v, el.level, el.ancestor, true});
    }
    edge_elems.reserve(m.edges().size() * 4);
    for (int t = 0; t < static_cast<int>(elems.size()); ++t) link(t);
  }

  void link(int t) {
    for (int k = 0; k < 3; ++k) {
      const Edge e(elems[t].v[k], elems[t].v[(k + 1) % 3]);
      auto& slot =
          edge_elems.try_emplace(e, std::array<int, 2>{-1, -1}).first->second;
      if (slot[0] == -1) {
        slot[0] = t;
      } else if (slot[1] == -1) {
        slot[1] = t;
      } else {
        throw Error("refine: edge shared by >2 elements");
      }
    }
  }

  void unlink(int t) {
    for (int k = 0; k < 3; ++k) {
      auto it = edge_elems.find(Edge(elems[t].v[k], elems[t].v[(k + 1) % 3]));
      if (it == edge_elems.end()) continue;
      if (it->second[0] == t) it->second[0] = -1;
      if (it->second[1] == t) it->second[1] = -1;
      if (it->second[0] == -1 && it->second[1] == -1) edge_elems.erase(it);
    }
  }

  std::array<int, 2> elements_on(const Edge& e) const {
    auto it = edge_elems.find(e);
    if (it == edge_elems.end()) return {-1, -1};
    return it->second;
  }

  Edge refinement_edge(int t) const {
    return Edge(elems[t].v[0], elems[t].v[1]);
  }

  /// Bisects all live elements containing edge e. Recursive closure: an
  /// element whose refinement edge differs is first bisected at that edge.
  void bisect_edge(const Edge& e, int depth = 0) {
    if (depth > 4096) throw Error("refine: NVB closure did not terminate");
    if (midpoints.count(e)) return;
    for (;;) {
      const auto on = elements_on(e);
      if (on[0] == -1 && on[1] == -1) {
        throw Error("refine: edge is not part of the mesh");
      }
      int pending = -1;
      for (int t : on) {
        if (t != -1 && !(refinement_edge(t) == e)) {
          pending = t;
          break;
        }
      }
      if (pending == -1) {
        split(e, on);
        return;
      }
      bisect_edge(refinement_edge(pending), depth + 1);
    }
  }

  void split(const Edge& e, const std::array<int, 2>& on) {
    const bool boundary = (on[0] == -1) != (on[1] == -1);
    const int w = static_cast<int>(verts.size());
    verts.push_back({0.5 * (verts[e.a].x + verts[e.b].x),
                     0.5 * (verts[e.a].y + verts[e.b].y), boundary});
    midpoints.emplace(e, w);
    for (int t : on) {
      if (t == -1) continue;
      const WElem parent = elems[t];
      elems[t].alive = false;
      unlink(t);
      const int v0 = parent.v[0], v1 = parent.v[1], v2 = parent.v[2];
      const int c1 = static_cast<int>(elems.size());
      elems.push_back({{v2, v0, w}, parent.level + 1, parent.ancestor, true});
      const int c2 = static_cast<int>(elems.size());
      elems.push_back({{v1, v2, w}, parent.level + 1, parent.ancestor, true});
      link(c1);
      link(c2);
    }
  }

  Mesh finish(int n_ancestors) {
    std::vector<Element> out;
    out.reserve(elems.size());
    for (const auto& we : elems) {
      if (we.alive) out.push_back({we.v, we.level, we.ancestor});
    }
    Mesh m = Mesh::from_raw(std::move(verts), std::move(out), n_ancestors);
    // only source-mesh edges can have been split (see refine contract)
    std::map<Edge, int> parent_mids;
    for (const auto& [e, w] : midpoints) {
      if (e.a < n_parent_vertices && e.b < n_parent_vertices) {
        parent_mids.emplace(e, w);
      }
    }
    m.parent_midpoints_ = std::move(parent_mids);
    return m;
  }
};

}  // namespace detail

/// Coarsest conforming NVB refinement of `mesh` in which every edge of
/// `marked_edges` has been bisected.
inline Mesh refine_edges(const Mesh& mesh, const std::vector<Edge>& edges) {
  detail::Refiner r(mesh);
  for (const auto& e : edges) r.bisect_edge(e);
  Mesh out = r.finish(mesh.n_ancestors());
  return out;
}

inline Mesh make_initial_mesh(Domain domain, int n) {
  if (n < 1) throw Error("initial_mesh: grid parameter must be >= 1");
  if (domain == Domain::l_shape && n % 2 != 0) {
    throw Error("initial_mesh: L-shape needs an even grid parameter");
  }
  const double lo = domain == Domain::unit_square ? 0.0 : -1.0;
  const double hi = 1.0;
  const double h = (hi - lo) / n;

  std::vector<int> vid((n + 1) * (n + 1), -1);
  std::vector<Vertex> vertices;
  std::vector<Element> elements;
  auto keep_cell = [&](int i, int j) {
    if (domain == Domain::unit_square) return true;
    // drop cells inside (-1,0] x (-1,0]
    return !(lo + (i + 1) * h <= 1e-14 && lo + (j + 1) * h <= 1e-14);
  };
  auto vertex_at = [&](int i, int j) {
    int& id = vid[j * (n + 1) + i];
    if (id == -1) {
      id = static_cast<int>(vertices.size());
      vertices.push_back({lo + i * h, lo + j * h, false});
    }
    return id;
  };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!keep_cell(i, j)) continue;
      const int v00 = vertex_at(i, j);
      const int v10 = vertex_at(i + 1, j);
      const int v11 = vertex_at(i + 1, j + 1);
      const int v01 = vertex_at(i, j + 1);
      elements.push_back({{v11, v00, v10}, 0, 0});
      elements.push_back({{v00, v11, v01}, 0, 0});
    }
  }
  for (int t = 0; t < static_cast<int>(elements.size()); ++t) {
    elements[t].ancestor = t;
    detail::assign_refinement_edge(vertices, elements[t]);
  }
  return Mesh::from_raw(std::move(vertices), std::move(elements),
                        static_cast<int>(elements.size()));
}

/// One uniform NVB refinement: every edge bisected once, i.e. every element
/// replaced by 4 descendants of level +2.
inline Mesh uniform_refine(const Mesh& mesh) {
  return refine_edges(mesh, mesh.edges());
}

/// Interior edge midpoints that one uniform refinement would create.
inline MarkedVertexSet new_interior_vertices(const Mesh& mesh) {
  std::vector<Edge> interior;
  for (const auto& e : mesh.edges()) {
    if (!mesh.is_boundary_edge(e)) interior.push_back(e);
  }
  return MarkedVertexSet(std::move(interior));
}

/// Coarsest conforming NVB refinement containing all marked vertices.
inline Mesh refine(const Mesh& mesh, const MarkedVertexSet& marked) {
  for (const auto& e : marked.edges()) {
    if (!mesh.has_edge(e) || mesh.is_boundary_edge(e)) {
      throw Error("refine: marked vertex is not in N+ of the mesh");
    }
  }
  return refine_edges(mesh, marked.edges());
}

}  // namespace mlsg

#endif  // MLSG_MESH_HPP
