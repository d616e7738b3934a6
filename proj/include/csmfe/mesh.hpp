#pragma once

#include "csmfe/common.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <utility>
#include <vector>

namespace csmfe {

struct Edge {
  int v0 = -1, v1 = -1;  // v0 < v1; global tangent points v0 -> v1
  Vec2 tangent = Vec2::Zero();
  Vec2 normal = Vec2::Zero();  // tangent rotated by -90 degrees
  Vec2 midpoint = Vec2::Zero();
  double length = 0.0;
  bool boundary = false;
  std::array<int, 2> tris{-1, -1};
};

struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<Edge> edges;
  // tri_edges[t][i-1] is the global edge of local edge e_i (opposite vertex v_i)
  std::vector<std::array<int, 3>> tri_edges;
  double diameter = 0.0;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }

  // node ids for P2 displacement: vertices first, then one mid-node per edge
  int n_nodes() const { return n_vertices() + n_edges(); }
  Vec2 node(int n) const { return n < n_vertices() ? vertices[n] : edges[n - n_vertices()].midpoint; }

  // local edge i (1..3): start/end local vertex indices (0-based)
  static std::pair<int, int> local_edge_vertices(int i) {
    switch (i) {
      case 1: return {1, 2};
      case 2: return {2, 0};
      case 3: return {0, 1};
    }
    throw Error("local edge index must be 1, 2 or 3");
  }

  Vec2 local_tangent(int t, int i) const {
    auto [a, b] = local_edge_vertices(i);
    Vec2 d = vertices[triangles[t][b]] - vertices[triangles[t][a]];
    return d / d.norm();
  }
  Vec2 local_normal(int t, int i) const {
    Vec2 tt = local_tangent(t, i);
    return Vec2(tt.y(), -tt.x());
  }
  double local_edge_length(int t, int i) const { return edges[tri_edges[t][i - 1]].length; }

  // P2 node ids of triangle t in local order 1..6 (mid-nodes 4, 5, 6 sit on e3, e1, e2)
  std::array<int, 6> p2_nodes(int t) const {
    const auto& v = triangles[t];
    const auto& e = tri_edges[t];
    int nv = n_vertices();
    return {v[0], v[1], v[2], nv + e[2], nv + e[0], nv + e[1]};
  }
};

inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

inline Mat2 jacobian(const Mesh& m, int t) {
  if (t < 0 || t >= m.n_triangles()) throw Error("jacobian: triangle id out of range");
  const auto& v = m.triangles[t];
  Vec2 d2 = m.vertices[v[1]] - m.vertices[v[0]];
  Vec2 d3 = m.vertices[v[2]] - m.vertices[v[0]];
  Mat2 J;
  J << d2.x(), d3.x(), d2.y(), d3.y();
  return J;
}

inline Mesh build_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles) {
  Mesh m;
  m.vertices = std::move(vertices);
  m.triangles = std::move(triangles);
  const int nv = m.n_vertices();
  for (const auto& p : m.vertices)
    if (!std::isfinite(p.x()) || !std::isfinite(p.y())) throw Error("build_mesh: non-finite vertex coordinate");

  if (nv > 0) {
    Vec2 lo = m.vertices[0], hi = m.vertices[0];
    for (const auto& p : m.vertices) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    m.diameter = (hi - lo).norm();
  }

  std::set<std::array<int, 3>> seen;
  for (auto& tri : m.triangles) {
    for (int k = 0; k < 3; ++k)
      if (tri[k] < 0 || tri[k] >= nv) throw Error("build_mesh: triangle references invalid vertex id");
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw Error("build_mesh: triangle with repeated vertex");
    std::array<int, 3> key = tri;
    std::sort(key.begin(), key.end());
    if (!seen.insert(key).second) throw Error("build_mesh: duplicate triangle");
    double a = signed_area(m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
    if (a < 0) {
      std::swap(tri[1], tri[2]);
      a = -a;
    }
    if (a <= 1e-14 * m.diameter * m.diameter) throw Error("build_mesh: degenerate triangle");
  }

  std::map<std::pair<int, int>, int> lookup;
  m.tri_edges.resize(m.triangles.size());
  for (int t = 0; t < m.n_triangles(); ++t) {
    for (int i = 1; i <= 3; ++i) {
      auto [a, b] = Mesh::local_edge_vertices(i);
      int va = m.triangles[t][a], vb = m.triangles[t][b];
      std::pair<int, int> key{std::min(va, vb), std::max(va, vb)};
      auto it = lookup.find(key);
      int id;
      if (it == lookup.end()) {
        id = m.n_edges();
        lookup.emplace(key, id);
        Edge e;
        e.v0 = key.first;
        e.v1 = key.second;
        Vec2 d = m.vertices[e.v1] - m.vertices[e.v0];
        e.length = d.norm();
        if (e.length < 1e-10 * m.diameter) throw Error("build_mesh: edge shorter than 1e-10 x diameter");
        e.tangent = d / e.length;
        e.normal = Vec2(e.tangent.y(), -e.tangent.x());
        e.midpoint = 0.5 * (m.vertices[e.v0] + m.vertices[e.v1]);
        e.tris[0] = t;
        m.edges.push_back(e);
      } else {
        id = it->second;
        Edge& e = m.edges[id];
        if (e.tris[1] != -1) throw Error("build_mesh: non-conforming mesh (edge shared by more than two triangles)");
        e.tris[1] = t;
      }
      m.tri_edges[t][i - 1] = id;
    }
  }
  for (auto& e : m.edges) e.boundary = e.tris[1] == -1;

  // hanging nodes: a vertex lying inside a boundary edge
  std::vector<char> used(nv, 0);
  for (const auto& tri : m.triangles)
    for (int v : tri) used[v] = 1;
  for (const auto& e : m.edges) {
    if (!e.boundary) continue;
    const Vec2& a = m.vertices[e.v0];
    for (int v = 0; v < nv; ++v) {
      if (!used[v] || v == e.v0 || v == e.v1) continue;
      Vec2 d = m.vertices[v] - a;
      double along = d.dot(e.tangent);
      double off = std::abs(d.dot(e.normal));
      if (along > 1e-12 * e.length && along < e.length * (1 - 1e-12) && off < 1e-10 * e.length)
        throw Error("build_mesh: non-conforming mesh (hanging node " + std::to_string(v) + ")");
    }
  }
  return m;
}

// Global numbering: u block, then alpha block, then gamma block.
struct DofMap {
  int n_u = 0, n_alpha = 0, n_gamma = 0;
  int n_vertices = 0, n_edges = 0, n_triangles = 0;

  int total() const { return n_u + n_alpha + n_gamma; }
  int u_index(int node, int comp) const { return 2 * node + comp; }
  // slot 0..5 on an edge: 2(j-1) + (l-1)
  int alpha_edge(int edge, int slot) const { return n_u + 6 * edge + slot; }
  int alpha_elem(int tri, int slot) const { return n_u + 6 * (n_edges + tri) + slot; }
  // slot 0..3 on an edge: 2(j-1) + (l-1)
  int gamma_edge(int edge, int slot) const { return n_u + n_alpha + 4 * edge + slot; }
  int gamma_elem(int tri, int slot) const { return n_u + n_alpha + 4 * (n_edges + tri) + slot; }
  bool is_u(int g) const { return g >= 0 && g < n_u; }
};

inline DofMap build_dof_map(const Mesh& m) {
  DofMap d;
  d.n_vertices = m.n_vertices();
  d.n_edges = m.n_edges();
  d.n_triangles = m.n_triangles();
  d.n_u = 2 * (d.n_vertices + d.n_edges);
  d.n_alpha = 6 * (d.n_edges + d.n_triangles);
  d.n_gamma = 4 * (d.n_edges + d.n_triangles);
  return d;
}

// Element-local layout: 12 u (node-major), 24 alpha, 16 gamma.
// alpha local a = 6(i-1) + 2(j-1) + l on edge e_i, 2(k-1) + l + 18 in the interior (1-based).
// gamma local b = 4(i-1) + 2(j-1) + l on edge e_i, 2(k-1) + l + 12 in the interior (1-based).
inline int alpha_index(int i, int j, int l) {
  if (i < 1 || i > 3 || j < 1 || j > 3 || l < 1 || l > 2) throw Error("alpha_index: out of range");
  return 6 * (i - 1) + 2 * (j - 1) + l;
}
inline int alpha_interior_index(int k, int l) {
  if (k < 1 || k > 3 || l < 1 || l > 2) throw Error("alpha_interior_index: out of range");
  return 2 * (k - 1) + l + 18;
}
inline int gamma_index(int i, int j, int l) {
  if (i < 1 || i > 3 || j < 1 || j > 2 || l < 1 || l > 2) throw Error("gamma_index: out of range");
  return 4 * (i - 1) + 2 * (j - 1) + l;
}
inline int gamma_interior_index(int k, int l) {
  if (k < 1 || k > 2 || l < 1 || l > 2) throw Error("gamma_interior_index: out of range");
  return 2 * (k - 1) + l + 12;
}

constexpr int kElemU = 12, kElemAlpha = 24, kElemGamma = 16, kElemDofs = 52;

inline std::array<int, kElemDofs> element_dofs(const Mesh& m, const DofMap& d, int t) {
  std::array<int, kElemDofs> g{};
  auto nodes = m.p2_nodes(t);
  for (int n = 0; n < 6; ++n)
    for (int c = 0; c < 2; ++c) g[2 * n + c] = d.u_index(nodes[n], c);
  for (int i = 1; i <= 3; ++i) {
    int e = m.tri_edges[t][i - 1];
    for (int s = 0; s < 6; ++s) g[kElemU + 6 * (i - 1) + s] = d.alpha_edge(e, s);
    for (int s = 0; s < 4; ++s) g[kElemU + kElemAlpha + 4 * (i - 1) + s] = d.gamma_edge(e, s);
  }
  for (int s = 0; s < 6; ++s) g[kElemU + 18 + s] = d.alpha_elem(t, s);
  for (int s = 0; s < 4; ++s) g[kElemU + kElemAlpha + 12 + s] = d.gamma_elem(t, s);
  return g;
}

}  // namespace csmfe
