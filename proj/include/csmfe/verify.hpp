#pragma once

#include "csmfe/mesh.hpp"
#include "csmfe/shapefn.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace csmfe {

// Invariant checks on the shape-function families, used by the CLI and the tests.

inline double triangle_min_angle(const Vec2& a, const Vec2& b, const Vec2& c) {
  auto ang = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    Vec2 u = q - p, v = r - p;
    return std::atan2(std::abs(u.x() * v.y() - u.y() * v.x()), u.dot(v));
  };
  return std::min({ang(a, b, c), ang(b, c, a), ang(c, a, b)});
}

// Random counterclockwise triangle in [-1, 1]^2 with every angle above 15 degrees.
inline std::array<Vec2, 3> random_triangle(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    std::array<Vec2, 3> p{Vec2(u(rng), u(rng)), Vec2(u(rng), u(rng)), Vec2(u(rng), u(rng))};
    double a = signed_area(p[0], p[1], p[2]);
    if (std::abs(a) < 0.05 || triangle_min_angle(p[0], p[1], p[2]) < 15.0 * std::numbers::pi / 180) continue;
    if (a < 0) std::swap(p[1], p[2]);
    return p;
  }
}

inline Mesh single_triangle_mesh(const std::array<Vec2, 3>& p) {
  return build_mesh({p[0], p[1], p[2]}, {{0, 1, 2}});
}

inline double duality_deviation(Family f, const Mesh& m, int t = 0) {
  MatX D = duality_matrix(f, m, t);
  return (D - MatX::Identity(D.rows(), D.cols())).cwiseAbs().maxCoeff();
}

// Two triangles sharing an edge, with vertex ids shuffled so that global edge tangents point either way.
inline Mesh random_patch(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    auto t = random_triangle(rng);
    // fourth vertex across edge (t1, t2)
    Vec2 mid = 0.5 * (t[1] + t[2]);
    Vec2 d = t[2] - t[1];
    Vec2 out(d.y(), -d.x());
    Vec2 q = mid + out * (0.3 + 0.7 * std::abs(u(rng))) + d * 0.4 * u(rng);
    if (triangle_min_angle(t[1], q, t[2]) < 15.0 * std::numbers::pi / 180) continue;
    std::array<Vec2, 4> pts{t[0], t[1], t[2], q};
    std::array<int, 4> perm{0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Vec2> v(4);
    for (int k = 0; k < 4; ++k) v[perm[k]] = pts[k];
    std::array<int, 3> a{perm[0], perm[1], perm[2]}, b{perm[1], perm[3], perm[2]};
    std::rotate(a.begin(), a.begin() + (rng() % 3), a.end());
    std::rotate(b.begin(), b.begin() + (rng() % 3), b.end());
    return build_mesh(std::move(v), {a, b});
  }
}

// Largest tangential (C families) or normal (D families) jump across the shared edge of a
// two-triangle patch, sampled at `points` interior points of the edge. Functions not attached to
// the shared edge must have a vanishing trace there.
inline double jump_deviation(Family f, const Mesh& m, int points = 5) {
  int shared = -1;
  for (int e = 0; e < m.n_edges(); ++e)
    if (!m.edges[e].boundary) shared = e;
  if (shared < 0) throw Error("jump_deviation: mesh has no interior edge");
  const Edge& e = m.edges[shared];
  const Vec2 dir = is_covariant(f) ? e.tangent : e.normal;
  const int n = edge_fn_count(f);
  double worst = 0.0;
  for (int p = 1; p <= points; ++p) {
    Vec2 x = m.vertices[e.v0] + (double(p) / (points + 1)) * (m.vertices[e.v1] - m.vertices[e.v0]);
    Vec2 rs[2] = {natural_coords(m, e.tris[0], x), natural_coords(m, e.tris[1], x)};
    for (int j = 1; j <= n; ++j) {
      Vec2 va = eval_global_edge_shapefn(m, e.tris[0], shared, f, j, rs[0].x(), rs[0].y());
      Vec2 vb = eval_global_edge_shapefn(m, e.tris[1], shared, f, j, rs[1].x(), rs[1].y());
      worst = std::max(worst, std::abs(dir.dot(va - vb)));
    }
    for (int side = 0; side < 2; ++side) {
      int t = e.tris[side];
      std::vector<Vec2> vals(local_fn_count(f));
      ElementBasis b = element_basis(m, t, f);
      eval_basis(b, rs[side].x(), rs[side].y(), vals);
      for (int i = 1; i <= 3; ++i) {
        if (m.tri_edges[t][i - 1] == shared) continue;
        for (int j = 1; j <= n; ++j) worst = std::max(worst, std::abs(dir.dot(vals[(i - 1) * n + j - 1])));
      }
      for (int k = 1; k <= n; ++k) worst = std::max(worst, std::abs(dir.dot(vals[3 * n + k - 1])));
    }
  }
  return worst;
}

// D-family edge tables against the C-family tables rotated 90 degrees clockwise.
inline double rotation_deviation(std::mt19937_64& rng, int points = 50) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  const std::pair<Family, Family> pairs[2] = {{Family::C2, Family::D2}, {Family::C2minus, Family::D2minus}};
  for (int p = 0; p < points; ++p) {
    double r = u(rng), s = u(rng);
    if (r + s > 1) {
      r = 1 - r;
      s = 1 - s;
    }
    for (auto [c, d] : pairs)
      for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= edge_fn_count(c); ++j) {
          Vec2 vc = eval_edge_shapefn(c, i, j, r, s);
          Vec2 rot(vc.y(), -vc.x());
          worst = std::max(worst, (eval_edge_shapefn(d, i, j, r, s) - rot).cwiseAbs().maxCoeff());
        }
  }
  return worst;
}

struct ShapefnReport {
  double duality[4] = {0, 0, 0, 0};
  double jump[4] = {0, 0, 0, 0};
  double rotation = 0.0;
  double max_duality() const { return *std::max_element(duality, duality + 4); }
  double max_jump() const { return *std::max_element(jump, jump + 4); }
};

inline ShapefnReport verify_shapefns(int trials, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  ShapefnReport rep;
  const Family fams[4] = {Family::C2, Family::D2, Family::C2minus, Family::D2minus};
  for (int k = 0; k < trials; ++k) {
    Mesh m = single_triangle_mesh(random_triangle(rng));
    for (int f = 0; f < 4; ++f) rep.duality[f] = std::max(rep.duality[f], duality_deviation(fams[f], m));
    Mesh patch = random_patch(rng);
    for (int f = 0; f < 4; ++f) rep.jump[f] = std::max(rep.jump[f], jump_deviation(fams[f], patch));
  }
  rep.rotation = rotation_deviation(rng, 50);
  return rep;
}

}  // namespace csmfe
