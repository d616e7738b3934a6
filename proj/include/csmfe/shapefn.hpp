#pragma once

#include "csmfe/common.hpp"
#include "csmfe/mesh.hpp"
#include "csmfe/quadrature.hpp"

#include <functional>
#include <string>

namespace csmfe {

enum class Family { C2, D2, C2minus, D2minus };

inline int edge_fn_count(Family f) { return (f == Family::C2 || f == Family::D2) ? 3 : 2; }
inline int interior_fn_count(Family f) { return edge_fn_count(f); }
inline int local_fn_count(Family f) { return 4 * edge_fn_count(f); }
inline bool is_covariant(Family f) { return f == Family::C2 || f == Family::C2minus; }

inline std::string to_string(Family f) {
  switch (f) {
    case Family::C2: return "C2";
    case Family::D2: return "D2";
    case Family::C2minus: return "C2minus";
    case Family::D2minus: return "D2minus";
  }
  return "?";
}

// Edge functions vbar on the reference triangle, natural coordinates.
inline Vec2 eval_edge_shapefn(Family f, int i, int j, double r, double s) {
  if (i < 1 || i > 3 || j < 1 || j > edge_fn_count(f)) throw Error("eval_edge_shapefn: invalid (i, j) for family");
  const double t = 1.0 / 3.0;
  switch (f) {
    case Family::C2minus:
      if (j == 2) {
        switch (i) {
          case 1: return {-t * s * (4 * (r - s) + 1), t * r * (4 * (r - s) - 1)};
          case 2: return {-t * s * (4 * r + 8 * s - 5), t * (4 * r - 3) * (r + 2 * s - 1)};
          case 3: return {t * (4 * s - 3) * (2 * r + s - 1), -t * r * (8 * r + 4 * s - 5)};
        }
      }
      [[fallthrough]];
    case Family::C2:
      switch (i * 10 + j) {
        case 11: return {-s * (4 * (r + s) - 3), r * (4 * (r + s) - 3)};
        case 12: return {s * (2 * r + 3 * s - 2), r * (3 * r + 2 * s - 2)};
        case 13: return {-s * (2 * s - 1), r * (2 * r - 1)};
        case 21: return {s * (4 * r - 1), -(4 * r - 1) * (r - 1)};
        case 22: return {s * (2 * r - s), (3 * r - 1) * (r + 2 * s - 1)};
        case 23: return {-s * (2 * s - 1), r * (3 - 2 * r) - 4 * s * (r + s - 1) - 1};
        case 31: return {(4 * s - 1) * (s - 1), -r * (4 * s - 1)};
        case 32: return {(3 * s - 1) * (2 * r + s - 1), -r * (r - 2 * s)};
        case 33: return {s * (2 * s - 3) + 4 * r * (r + s - 1) + 1, r * (2 * r - 1)};
      }
      break;
    case Family::D2minus:
      if (j == 2) {
        switch (i) {
          case 1: return {t * r * (4 * (r - s) - 1), t * s * (4 * (r - s) + 1)};
          case 2: return {t * (4 * r - 3) * (r + 2 * s - 1), t * s * (4 * r + 8 * s - 5)};
          case 3: return {-t * r * (8 * r + 4 * s - 5), -t * (4 * s - 3) * (2 * r + s - 1)};
        }
      }
      [[fallthrough]];
    case Family::D2:
      switch (i * 10 + j) {
        case 11: return {r * (4 * (r + s) - 3), s * (4 * (r + s) - 3)};
        case 12: return {r * (3 * r + 2 * s - 2), -s * (2 * r + 3 * s - 2)};
        case 13: return {r * (2 * r - 1), s * (2 * s - 1)};
        case 21: return {-(4 * r - 1) * (r - 1), -s * (4 * r - 1)};
        case 22: return {(3 * r - 1) * (r + 2 * s - 1), -s * (2 * r - s)};
        case 23: return {r * (3 - 2 * r) - 4 * s * (r + s - 1) - 1, s * (2 * s - 1)};
        case 31: return {-r * (4 * s - 1), -(4 * s - 1) * (s - 1)};
        case 32: return {-r * (r - 2 * s), -(3 * s - 1) * (2 * r + s - 1)};
        case 33: return {r * (2 * r - 1), s * (3 - 2 * s) - 4 * r * (r + s - 1) - 1};
      }
      break;
  }
  throw Error("eval_edge_shapefn: unreachable");
}

// Interior functions on the reference triangle; coefficients depend on J (vertex 1 is the origin).
inline Vec2 eval_interior_shapefn(Family f, int k, const Mat2& J, double r, double s) {
  if (k < 1 || k > interior_fn_count(f)) throw Error("eval_interior_shapefn: invalid k for family");
  const double det = J.determinant();
  if (!(std::abs(det) > 0.0)) throw Error("eval_interior_shapefn: singular Jacobian");
  const double x2 = J(0, 0), x3 = J(0, 1), y2 = J(1, 0), y3 = J(1, 1);
  const double id = 1.0 / det;
  switch (f) {
    case Family::C2: {
      double c1, e1, b2, e2;
      if (k == 1) {
        c1 = 12 * id * (3 * x2 + x3), e1 = -24 * id * (2 * x2 + x3);
        b2 = 12 * id * (x2 + 3 * x3), e2 = -24 * id * (x2 + 2 * x3);
      } else if (k == 2) {
        c1 = 12 * id * (3 * y2 + y3), e1 = -24 * id * (2 * y2 + y3);
        b2 = 12 * id * (y2 + 3 * y3), e2 = -24 * id * (y2 + 2 * y3);
      } else {
        c1 = -60 * id, e1 = 120 * id, b2 = -60 * id, e2 = 120 * id;
      }
      return {s * (c1 + e1 * r - c1 * s), r * (b2 - b2 * r + e2 * s)};
    }
    case Family::D2: {
      double b1, e1, c2, e2;
      if (k == 1) {
        b1 = 12 * id * (y2 + 3 * y3), e1 = -24 * id * (y2 + 2 * y3);
        c2 = -12 * id * (3 * y2 + y3), e2 = 24 * id * (2 * y2 + y3);
      } else if (k == 2) {
        b1 = -12 * id * (x2 + 3 * x3), e1 = 24 * id * (x2 + 2 * x3);
        c2 = 12 * id * (3 * x2 + x3), e2 = -24 * id * (2 * x2 + x3);
      } else {
        b1 = 60 * id, e1 = -120 * id, c2 = -60 * id, e2 = 120 * id;
      }
      return {r * (b1 - b1 * r + e1 * s), s * (c2 + e2 * r - c2 * s)};
    }
    case Family::C2minus: {
      double c1, d1;
      if (k == 1) {
        c1 = 8 * id * (2 * x2 - x3), d1 = 8 * id * (x2 - 2 * x3);
      } else {
        c1 = 8 * id * (2 * y2 - y3), d1 = 8 * id * (y2 - 2 * y3);
      }
      return {s * (c1 - d1 * r - c1 * s), r * (-d1 + d1 * r + c1 * s)};
    }
    case Family::D2minus: {
      double b1, c2;
      if (k == 1) {
        b1 = -8 * id * (y2 - 2 * y3), c2 = -8 * id * (2 * y2 - y3);
      } else {
        b1 = 8 * id * (x2 - 2 * x3), c2 = 8 * id * (2 * x2 - x3);
      }
      return {r * (b1 - b1 * r - c2 * s), s * (c2 - b1 * r - c2 * s)};
    }
  }
  throw Error("eval_interior_shapefn: unreachable");
}

inline Vec2 piola_covariant(const Mat2& J, const Vec2& vhat) {
  double det = J.determinant();
  if (!(std::abs(det) > 0.0)) throw Error("piola_covariant: singular Jacobian");
  return J.inverse().transpose() * vhat;
}

inline Vec2 piola_contravariant(const Mat2& J, const Vec2& vhat) {
  double det = J.determinant();
  if (!(std::abs(det) > 0.0)) throw Error("piola_contravariant: singular Jacobian");
  return J * vhat / det;
}

inline Vec2 piola(Family f, const Mat2& J, const Vec2& vhat) {
  return is_covariant(f) ? piola_covariant(J, vhat) : piola_contravariant(J, vhat);
}

inline int orientation_sign(int j, const Vec2& t_global, const Vec2& t_local) {
  double d = t_global.dot(t_local);
  if (std::abs(std::abs(d) - 1.0) > 1e-8) throw Error("orientation_sign: tangents are not parallel");
  if (j % 2 == 0) return 1;
  return d > 0 ? 1 : -1;
}

// Sign factor for local edge i of triangle t (boundary edges always 1).
inline int edge_sign(const Mesh& m, int t, int i, int j) {
  const Edge& e = m.edges[m.tri_edges[t][i - 1]];
  if (e.boundary) return 1;
  return orientation_sign(j, e.tangent, m.local_tangent(t, i));
}

inline Vec2 natural_coords(const Mesh& m, int t, const Vec2& x) {
  return jacobian(m, t).inverse() * (x - m.vertices[m.triangles[t][0]]);
}

inline Vec2 physical_point(const Mesh& m, int t, double r, double s) {
  return m.vertices[m.triangles[t][0]] + jacobian(m, t) * Vec2(r, s);
}

// All local functions of a family on triangle t in physical space, signs applied when `global` is set.
// Order: edge e1 j=1..n, e2 j=1..n, e3 j=1..n, then interior k=1..n.
struct ElementBasis {
  Family family;
  Mat2 J;
  std::array<std::array<double, 3>, 3> sign{};  // [i-1][j-1]
};

inline ElementBasis element_basis(const Mesh& m, int t, Family f, bool global = true) {
  ElementBasis b{f, jacobian(m, t), {}};
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j) b.sign[i - 1][j - 1] = (global && j <= edge_fn_count(f)) ? edge_sign(m, t, i, j) : 1;
  return b;
}

template <class Out>
inline void eval_basis(const ElementBasis& b, double r, double s, Out& out) {
  const int n = edge_fn_count(b.family);
  int c = 0;
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= n; ++j) out[c++] = b.sign[i - 1][j - 1] * piola(b.family, b.J, eval_edge_shapefn(b.family, i, j, r, s));
  for (int k = 1; k <= n; ++k) out[c++] = piola(b.family, b.J, eval_interior_shapefn(b.family, k, b.J, r, s));
}

inline Vec2 eval_global_edge_shapefn(const Mesh& m, int t, int global_edge, Family f, int j, double r, double s) {
  int i = 0;
  for (int q = 1; q <= 3; ++q)
    if (m.tri_edges[t][q - 1] == global_edge) i = q;
  if (i == 0) throw Error("eval_global_edge_shapefn: edge does not belong to triangle");
  Mat2 J = jacobian(m, t);
  return edge_sign(m, t, i, j) * piola(f, J, eval_edge_shapefn(f, i, j, r, s));
}

inline Vec2 eval_local_interior_shapefn(const Mesh& m, int t, Family f, int k, double r, double s) {
  Mat2 J = jacobian(m, t);
  return piola(f, J, eval_interior_shapefn(f, k, J, r, s));
}

using VectorField = std::function<Vec2(const Vec2& x)>;

// int_e (v . t_i or v . n_i) s^(j-1) ds, s measured from the first vertex of local edge i
inline double dof_functional_edge(Family f, const Mesh& m, int t, int i, int j, const VectorField& v) {
  auto [a, b] = Mesh::local_edge_vertices(i);
  Vec2 xa = m.vertices[m.triangles[t][a]], xb = m.vertices[m.triangles[t][b]];
  double l = (xb - xa).norm();
  Vec2 tan = (xb - xa) / l;
  Vec2 dir = is_covariant(f) ? tan : Vec2(tan.y(), -tan.x());
  EdgeRule q = edge_rule(4, l);
  double sum = 0.0;
  for (size_t p = 0; p < q.points.size(); ++p) {
    double sp = q.points[p];
    sum += q.weights[p] * v(xa + sp * tan).dot(dir) * std::pow(sp, j - 1);
  }
  return sum;
}

inline Vec2 interior_base_vector(Family f, int k, const Vec2& xrel) {
  if (k == 1) return {1.0, 0.0};
  if (k == 2) return {0.0, 1.0};
  if (f == Family::C2) return xrel;
  if (f == Family::D2) return {-xrel.y(), xrel.x()};
  throw Error("interior_base_vector: invalid k for family");
}

// int_T v . w_k dA with w_k relative to vertex 1
inline double dof_functional_interior(Family f, const Mesh& m, int t, int k, const VectorField& v) {
  if (k < 1 || k > interior_fn_count(f)) throw Error("dof_functional_interior: invalid k");
  const TriangleRule& q = triangle_rule_13();
  Mat2 J = jacobian(m, t);
  double det = J.determinant();
  Vec2 x1 = m.vertices[m.triangles[t][0]];
  double sum = 0.0;
  for (size_t p = 0; p < q.points.size(); ++p) {
    Vec2 xr = J * q.points[p];
    sum += q.weights[p] * det * v(x1 + xr).dot(interior_base_vector(f, k, xr));
  }
  return sum;
}

// Columns give the dual functionals of vbar_j in terms of v_m on an edge of length l.
inline MatX edge_recovery_matrix(Family f, double l) {
  if (edge_fn_count(f) == 3) {
    MatX A(3, 3);
    A << 1.0, 0.0, 1.0 / 3.0,
         l / 2.0, -l / 6.0, l / 6.0,
         l * l / 3.0, -l * l / 6.0, 2.0 * l * l / 15.0;
    return A;
  }
  MatX A(2, 2);
  A << 1.0, 0.0,
       l / 2.0, -l / 6.0;
  return A;
}

// Matrix of all dual functionals applied to the recovered v-basis of one triangle. Identity when consistent.
inline MatX duality_matrix(Family f, const Mesh& m, int t) {
  const int n = edge_fn_count(f);
  const int N = 4 * n;
  Mat2 J = jacobian(m, t);
  Vec2 x1 = m.vertices[m.triangles[t][0]];
  Mat2 Jinv = J.inverse();
  auto fn = [&](int c) -> VectorField {
    return [=](const Vec2& x) {
      Vec2 p = Jinv * (x - x1);
      if (c < 3 * n) return piola(f, J, eval_edge_shapefn(f, c / n + 1, c % n + 1, p.x(), p.y()));
      return piola(f, J, eval_interior_shapefn(f, c - 3 * n + 1, J, p.x(), p.y()));
    };
  };
  MatX M(N, N);
  for (int c = 0; c < N; ++c) {
    VectorField v = fn(c);
    for (int row = 0; row < N; ++row) {
      if (row < 3 * n)
        M(row, c) = dof_functional_edge(f, m, t, row / n + 1, row % n + 1, v);
      else
        M(row, c) = dof_functional_interior(f, m, t, row - 3 * n + 1, v);
    }
  }
  // v-basis = vbar-basis times inverse recovery matrix, edge by edge
  MatX R = MatX::Identity(N, N);
  for (int i = 1; i <= 3; ++i) {
    double l = m.local_edge_length(t, i);
    R.block((i - 1) * n, (i - 1) * n, n, n) = edge_recovery_matrix(f, l).inverse();
  }
  return M * R;
}

struct P2Values {
  std::array<double, 6> N;
  std::array<Vec2, 6> dN;  // natural-coordinate gradients (d/dr, d/ds)
};

inline P2Values lagrange_p2(double r, double s) {
  double L = 1.0 - r - s;
  P2Values v;
  v.N = {L * (2 * L - 1), r * (2 * r - 1), s * (2 * s - 1), 4 * r * L, 4 * r * s, 4 * s * L};
  v.dN = {Vec2(1 - 4 * L, 1 - 4 * L), Vec2(4 * r - 1, 0), Vec2(0, 4 * s - 1),
          Vec2(4 * (L - r), -4 * r), Vec2(4 * s, 4 * r), Vec2(-4 * s, 4 * (L - s))};
  return v;
}

}  // namespace csmfe
