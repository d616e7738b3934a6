#pragma once

#include "csmfe/common.hpp"
#include "csmfe/materials.hpp"
#include "csmfe/mesh.hpp"
#include "csmfe/quadrature.hpp"
#include "csmfe/shapefn.hpp"

#include <Eigen/SVD>

#include <optional>
#include <vector>

namespace csmfe {

using ElemVec = Eigen::Matrix<double, kElemDofs, 1>;
using ElemMat = Eigen::Matrix<double, kElemDofs, kElemDofs>;

struct QuadPointState {
  Mat2 H, F, Finv, h, tau, P;
  Mat2 tau_hat;  // constitutive, filled when a material is supplied
  Eigen::Matrix<double, 4, 24> gbar_c;
  Eigen::Matrix<double, 4, 16> gbar_d;
  Eigen::Matrix<double, 4, 12> B;
  Eigen::Matrix<double, 2, 12> N;
  Mat4 D = Mat4::Zero();
  Mat4 That = Mat4::Zero();
  Vec4 eps_u;    // vec of grad(phi) pushed forward by F(alpha)
  Vec4 eps_h;    // vec of h
};

// Per-triangle data reused across quadrature points.
struct ElementGeometry {
  int tri = -1;
  Mat2 J, Jinv;
  double detJ = 0.0;
  ElementBasis c2, d2m;

  ElementGeometry(const Mesh& m, int t)
      : tri(t), J(jacobian(m, t)), Jinv(J.inverse()), detJ(J.determinant()),
        c2(element_basis(m, t, Family::C2)), d2m(element_basis(m, t, Family::D2minus)) {}
};

inline QuadPointState interpolation_matrices(const ElementGeometry& g, const ElemVec& dofs, double r, double s,
                                             const Material* mat = nullptr) {
  QuadPointState q;
  std::array<Vec2, 12> V;
  std::array<Vec2, 8> W;
  eval_basis(g.c2, r, s, V);
  eval_basis(g.d2m, r, s, W);

  q.H.setZero();
  for (int c = 0; c < 12; ++c)
    for (int row = 0; row < 2; ++row) q.H.row(row) += dofs(kElemU + 2 * c + row) * V[c].transpose();
  q.F = Mat2::Identity() + q.H;
  double detF = q.F.determinant();
  if (!(detF > 0.0)) throw NonPositiveJacobian(g.tri, r, s, detF);
  q.Finv = q.F.inverse();
  q.h = q.H * q.Finv;

  q.P.setZero();
  for (int c = 0; c < 8; ++c)
    for (int row = 0; row < 2; ++row) q.P.row(row) += dofs(kElemU + kElemAlpha + 2 * c + row) * W[c].transpose();
  q.tau = q.P * q.F.transpose();

  q.gbar_c.setZero();
  const Mat2 FinvT = q.Finv.transpose();
  for (int c = 0; c < 12; ++c) {
    Vec2 v = FinvT * V[c];
    for (int row = 0; row < 2; ++row) q.gbar_c.block<2, 1>(2 * row, 2 * c + row) = v;
  }
  q.gbar_d.setZero();
  for (int c = 0; c < 8; ++c) {
    Vec2 w = q.F * W[c];
    for (int row = 0; row < 2; ++row) q.gbar_d.block<2, 1>(2 * row, 2 * c + row) = w;
  }

  P2Values p2 = lagrange_p2(r, s);
  q.B.setZero();
  q.N.setZero();
  const Mat2 JinvT = g.Jinv.transpose();
  for (int n = 0; n < 6; ++n) {
    Vec2 dN = FinvT * (JinvT * p2.dN[n]);
    for (int comp = 0; comp < 2; ++comp) {
      q.B.block<2, 1>(2 * comp, 2 * n + comp) = dN;
      q.N(comp, 2 * n + comp) = p2.N[n];
    }
  }
  q.eps_u = q.B * dofs.head<kElemU>();
  q.eps_h = to_vec4(q.h);

  if (mat) {
    q.tau_hat = kirchhoff_stress(*mat, q.F);
    q.D = spatial_tangent(*mat, q.F);
    q.That.setZero();
    q.That.block<2, 2>(0, 0) = q.tau_hat;
    q.That.block<2, 2>(2, 2) = q.tau_hat;
  } else {
    q.tau_hat.setZero();
  }
  return q;
}

inline QuadPointState interpolation_matrices(const Mesh& m, int t, const ElemVec& dofs, double r, double s,
                                             const Material* mat = nullptr) {
  return interpolation_matrices(ElementGeometry(m, t), dofs, r, s, mat);
}

struct ElementResult {
  ElemVec f_int = ElemVec::Zero();
  ElemMat K = ElemMat::Zero();
};

// Internal forces (u | alpha | gamma) and, when requested, the 52x52 tangent.
inline ElementResult element_compute(const ElementGeometry& g, const ElemVec& dofs, const Material& mat, bool tangent) {
  ElementResult res;
  const TriangleRule& rule = triangle_rule_13();
  Eigen::Matrix<double, 12, 16> Kug = Eigen::Matrix<double, 12, 16>::Zero();
  Eigen::Matrix<double, 24, 24> Kaa = Eigen::Matrix<double, 24, 24>::Zero();
  Eigen::Matrix<double, 24, 16> Kag = Eigen::Matrix<double, 24, 16>::Zero();
  for (size_t p = 0; p < rule.points.size(); ++p) {
    const double r = rule.points[p].x(), s = rule.points[p].y();
    QuadPointState q = interpolation_matrices(g, dofs, r, s, &mat);
    const double dV = g.detJ * rule.weights[p];
    const Vec4 Gam = to_vec4(q.tau);
    const Vec4 Gam_hat = to_vec4(q.tau_hat);
    res.f_int.segment<kElemU>(0) += dV * q.B.transpose() * Gam;
    res.f_int.segment<kElemAlpha>(kElemU) += dV * q.gbar_c.transpose() * (Gam_hat - Gam);
    res.f_int.segment<kElemGamma>(kElemU + kElemAlpha) += dV * q.gbar_d.transpose() * (q.eps_u - q.eps_h);
    if (tangent) {
      Kug.noalias() += dV * q.B.transpose() * q.gbar_d;
      Kaa.noalias() += dV * q.gbar_c.transpose() * (q.D + q.That) * q.gbar_c;
      Kag.noalias() += dV * q.gbar_c.transpose() * q.gbar_d;
    }
  }
  if (tangent) {
    constexpr int a0 = kElemU, g0 = kElemU + kElemAlpha;
    res.K.block<12, 16>(0, g0) = Kug;
    res.K.block<16, 12>(g0, 0) = Kug.transpose();
    res.K.block<24, 24>(a0, a0) = Kaa;
    res.K.block<24, 16>(a0, g0) = -Kag;
    res.K.block<16, 24>(g0, a0) = -Kag.transpose();
  }
  return res;
}

inline ElemMat element_tangent(const Mesh& m, int t, const ElemVec& dofs, const Material& mat) {
  return element_compute(ElementGeometry(m, t), dofs, mat, true).K;
}

inline ElemVec element_internal_forces(const Mesh& m, int t, const ElemVec& dofs, const Material& mat) {
  return element_compute(ElementGeometry(m, t), dofs, mat, false).f_int;
}

// Local P2 node indices (0-based) on local edge i: start vertex, end vertex, mid-node.
inline std::array<int, 3> edge_p2_nodes(int i) {
  switch (i) {
    case 1: return {1, 2, 4};
    case 2: return {2, 0, 5};
    case 3: return {0, 1, 3};
  }
  throw Error("edge_p2_nodes: local edge index must be 1, 2 or 3");
}

// Dead external loads: constant body force per unit reference volume and constant tractions on local edges.
inline ElemVec element_external_forces(const Mesh& m, int t, const Vec2& body_force,
                                       const std::vector<std::pair<int, Vec2>>& edge_tractions) {
  ElemVec f = ElemVec::Zero();
  if (body_force.squaredNorm() > 0.0) {
    const TriangleRule& rule = triangle_rule_13();
    double detJ = jacobian(m, t).determinant();
    for (size_t p = 0; p < rule.points.size(); ++p) {
      P2Values v = lagrange_p2(rule.points[p].x(), rule.points[p].y());
      for (int n = 0; n < 6; ++n) f.segment<2>(2 * n) += rule.weights[p] * detJ * v.N[n] * body_force;
    }
  }
  for (const auto& [i, tr] : edge_tractions) {
    if (i < 1 || i > 3) throw Error("element_external_forces: local edge index must be 1, 2 or 3");
    if (!m.edges[m.tri_edges[t][i - 1]].boundary) throw Error("element_external_forces: traction on an interior edge");
    double l = m.local_edge_length(t, i);
    EdgeRule q = edge_rule(4, l);
    auto nodes = edge_p2_nodes(i);
    for (size_t p = 0; p < q.points.size(); ++p) {
      double xi = q.points[p] / l;
      double N[3] = {(1 - xi) * (1 - 2 * xi), xi * (2 * xi - 1), 4 * xi * (1 - xi)};
      for (int k = 0; k < 3; ++k) f.segment<2>(2 * nodes[k]) += q.weights[p] * N[k] * tr;
    }
  }
  return f;
}

struct RankCheck {
  double sigma_min_gu = 0, sigma_max_gu = 0;          // K^{gamma u}
  double sigma_min_stack = 0, sigma_max_stack = 0;    // [-K^{alpha gamma}; K^{u gamma}]
  double sigma_min_restricted = 0, sigma_max_restricted = 0;  // K^{alpha alpha} on the set K
  double sigma_min_full = 0, sigma_max_full = 0;
  bool cond_gu = false, cond_stack = false, cond_aa = false, full_nonsingular = false;
  bool ok() const { return cond_gu && cond_stack && cond_aa && full_nonsingular; }
};

namespace detail {

inline void sv_range(const MatX& A, double& smin, double& smax, int expect_rank) {
  if (A.rows() == 0 || A.cols() == 0) {
    smin = 0.0;
    smax = 0.0;
    return;
  }
  Eigen::BDCSVD<MatX> svd(A);
  const auto& sv = svd.singularValues();
  smax = sv.size() ? sv(0) : 0.0;
  smin = (expect_rank <= sv.size()) ? sv(expect_rank - 1) : 0.0;
}

inline MatX kernel_basis(const MatX& A, double rel) {
  Eigen::BDCSVD<MatX> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double smax = sv.size() ? sv(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > rel * smax) ++rank;
  return svd.matrixV().rightCols(A.cols() - rank);
}

}  // namespace detail

// Kernel conditions of the saddle-point tangent. K is ordered (u | alpha | gamma); `fixed_u` lists
// displacement rows/cols removed before the check (e.g. Dirichlet or rigid translations).
inline RankCheck saddle_rank_check(const MatX& K, int nu, int na, int ng, const std::vector<int>& fixed_u = {},
                                   double rel = 1e-10) {
  std::vector<int> keep_u;
  std::vector<char> fixed(nu, 0);
  for (int d : fixed_u) {
    if (d < 0 || d >= nu) throw Error("saddle_rank_check: fixed dof is not a displacement dof");
    fixed[d] = 1;
  }
  for (int i = 0; i < nu; ++i)
    if (!fixed[i]) keep_u.push_back(i);
  const int ku = static_cast<int>(keep_u.size());
  MatX Kgu(ng, ku), Kag = -K.block(nu, nu + na, na, ng), Kaa = K.block(nu, nu, na, na);
  for (int c = 0; c < ku; ++c) Kgu.col(c) = K.block(nu + na, keep_u[c], ng, 1);

  RankCheck rc;
  detail::sv_range(Kgu, rc.sigma_min_gu, rc.sigma_max_gu, ku);
  rc.cond_gu = ku > 0 && rc.sigma_max_gu > 0 && rc.sigma_min_gu > rel * rc.sigma_max_gu;
  if (ku == 0 || rc.sigma_max_gu == 0.0) rc.cond_gu = false;

  MatX stack(na + ku, ng);
  stack.topRows(na) = -Kag;
  stack.bottomRows(ku) = Kgu.transpose();
  detail::sv_range(stack, rc.sigma_min_stack, rc.sigma_max_stack, ng);
  rc.cond_stack = rc.sigma_min_stack > rel * rc.sigma_max_stack;

  // set K: x with y^T K^{gamma alpha} x = 0 for all y in ker(K^{u gamma})
  MatX Z = ku > 0 ? detail::kernel_basis(Kgu.transpose(), rel) : MatX::Identity(ng, ng);  // ng x m
  MatX Kga = Kag.transpose();
  MatX NK = Z.cols() > 0 ? detail::kernel_basis(Z.transpose() * Kga, rel) : MatX::Identity(na, na);
  if (NK.cols() == 0) {
    rc.cond_aa = true;
  } else {
    MatX R = Kaa * NK;
    detail::sv_range(R, rc.sigma_min_restricted, rc.sigma_max_restricted, static_cast<int>(NK.cols()));
    double scale = std::max(rc.sigma_max_restricted, Eigen::JacobiSVD<MatX>(Kaa).singularValues()(0));
    rc.cond_aa = rc.sigma_min_restricted > rel * scale;
  }

  std::vector<int> keep;
  for (int i : keep_u) keep.push_back(i);
  for (int i = nu; i < nu + na + ng; ++i) keep.push_back(i);
  MatX Kr(keep.size(), keep.size());
  for (size_t a = 0; a < keep.size(); ++a)
    for (size_t b = 0; b < keep.size(); ++b) Kr(a, b) = K(keep[a], keep[b]);
  // nonsingularity is scale invariant; equilibrate so that the bulk modulus does not set the ratio
  for (int pass = 0; pass < 5; ++pass) {
    VecX c = Kr.cwiseAbs().colwise().maxCoeff().transpose();
    for (int i = 0; i < c.size(); ++i) c(i) = c(i) > 0 ? 1.0 / std::sqrt(c(i)) : 1.0;
    Kr = c.asDiagonal() * Kr * c.asDiagonal();
  }
  detail::sv_range(Kr, rc.sigma_min_full, rc.sigma_max_full, static_cast<int>(keep.size()));
  rc.full_nonsingular = rc.sigma_min_full > rel * rc.sigma_max_full;
  return rc;
}

}  // namespace csmfe
