#pragma once

#include "csmfe/common.hpp"

#include <algorithm>
#include <numbers>
#include <vector>

namespace csmfe {

enum class MaterialType { NH1, NH2, Ogden };

struct Material {
  MaterialType type = MaterialType::NH1;
  double mu = 0.0;
  double kappa = 0.0;
  std::vector<double> ogden_mu;
  std::vector<double> ogden_alpha;

  static Material nh1(double mu, double kappa) { return {MaterialType::NH1, mu, kappa, {}, {}}; }
  static Material nh2(double mu, double kappa) { return {MaterialType::NH2, mu, kappa, {}, {}}; }
  static Material ogden(std::vector<double> mus, std::vector<double> alphas, double kappa) {
    Material m{MaterialType::Ogden, 0.0, kappa, std::move(mus), std::move(alphas)};
    double g = 0.0;
    for (size_t i = 0; i < std::min(m.ogden_mu.size(), m.ogden_alpha.size()); ++i) g += 0.5 * m.ogden_mu[i] * m.ogden_alpha[i];
    m.mu = g;
    return m;
  }

  void validate() const {
    if (!(kappa > 0)) throw Error("material: kappa must be positive");
    if (type == MaterialType::Ogden) {
      if (ogden_mu.empty() || ogden_mu.size() != ogden_alpha.size())
        throw Error("material: ogden_mu and ogden_alpha must be non-empty and of equal length");
      double g = 0.0;
      for (size_t i = 0; i < ogden_mu.size(); ++i) {
        if (ogden_alpha[i] == 0.0) throw Error("material: ogden_alpha entries must be non-zero");
        g += ogden_mu[i] * ogden_alpha[i];
      }
      if (!(g > 0)) throw Error("material: sum of ogden_mu * ogden_alpha must be positive");
    } else if (!(mu > 0)) {
      throw Error("material: mu must be positive");
    }
  }
};

struct Eigenprojections {
  double l1sq = 1.0, l2sq = 1.0;  // eigenvalues of B, l1sq >= l2sq
  Mat2 E1 = Mat2::Zero(), E2 = Mat2::Zero();
};

inline Eigenprojections eigenprojections(const Mat2& B) {
  Eigenprojections e;
  double a = 0.5 * (B(0, 0) + B(1, 1));
  double d = 0.5 * (B(0, 0) - B(1, 1));
  double b = 0.5 * (B(0, 1) + B(1, 0));
  double rad = std::hypot(d, b);
  e.l1sq = a + rad;
  e.l2sq = a - rad;
  double th = (rad > 0.0) ? 0.5 * std::atan2(b, d) : 0.0;
  Vec2 n1(std::cos(th), std::sin(th));
  Vec2 n2(-n1.y(), n1.x());
  e.E1 = n1 * n1.transpose();
  e.E2 = n2 * n2.transpose();
  return e;
}

namespace detail {

inline double det_checked(const Mat2& F) {
  double J = F.determinant();
  if (!(J > 0.0)) throw Error("material: non-positive det F (singular deformation)");
  return J;
}

// (x1^p - x2^p)/(x1 - x2) evaluated without cancellation; p = (alpha-2)/2, x = lambda^2
inline double divided_power(double x1, double x2, double p) {
  if (std::abs(x1 - x2) < 1e-8 * (x1 + x2)) {
    double x = 0.5 * (x1 + x2);
    return p * std::pow(x, p - 1.0);
  }
  double dl = std::log(x1 / x2);
  return std::pow(x2, p - 1.0) * std::expm1(p * dl) / std::expm1(dl);
}

template <class Fn>
inline Mat4 to_matrix(Fn&& c) {
  Mat4 D;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) D(2 * i + j, 2 * k + l) = c(i, j, k, l);
  return D;
}

inline double delta(int i, int j) { return i == j ? 1.0 : 0.0; }

}  // namespace detail

inline double energy(const Material& m, const Mat2& F) {
  const double J = detail::det_checked(F);
  const Mat2 C = F.transpose() * F;
  const double I1 = C.trace() + 1.0;
  switch (m.type) {
    case MaterialType::NH1:
      return 0.5 * m.mu * (I1 - 3.0 - 2.0 * std::log(J)) + 0.5 * m.kappa * (J - 1) * (J - 1);
    case MaterialType::NH2: {
      double lj = std::log(J);
      return 0.5 * m.mu * (I1 - 3.0) - m.mu * lj + 0.5 * m.kappa * lj * lj;
    }
    case MaterialType::Ogden: {
      auto e = eigenprojections(F * F.transpose());
      double W = 0.5 * m.kappa * (J - 1) * (J - 1);
      for (size_t i = 0; i < m.ogden_mu.size(); ++i) {
        double a = m.ogden_alpha[i];
        double beta = std::pow(J, -a / 3.0);
        double T = std::pow(e.l1sq, 0.5 * a) + std::pow(e.l2sq, 0.5 * a) + 1.0;
        W += m.ogden_mu[i] / a * (beta * T - 3.0);
      }
      return W;
    }
  }
  return 0.0;
}

inline Mat2 kirchhoff_stress(const Material& m, const Mat2& F) {
  const double J = detail::det_checked(F);
  const Mat2 B = F * F.transpose();
  const Mat2 I = Mat2::Identity();
  switch (m.type) {
    case MaterialType::NH1: return m.mu * B + (m.kappa * J * (J - 1) - m.mu) * I;
    case MaterialType::NH2: return m.mu * B + (m.kappa * std::log(J) - m.mu) * I;
    case MaterialType::Ogden: {
      auto e = eigenprojections(B);
      Mat2 tau = m.kappa * J * (J - 1) * I;
      for (size_t i = 0; i < m.ogden_mu.size(); ++i) {
        double a = m.ogden_alpha[i];
        double beta = std::pow(J, -a / 3.0);
        double p1 = std::pow(e.l1sq, 0.5 * a), p2 = std::pow(e.l2sq, 0.5 * a);
        double T = p1 + p2 + 1.0;
        tau += m.ogden_mu[i] * beta * (p1 * e.E1 + p2 * e.E2 - T / 3.0 * I);
      }
      return tau;
    }
  }
  return Mat2::Zero();
}

// Spatial elasticity tensor of the Kirchhoff stress as a 4x4 matrix, rows/cols (11, 12, 21, 22).
inline Mat4 spatial_tangent(const Material& m, const Mat2& F) {
  using detail::delta;
  const double J = detail::det_checked(F);
  const Mat2 B = F * F.transpose();
  auto II = [&](int i, int j, int k, int l) { return delta(i, j) * delta(k, l); };
  auto Isym = [&](int i, int j, int k, int l) { return 0.5 * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k)); };
  switch (m.type) {
    case MaterialType::NH1: {
      double a = m.kappa * J * (2 * J - 1), b = 2 * (m.mu - m.kappa * J * (J - 1));
      return detail::to_matrix([&](int i, int j, int k, int l) { return a * II(i, j, k, l) + b * Isym(i, j, k, l); });
    }
    case MaterialType::NH2: {
      double a = m.kappa, b = 2 * (m.mu - m.kappa * std::log(J));
      return detail::to_matrix([&](int i, int j, int k, int l) { return a * II(i, j, k, l) + b * Isym(i, j, k, l); });
    }
    case MaterialType::Ogden: {
      auto e = eigenprojections(B);
      const Mat2 I = Mat2::Identity();
      Mat4 D = detail::to_matrix([&](int i, int j, int k, int l) {
        return m.kappa * J * (2 * J - 1) * II(i, j, k, l) - 2 * m.kappa * J * (J - 1) * Isym(i, j, k, l);
      });
      for (size_t q = 0; q < m.ogden_mu.size(); ++q) {
        double a = m.ogden_alpha[q];
        double mb = m.ogden_mu[q] * std::pow(J, -a / 3.0);
        double p1 = std::pow(e.l1sq, 0.5 * a), p2 = std::pow(e.l2sq, 0.5 * a);
        double T = p1 + p2 + 1.0;
        Mat2 dev = p1 * e.E1 + p2 * e.E2 - T / 3.0 * I;
        double dd = detail::divided_power(e.l1sq, e.l2sq, 0.5 * (a - 2.0));
        double q1 = e.l1sq * e.l1sq, q2 = e.l2sq * e.l2sq;
        D += mb * detail::to_matrix([&](int i, int j, int k, int l) {
          double EE = (a - 2.0) * (p1 * e.E1(i, j) * e.E1(k, l) + p2 * e.E2(i, j) * e.E2(k, l));
          double DI = -(a / 3.0) * (dev(i, j) * delta(k, l) + delta(i, j) * dev(k, l));
          double IB = 0.5 * (B(i, k) * B(j, l) + B(i, l) * B(j, k));
          double G = 2.0 * dd * (IB - q1 * e.E1(i, j) * e.E1(k, l) - q2 * e.E2(i, j) * e.E2(k, l));
          return EE + DI + G - (a * T / 9.0) * II(i, j, k, l) + (2.0 * T / 3.0) * Isym(i, j, k, l);
        });
      }
      return D;
    }
  }
  return Mat4::Zero();
}

}  // namespace csmfe
