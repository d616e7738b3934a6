#pragma once

#include "csmfe/common.hpp"

#include <numbers>
#include <vector>

namespace csmfe {

struct TriangleRule {
  std::vector<Vec2> points;  // natural coordinates (r, s)
  std::vector<double> weights;  // sum to 1/2
  int degree = 0;
};

struct EdgeRule {
  std::vector<double> points;  // arc length in [0, L]
  std::vector<double> weights;  // sum to L
};

// Symmetric 13-point rule of degree 7 (Dunavant). The centroid weight is negative.
inline const TriangleRule& triangle_rule_13() {
  static const TriangleRule rule = [] {
    TriangleRule q;
    q.degree = 7;
    auto add3 = [&](double a, double w) {
      double b = 1.0 - 2.0 * a;
      q.points.push_back({a, a});
      q.points.push_back({b, a});
      q.points.push_back({a, b});
      for (int i = 0; i < 3; ++i) q.weights.push_back(0.5 * w);
    };
    auto add6 = [&](double a, double b, double w) {
      double c = 1.0 - a - b;
      const double p[6][2] = {{a, b}, {b, a}, {a, c}, {c, a}, {b, c}, {c, b}};
      for (auto& x : p) {
        q.points.push_back({x[0], x[1]});
        q.weights.push_back(0.5 * w);
      }
    };
    q.points.push_back({1.0 / 3.0, 1.0 / 3.0});
    q.weights.push_back(0.5 * -0.149570044467682);
    add3(0.260345966079040, 0.175615257433208);
    add3(0.065130102902216, 0.053347235608838);
    add6(0.048690315425316, 0.312865496004874, 0.077113760890257);
    return q;
  }();
  return rule;
}

// Gauss-Legendre points on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  if (n < 1) throw Error("gauss_legendre: need at least one point");
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n == 1) {
    x[0] = 0.0;
    w[0] = 2.0;
  }
}

inline EdgeRule edge_rule(int n_points, double length) {
  if (n_points < 1) throw Error("edge_rule: n_points must be >= 1");
  std::vector<double> x, w;
  gauss_legendre(n_points, x, w);
  EdgeRule e;
  for (int i = 0; i < n_points; ++i) {
    e.points.push_back(0.5 * length * (x[i] + 1.0));
    e.weights.push_back(0.5 * length * w[i]);
  }
  return e;
}

}  // namespace csmfe
