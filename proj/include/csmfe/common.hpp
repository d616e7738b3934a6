#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace csmfe {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NonPositiveJacobian : public Error {
public:
  NonPositiveJacobian(int tri, double r, double s, double detF)
      : Error("non-positive det F = " + std::to_string(detF) + " in triangle " + std::to_string(tri) +
              " at (" + std::to_string(r) + ", " + std::to_string(s) + ")"),
        tri(tri), r(r), s(s) {}
  int tri;
  double r, s;
};

// 2x2 tensor <-> 4-vector in (11, 12, 21, 22) order
inline Vec4 to_vec4(const Mat2& A) { return Vec4(A(0, 0), A(0, 1), A(1, 0), A(1, 1)); }
inline Mat2 to_mat2(const Vec4& v) {
  Mat2 A;
  A << v(0), v(1), v(2), v(3);
  return A;
}

}  // namespace csmfe
