#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace se3opt {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

template <typename T>
using Vec3T = Eigen::Matrix<T, 3, 1>;
template <typename T>
using Mat3T = Eigen::Matrix<T, 3, 3>;

/// Skew-symmetric matrix with hat(v) * w == v.cross(w).
template <typename T>
Mat3T<T> hat(const Vec3T<T>& v) {
  Mat3T<T> m;
  m << T(0), -v(2), v(1),
       v(2), T(0), -v(0),
       -v(1), v(0), T(0);
  return m;
}

inline Mat3 hat(const Vec3& v) { return hat<double>(v); }

/// Inverse of hat without the skew check; reads the lower triangle.
template <typename T>
Vec3T<T> vee_unchecked(const Mat3T<T>& m) {
  return Vec3T<T>(m(2, 1), m(0, 2), m(1, 0));
}

/// Inverse of hat. Throws GeometryError when ||m + m^T||_F > 1e-10.
Vec3 vee(const Mat3& m);

/// A proper rotation. Construction through `validated` checks
/// ||R^T R - I||_F <= 1e-10 and |det R - 1| <= 1e-10; products of rotations are trusted.
class RotationMatrix {
 public:
  static constexpr double kTolerance = 1e-10;

  RotationMatrix() : m_(Mat3::Identity()) {}

  static RotationMatrix validated(const Mat3& m);
  static RotationMatrix unchecked(const Mat3& m) { return RotationMatrix(m); }
  static RotationMatrix identity() { return RotationMatrix(); }

  const Mat3& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  RotationMatrix transpose() const { return RotationMatrix(m_.transpose()); }
  RotationMatrix operator*(const RotationMatrix& o) const { return RotationMatrix(m_ * o.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  /// ||R^T R - I||_F
  double orthonormality_error() const;

 private:
  explicit RotationMatrix(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

bool is_rotation(const Mat3& m, double tol = RotationMatrix::kTolerance);

/// Rodrigues formula; Taylor branch below ||v|| = 1e-6.
RotationMatrix exp_so3(const Vec3& v);

/// Principal logarithm, ||result|| < pi. Throws GeometryError when
/// trace(R) <= -1 + 1e-9, i.e. on (or numerically at) the cut locus.
Vec3 log_so3(const RotationMatrix& R);
Vec3 log_so3(const Mat3& R);

}  // namespace se3opt
