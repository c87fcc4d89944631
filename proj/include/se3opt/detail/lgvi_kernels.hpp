#pragma once

#include "se3opt/geom3.hpp"

namespace se3opt::detail {

/// vee(F Jd - Jd F^T)
template <typename T>
Vec3T<T> implicit_residual(const Mat3T<T>& F, const Mat3& Jd) {
  const Mat3T<T> X = F * Jd.cast<T>();
  return Vec3T<T>(X(2, 1) - X(1, 2), X(0, 2) - X(2, 0), X(1, 0) - X(0, 1));
}

/// Derivative of implicit_residual under F -> F exp(hat(phi)):
/// column i is vee(F hat(e_i) Jd + Jd hat(e_i) F^T).
template <typename T>
Mat3T<T> implicit_jacobian(const Mat3T<T>& F, const Mat3& Jd) {
  Mat3T<T> D;
  for (int i = 0; i < 3; ++i) {
    Vec3T<T> e = Vec3T<T>::Zero();
    e(i) = T(1.0);
    const Mat3T<T> X = F * hat<T>(e) * Jd.cast<T>();
    D.col(i) = Vec3T<T>(X(2, 1) - X(1, 2), X(0, 2) - X(2, 0), X(1, 0) - X(0, 1));
  }
  return D;
}

}  // namespace se3opt::detail
