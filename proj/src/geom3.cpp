#include "se3opt/geom3.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "se3opt/error.hpp"

namespace se3opt {

namespace {
constexpr double kSmallAngle = 1e-6;
constexpr double kSkewTolerance = 1e-10;
constexpr double kCutLocusMargin = 1e-9;
}  // namespace

Vec3 vee(const Mat3& m) {
  const double asym = (m + m.transpose()).norm();
  if (!(asym <= kSkewTolerance)) {
    std::ostringstream os;
    os << "vee: matrix is not skew-symmetric (||m + m^T||_F = " << asym << ")";
    throw GeometryError(os.str());
  }
  return Vec3(0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)), 0.5 * (m(1, 0) - m(0, 1)));
}

double RotationMatrix::orthonormality_error() const {
  return (m_.transpose() * m_ - Mat3::Identity()).norm();
}

bool is_rotation(const Mat3& m, double tol) {
  if (!m.allFinite()) return false;
  const double ortho = (m.transpose() * m - Mat3::Identity()).norm();
  return ortho <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

RotationMatrix RotationMatrix::validated(const Mat3& m) {
  if (!is_rotation(m)) {
    std::ostringstream os;
    os << "not a rotation matrix: ||R^T R - I||_F = "
       << (m.transpose() * m - Mat3::Identity()).norm() << ", det = " << m.determinant();
    throw GeometryError(os.str());
  }
  return RotationMatrix(m);
}

RotationMatrix exp_so3(const Vec3& v) {
  const double theta2 = v.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 K = hat(v);
  double a;  // sin(theta) / theta
  double b;  // (1 - cos(theta)) / theta^2
  if (theta < kSmallAngle) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return RotationMatrix::unchecked(Mat3::Identity() + a * K + b * K * K);
}

Vec3 log_so3(const Mat3& R) {
  const double tr = R.trace();
  if (tr <= -1.0 + kCutLocusMargin) {
    std::ostringstream os;
    os << "log_so3: rotation angle is pi (trace = " << tr << "); logarithm is not unique";
    throw GeometryError(os.str());
  }
  const double c = std::clamp(0.5 * (tr - 1.0), -1.0, 1.0);
  const double theta = std::acos(c);
  const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  if (theta < kSmallAngle) {
    // theta / (2 sin theta) ~ 1/2 + theta^2 / 12
    return (0.5 + theta * theta / 12.0) * w;
  }
  if (theta > 3.0) {
    // Near pi the antisymmetric part loses precision; recover the axis from the
    // symmetric part and take the sign from the antisymmetric part.
    const Mat3 B = 0.5 * (R + R.transpose()) - c * Mat3::Identity();
    int k = 0;
    B.diagonal().maxCoeff(&k);
    Vec3 axis = B.col(k) / std::sqrt(std::max(B(k, k), 0.0) * (1.0 - c));
    axis.normalize();
    if (axis.dot(w) < 0.0) axis = -axis;
    return theta * axis;
  }
  return theta / (2.0 * std::sin(theta)) * w;
}

Vec3 log_so3(const RotationMatrix& R) { return log_so3(R.matrix()); }

}  // namespace se3opt
