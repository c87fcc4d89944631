#pragma once

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

namespace se3opt {

/// Forward-mode dual number carrying derivatives along the 12 state-variation
/// directions (zeta, dx, dPi, dgamma).
using Ad12 = Eigen::AutoDiffScalar<Eigen::Matrix<double, 12, 1>>;

inline double value_of(double v) { return v; }
inline double value_of(const Ad12& v) { return v.value(); }

}  // namespace se3opt
