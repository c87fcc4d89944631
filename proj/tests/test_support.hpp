#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "se3opt/dynamics.hpp"
#include "se3opt/geom3.hpp"

namespace se3opt::testing {

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  return Vec3(n(rng), n(rng), n(rng));
}

/// Dumbbell with half-length d and sphere radius d/4 in the normalized central field.
inline BodyParams dumbbell(double d = 0.01) { return BodyParams::dumbbell(1.0, d, 0.25 * d, kNormalizedMu); }

/// Dumbbell on a circular orbit of radius r, rod tilted off radial and tumbling
/// at angular rate `spin` about a skewed body axis.
inline State tumbling_orbit_state(const BodyParams& p, double r = 1.0, double spin = 5.0) {
  State s;
  s.R = exp_so3(Vec3(0.3, -0.2, 0.5));
  s.x = Vec3(r, 0.0, 0.0);
  s.gamma = Vec3(0.0, p.m * std::sqrt(kNormalizedMu / r), 0.0);
  s.Pi = p.J * (spin * Vec3(0.2, 0.5, 1.0).normalized());
  return s;
}

/// Stacked 12-vector difference (log(Ra^T Rb), xb - xa, Pib - Pia, gammab - gammaa).
inline Eigen::Matrix<double, 12, 1> state_difference(const State& a, const State& b) {
  Eigen::Matrix<double, 12, 1> d;
  d << log_so3(a.R.transpose() * b.R), b.x - a.x, b.Pi - a.Pi, b.gamma - a.gamma;
  return d;
}

/// Least-squares slope of log(err) against log(h).
template <typename Container>
double loglog_slope(const Container& hs, const Container& errs) {
  const std::size_t n = hs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(hs[i]);
    const double ly = std::log(errs[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace se3opt::testing
