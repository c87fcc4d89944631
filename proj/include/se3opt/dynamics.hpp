#pragma once

#include <memory>
#include <vector>

#include "se3opt/autodiff.hpp"
#include "se3opt/geom3.hpp"

namespace se3opt {

/// Pose and momenta of one rigid body on T*SE(3).
struct State {
  RotationMatrix R;  ///< body-to-inertial attitude
  Vec3 x = Vec3::Zero();      ///< inertial position
  Vec3 Pi = Vec3::Zero();     ///< body-frame angular momentum
  Vec3 gamma = Vec3::Zero();  ///< inertial linear momentum

  bool is_finite() const {
    return R.matrix().allFinite() && x.allFinite() && Pi.allFinite() && gamma.allFinite();
  }
};

/// Control force (inertial frame) and control moment (body frame) at one node.
struct ControlSample {
  Vec3 uf = Vec3::Zero();
  Vec3 um = Vec3::Zero();

  static ControlSample zero() { return {}; }
};

/// Potential-induced force (inertial) and moment (body frame).
struct Wrench {
  Vec3 f = Vec3::Zero();
  Vec3 M = Vec3::Zero();
};

/// Wrench together with its derivatives with respect to position and to the
/// left-trivialized attitude variation zeta (R -> R exp(hat(zeta))).
template <typename T>
struct WrenchJacobian {
  Vec3T<T> f;
  Vec3T<T> M;
  Mat3T<T> f_x;
  Mat3T<T> f_zeta;
  Mat3T<T> M_x;
  Mat3T<T> M_zeta;
};

/// Configuration-dependent potential U(R, x). Implementations supply the wrench
/// and its first derivatives both in plain doubles and in dual numbers; the dual
/// overload lets the optimal-control layer differentiate the linearized flow.
class PotentialModel {
 public:
  virtual ~PotentialModel() = default;

  virtual double potential(const RotationMatrix& R, const Vec3& x) const = 0;
  virtual Wrench wrench(const RotationMatrix& R, const Vec3& x) const = 0;
  virtual WrenchJacobian<double> wrench_jacobian(const Mat3& R, const Vec3& x) const = 0;
  virtual WrenchJacobian<Ad12> wrench_jacobian(const Mat3T<Ad12>& R, const Vec3T<Ad12>& x) const = 0;

  /// Raw-matrix wrench for integrators that let R leave SO(3) (RK4 baseline).
  virtual Wrench wrench_raw(const Mat3& R, const Vec3& x) const = 0;
};

/// U = 0 everywhere. Used for free-body tests and the linear oracle problems.
class ZeroPotential final : public PotentialModel {
 public:
  double potential(const RotationMatrix&, const Vec3&) const override { return 0.0; }
  Wrench wrench(const RotationMatrix&, const Vec3&) const override { return {}; }
  WrenchJacobian<double> wrench_jacobian(const Mat3& R, const Vec3& x) const override;
  WrenchJacobian<Ad12> wrench_jacobian(const Mat3T<Ad12>& R, const Vec3T<Ad12>& x) const override;
  Wrench wrench_raw(const Mat3&, const Vec3&) const override { return {}; }
};

/// Equal point-mass spheres at body-frame offsets rho_q in the field of a central
/// body with gravitational parameter mu:
///   U = -(mu m / nq) sum_q 1 / ||x + R rho_q||.
/// Two spheres give the dumbbell model.
class CentralGravitySpheres final : public PotentialModel {
 public:
  static constexpr double kMinSeparation = 1e-9;

  CentralGravitySpheres(double mu, double mass, std::vector<Vec3> offsets);

  double mu() const { return mu_; }
  double mass() const { return mass_; }
  const std::vector<Vec3>& offsets() const { return offsets_; }

  double potential(const RotationMatrix& R, const Vec3& x) const override;
  Wrench wrench(const RotationMatrix& R, const Vec3& x) const override;
  WrenchJacobian<double> wrench_jacobian(const Mat3& R, const Vec3& x) const override;
  WrenchJacobian<Ad12> wrench_jacobian(const Mat3T<Ad12>& R, const Vec3T<Ad12>& x) const override;
  Wrench wrench_raw(const Mat3& R, const Vec3& x) const override;

 private:
  template <typename T>
  WrenchJacobian<T> jacobian_impl(const Mat3T<T>& R, const Vec3T<T>& x) const;

  double mu_;
  double mass_;
  std::vector<Vec3> offsets_;
};

/// Mass, inertia and the potential acting on one body.
struct BodyParams {
  double m = 1.0;
  Mat3 J = Mat3::Identity();
  Mat3 Jd = 0.5 * Mat3::Identity();  ///< 0.5 tr(J) I - J
  std::shared_ptr<const PotentialModel> potential = std::make_shared<ZeroPotential>();

  /// Body with the given mass and inertia; throws GeometryError unless m > 0 and J is SPD.
  static BodyParams make(double m, const Mat3& J, std::shared_ptr<const PotentialModel> potential);

  /// Dumbbell: two spheres of mass m/2 and radius `sphere_radius` at +-half_length
  /// along the body x-axis, in a central field with parameter mu.
  static BodyParams dumbbell(double m, double half_length, double sphere_radius, double mu);

  /// Throws unless m > 0, J SPD, and Jd matches 0.5 tr(J) I - J exactly.
  void validate() const;
};

Mat3 nonstandard_inertia(const Mat3& J);

double potential(const BodyParams& params, const RotationMatrix& R, const Vec3& x);
Vec3 force(const BodyParams& params, const RotationMatrix& R, const Vec3& x);
Vec3 moment(const BodyParams& params, const RotationMatrix& R, const Vec3& x);

/// |gamma|^2 / 2m + Pi^T J^-1 Pi / 2 + U
double total_energy(const BodyParams& params, const State& s);

/// Normalized gravitational parameter: a radius-1 circular orbit has period 1.
inline constexpr double kNormalizedMu = 4.0 * 3.14159265358979323846 * 3.14159265358979323846;

}  // namespace se3opt
