#include "se3opt/dynamics.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

#include "se3opt/error.hpp"

namespace se3opt {

namespace {

[[noreturn]] void throw_collision(int sphere, double separation) {
  std::ostringstream os;
  os << "sphere " << sphere << " is " << separation << " from the attracting center";
  throw SingularityError(os.str(), sphere);
}

template <typename T>
WrenchJacobian<T> zero_jacobian() {
  WrenchJacobian<T> j;
  j.f.setZero();
  j.M.setZero();
  j.f_x.setZero();
  j.f_zeta.setZero();
  j.M_x.setZero();
  j.M_zeta.setZero();
  return j;
}

}  // namespace

WrenchJacobian<double> ZeroPotential::wrench_jacobian(const Mat3&, const Vec3&) const {
  return zero_jacobian<double>();
}

WrenchJacobian<Ad12> ZeroPotential::wrench_jacobian(const Mat3T<Ad12>&, const Vec3T<Ad12>&) const {
  return zero_jacobian<Ad12>();
}

CentralGravitySpheres::CentralGravitySpheres(double mu, double mass, std::vector<Vec3> offsets)
    : mu_(mu), mass_(mass), offsets_(std::move(offsets)) {
  if (!(mu_ > 0.0) || !(mass_ > 0.0)) throw GeometryError("central gravity requires mu > 0 and m > 0");
  if (offsets_.empty()) throw GeometryError("central gravity requires at least one sphere");
}

double CentralGravitySpheres::potential(const RotationMatrix& R, const Vec3& x) const {
  const double k = mu_ * mass_ / static_cast<double>(offsets_.size());
  double u = 0.0;
  for (std::size_t q = 0; q < offsets_.size(); ++q) {
    const double r = (x + R * offsets_[q]).norm();
    if (!(r > kMinSeparation)) throw_collision(static_cast<int>(q), r);
    u -= k / r;
  }
  return u;
}

Wrench CentralGravitySpheres::wrench_raw(const Mat3& R, const Vec3& x) const {
  const double k = mu_ * mass_ / static_cast<double>(offsets_.size());
  Wrench w;
  for (std::size_t q = 0; q < offsets_.size(); ++q) {
    const Vec3 p = x + R * offsets_[q];
    const double r = p.norm();
    if (!(r > kMinSeparation)) throw_collision(static_cast<int>(q), r);
    const Vec3 fq = -k / (r * r * r) * p;
    w.f += fq;
    w.M += offsets_[q].cross(R.transpose() * fq);
  }
  return w;
}

Wrench CentralGravitySpheres::wrench(const RotationMatrix& R, const Vec3& x) const {
  return wrench_raw(R.matrix(), x);
}

template <typename T>
WrenchJacobian<T> CentralGravitySpheres::jacobian_impl(const Mat3T<T>& R, const Vec3T<T>& x) const {
  using std::sqrt;
  const double k = mu_ * mass_ / static_cast<double>(offsets_.size());
  WrenchJacobian<T> j = zero_jacobian<T>();
  const Mat3T<T> Rt = R.transpose();
  for (std::size_t q = 0; q < offsets_.size(); ++q) {
    const Vec3T<T> rho = offsets_[q].cast<T>();
    const Vec3T<T> p = x + R * rho;
    const T r2 = p.squaredNorm();
    const T r = sqrt(r2);
    if (!(value_of(r) > kMinSeparation)) throw_collision(static_cast<int>(q), value_of(r));
    const T inv_r3 = T(1.0) / (r2 * r);
    const T inv_r5 = inv_r3 / r2;
    const Vec3T<T> fq = -k * inv_r3 * p;
    // d fq / d p (symmetric)
    const Mat3T<T> G = -k * (inv_r3 * Mat3T<T>::Identity() - T(3.0) * inv_r5 * p * p.transpose());
    const Mat3T<T> S_rho = hat<T>(rho);
    const Vec3T<T> f_body = Rt * fq;

    j.f += fq;
    j.M += S_rho * f_body;
    j.f_x += G;
    j.f_zeta -= G * R * S_rho;
    j.M_x += S_rho * Rt * G;
    j.M_zeta += S_rho * hat<T>(f_body) - S_rho * Rt * G * R * S_rho;
  }
  return j;
}

WrenchJacobian<double> CentralGravitySpheres::wrench_jacobian(const Mat3& R, const Vec3& x) const {
  return jacobian_impl<double>(R, x);
}

WrenchJacobian<Ad12> CentralGravitySpheres::wrench_jacobian(const Mat3T<Ad12>& R,
                                                            const Vec3T<Ad12>& x) const {
  return jacobian_impl<Ad12>(R, x);
}

Mat3 nonstandard_inertia(const Mat3& J) { return 0.5 * J.trace() * Mat3::Identity() - J; }

BodyParams BodyParams::make(double m, const Mat3& J, std::shared_ptr<const PotentialModel> potential) {
  BodyParams p;
  p.m = m;
  p.J = J;
  p.Jd = nonstandard_inertia(J);
  p.potential = potential ? std::move(potential) : std::make_shared<ZeroPotential>();
  p.validate();
  return p;
}

BodyParams BodyParams::dumbbell(double m, double half_length, double sphere_radius, double mu) {
  const Vec3 rho(half_length, 0.0, 0.0);
  Mat3 J = m * half_length * half_length * Vec3(0.0, 1.0, 1.0).asDiagonal().toDenseMatrix();
  J += 0.4 * m * sphere_radius * sphere_radius * Mat3::Identity();
  auto model = std::make_shared<CentralGravitySpheres>(mu, m, std::vector<Vec3>{rho, -rho});
  return make(m, J, std::move(model));
}

void BodyParams::validate() const {
  if (!(m > 0.0) || !std::isfinite(m)) throw GeometryError("body mass must be positive and finite");
  if (!J.allFinite() || (J - J.transpose()).norm() > 1e-14 * std::max(1.0, J.norm()))
    throw GeometryError("inertia must be finite and symmetric");
  Eigen::LLT<Mat3> llt(J);
  if (llt.info() != Eigen::Success) throw GeometryError("inertia must be positive definite");
  if (Jd != nonstandard_inertia(J)) throw GeometryError("Jd must equal 0.5 tr(J) I - J");
  if (!potential) throw GeometryError("body has no potential model");
}

double potential(const BodyParams& params, const RotationMatrix& R, const Vec3& x) {
  return params.potential->potential(R, x);
}

Vec3 force(const BodyParams& params, const RotationMatrix& R, const Vec3& x) {
  return params.potential->wrench(R, x).f;
}

Vec3 moment(const BodyParams& params, const RotationMatrix& R, const Vec3& x) {
  return params.potential->wrench(R, x).M;
}

double total_energy(const BodyParams& params, const State& s) {
  const Vec3 omega = params.J.ldlt().solve(s.Pi);
  return 0.5 * s.gamma.squaredNorm() / params.m + 0.5 * s.Pi.dot(omega) + potential(params, s.R, s.x);
}

}  // namespace se3opt
