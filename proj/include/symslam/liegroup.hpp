#pragma once

// SO(3)/SE(3) helpers used throughout the backend.
//
// Conventions:
//   * Rotations are plain 3x3 matrices acting on column vectors.
//   * se(3) tangent vectors are ordered (translation, rotation).
//   * Spherical axes use the physics convention: phi is measured from +z,
//     psi is the azimuth in the xy-plane.

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace symslam {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Rotation = Eigen::Matrix3d;
using AxisAngle = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSmallAngle = 1e-8;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle to [-pi, pi).
inline double wrap_pi(double a) {
  double w = std::fmod(a + kPi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  w -= kPi;
  return w >= kPi ? w - kTwoPi : w;
}

/// Wraps an angle to [0, 2pi).
inline double wrap_two_pi(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w >= kTwoPi ? 0.0 : w;
}

inline double circular_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

inline Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

/// Flips v so that its first component with magnitude above eps is positive.
inline Vec3 canonical_sign_first_nonzero(const Vec3& v, double eps = 1e-12) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v[i]) > eps) return v[i] > 0.0 ? v : Vec3(-v);
  }
  return v;
}

/// Flips v so that its largest-magnitude component is positive.
inline Vec3 canonical_sign_largest(const Vec3& v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  return v[idx] >= 0.0 ? v : Vec3(-v);
}

inline Rotation so3_exp(const AxisAngle& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 W = skew(w);
  if (theta < kSmallAngle) {
    return Mat3::Identity() + W + 0.5 * W * W;
  }
  return Mat3::Identity() + (std::sin(theta) / theta) * W +
         ((1.0 - std::cos(theta)) / theta2) * W * W;
}

/// Logarithm of a rotation, returning a rotation vector with norm <= pi.
/// At exactly pi the axis sign is fixed so its first nonzero component is
/// positive.
inline AxisAngle so3_log(const Rotation& r) {
  const Vec3 v = vee(r - r.transpose());  // 2 sin(theta) * axis
  const double s = 0.5 * v.norm();
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(s, c);

  if (theta < kSmallAngle) {
    // theta / (2 sin theta) ~ 1/2 + theta^2 / 12
    return (0.5 + theta * theta / 12.0) * v;
  }
  if (s > 1e-4 || c > 0.0) {
    return (theta / (2.0 * s)) * v;
  }

  // Near pi: recover the axis from the symmetric part, a a^T = (R + R^T - 2c I) / (2 (1 - c)).
  const Mat3 aat = (r + r.transpose() - 2.0 * c * Mat3::Identity()) / (2.0 * (1.0 - c));
  Eigen::Index k = 0;
  aat.diagonal().maxCoeff(&k);
  Vec3 axis = aat.col(k) / std::sqrt(std::max(aat(k, k), 1e-300));
  axis.normalize();
  if (v.norm() > 1e-12) {
    if (axis.dot(v) < 0.0) axis = -axis;
  } else {
    axis = canonical_sign_first_nonzero(axis);
  }
  return theta * axis;
}

/// Rigid transform x_parent = rotation * x_child + translation.
struct Pose {
  Rotation rotation = Rotation::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  bool is_finite() const { return rotation.allFinite() && translation.allFinite(); }
};

inline Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

inline Pose invert(const Pose& a) {
  const Rotation rt = a.rotation.transpose();
  return {rt, -(rt * a.translation)};
}

inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

namespace detail {

// Below this angle the Jacobian coefficients switch to their series; the
// closed forms lose about 1e-16 / theta^2 to cancellation.
inline constexpr double kJacobianSeriesAngle = 1e-2;

// Left Jacobian V of SO(3), so that t = V * rho in the SE(3) exponential.
inline Mat3 so3_left_jacobian(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 W = skew(w);
  double a;  // (1 - cos) / theta^2
  double b;  // (theta - sin) / theta^3
  if (theta < kJacobianSeriesAngle) {
    a = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
    b = 1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0;
  } else {
    const double h = std::sin(0.5 * theta);
    a = 2.0 * h * h / theta2;
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3::Identity() + a * W + b * W * W;
}

inline Mat3 so3_left_jacobian_inverse(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 W = skew(w);
  double c;  // (1 - (theta/2) cot(theta/2)) / theta^2
  if (theta < kJacobianSeriesAngle) {
    c = 1.0 / 12.0 + theta2 / 720.0 + theta2 * theta2 / 30240.0;
  } else {
    const double half = 0.5 * theta;
    c = (1.0 - half * std::cos(half) / std::sin(half)) / theta2;
  }
  return Mat3::Identity() - 0.5 * W + c * W * W;
}

}  // namespace detail

inline Pose se3_exp(const Vec6& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 w = xi.tail<3>();
  return {so3_exp(w), detail::so3_left_jacobian(w) * rho};
}

/// Returns (translational part, rotational part).
inline Vec6 se3_log(const Pose& p) {
  const Vec3 w = so3_log(p.rotation);
  Vec6 xi;
  xi.head<3>() = detail::so3_left_jacobian_inverse(w) * p.translation;
  xi.tail<3>() = w;
  return xi;
}

/// Geodesic angle between two rotations.
inline double rotation_distance(const Rotation& a, const Rotation& b) {
  return so3_log(a.transpose() * b).norm();
}

/// Polar angle phi in [0, pi], azimuth psi in [-pi, pi).
struct SphericalAxis {
  double phi = 0.0;
  double psi = 0.0;
};

inline Vec3 axis_to_vector(const SphericalAxis& s) {
  const double sp = std::sin(s.phi);
  return {sp * std::cos(s.psi), sp * std::sin(s.psi), std::cos(s.phi)};
}

inline SphericalAxis vector_to_axis(const Vec3& v) {
  const Vec3 u = v.normalized();
  const double rho = std::hypot(u.x(), u.y());
  SphericalAxis s;
  s.phi = std::atan2(rho, u.z());
  s.psi = rho < 1e-15 ? 0.0 : wrap_pi(std::atan2(u.y(), u.x()));
  return s;
}

/// Unsigned angle between two lines (axis directions without orientation).
inline double line_angle(const Vec3& a, const Vec3& b) {
  const double c = std::abs(a.normalized().dot(b.normalized()));
  const double s = a.normalized().cross(b.normalized()).norm();
  return std::atan2(s, c);
}

/// Minimal rotation taking unit vector `from` onto unit vector `to`.
inline Rotation align_vectors(const Vec3& from, const Vec3& to) {
  return Eigen::Quaterniond::FromTwoVectors(from, to).toRotationMatrix();
}

/// Rotation angle of the twist component of r about `axis`, in [0, 2pi).
inline double twist_angle(const Rotation& r, const Vec3& axis) {
  Eigen::Quaterniond q(r);
  const double along = q.vec().dot(axis.normalized());
  return wrap_two_pi(2.0 * std::atan2(along, q.w()));
}

/// Quaternion-eigenvector mean of a set of rotations (sign-invariant).
template <typename Range>
Rotation average_rotations(const Range& rotations) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  for (const Rotation& r : rotations) {
    Eigen::Quaterniond q(r);
    const Eigen::Vector4d v(q.w(), q.x(), q.y(), q.z());
    m += v * v.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(m);
  Eigen::Vector4d best = es.eigenvectors().col(3);
  if (best[0] < 0.0) best = -best;
  Eigen::Quaterniond q(best[0], best[1], best[2], best[3]);
  return q.normalized().toRotationMatrix();
}

}  // namespace symslam
