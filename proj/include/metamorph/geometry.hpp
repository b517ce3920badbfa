#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace metamorph {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat4 = Eigen::Matrix4d;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;
using Vec3i = Eigen::Vector3i;

inline constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

inline Mat3 skew(const Vec3& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

// Proper rigid motion x -> R x + t.
struct Rigid {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static Rigid identity() { return {}; }
  Rigid operator*(const Rigid& o) const { return {R * o.R, R * o.t + t}; }
  Vec3 apply(const Vec3& x) const { return R * x + t; }
  Rigid inverse() const {
    Mat3 Rt = R.transpose();
    return {Rt, -(Rt * t)};
  }
  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = R;
    m.topRightCorner<3, 1>() = t;
    return m;
  }
};

inline Mat3 axis_rotation(const Vec3& unit_axis, double angle) {
  return Eigen::AngleAxisd(angle, unit_axis).toRotationMatrix();
}

// Rotation by `angle` about the line through `point` with direction `unit_axis`.
inline Rigid screw_rotation(const Vec3& unit_axis, const Vec3& point, double angle) {
  Mat3 R = axis_rotation(unit_axis, angle);
  return {R, point - R * point};
}

// Axis-angle logarithm of a rotation matrix.
inline Vec3 so3_log(const Mat3& R) {
  Eigen::AngleAxisd aa(R);
  double a = aa.angle();
  if (a > kPi) a -= 2 * kPi;
  return aa.axis() * a;
}

// Inverse of the left Jacobian of SO(3) at phi: maps spatial angular
// velocity to d(log R)/dt.
inline Mat3 so3_left_jacobian_inv(const Vec3& phi) {
  double a = phi.norm();
  Mat3 W = skew(phi);
  if (a < 1e-8) return Mat3::Identity() - 0.5 * W + W * W / 12.0;
  double half = 0.5 * a;
  double c = (1.0 - half * std::cos(half) / std::sin(half)) / (a * a);
  return Mat3::Identity() - 0.5 * W + c * W * W;
}

inline double orthonormality_error(const Mat3& R) {
  return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
}

inline Vec3i round_vec(const Vec3& v) {
  return Vec3i(static_cast<int>(std::lround(v.x())), static_cast<int>(std::lround(v.y())),
               static_cast<int>(std::lround(v.z())));
}

// Shortest distance between two lines given by point + unit direction.
inline double line_distance(const Vec3& p1, const Vec3& u1, const Vec3& p2, const Vec3& u2) {
  Vec3 n = u1.cross(u2);
  Vec3 w = p2 - p1;
  if (n.norm() < 1e-12) return (w - w.dot(u1) * u1).norm();
  return std::abs(w.dot(n)) / n.norm();
}

}  // namespace metamorph
