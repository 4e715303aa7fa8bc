#pragma once

// Rotation algebra on SO(3): unit quaternions, rotation vectors, Rodrigues.
//
// Conventions (used everywhere in the library):
//  - quaternions are scalar-first (w, x, y, z) with the Hamilton product;
//  - R(q) maps body/sensor-frame vectors into the global frame, so a global
//    reference v is observed in the sensor as R(q)^T v = rotate_vec(q^-1, v);
//  - body rates integrate by right multiplication: q <- q * exp(omega * dt).

#include "revkf/scalar.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace revkf {

template <typename T>
using Vec3 = Eigen::Matrix<T, 3, 1>;
template <typename T>
using Mat3 = Eigen::Matrix<T, 3, 3>;
template <typename T>
using Vec6 = Eigen::Matrix<T, 6, 1>;
template <typename T>
using Mat6 = Eigen::Matrix<T, 6, 6>;

template <typename T>
struct UnitQuaternion {
  T w{1};
  T x{0};
  T y{0};
  T z{0};

  static UnitQuaternion identity() { return {}; }

  /// Normalizes the given components.
  static UnitQuaternion from_components(const T& w, const T& x, const T& y, const T& z) {
    using std::sqrt;
    const T n = sqrt(w * w + x * x + y * y + z * z);
    return {w / n, x / n, y / n, z / n};
  }

  Vec3<T> vec() const { return Vec3<T>(x, y, z); }

  UnitQuaternion operator-() const { return {-w, -x, -y, -z}; }

  template <typename U>
  UnitQuaternion<U> cast() const {
    return {U(w), U(x), U(y), U(z)};
  }
};

template <typename T>
Mat3<T> skew(const Vec3<T>& v) {
  Mat3<T> m;
  m << T(0), -v.z(), v.y(),
       v.z(), T(0), -v.x(),
       -v.y(), v.x(), T(0);
  return m;
}

/// Rodrigues: I + sin(a)[u]x + (1 - cos a)[u]x^2 with a = |u|, written on the
/// unnormalized vector so the small-angle branch needs no division.
template <typename T>
Mat3<T> so3_exp(const Vec3<T>& u) {
  using std::sin;
  using std::sqrt;
  const T a2 = u.squaredNorm();
  const T a = sqrt(a2);
  T c1;  // sin(a)/a
  T c2;  // (1 - cos a)/a^2
  if (a < small_angle_threshold<T>()) {
    c1 = T(1) - a2 / 6;
    c2 = T(1) / 2 - a2 / 24;
  } else {
    const T s = sin(a / 2);
    c1 = sin(a) / a;
    c2 = T(2) * s * s / a2;
  }
  const Mat3<T> k = skew(u);
  return Mat3<T>::Identity() + c1 * k + c2 * k * k;
}

template <typename T>
UnitQuaternion<T> quat_exp(const Vec3<T>& u) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const T a2 = u.squaredNorm();
  const T a = sqrt(a2);
  T w;
  T s;  // sin(a/2)/a
  if (a < small_angle_threshold<T>()) {
    w = T(1) - a2 / 8;
    s = T(1) / 2 - a2 / 48;
  } else {
    w = cos(a / 2);
    s = sin(a / 2) / a;
  }
  return UnitQuaternion<T>::from_components(w, s * u.x(), s * u.y(), s * u.z());
}

/// Principal-branch logarithm; the sign of q is canonicalized to w >= 0 first.
template <typename T>
Vec3<T> quat_log(const UnitQuaternion<T>& q_in) {
  using std::atan2;
  using std::sqrt;
  const UnitQuaternion<T> q = q_in.w < 0 ? -q_in : q_in;
  const Vec3<T> v = q.vec();
  const T n = v.norm();
  if (n < small_angle_threshold<T>()) {
    // 2 atan(n/w)/n = (2/w)(1 - n^2/(3 w^2) + ...)
    return (T(2) / q.w) * (T(1) - n * n / (T(3) * q.w * q.w)) * v;
  }
  const T alpha = T(2) * atan2(n, q.w);
  return (alpha / n) * v;
}

template <typename T>
UnitQuaternion<T> quat_mul(const UnitQuaternion<T>& a, const UnitQuaternion<T>& b) {
  return UnitQuaternion<T>::from_components(
      a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
      a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
      a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
      a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w);
}

template <typename T>
UnitQuaternion<T> quat_inverse(const UnitQuaternion<T>& q) {
  return {q.w, -q.x, -q.y, -q.z};
}

/// q (0|v) q^-1, i.e. R(q) v.
template <typename T>
Vec3<T> rotate_vec(const UnitQuaternion<T>& q, const Vec3<T>& v) {
  const Vec3<T> qv = q.vec();
  const Vec3<T> t = T(2) * qv.cross(v);
  return v + q.w * t + qv.cross(t);
}

template <typename T>
Mat3<T> to_matrix(const UnitQuaternion<T>& q) {
  const T ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
  const T xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
  const T wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
  Mat3<T> r;
  r << ww + xx - yy - zz, T(2) * (xy - wz), T(2) * (xz + wy),
       T(2) * (xy + wz), ww - xx + yy - zz, T(2) * (yz - wx),
       T(2) * (xz - wy), T(2) * (yz + wx), ww - xx - yy + zz;
  return r;
}

/// Inverse of to_matrix for a proper rotation (Shepperd's branch selection).
template <typename T>
UnitQuaternion<T> from_matrix(const Mat3<T>& r) {
  using std::sqrt;
  const T tr = r.trace();
  if (tr >= r(0, 0) && tr >= r(1, 1) && tr >= r(2, 2)) {
    const T s = sqrt(T(1) + tr) * 2;
    return UnitQuaternion<T>::from_components(s / 4, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s,
                                              (r(1, 0) - r(0, 1)) / s);
  }
  if (r(0, 0) >= r(1, 1) && r(0, 0) >= r(2, 2)) {
    const T s = sqrt(T(1) + r(0, 0) - r(1, 1) - r(2, 2)) * 2;
    return UnitQuaternion<T>::from_components((r(2, 1) - r(1, 2)) / s, s / 4, (r(0, 1) + r(1, 0)) / s,
                                              (r(0, 2) + r(2, 0)) / s);
  }
  if (r(1, 1) >= r(2, 2)) {
    const T s = sqrt(T(1) + r(1, 1) - r(0, 0) - r(2, 2)) * 2;
    return UnitQuaternion<T>::from_components((r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, s / 4,
                                              (r(1, 2) + r(2, 1)) / s);
  }
  const T s = sqrt(T(1) + r(2, 2) - r(0, 0) - r(1, 1)) * 2;
  return UnitQuaternion<T>::from_components((r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s,
                                            (r(1, 2) + r(2, 1)) / s, s / 4);
}

/// Rotation angle of a^-1 b, in [0, pi].
template <typename T>
T geodesic_distance(const UnitQuaternion<T>& a, const UnitQuaternion<T>& b) {
  return quat_log(quat_mul(quat_inverse(a), b)).norm();
}

/// Minimal rotation taking unit `from` onto unit `to` (undefined for antiparallel input).
template <typename T>
UnitQuaternion<T> minimal_rotation(const Vec3<T>& from, const Vec3<T>& to) {
  const T c = from.dot(to);
  const Vec3<T> axis = from.cross(to);
  return UnitQuaternion<T>::from_components(T(1) + c, axis.x(), axis.y(), axis.z());
}

template <typename T>
Vec3<T> normalized(const Vec3<T>& v) {
  return v / v.norm();
}

}  // namespace revkf
