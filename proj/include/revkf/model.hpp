#pragma once

// Global-frame references shared by the sensor model and the filters.

#include "revkf/rotation.hpp"

#include <stdexcept>

namespace revkf {

/// Unit field with 60 degree inclination, pointing north (+y) and down.
template <typename T>
Vec3<T> default_magnetic_field() {
  using std::sqrt;
  return Vec3<T>(T(0), T(1) / 2, -sqrt(T(3)) / 2);
}

/// Gravity and magnetic field expressed in the global frame. A static
/// accelerometer reads R(q)^T g; a magnetometer reads R(q)^T b.
template <typename T>
struct ReferenceVectors {
  Vec3<T> g{T(0), T(0), T(981) / 100};
  Vec3<T> b{default_magnetic_field<T>()};

  void validate() const {
    if (!(g.norm() > 0) || !(b.norm() > 0)) {
      throw std::invalid_argument("reference vectors must be non-zero");
    }
  }

  template <typename U>
  ReferenceVectors<U> cast() const {
    return {g.template cast<U>(), b.template cast<U>()};
  }
};

/// Planar surface the vehicle moves on: unit normal n through `point`.
template <typename T>
struct SurfaceModel {
  Vec3<T> n{T(0), T(0), T(1)};
  Vec3<T> point{Vec3<T>::Zero()};
  ReferenceVectors<T> refs{};

  /// Normalizes n and rejects a magnetic field collinear with the normal.
  SurfaceModel validated() const {
    using std::abs;
    refs.validate();
    if (!(n.norm() > 0)) throw std::invalid_argument("surface normal must be non-zero");
    SurfaceModel out = *this;
    out.n = normalized(n);
    if (abs(normalized(refs.b).dot(out.n)) >= T(1) - T(1e-9)) {
      throw std::invalid_argument("magnetic reference is collinear with the surface normal");
    }
    return out;
  }

  template <typename U>
  SurfaceModel<U> cast() const {
    return {n.template cast<U>(), point.template cast<U>(), refs.template cast<U>()};
  }
};

}  // namespace revkf
