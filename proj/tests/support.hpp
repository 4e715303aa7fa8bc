#pragma once

#include "revkf/rotation.hpp"
#include "revkf/scalar.hpp"

#include <gtest/gtest.h>

#include <random>

namespace revkf::test {

using Precisions = ::testing::Types<Real, Extended>;

template <typename T>
T ulp() {
  return epsilon<T>();
}

template <typename T>
struct Rng {
  std::mt19937_64 gen;
  std::normal_distribution<double> normal{0.0, 1.0};
  std::uniform_real_distribution<double> uniform{0.0, 1.0};

  explicit Rng(std::uint64_t seed) : gen(seed) {}

  T gauss() { return T(normal(gen)); }
  T uni(double lo, double hi) { return T(lo + (hi - lo) * uniform(gen)); }
  Vec3<T> vec() { return Vec3<T>(gauss(), gauss(), gauss()); }
  Vec3<T> unit() { return normalized(vec()); }
  UnitQuaternion<T> quat() { return UnitQuaternion<T>::from_components(gauss(), gauss(), gauss(), gauss()); }
  /// Rotation vector with norm in [0, max_angle].
  Vec3<T> rotvec(double max_angle) { return unit() * uni(0.0, max_angle); }
};

template <typename Derived>
auto max_abs_entry(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().maxCoeff();
}

}  // namespace revkf::test
