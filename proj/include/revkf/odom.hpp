#pragma once

// Differential-drive odometry prediction and the pressure-sensor variant of
// the gravity-recovery step. The error state is ordered
// (x, y, z, log q_1, log q_2, log q_3).

#include "revkf/reversible.hpp"

#include <Eigen/Core>

namespace revkf::odom {

template <typename T>
using Mat2 = Eigen::Matrix<T, 2, 2>;
template <typename T>
using Mat26 = Eigen::Matrix<T, 2, 6>;

class DegenerateGeometry : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename T>
struct OdomState {
  UnitQuaternion<T> q{};
  Vec3<T> p{Vec3<T>::Zero()};
  Vec3<T> v{Vec3<T>::Zero()};
  Mat6<T> P{Mat6<T>::Identity()};
  T half_track{T(15) / 100};  // wheel to center, m
};

enum class CovarianceForm {
  AsWritten,     // J^T P J + K^T Q K
  Conventional,  // J P J^T + K^T Q K
};

/// Azimuth of the body x axis in the global frame.
template <typename T>
T heading(const UnitQuaternion<T>& q);

template <typename T>
struct OdomJacobians {
  Mat6<T> J;
  Mat26<T> K;
};

template <typename T>
OdomJacobians<T> odometry_jacobians(const T& theta, const T& d);

/// Heading advances by (d_L - d_R)/(2 d_w) about the body z axis; p.x, p.y
/// move along the midpoint heading; p.z is untouched.
template <typename T>
OdomState<T> odo_predict(const OdomState<T>& state, const T& d_left, const T& d_right, const Mat2<T>& Q,
                         CovarianceForm form = CovarianceForm::AsWritten);

/// Target global vertical specific force from a pressure reading.
template <typename T>
T pressure_target(const Vec3<T>& g, const T& pressure, const rev::ConstraintKinematics<T>& kin);

/// Rotations taking the global normal n to the body z axis, constrained by
/// the vertical specific force implied by the pressure reading.
template <typename T>
rev::LinAlgOutcome<T> pressure_linalg(const UnitQuaternion<T>& pred_q, const Vec3<T>& A, const T& pressure,
                                      const SurfaceModel<T>& surface, const rev::ConstraintKinematics<T>& kin);

template <typename T>
struct OdomNoise {
  Mat2<T> Q{Mat2<T>::Identity() * T(1e-4)};
  Mat6<T> U{Mat6<T>::Identity() * T(1e-2)};
};

template <typename T>
struct OdomOptions {
  CovarianceForm form{CovarianceForm::AsWritten};
  bool use_linalg{true};  // false: plain MEKF-style update with the raw accelerometer
  std::optional<T> gamma;  // set: detection rules decide raw A or A_g
};

template <typename T>
struct OdomStepResult {
  OdomState<T> state;
  rev::LinAlgOutcome<T> outcome;
};

/// Accelerometer-only update on the odometry error state.
template <typename T>
OdomState<T> odo_update(const OdomState<T>& state, const Vec3<T>& accel, const Vec3<T>& g, const Mat6<T>& U);

/// odo_predict -> pressure LinAlg (when a reading is present) -> update ->
/// p.z from pressure and v from the position difference.
template <typename T>
OdomStepResult<T> odo_revmekf_step(const OdomState<T>& state, const sensors::OdometrySample<T>& odo,
                                   const Vec3<T>& accel, const T& dt, const SurfaceModel<T>& surface,
                                   const OdomNoise<T>& noise, const OdomOptions<T>& options = {});

}  // namespace revkf::odom
