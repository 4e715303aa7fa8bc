#pragma once

// Sensor model: gyro integration, synthetic trajectories, IMU synthesis and
// dead reckoning. Ground truth and the filters share one semi-implicit Euler
// step (advance_kinematics) so integrator error cancels out of comparisons.

#include "revkf/model.hpp"
#include "revkf/rotation.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace revkf::sensors {

template <typename T>
struct ImuSample {
  T t{0};
  T dt{0};            // time since previous sample
  Vec3<T> omega{Vec3<T>::Zero()};  // rad/s, rate over (t - dt, t]
  Vec3<T> accel{Vec3<T>::Zero()};  // m/s^2, specific force in the sensor frame
  Vec3<T> mag{Vec3<T>::Zero()};    // unit direction (or uT before normalization)
};

template <typename T>
struct OdometrySample {
  T t{0};
  T d_left{0};   // m
  T d_right{0};  // m
  std::optional<T> pressure;  // m, global z of the sensor
};

template <typename T>
struct TruthSample {
  T t{0};
  UnitQuaternion<T> q{};
  Vec3<T> p{Vec3<T>::Zero()};
  Vec3<T> v{Vec3<T>::Zero()};
  Vec3<T> a_ext{Vec3<T>::Zero()};  // global external acceleration
  Vec3<T> omega{Vec3<T>::Zero()};  // body rate over (t - dt, t]
};

template <typename T>
using GroundTruth = std::vector<TruthSample<T>>;

template <typename T>
struct NoiseSpec {
  Vec3<T> gyro_bias{Vec3<T>::Zero()};
  T gyro_noise_std{0};
  T accel_noise_std{0};
  T mag_noise_std{0};
  std::uint64_t seed{1};

  void validate() const;
};

template <typename T>
struct TrajectorySpec {
  T duration{100};
  T rate{100};
  T accel_variation{0};  // target mean |A_{k+1} - A_k|, m/s^2 per sample
  T base_accel{0};       // constant tangential external acceleration added on top, m/s^2
  double smoothing{0.99};  // correlation of successive increments, in [0, 1)
  std::uint64_t seed{1};
  Vec3<T> normal{T(0), T(0), T(1)};  // external acceleration stays orthogonal to it
  Vec3<T> origin{Vec3<T>::Zero()};
  bool random_initial_orientation{true};

  std::size_t sample_count() const;
  void validate() const;
};

template <typename T>
struct Kinematics {
  Vec3<T> p{Vec3<T>::Zero()};
  Vec3<T> v{Vec3<T>::Zero()};
};

/// q * exp(omega * dt).
template <typename T>
UnitQuaternion<T> integrate_gyro(const UnitQuaternion<T>& q, const Vec3<T>& omega, const T& dt) {
  return quat_mul(q, quat_exp(Vec3<T>(omega * dt)));
}

/// One semi-implicit Euler step: v += a dt, then p += v dt.
template <typename T>
Kinematics<T> advance_kinematics(const Kinematics<T>& k, const Vec3<T>& a_global, const T& dt) {
  Kinematics<T> out;
  out.v = k.v + a_global * dt;
  out.p = k.p + out.v * dt;
  return out;
}

/// Global external acceleration implied by a specific-force reading.
template <typename T>
Vec3<T> external_acceleration(const UnitQuaternion<T>& q, const Vec3<T>& accel, const Vec3<T>& g) {
  return rotate_vec(q, accel) - g;
}

template <typename T>
GroundTruth<T> generate_trajectory(const TrajectorySpec<T>& spec, const ReferenceVectors<T>& refs);

template <typename T>
std::vector<ImuSample<T>> synthesize_imu(const GroundTruth<T>& truth, const NoiseSpec<T>& noise,
                                         const ReferenceVectors<T>& refs);

/// Mean |A_{k+1} - A_k| over the stream.
template <typename T>
T measure_accel_variation(std::span<const ImuSample<T>> samples);

/// Positions obtained by dead reckoning; element 0 is p0.
template <typename T>
std::vector<Vec3<T>> dead_reckon(std::span<const UnitQuaternion<T>> q, std::span<const Vec3<T>> accel,
                                 const Vec3<T>& g, const T& dt, const Vec3<T>& p0, const Vec3<T>& v0);

/// Adds a z-axis sinusoid (sensor frame) to every accelerometer sample.
template <typename T>
void add_vibration(std::vector<ImuSample<T>>& samples, const T& amplitude, const T& frequency_hz);

// Differential-drive robot on a (possibly tilted) plane, body z along the normal.
template <typename T>
struct OdometryRunSpec {
  T duration{20};
  T rate{100};
  T speed{T(2) / 10};            // m/s
  T speed_variation{T(1) / 10};  // relative
  T turn_rate_std{T(5) / 100};   // rad/s
  T half_track{T(15) / 100};     // m
  Vec3<T> normal{T(0), T(0), T(1)};
  double smoothing{0.995};
  T odometry_noise_std{0};  // m per wheel per sample
  T pressure_noise_std{0};  // m
  std::uint64_t seed{1};
};

template <typename T>
struct OdometryRun {
  GroundTruth<T> truth;
  std::vector<OdometrySample<T>> odometry;
  std::vector<ImuSample<T>> imu;
};

template <typename T>
OdometryRun<T> generate_odometry_run(const OdometryRunSpec<T>& spec, const NoiseSpec<T>& imu_noise,
                                     const ReferenceVectors<T>& refs);

}  // namespace revkf::sensors
