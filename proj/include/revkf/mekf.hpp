#pragma once

// Multiplicative extended Kalman filter on a 6-dim error state
// (orientation perturbation, gyro bias). The reference quaternion absorbs the
// perturbation after every update, so the error-state mean is zero between
// steps. Position and velocity ride along by dead reckoning.

#include "revkf/model.hpp"
#include "revkf/rotation.hpp"
#include "revkf/sensors.hpp"

#include <stdexcept>

namespace revkf::mekf {

enum class ResidualMode { Additive, Multiplicative };
enum class TransitionModel { FirstOrder, Exact };

template <typename T>
struct FilterState {
  UnitQuaternion<T> q{};
  Vec3<T> bias{Vec3<T>::Zero()};
  Mat6<T> P{Mat6<T>::Identity()};
  Vec3<T> p{Vec3<T>::Zero()};
  Vec3<T> v{Vec3<T>::Zero()};
};

template <typename T>
struct NoiseMatrices {
  Mat6<T> Q{Mat6<T>::Zero()};
  Mat6<T> U{Mat6<T>::Identity()};

  static NoiseMatrices diagonal(const T& q, const T& u) {
    return {Mat6<T>::Identity() * q, Mat6<T>::Identity() * u};
  }
  void validate() const;
};

struct FilterOptions {
  ResidualMode residual{ResidualMode::Additive};
  TransitionModel transition{TransitionModel::FirstOrder};
};

class SingularInnovation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
struct Prediction {
  FilterState<T> state;
  Mat6<T> phi;
};

/// Error-state transition over one step for the bias-corrected rate.
template <typename T>
Mat6<T> transition_matrix(const Vec3<T>& omega_hat, const T& dt, TransitionModel model);

/// q <- q exp((omega - bias) dt), P <- Phi P Phi^T + Q.
template <typename T>
Prediction<T> predict(const FilterState<T>& state, const Vec3<T>& omega, const T& dt, const Mat6<T>& Q,
                      TransitionModel model = TransitionModel::FirstOrder);

template <typename T>
Mat6<T> build_H_additive(const UnitQuaternion<T>& q, const ReferenceVectors<T>& refs);

template <typename T>
Mat6<T> build_H_multiplicative(const UnitQuaternion<T>& q, const ReferenceVectors<T>& refs);

/// (R^T g, R^T b_hat): what a static sensor at q would read.
template <typename T>
Vec6<T> predicted_measurement(const UnitQuaternion<T>& q, const ReferenceVectors<T>& refs);

/// Additive: z - z_hat. Multiplicative: (a x a_hat, m x m_hat) on unit vectors.
template <typename T>
Vec6<T> innovation(const UnitQuaternion<T>& q, const Vec3<T>& accel, const Vec3<T>& mag,
                   const ReferenceVectors<T>& refs, ResidualMode mode);

template <typename T>
struct Correction {
  Vec6<T> eta;
  Mat6<T> P;
};

/// Gain computation shared by every measurement model: S = H P H^T + U,
/// K = P H^T S^-1, eta = K y, P <- (I - K H) P symmetrized.
/// Throws SingularInnovation when S fails the Cholesky guard.
template <typename T>
Correction<T> kalman_correct(const Mat6<T>& P, const Mat6<T>& H, const Vec6<T>& y, const Mat6<T>& U);

template <typename T>
FilterState<T> update(const FilterState<T>& state, const Vec3<T>& accel, const Vec3<T>& mag,
                      const ReferenceVectors<T>& refs, const Mat6<T>& U, ResidualMode mode);

/// Advances p, v with the raw specific force rotated by the current orientation.
template <typename T>
void advance_position(FilterState<T>& state, const Vec3<T>& accel, const Vec3<T>& g, const T& dt);

template <typename T>
FilterState<T> mekf_step(const FilterState<T>& state, const sensors::ImuSample<T>& sample,
                         const ReferenceVectors<T>& refs, const NoiseMatrices<T>& noise,
                         const FilterOptions& options = {});

template <typename T>
Mat6<T> symmetrize(const Mat6<T>& P) {
  return (P + P.transpose()) / T(2);
}

/// Cholesky of P + tol * trace(P) * I succeeds.
template <typename T>
bool is_psd(const Mat6<T>& P, const T& tol);

}  // namespace revkf::mekf
