#include "revkf/mekf.hpp"

#include <Eigen/Cholesky>

namespace revkf::mekf {

template <typename T>
void NoiseMatrices<T>::validate() const {
  for (int i = 0; i < 6; ++i) {
    if (Q(i, i) < 0 || U(i, i) < 0) throw std::invalid_argument("noise diagonals must be non-negative");
  }
}

template <typename T>
Mat6<T> transition_matrix(const Vec3<T>& omega_hat, const T& dt, TransitionModel model) {
  Mat6<T> phi = Mat6<T>::Identity();
  if (model == TransitionModel::FirstOrder) {
    phi.template block<3, 3>(0, 0) -= skew(omega_hat) * dt;
    phi.template block<3, 3>(0, 3) = -Mat3<T>::Identity() * dt;
    return phi;
  }
  // Closed-form exponential of F dt with F = [[-[w]x, -I], [0, 0]].
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Vec3<T> u = omega_hat * dt;
  const T th2 = u.squaredNorm();
  const T th = sqrt(th2);
  T c2;  // (1 - cos th)/th^2
  T c3;  // (th - sin th)/th^3
  if (th < small_angle_threshold<T>()) {
    c2 = T(1) / 2 - th2 / 24;
    c3 = T(1) / 6 - th2 / 120;
  } else {
    const T s = sin(th / 2);
    c2 = T(2) * s * s / th2;
    c3 = (th - sin(th)) / (th2 * th);
  }
  const Mat3<T> k = skew(u);
  phi.template block<3, 3>(0, 0) = so3_exp(Vec3<T>(-u));
  phi.template block<3, 3>(0, 3) = -dt * (Mat3<T>::Identity() - c2 * k + c3 * k * k);
  return phi;
}

template <typename T>
Prediction<T> predict(const FilterState<T>& state, const Vec3<T>& omega, const T& dt, const Mat6<T>& Q,
                      TransitionModel model) {
  if (!(dt > 0)) throw std::invalid_argument("predict: dt must be positive");
  const Vec3<T> omega_hat = omega - state.bias;
  Prediction<T> out{state, transition_matrix(omega_hat, dt, model)};
  out.state.q = sensors::integrate_gyro(state.q, omega_hat, dt);
  out.state.P = symmetrize(Mat6<T>(out.phi * state.P * out.phi.transpose() + Q));
  return out;
}

template <typename T>
Mat6<T> build_H_additive(const UnitQuaternion<T>& q, const ReferenceVectors<T>& refs) {
  const UnitQuaternion<T> inv = quat_inverse(q);
  Mat6<T> H = Mat6<T>::Zero();
  H.template block<3, 3>(0, 0) = skew(rotate_vec(inv, refs.g));
  H.template block<3, 3>(3, 0) = skew(rotate_vec(inv, normalized(refs.b)));
  return H;
}

template <typename T>
Mat6<T> build_H_multiplicative(const UnitQuaternion<T>& q, const ReferenceVectors<T>& refs) {
  const UnitQuaternion<T> inv = quat_inverse(q);
  const Vec3<T> a = rotate_vec(inv, normalized(refs.g));
  const Vec3<T> m = rotate_vec(inv, normalized(refs.b));
  Mat6<T> H = Mat6<T>::Zero();
  H.template block<3, 3>(0, 0) = Mat3<T>::Identity() - a * a.transpose();
  H.template block<3, 3>(3, 0) = Mat3<T>::Identity() - m * m.transpose();
  return H;
}

template <typename T>
Vec6<T> predicted_measurement(const UnitQuaternion<T>& q, const ReferenceVectors<T>& refs) {
  const UnitQuaternion<T> inv = quat_inverse(q);
  Vec6<T> z;
  z << rotate_vec(inv, refs.g), rotate_vec(inv, normalized(refs.b));
  return z;
}

template <typename T>
Vec6<T> innovation(const UnitQuaternion<T>& q, const Vec3<T>& accel, const Vec3<T>& mag,
                   const ReferenceVectors<T>& refs, ResidualMode mode) {
  const Vec6<T> z_hat = predicted_measurement(q, refs);
  const Vec3<T> a_hat = z_hat.template head<3>();
  const Vec3<T> m_hat = z_hat.template tail<3>();
  Vec6<T> y;
  if (mode == ResidualMode::Additive) {
    y << accel - a_hat, normalized(mag) - m_hat;
  } else {
    y << normalized(accel).cross(normalized(a_hat)), normalized(mag).cross(m_hat);
  }
  return y;
}

template <typename T>
Correction<T> kalman_correct(const Mat6<T>& P, const Mat6<T>& H, const Vec6<T>& y, const Mat6<T>& U) {
  const Mat6<T> HP = H * P;
  const Mat6<T> S = symmetrize(Mat6<T>(HP * H.transpose() + U));
  const Eigen::LLT<Mat6<T>> llt(S);
  if (llt.info() != Eigen::Success) throw SingularInnovation("innovation covariance is not positive definite");
  const auto d = llt.matrixLLT().diagonal();
  const T lo = d.minCoeff();
  const T hi = d.maxCoeff();
  if (!(lo > 0) || lo * lo < T(64) * epsilon<T>() * hi * hi) {
    throw SingularInnovation("innovation covariance is numerically singular");
  }
  // K = P H^T S^-1 = (S^-1 H P)^T for symmetric P and S.
  const Mat6<T> K = llt.solve(HP).transpose();
  Correction<T> out;
  out.eta = K * y;
  out.P = symmetrize(Mat6<T>((Mat6<T>::Identity() - K * H) * P));
  return out;
}

template <typename T>
FilterState<T> update(const FilterState<T>& state, const Vec3<T>& accel, const Vec3<T>& mag,
                      const ReferenceVectors<T>& refs, const Mat6<T>& U, ResidualMode mode) {
  const Mat6<T> H =
      mode == ResidualMode::Additive ? build_H_additive(state.q, refs) : build_H_multiplicative(state.q, refs);
  const Vec6<T> y = innovation(state.q, accel, mag, refs, mode);
  const Correction<T> c = kalman_correct(state.P, H, y, U);
  FilterState<T> out = state;
  out.q = quat_mul(state.q, quat_exp(Vec3<T>(c.eta.template head<3>())));
  out.bias += c.eta.template tail<3>();
  out.P = c.P;
  return out;
}

template <typename T>
void advance_position(FilterState<T>& state, const Vec3<T>& accel, const Vec3<T>& g, const T& dt) {
  const auto kin =
      sensors::advance_kinematics(sensors::Kinematics<T>{state.p, state.v},
                                  sensors::external_acceleration(state.q, accel, g), dt);
  state.p = kin.p;
  state.v = kin.v;
}

template <typename T>
FilterState<T> mekf_step(const FilterState<T>& state, const sensors::ImuSample<T>& sample,
                         const ReferenceVectors<T>& refs, const NoiseMatrices<T>& noise,
                         const FilterOptions& options) {
  const Prediction<T> pred = predict(state, sample.omega, sample.dt, noise.Q, options.transition);
  FilterState<T> out = update(pred.state, sample.accel, sample.mag, refs, noise.U, options.residual);
  advance_position(out, sample.accel, refs.g, sample.dt);
  return out;
}

template <typename T>
bool is_psd(const Mat6<T>& P, const T& tol) {
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > tol * (P.cwiseAbs().maxCoeff() + T(1))) return false;
  using std::abs;
  const Mat6<T> shifted = symmetrize(P) + Mat6<T>::Identity() * (tol * (abs(P.trace()) + T(1)));
  return Eigen::LLT<Mat6<T>>(shifted).info() == Eigen::Success;
}

#define REVKF_INSTANTIATE(T)                                                                                   \
  template struct NoiseMatrices<T>;                                                                            \
  template Mat6<T> transition_matrix(const Vec3<T>&, const T&, TransitionModel);                              \
  template Prediction<T> predict(const FilterState<T>&, const Vec3<T>&, const T&, const Mat6<T>&,             \
                                 TransitionModel);                                                             \
  template Mat6<T> build_H_additive(const UnitQuaternion<T>&, const ReferenceVectors<T>&);                    \
  template Mat6<T> build_H_multiplicative(const UnitQuaternion<T>&, const ReferenceVectors<T>&);              \
  template Vec6<T> predicted_measurement(const UnitQuaternion<T>&, const ReferenceVectors<T>&);               \
  template Vec6<T> innovation(const UnitQuaternion<T>&, const Vec3<T>&, const Vec3<T>&,                      \
                              const ReferenceVectors<T>&, ResidualMode);                                       \
  template Correction<T> kalman_correct(const Mat6<T>&, const Mat6<T>&, const Vec6<T>&, const Mat6<T>&);      \
  template FilterState<T> update(const FilterState<T>&, const Vec3<T>&, const Vec3<T>&,                       \
                                 const ReferenceVectors<T>&, const Mat6<T>&, ResidualMode);                    \
  template void advance_position(FilterState<T>&, const Vec3<T>&, const Vec3<T>&, const T&);                  \
  template FilterState<T> mekf_step(const FilterState<T>&, const sensors::ImuSample<T>&,                      \
                                    const ReferenceVectors<T>&, const NoiseMatrices<T>&, const FilterOptions&); \
  template bool is_psd(const Mat6<T>&, const T&);

REVKF_INSTANTIATE(Real)
REVKF_INSTANTIATE(Extended)

}  // namespace revkf::mekf
