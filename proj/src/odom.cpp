#include "revkf/odom.hpp"

#include <cmath>

namespace revkf::odom {

template <typename T>
T heading(const UnitQuaternion<T>& q) {
  using std::atan2;
  const Vec3<T> x = rotate_vec(q, Vec3<T>(T(1), T(0), T(0)));
  return atan2(x.y(), x.x());
}

template <typename T>
OdomJacobians<T> odometry_jacobians(const T& theta, const T& d) {
  using std::cos;
  using std::sin;
  const T s = sin(theta);
  const T c = cos(theta);
  OdomJacobians<T> out{Mat6<T>::Identity(), Mat26<T>::Zero()};
  out.J(5, 0) = -d * s;
  out.J(5, 1) = -d * c;
  out.K(0, 0) = s;
  out.K(0, 1) = c;
  out.K(1, 0) = -d / 2 * s;
  out.K(1, 1) = d / 2 * c;
  out.K(1, 5) = T(1);
  return out;
}

template <typename T>
OdomState<T> odo_predict(const OdomState<T>& state, const T& d_left, const T& d_right, const Mat2<T>& Q,
                         CovarianceForm form) {
  using std::cos;
  using std::sin;
  if (!(state.half_track > 0)) throw std::invalid_argument("half_track must be positive");
  const T d = (d_left + d_right) / 2;
  const T dtheta = (d_left - d_right) / (T(2) * state.half_track);
  const T theta = heading(state.q);
  OdomState<T> out = state;
  out.q = quat_mul(state.q, quat_exp(Vec3<T>(T(0), T(0), dtheta)));
  const T mid = theta + dtheta / 2;
  out.p.x() += d * cos(mid);
  out.p.y() += d * sin(mid);
  const OdomJacobians<T> jk = odometry_jacobians(theta, d);
  const Mat6<T> noise = jk.K.transpose() * Q * jk.K;
  const Mat6<T> prop = form == CovarianceForm::AsWritten ? Mat6<T>(jk.J.transpose() * state.P * jk.J)
                                                         : Mat6<T>(jk.J * state.P * jk.J.transpose());
  out.P = mekf::symmetrize(Mat6<T>(prop + noise));
  return out;
}

template <typename T>
T pressure_target(const Vec3<T>& g, const T& pressure, const rev::ConstraintKinematics<T>& kin) {
  if (!(kin.dt > 0)) throw std::invalid_argument("pressure_target: dt must be positive");
  return g.z() + (pressure - kin.p.z() - kin.v.z() * kin.dt) / (kin.dt * kin.dt);
}

namespace {

template <typename T>
rev::RotationFamily<T> pressure_family(const SurfaceModel<T>& surface, Vec3<T>& n) {
  using std::abs;
  n = normalized(surface.n);
  const Vec3<T> ez(T(0), T(0), T(1));
  if (abs(n.dot(ez)) >= T(1) - T(1e-9)) {
    throw DegenerateGeometry("surface normal is vertical: pressure and accelerometer carry no orientation");
  }
  return rev::rotation_family(n, ez);
}

}  // namespace

template <typename T>
rev::LinAlgOutcome<T> pressure_linalg(const UnitQuaternion<T>& pred_q, const Vec3<T>& A, const T& pressure,
                                      const SurfaceModel<T>& surface, const rev::ConstraintKinematics<T>& kin) {
  Vec3<T> n;
  const rev::RotationFamily<T> family = pressure_family(surface, n);
  const Vec3<T> ez(T(0), T(0), T(1));
  const rev::SurfaceSolution<T> sol =
      rev::solve_surface_constraint(family, A, ez, pressure_target(surface.refs.g, pressure, kin));
  rev::LinAlgOutcome<T> out;
  out.antiparallel = family.antiparallel;
  out.candidates = rev::family_candidates(pred_q, family, sol, n);
  out.q_sel = pred_q;
  out.A_g = A;
  if (out.candidates.empty()) {
    out.mode = rev::LinAlgMode::NoIntersection;
    return out;
  }
  out.mode = rev::LinAlgMode::Corrected;
  out.q_sel = out.candidates.front().q;
  out.A_g = rotate_vec(quat_inverse(out.q_sel), surface.refs.g);
  return out;
}

template <typename T>
OdomState<T> odo_update(const OdomState<T>& state, const Vec3<T>& accel, const Vec3<T>& g, const Mat6<T>& U) {
  const Vec3<T> a_hat = rotate_vec(quat_inverse(state.q), g);
  Mat6<T> H = Mat6<T>::Zero();
  H.template block<3, 3>(0, 3) = skew(a_hat);
  Vec6<T> y = Vec6<T>::Zero();
  y.template head<3>() = accel - a_hat;
  const mekf::Correction<T> c = mekf::kalman_correct(state.P, H, y, U);
  OdomState<T> out = state;
  out.p += c.eta.template head<3>();
  out.q = quat_mul(state.q, quat_exp(Vec3<T>(c.eta.template tail<3>())));
  out.P = c.P;
  return out;
}

template <typename T>
OdomStepResult<T> odo_revmekf_step(const OdomState<T>& state, const sensors::OdometrySample<T>& odo,
                                   const Vec3<T>& accel, const T& dt, const SurfaceModel<T>& surface,
                                   const OdomNoise<T>& noise, const OdomOptions<T>& options) {
  if (!(dt > 0)) throw std::invalid_argument("odo_revmekf_step: dt must be positive");
  const OdomState<T> pred = odo_predict(state, odo.d_left, odo.d_right, noise.Q, options.form);
  OdomStepResult<T> out;
  out.outcome.q_sel = pred.q;
  out.outcome.A_g = accel;
  if (options.use_linalg && odo.pressure) {
    const rev::ConstraintKinematics<T> kin{state.p, state.v, dt};
    if (options.gamma) {
      Vec3<T> n;
      const rev::RotationFamily<T> family = pressure_family(surface, n);
      out.outcome = rev::detect_on_family(pred.q, accel, family, Vec3<T>(T(0), T(0), T(1)),
                                          pressure_target(surface.refs.g, *odo.pressure, kin), surface.refs.g,
                                          *options.gamma, n);
    } else {
      out.outcome = pressure_linalg(pred.q, accel, *odo.pressure, surface, kin);
    }
  }
  out.state = odo_update(pred, out.outcome.A_g, surface.refs.g, noise.U);
  if (odo.pressure) out.state.p.z() = *odo.pressure;
  out.state.v = (out.state.p - state.p) / dt;
  return out;
}

#define REVKF_INSTANTIATE(T)                                                                                 \
  template T heading(const UnitQuaternion<T>&);                                                              \
  template OdomJacobians<T> odometry_jacobians(const T&, const T&);                                          \
  template OdomState<T> odo_predict(const OdomState<T>&, const T&, const T&, const Mat2<T>&, CovarianceForm); \
  template T pressure_target(const Vec3<T>&, const T&, const rev::ConstraintKinematics<T>&);                 \
  template rev::LinAlgOutcome<T> pressure_linalg(const UnitQuaternion<T>&, const Vec3<T>&, const T&,         \
                                                 const SurfaceModel<T>&, const rev::ConstraintKinematics<T>&); \
  template OdomState<T> odo_update(const OdomState<T>&, const Vec3<T>&, const Vec3<T>&, const Mat6<T>&);     \
  template OdomStepResult<T> odo_revmekf_step(const OdomState<T>&, const sensors::OdometrySample<T>&,        \
                                              const Vec3<T>&, const T&, const SurfaceModel<T>&,              \
                                              const OdomNoise<T>&, const OdomOptions<T>&);

REVKF_INSTANTIATE(Real)
REVKF_INSTANTIATE(Extended)

}  // namespace revkf::odom
