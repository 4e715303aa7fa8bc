#include "revkf/reversible.hpp"

#include <algorithm>
#include <cmath>

namespace revkf::rev {

namespace {

template <typename T>
T wrap_angle(const T& theta) {
  using std::fmod;
  T t = fmod(theta, two_pi<T>());
  if (t < 0) t += two_pi<T>();
  if (t >= two_pi<T>()) t -= two_pi<T>();
  return t;
}

template <typename T>
Vec3<T> any_perpendicular(const Vec3<T>& v) {
  using std::abs;
  Vec3<T> e = Vec3<T>::Zero();
  int k = 0;
  if (abs(v.y()) < abs(v(k))) k = 1;
  if (abs(v.z()) < abs(v(k))) k = 2;
  e(k) = T(1);
  return normalized(Vec3<T>(v.cross(e)));
}

}  // namespace

const char* to_string(LinAlgMode mode) {
  switch (mode) {
    case LinAlgMode::Corrected: return "corrected";
    case LinAlgMode::NoIntersection: return "no_intersection";
    case LinAlgMode::PredictionOutside: return "prediction_outside";
    case LinAlgMode::DefaultKept: return "default_kept";
  }
  return "unknown";
}

template <typename T>
UnitQuaternion<T> RotationFamily<T>::member(const T& theta) const {
  return quat_mul(quat_exp(Vec3<T>(axis * theta)), base);
}

template <typename T>
T RotationFamily<T>::angle_of(const UnitQuaternion<T>& r) const {
  using std::atan2;
  const UnitQuaternion<T> twist = quat_mul(r, quat_inverse(base));
  return wrap_angle(T(2) * atan2(twist.vec().dot(axis), twist.w));
}

template <typename T>
RotationFamily<T> rotation_family(const Vec3<T>& b, const Vec3<T>& M) {
  if (!(b.norm() > 0) || !(M.norm() > 0)) throw std::invalid_argument("rotation_family: zero vector");
  const Vec3<T> bh = normalized(b);
  const Vec3<T> mh = normalized(M);
  RotationFamily<T> fam;
  fam.axis = mh;
  if (bh.dot(mh) <= T(-1) + T(1e-12)) {
    const Vec3<T> e = any_perpendicular(bh);
    fam.base = UnitQuaternion<T>::from_components(T(0), e.x(), e.y(), e.z());
    fam.antiparallel = true;
  } else {
    fam.base = minimal_rotation(bh, mh);
  }
  return fam;
}

template <typename T>
T ConstraintCurve<T>::operator()(const T& theta) const {
  using std::cos;
  using std::sin;
  return offset + a * cos(theta) + b * sin(theta);
}

template <typename T>
T ConstraintCurve<T>::amplitude() const {
  using std::sqrt;
  return sqrt(a * a + b * b);
}

template <typename T>
ConstraintCurve<T> constraint_curve(const RotationFamily<T>& family, const Vec3<T>& A, const Vec3<T>& direction) {
  const Vec3<T> w = rotate_vec(family.base, direction);
  const Vec3<T> w_par = family.axis * family.axis.dot(w);
  const Vec3<T> w_perp = w - w_par;
  ConstraintCurve<T> curve;
  curve.offset = A.dot(w_par);
  curve.a = A.dot(w_perp);
  curve.b = A.dot(family.axis.cross(w_perp));
  return curve;
}

template <typename T>
SurfaceSolution<T> solve_surface_constraint(const RotationFamily<T>& family, const Vec3<T>& A,
                                            const Vec3<T>& direction, const T& c) {
  using std::abs;
  using std::atan2;
  using std::sqrt;
  SurfaceSolution<T> sol;
  sol.curve = constraint_curve(family, A, direction);
  sol.tolerance = T(64) * epsilon<T>() * (A.norm() * direction.norm() + abs(c));
  const T r = sol.curve.amplitude();
  const T d = c - sol.curve.offset;
  if (r <= sol.tolerance) return sol;  // f is constant on the family
  const T phi = atan2(sol.curve.b, sol.curve.a);
  const T gap = r - abs(d);
  if (gap < -sol.tolerance) return sol;
  if (gap <= sol.tolerance) {
    sol.thetas.push_back(wrap_angle(d >= 0 ? phi : T(phi + pi<T>())));
    return sol;
  }
  const T half = atan2(sqrt((r - d) * (r + d)), d);
  sol.thetas.push_back(wrap_angle(T(phi + half)));
  sol.thetas.push_back(wrap_angle(T(phi - half)));
  std::sort(sol.thetas.begin(), sol.thetas.end());
  return sol;
}

template <typename T>
T constraint_target(const SurfaceModel<T>& surface, const ConstraintKinematics<T>& kin, ConstraintReading reading) {
  const Vec3<T> n = normalized(surface.n);
  const T tangent = surface.refs.g.dot(n);
  if (reading == ConstraintReading::Tangency) return tangent;
  if (!(kin.dt > 0)) throw std::invalid_argument("constraint_target: dt must be positive");
  return tangent - ((kin.p - surface.point).dot(n) + kin.v.dot(n) * kin.dt) / (kin.dt * kin.dt);
}

template <typename T>
T LinAlgOutcome<T>::correction_angle() const {
  return mode == LinAlgMode::Corrected ? candidates.front().distance : T(0);
}

template <typename T>
std::vector<Candidate<T>> family_candidates(const UnitQuaternion<T>& pred_q, const RotationFamily<T>& family,
                                            const SurfaceSolution<T>& solution, const Vec3<T>& tie_axis) {
  using std::abs;
  std::vector<Candidate<T>> out;
  for (const T& theta : solution.thetas) {
    const UnitQuaternion<T> q = quat_inverse(family.member(theta));
    out.push_back({theta, q, geodesic_distance(pred_q, q)});
  }
  const Vec3<T> ez(T(0), T(0), T(1));
  const T tie = T(16) * epsilon<T>() * pi<T>();
  std::sort(out.begin(), out.end(), [&](const Candidate<T>& x, const Candidate<T>& y) {
    if (abs(x.distance - y.distance) > tie) return x.distance < y.distance;
    return rotate_vec(x.q, ez).dot(tie_axis) > rotate_vec(y.q, ez).dot(tie_axis);
  });
  return out;
}

template <typename T>
LinAlgOutcome<T> linalg_gravity(const UnitQuaternion<T>& pred_q, const Vec3<T>& A, const Vec3<T>& M,
                                const SurfaceModel<T>& surface, const ConstraintKinematics<T>& kin,
                                ConstraintReading reading) {
  const Vec3<T> n = normalized(surface.n);
  const RotationFamily<T> family = rotation_family(surface.refs.b, M);
  const SurfaceSolution<T> sol = solve_surface_constraint(family, A, n, constraint_target(surface, kin, reading));
  LinAlgOutcome<T> out;
  out.antiparallel = family.antiparallel;
  out.candidates = family_candidates(pred_q, family, sol, n);
  out.q_sel = pred_q;
  out.A_g = A;
  if (out.candidates.empty()) {
    out.mode = LinAlgMode::NoIntersection;
    return out;
  }
  out.mode = LinAlgMode::Corrected;
  out.q_sel = out.candidates.front().q;
  out.A_g = rotate_vec(quat_inverse(out.q_sel), surface.refs.g);
  return out;
}

template <typename T>
LinAlgOutcome<T> detect_on_family(const UnitQuaternion<T>& pred_q, const Vec3<T>& A,
                                  const RotationFamily<T>& family, const Vec3<T>& direction, const T& c,
                                  const Vec3<T>& g, const T& gamma, const Vec3<T>& tie_axis) {
  using std::atan2;
  if (!(gamma >= 1)) throw std::invalid_argument("gamma must be >= 1");
  const SurfaceSolution<T> sol = solve_surface_constraint(family, A, direction, c);
  LinAlgOutcome<T> out;
  out.antiparallel = family.antiparallel;
  out.candidates = family_candidates(pred_q, family, sol, tie_axis);
  out.q_sel = pred_q;
  out.A_g = A;

  const T theta_pred = family.angle_of(quat_inverse(pred_q));
  const ConstraintCurve<T> toward_g = constraint_curve(family, A, normalized(g));
  const T theta_default =
      toward_g.amplitude() > T(0) ? wrap_angle(atan2(toward_g.b, toward_g.a)) : theta_pred;
  out.default_distance = geodesic_distance(pred_q, quat_inverse(family.member(theta_default)));

  if (out.candidates.empty()) {
    out.mode = LinAlgMode::NoIntersection;
    return out;
  }
  if (sol.curve(theta_pred) < c - T(3) * sol.tolerance) {
    out.mode = LinAlgMode::PredictionOutside;
    return out;
  }
  if (gamma * out.candidates.front().distance > out.default_distance) {
    out.mode = LinAlgMode::DefaultKept;
    return out;
  }
  out.mode = LinAlgMode::Corrected;
  out.q_sel = out.candidates.front().q;
  out.A_g = rotate_vec(quat_inverse(out.q_sel), g);
  return out;
}

template <typename T>
LinAlgOutcome<T> detect_and_correct(const UnitQuaternion<T>& pred_q, const Vec3<T>& A,
                                    const SurfaceModel<T>& surface, const T& gamma,
                                    const ConstraintKinematics<T>& kin, ConstraintReading reading,
                                    const Vec3<T>& pseudo_reference) {
  const Vec3<T> n = normalized(surface.n);
  const Vec3<T> ref = normalized(pseudo_reference);
  const Vec3<T> M = rotate_vec(quat_inverse(pred_q), ref);
  const RotationFamily<T> family = rotation_family(ref, M);
  return detect_on_family(pred_q, A, family, n, constraint_target(surface, kin, reading), surface.refs.g, gamma, n);
}

template <typename T>
StepResult<T> revmekf_step(const mekf::FilterState<T>& state, const sensors::ImuSample<T>& sample,
                           const SurfaceModel<T>& surface, const mekf::NoiseMatrices<T>& noise,
                           const RevOptions<T>& options) {
  const mekf::Prediction<T> pred =
      mekf::predict(state, sample.omega, sample.dt, noise.Q, options.filter.transition);
  const ConstraintKinematics<T> kin{state.p, state.v, sample.dt};
  StepResult<T> out;
  if (options.gamma) {
    out.outcome = detect_and_correct(pred.state.q, sample.accel, surface, *options.gamma, kin, options.reading,
                                     options.pseudo_reference);
    ReferenceVectors<T> refs{surface.refs.g, normalized(options.pseudo_reference)};
    const Vec3<T> pseudo_mag = rotate_vec(quat_inverse(pred.state.q), refs.b);
    out.state = mekf::update(pred.state, out.outcome.A_g, pseudo_mag, refs, noise.U, options.filter.residual);
  } else {
    out.outcome = linalg_gravity(pred.state.q, sample.accel, sample.mag, surface, kin, options.reading);
    out.state =
        mekf::update(pred.state, out.outcome.A_g, sample.mag, surface.refs, noise.U, options.filter.residual);
  }
  mekf::advance_position(out.state, sample.accel, surface.refs.g, sample.dt);
  return out;
}

template <typename T>
GroupMeasurement<T> to_group_measurement(const sensors::ImuSample<T>& sample) {
  return {quat_exp(Vec3<T>(-sample.omega * sample.dt)), sample.accel, sample.mag, sample.dt};
}

template <typename T>
sensors::ImuSample<T> to_sample(const GroupMeasurement<T>& m, const T& t) {
  sensors::ImuSample<T> s;
  s.t = t;
  s.dt = m.dt;
  s.omega = -quat_log(m.h) / m.dt;
  s.accel = m.A;
  s.mag = m.M;
  return s;
}

template <typename T>
GroupMeasurement<T> act(const UnitQuaternion<T>& g, const GroupMeasurement<T>& m) {
  return {quat_mul(g, m.h), rotate_vec(g, m.A), rotate_vec(g, m.M), m.dt};
}

template <typename T>
GroupMeasurement<T> reverse_measurement(const GroupMeasurement<T>& m) {
  const UnitQuaternion<T> inv = quat_inverse(m.h);
  return {inv, rotate_vec(inv, m.A), rotate_vec(inv, m.M), m.dt};
}

template <typename T>
T state_distance(const mekf::FilterState<T>& a, const mekf::FilterState<T>& b) {
  return geodesic_distance(a.q, b.q) + (a.bias - b.bias).norm();
}

template <typename T>
ReversalErrors<T> check_reversibility(const FilterFn<T>& f, const mekf::FilterState<T>& u,
                                      const GroupMeasurement<T>& m, const T& epsilon,
                                      const Vec6<T>& perturbation) {
  const mekf::FilterState<T> forward = f(u, m);
  const GroupMeasurement<T> back = reverse_measurement(m);
  GroupMeasurement<T> noisy = back;
  noisy.A += epsilon * perturbation.template head<3>();
  noisy.M += epsilon * perturbation.template tail<3>();
  return {state_distance(f(forward, back), u), state_distance(f(forward, noisy), u)};
}

template <typename T>
T check_sequence_reversibility(const FilterFn<T>& f, const mekf::FilterState<T>& u,
                               const std::vector<GroupMeasurement<T>>& ms) {
  mekf::FilterState<T> s = u;
  for (const auto& m : ms) s = f(s, m);
  for (auto it = ms.rbegin(); it != ms.rend(); ++it) s = f(s, reverse_measurement(*it));
  return state_distance(s, u);
}

#define REVKF_INSTANTIATE(T)                                                                                    \
  template struct RotationFamily<T>;                                                                            \
  template struct ConstraintCurve<T>;                                                                           \
  template struct LinAlgOutcome<T>;                                                                             \
  template RotationFamily<T> rotation_family(const Vec3<T>&, const Vec3<T>&);                                   \
  template ConstraintCurve<T> constraint_curve(const RotationFamily<T>&, const Vec3<T>&, const Vec3<T>&);       \
  template SurfaceSolution<T> solve_surface_constraint(const RotationFamily<T>&, const Vec3<T>&,                \
                                                       const Vec3<T>&, const T&);                               \
  template T constraint_target(const SurfaceModel<T>&, const ConstraintKinematics<T>&, ConstraintReading);      \
  template std::vector<Candidate<T>> family_candidates(const UnitQuaternion<T>&, const RotationFamily<T>&,      \
                                                       const SurfaceSolution<T>&, const Vec3<T>&);              \
  template LinAlgOutcome<T> linalg_gravity(const UnitQuaternion<T>&, const Vec3<T>&, const Vec3<T>&,           \
                                           const SurfaceModel<T>&, const ConstraintKinematics<T>&,              \
                                           ConstraintReading);                                                  \
  template LinAlgOutcome<T> detect_on_family(const UnitQuaternion<T>&, const Vec3<T>&, const RotationFamily<T>&, \
                                             const Vec3<T>&, const T&, const Vec3<T>&, const T&,                \
                                             const Vec3<T>&);                                                   \
  template LinAlgOutcome<T> detect_and_correct(const UnitQuaternion<T>&, const Vec3<T>&,                        \
                                               const SurfaceModel<T>&, const T&,                                \
                                               const ConstraintKinematics<T>&, ConstraintReading,               \
                                               const Vec3<T>&);                                                 \
  template StepResult<T> revmekf_step(const mekf::FilterState<T>&, const sensors::ImuSample<T>&,                \
                                      const SurfaceModel<T>&, const mekf::NoiseMatrices<T>&,                    \
                                      const RevOptions<T>&);                                                    \
  template GroupMeasurement<T> to_group_measurement(const sensors::ImuSample<T>&);                              \
  template sensors::ImuSample<T> to_sample(const GroupMeasurement<T>&, const T&);                               \
  template GroupMeasurement<T> act(const UnitQuaternion<T>&, const GroupMeasurement<T>&);                       \
  template GroupMeasurement<T> reverse_measurement(const GroupMeasurement<T>&);                                 \
  template T state_distance(const mekf::FilterState<T>&, const mekf::FilterState<T>&);                          \
  template ReversalErrors<T> check_reversibility(const FilterFn<T>&, const mekf::FilterState<T>&,               \
                                                 const GroupMeasurement<T>&, const T&, const Vec6<T>&);         \
  template T check_sequence_reversibility(const FilterFn<T>&, const mekf::FilterState<T>&,                      \
                                          const std::vector<GroupMeasurement<T>>&);

REVKF_INSTANTIATE(Real)
REVKF_INSTANTIATE(Extended)

}  // namespace revkf::rev
