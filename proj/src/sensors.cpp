#include "revkf/sensors.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace revkf::sensors {

namespace {

struct UnitProfiles {
  std::vector<Vec3<double>> omega;  // unit RMS, rad/s
  std::vector<Vec3<double>> accel;  // unit RMS, m/s^2, orthogonal to the normal
  UnitQuaternion<double> q0;
};

Vec3<double> gaussian3(std::mt19937_64& rng, std::normal_distribution<double>& nd) {
  const double x = nd(rng);
  const double y = nd(rng);
  const double z = nd(rng);
  return {x, y, z};
}

void normalize_rms(std::vector<Vec3<double>>& xs) {
  double acc = 0.0;
  for (const auto& x : xs) acc += x.squaredNorm();
  const double rms = std::sqrt(acc / static_cast<double>(xs.size()));
  if (rms > 0.0) {
    for (auto& x : xs) x /= rms;
  }
}

// Cumulative sums of smoothed Gaussian increments, starting from zero.
UnitProfiles make_profiles(std::size_t n, double smoothing, std::uint64_t seed, const Vec3<double>& normal,
                           bool random_orientation) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  UnitProfiles out;
  if (random_orientation) {
    const double w = nd(rng);
    const Vec3<double> v = gaussian3(rng, nd);
    out.q0 = UnitQuaternion<double>::from_components(w, v.x(), v.y(), v.z());
  }
  const double rho = smoothing;
  const double gain = std::sqrt(1.0 - rho * rho);
  const Vec3<double> nn = normal.normalized();
  out.omega.assign(n, Vec3<double>::Zero());
  out.accel.assign(n, Vec3<double>::Zero());
  Vec3<double> inc_w = Vec3<double>::Zero();
  Vec3<double> inc_a = Vec3<double>::Zero();
  for (std::size_t k = 1; k < n; ++k) {
    inc_w = rho * inc_w + gain * gaussian3(rng, nd);
    Vec3<double> xi = gaussian3(rng, nd);
    xi -= nn * nn.dot(xi);
    inc_a = rho * inc_a + gain * xi;
    out.omega[k] = out.omega[k - 1] + inc_w;
    out.accel[k] = out.accel[k - 1] + inc_a;
  }
  // Start from a random state of the walk's own size rather than from rest,
  // so the stream does not open on the degenerate zero-acceleration case.
  normalize_rms(out.omega);
  normalize_rms(out.accel);
  const Vec3<double> w0 = gaussian3(rng, nd).normalized();
  Vec3<double> a0 = gaussian3(rng, nd);
  a0 = (a0 - nn * nn.dot(a0)).normalized();
  for (std::size_t k = 0; k < n; ++k) {
    out.omega[k] += w0;
    out.accel[k] += a0;
  }
  normalize_rms(out.omega);
  normalize_rms(out.accel);
  return out;
}

double simulated_variation(const UnitProfiles& prof, double scale, const Vec3<double>& g, double dt) {
  const std::size_t n = prof.omega.size();
  if (n < 2) return 0.0;
  UnitQuaternion<double> q = prof.q0;
  Vec3<double> prev = rotate_vec(quat_inverse(q), Vec3<double>(g + scale * prof.accel[0]));
  double total = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    q = integrate_gyro(q, Vec3<double>(scale * prof.omega[k]), dt);
    const Vec3<double> a = rotate_vec(quat_inverse(q), Vec3<double>(g + scale * prof.accel[k]));
    total += (a - prev).norm();
    prev = a;
  }
  return total / static_cast<double>(n - 1);
}

template <typename T>
Vec3<T> to_scalar(const Vec3<double>& v) {
  return Vec3<T>(T(v.x()), T(v.y()), T(v.z()));
}

template <typename T>
Vec3<T> noise3(std::mt19937_64& rng, std::normal_distribution<double>& nd, const T& std) {
  const Vec3<double> xi = gaussian3(rng, nd);
  return to_scalar<T>(xi) * std;
}

}  // namespace

template <typename T>
void NoiseSpec<T>::validate() const {
  if (gyro_noise_std < 0 || accel_noise_std < 0 || mag_noise_std < 0) {
    throw std::invalid_argument("noise standard deviations must be non-negative");
  }
}

template <typename T>
std::size_t TrajectorySpec<T>::sample_count() const {
  using std::round;
  return static_cast<std::size_t>(to_double(round(duration * rate)));
}

template <typename T>
void TrajectorySpec<T>::validate() const {
  if (!(rate > 0)) throw std::invalid_argument("rate must be positive");
  if (!(duration > 0)) throw std::invalid_argument("duration must be positive");
  if (!std::isfinite(to_double(accel_variation)) || accel_variation < 0) {
    throw std::invalid_argument("accel_variation must be finite and non-negative");
  }
  if (!std::isfinite(to_double(base_accel)) || base_accel < 0) {
    throw std::invalid_argument("base_accel must be finite and non-negative");
  }
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw std::invalid_argument("smoothing must lie in [0, 1)");
  if (!(normal.norm() > 0)) throw std::invalid_argument("normal must be non-zero");
}

template <typename T>
GroundTruth<T> generate_trajectory(const TrajectorySpec<T>& spec, const ReferenceVectors<T>& refs) {
  spec.validate();
  refs.validate();
  const std::size_t n = spec.sample_count();
  const Vec3<double> normal_d(to_double(spec.normal.x()), to_double(spec.normal.y()), to_double(spec.normal.z()));
  const UnitProfiles prof = make_profiles(n, spec.smoothing, spec.seed, normal_d, spec.random_initial_orientation);

  // Find the common scale of rate and acceleration profiles that hits the
  // requested variation. The map is only roughly linear (the gravity
  // direction seen by the sensor depends on the whole rotation history), so
  // the fixed-point iteration is damped and the best scale seen is kept.
  const double target = to_double(spec.accel_variation);
  const double dt_d = 1.0 / to_double(spec.rate);
  const Vec3<double> offset_d = prof.accel[0].normalized() * to_double(spec.base_accel);
  const Vec3<double> g_d =
      Vec3<double>(to_double(refs.g.x()), to_double(refs.g.y()), to_double(refs.g.z())) + offset_d;
  double scale = 0.0;
  if (target > 0.0 && n >= 2) {
    const double unit = simulated_variation(prof, 1.0, g_d, dt_d);
    if (!(unit > 0.0)) throw std::invalid_argument("trajectory has no motion to scale");
    double trial = target / unit;
    double best_err = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 60; ++it) {
      const double ratio = target / simulated_variation(prof, trial, g_d, dt_d);
      const double err = std::abs(std::log(ratio));
      if (err < best_err) {
        best_err = err;
        scale = trial;
      }
      if (err < 1e-4) break;
      trial *= std::sqrt(ratio);
    }
    if (best_err > std::log(1.2)) throw std::invalid_argument("accel_variation target is not reachable");
  }

  const T dt = T(1) / spec.rate;
  const T s(scale);
  const Vec3<T> offset = to_scalar<T>(prof.accel[0].normalized()) * spec.base_accel;
  GroundTruth<T> truth(n);
  Kinematics<T> kin{spec.origin, Vec3<T>::Zero()};
  UnitQuaternion<T> q = prof.q0.template cast<T>();
  q = UnitQuaternion<T>::from_components(q.w, q.x, q.y, q.z);
  for (std::size_t k = 0; k < n; ++k) {
    TruthSample<T>& ts = truth[k];
    ts.t = T(static_cast<long long>(k)) * dt;
    ts.a_ext = offset + s * to_scalar<T>(prof.accel[k]);
    if (k > 0) {
      ts.omega = s * to_scalar<T>(prof.omega[k]);
      q = integrate_gyro(q, ts.omega, dt);
      kin = advance_kinematics(kin, ts.a_ext, dt);
    }
    ts.q = q;
    ts.p = kin.p;
    ts.v = kin.v;
  }
  return truth;
}

template <typename T>
std::vector<ImuSample<T>> synthesize_imu(const GroundTruth<T>& truth, const NoiseSpec<T>& noise,
                                         const ReferenceVectors<T>& refs) {
  noise.validate();
  refs.validate();
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const Vec3<T> b = normalized(refs.b);
  std::vector<ImuSample<T>> out(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const TruthSample<T>& ts = truth[k];
    ImuSample<T>& s = out[k];
    s.t = ts.t;
    s.dt = k > 0 ? ts.t - truth[k - 1].t : T(0);
    const UnitQuaternion<T> inv = quat_inverse(ts.q);
    s.omega = ts.omega + noise.gyro_bias + noise3<T>(rng, nd, noise.gyro_noise_std);
    s.accel = rotate_vec(inv, Vec3<T>(refs.g + ts.a_ext)) + noise3<T>(rng, nd, noise.accel_noise_std);
    s.mag = rotate_vec(inv, b) + noise3<T>(rng, nd, noise.mag_noise_std);
  }
  // Uniform streams carry the exact nominal step rather than a difference of
  // rounded timestamps.
  if (truth.size() >= 2) {
    const T dt = truth[1].t - truth[0].t;
    bool uniform = true;
    using std::abs;
    for (std::size_t k = 1; k < out.size() && uniform; ++k) {
      uniform = abs(out[k].dt - dt) <= T(16) * epsilon<T>() * (abs(out[k].t) + T(1));
    }
    if (uniform) {
      for (std::size_t k = 1; k < out.size(); ++k) out[k].dt = dt;
    }
  }
  return out;
}

template <typename T>
T measure_accel_variation(std::span<const ImuSample<T>> samples) {
  if (samples.size() < 2) return T(0);
  T total(0);
  for (std::size_t k = 1; k < samples.size(); ++k) total += (samples[k].accel - samples[k - 1].accel).norm();
  return total / T(static_cast<long long>(samples.size() - 1));
}

template <typename T>
std::vector<Vec3<T>> dead_reckon(std::span<const UnitQuaternion<T>> q, std::span<const Vec3<T>> accel,
                                 const Vec3<T>& g, const T& dt, const Vec3<T>& p0, const Vec3<T>& v0) {
  if (q.size() != accel.size()) throw std::invalid_argument("dead_reckon: stream lengths differ");
  std::vector<Vec3<T>> out;
  out.reserve(q.size());
  Kinematics<T> kin{p0, v0};
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (k > 0) kin = advance_kinematics(kin, external_acceleration(q[k], accel[k], g), dt);
    out.push_back(kin.p);
  }
  return out;
}

template <typename T>
void add_vibration(std::vector<ImuSample<T>>& samples, const T& amplitude, const T& frequency_hz) {
  using std::sin;
  for (auto& s : samples) s.accel.z() += amplitude * sin(two_pi<T>() * frequency_hz * s.t);
}

template <typename T>
OdometryRun<T> generate_odometry_run(const OdometryRunSpec<T>& spec, const NoiseSpec<T>& imu_noise,
                                     const ReferenceVectors<T>& refs) {
  using std::cos;
  using std::sin;
  if (!(spec.rate > 0) || !(spec.duration > 0) || !(spec.half_track > 0)) {
    throw std::invalid_argument("odometry run: rate, duration and half_track must be positive");
  }
  const std::size_t n = static_cast<std::size_t>(to_double(spec.duration * spec.rate));
  const T dt = T(1) / spec.rate;
  const Vec3<T> nn = normalized(spec.normal);
  const UnitQuaternion<T> tilt = minimal_rotation(Vec3<T>(T(0), T(0), T(1)), nn);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  // Speed and turn rate follow a twice-smoothed walk so that their
  // derivatives (the external acceleration) are continuous.
  const double rho = spec.smoothing;
  const double gain = std::sqrt(1.0 - rho * rho);
  const double unit = std::sqrt((1.0 + rho * rho) / (1.0 - rho * rho));
  double speed_drive = 0.0;
  double speed_state = 0.0;
  double turn_drive = 0.0;
  double turn_state = 0.0;

  OdometryRun<T> run;
  run.truth.resize(n);
  run.odometry.resize(n);
  T heading(0);
  Vec3<T> p = Vec3<T>::Zero();
  Vec3<T> v = rotate_vec(tilt, Vec3<T>(spec.speed, T(0), T(0)));
  for (std::size_t k = 0; k < n; ++k) {
    TruthSample<T>& ts = run.truth[k];
    OdometrySample<T>& od = run.odometry[k];
    ts.t = T(static_cast<long long>(k)) * dt;
    od.t = ts.t;
    if (k > 0) {
      speed_drive = rho * speed_drive + gain * nd(rng);
      speed_state = rho * speed_state + gain * speed_drive;
      turn_drive = rho * turn_drive + gain * nd(rng);
      turn_state = rho * turn_state + gain * turn_drive;
      const T u = spec.speed * (T(1) + spec.speed_variation * T(speed_state / unit));
      const T dpsi = spec.turn_rate_std * T(turn_state / unit) * dt;
      const T d = u * dt;
      od.d_left = d + spec.half_track * dpsi + spec.odometry_noise_std * T(nd(rng));
      od.d_right = d - spec.half_track * dpsi + spec.odometry_noise_std * T(nd(rng));
      const T mid = heading + dpsi / 2;
      const Vec3<T> v_new = rotate_vec(tilt, Vec3<T>(u * cos(mid), u * sin(mid), T(0)));
      ts.a_ext = (v_new - v) / dt;
      v = v_new;
      p = p + v * dt;
      heading += dpsi;
      ts.omega = Vec3<T>(T(0), T(0), dpsi / dt);
    }
    ts.q = quat_mul(tilt, quat_exp(Vec3<T>(T(0), T(0), heading)));
    ts.p = p;
    ts.v = v;
    od.pressure = p.z() + spec.pressure_noise_std * T(nd(rng));
  }
  run.imu = synthesize_imu(run.truth, imu_noise, refs);
  return run;
}

#define REVKF_INSTANTIATE(T)                                                                                \
  template struct NoiseSpec<T>;                                                                             \
  template struct TrajectorySpec<T>;                                                                        \
  template GroundTruth<T> generate_trajectory(const TrajectorySpec<T>&, const ReferenceVectors<T>&);       \
  template std::vector<ImuSample<T>> synthesize_imu(const GroundTruth<T>&, const NoiseSpec<T>&,             \
                                                    const ReferenceVectors<T>&);                            \
  template T measure_accel_variation(std::span<const ImuSample<T>>);                                        \
  template std::vector<Vec3<T>> dead_reckon(std::span<const UnitQuaternion<T>>, std::span<const Vec3<T>>, \
                                            const Vec3<T>&, const T&, const Vec3<T>&, const Vec3<T>&);     \
  template void add_vibration(std::vector<ImuSample<T>>&, const T&, const T&);                              \
  template OdometryRun<T> generate_odometry_run(const OdometryRunSpec<T>&, const NoiseSpec<T>&,             \
                                                const ReferenceVectors<T>&);

REVKF_INSTANTIATE(Real)
REVKF_INSTANTIATE(Extended)

}  // namespace revkf::sensors
