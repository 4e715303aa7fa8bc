#include "support.hpp"

#include "revkf/eval.hpp"
#include "revkf/reversible.hpp"

#include <cmath>

namespace revkf {
namespace {

using namespace rev;
using std::abs;
using std::log10;
using test::max_abs_entry;
using test::ulp;

template <typename T>
class Rev : public ::testing::Test {};
TYPED_TEST_SUITE(Rev, test::Precisions);

template <typename T>
Vec3<T> v3(double x, double y, double z) {
  return Vec3<T>(T(x), T(y), T(z));
}

/// Sensor-frame reading of gravity plus a horizontal external acceleration.
template <typename T>
Vec3<T> accel_reading(const UnitQuaternion<T>& q, const Vec3<T>& a_ext, const ReferenceVectors<T>& refs) {
  return rotate_vec(quat_inverse(q), Vec3<T>(refs.g + a_ext));
}

template <typename T>
Vec3<T> mag_reading(const UnitQuaternion<T>& q, const ReferenceVectors<T>& refs) {
  return rotate_vec(quat_inverse(q), normalized(refs.b));
}

template <typename T>
Vec3<T> horizontal(test::Rng<T>& rng, const T& size) {
  return normalized(Vec3<T>(rng.gauss(), rng.gauss(), T(0))) * size;
}

/// 1e-9 at double precision, the same number of ulps at extended precision.
template <typename T>
T constraint_tolerance() {
  return T(1e-9) / T(epsilon<double>()) * ulp<T>();
}

TYPED_TEST(Rev, FamilyOfEqualVectorsIsRotationAboutThem) {
  using T = TypeParam;
  const Vec3<T> y = v3<T>(0, 1, 0);
  const RotationFamily<T> fam = rotation_family(y, y);
  EXPECT_LE(geodesic_distance(fam.base, UnitQuaternion<T>::identity()), T(8) * ulp<T>());
  EXPECT_FALSE(fam.antiparallel);
  for (double th : {0.3, 1.0, 2.5}) {
    EXPECT_LE(geodesic_distance(fam.member(T(th)), quat_exp(Vec3<T>(y * T(th)))), T(16) * ulp<T>());
  }
}

TYPED_TEST(Rev, FamilyMembersSendBToM) {
  using T = TypeParam;
  const RotationFamily<T> fam = rotation_family(v3<T>(0, 1, 0), v3<T>(1, 0, 0));
  EXPECT_LE(geodesic_distance(fam.base, quat_exp(Vec3<T>(T(0), T(0), -pi<T>() / 2))), T(16) * ulp<T>());
  for (const T& th : {T(0), pi<T>() / 3, pi<T>()}) {
    EXPECT_LE(max_abs_entry(Vec3<T>(rotate_vec(fam.member(th), v3<T>(0, 1, 0)) - v3<T>(1, 0, 0))),
              T(100) * ulp<T>());
  }
  test::Rng<T> rng(51);
  for (int i = 0; i < 100; ++i) {
    const Vec3<T> b = rng.vec(), m = rng.vec();
    const RotationFamily<T> f = rotation_family(b, m);
    const UnitQuaternion<T> r = f.member(rng.uni(0, 6.3));
    EXPECT_LE(max_abs_entry(Vec3<T>(rotate_vec(r, normalized(b)) - normalized(m))), T(100) * ulp<T>());
  }
}

TYPED_TEST(Rev, AntiparallelInputIsFlaggedAndStillValid) {
  using T = TypeParam;
  const Vec3<T> b = v3<T>(0.2, 0.5, -0.8);
  const RotationFamily<T> fam = rotation_family(b, Vec3<T>(-b * T(3)));
  EXPECT_TRUE(fam.antiparallel);
  for (double th : {0.0, 1.0, 4.0}) {
    EXPECT_LE(max_abs_entry(Vec3<T>(rotate_vec(fam.member(T(th)), normalized(b)) + normalized(b))),
              T(100) * ulp<T>());
  }
  EXPECT_THROW(rotation_family(Vec3<T>(Vec3<T>::Zero()), b), std::invalid_argument);
}

TYPED_TEST(Rev, FamilyIsComplete) {
  using T = TypeParam;
  test::Rng<T> rng(52);
  for (int i = 0; i < 200; ++i) {
    const Vec3<T> b = rng.unit();
    const UnitQuaternion<T> target = rng.quat();
    const Vec3<T> m = rotate_vec(target, b);
    const RotationFamily<T> fam = rotation_family(b, m);
    EXPECT_LE(geodesic_distance(fam.member(fam.angle_of(target)), target), T(1e3) * ulp<T>()) << i;
  }
}

TYPED_TEST(Rev, ConstructedSolutionIsFound) {
  using T = TypeParam;
  test::Rng<T> rng(53);
  const SurfaceModel<T> surface;
  const ReferenceVectors<T>& refs = surface.refs;
  for (int i = 0; i < 100; ++i) {
    const UnitQuaternion<T> truth = rng.quat();
    const Vec3<T> A = accel_reading(truth, Vec3<T>(Vec3<T>::Zero()), refs);
    const RotationFamily<T> fam = rotation_family(refs.b, mag_reading(truth, refs));
    const SurfaceSolution<T> sol = solve_surface_constraint(fam, A, surface.n, refs.g.dot(surface.n));
    ASSERT_FALSE(sol.thetas.empty());
    T best = pi<T>();
    for (const T& th : sol.thetas) best = std::min(best, geodesic_distance(quat_inverse(fam.member(th)), truth));
    EXPECT_LE(to_double(best), 1e3 * std::sqrt(to_double(ulp<T>()))) << i;
  }
}

TYPED_TEST(Rev, ShortAccelerationHasNoSolution) {
  using T = TypeParam;
  const RotationFamily<T> fam = rotation_family(v3<T>(0, 1, 0), v3<T>(0.3, 0.9, 0.1));
  const SurfaceSolution<T> sol = solve_surface_constraint(fam, v3<T>(0.5, 0.5, 0.5), v3<T>(0, 0, 1), T(1));
  EXPECT_TRUE(sol.thetas.empty());
}

// Brute-force scan of the constraint over a fine grid: sign changes of
// f - c, refined by the secant through the bracketing grid points.
TEST(RevGrid, ClosedFormMatchesGridScan) {
  test::Rng<double> rng(54);
  const int grid = 1000000;
  int root_sets = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const RotationFamily<double> fam = rotation_family(rng.vec(), rng.vec());
    const Vec3<double> A = rng.vec() * 5.0;
    const Vec3<double> n = rng.unit();
    const double c = rng.uni(-3, 3);
    const SurfaceSolution<double> sol = solve_surface_constraint(fam, A, n, c);
    std::vector<double> roots;
    const double h = two_pi<double>() / grid;
    auto f = [&](double th) { return rotate_vec(quat_inverse(fam.member(th)), A).dot(n) - c; };
    double prev = f(0.0);
    for (int k = 1; k <= grid; ++k) {
      const double th = k * h;
      const double cur = f(th);
      if ((prev < 0) != (cur < 0)) {
        const double root = th - h * cur / (cur - prev);
        roots.push_back(root >= two_pi<double>() ? root - two_pi<double>() : root);
      }
      prev = cur;
    }
    std::sort(roots.begin(), roots.end());
    ASSERT_EQ(roots.size(), sol.thetas.size()) << trial;
    for (std::size_t i = 0; i < roots.size(); ++i) EXPECT_NEAR(roots[i], sol.thetas[i], 1e-6) << trial;
    // The closed-form curve is the same function as the direct evaluation.
    for (double th : {0.1, 2.0, 5.0}) EXPECT_NEAR(sol.curve(th) - c, f(th), 1e-12 * (A.norm() + std::abs(c)));
    if (!roots.empty()) ++root_sets;
  }
  EXPECT_GE(root_sets, 5);
}

TYPED_TEST(Rev, CandidateCountAndConstraintSatisfaction) {
  using T = TypeParam;
  test::Rng<T> rng(55);
  const SurfaceModel<T> surface;
  const ReferenceVectors<T>& refs = surface.refs;
  const T tol = constraint_tolerance<T>();
  int corrected = 0;
  for (int i = 0; i < 300; ++i) {
    const UnitQuaternion<T> truth = rng.quat();
    const Vec3<T> A = accel_reading(truth, horizontal(rng, rng.uni(0, 3)), refs) + rng.vec() * rng.uni(0, 0.5);
    const Vec3<T> M = mag_reading(truth, refs) + rng.vec() / T(10);
    const UnitQuaternion<T> pred = quat_mul(truth, quat_exp(rng.rotvec(0.3)));
    const LinAlgOutcome<T> out = linalg_gravity(pred, A, M, surface, ConstraintKinematics<T>{});
    ASSERT_LE(out.candidates.size(), 2u);
    if (out.mode != LinAlgMode::Corrected) {
      EXPECT_EQ(out.A_g, A);
      continue;
    }
    ++corrected;
    const UnitQuaternion<T> r = quat_inverse(out.q_sel);
    EXPECT_LE(Vec3<T>(rotate_vec(r, normalized(refs.b)) - normalized(M)).norm(), tol) << i;
    EXPECT_LE(abs(rotate_vec(out.q_sel, A).dot(surface.n) - refs.g.dot(surface.n)), tol * A.norm()) << i;
    EXPECT_LE(max_abs_entry(Vec3<T>(out.A_g - rotate_vec(r, refs.g))), T(64) * ulp<T>() * refs.g.norm());
  }
  EXPECT_GE(corrected, 100);
}

TYPED_TEST(Rev, FieldAlignedWithBIsStillAtMostTwoPoints) {
  using T = TypeParam;
  const SurfaceModel<T> surface;
  const Vec3<T> b = normalized(surface.refs.b);
  for (double tilt : {0.0, 0.5, 2.0}) {
    const Vec3<T> A = v3<T>(tilt, 0, 9.81);
    const LinAlgOutcome<T> out =
        linalg_gravity(UnitQuaternion<T>::identity(), A, b, surface, ConstraintKinematics<T>{});
    EXPECT_LE(out.candidates.size(), 2u);
    EXPECT_TRUE(out.mode == LinAlgMode::Corrected || out.mode == LinAlgMode::NoIntersection);
  }
}

TYPED_TEST(Rev, PredictionOnTheSolutionSetIsSelected) {
  using T = TypeParam;
  using std::sqrt;
  test::Rng<T> rng(56);
  const SurfaceModel<T> surface;
  for (int i = 0; i < 100; ++i) {
    const UnitQuaternion<T> truth = rng.quat();
    const Vec3<T> A = accel_reading(truth, horizontal(rng, T(2)), surface.refs);
    const Vec3<T> M = mag_reading(truth, surface.refs);
    const LinAlgOutcome<T> out = linalg_gravity(truth, A, M, surface, ConstraintKinematics<T>{});
    ASSERT_EQ(out.mode, LinAlgMode::Corrected);
    // Root accuracy is ulp |A| / |f'(theta)| with |f'| = sqrt(r^2 - d^2) at a root.
    const SurfaceSolution<T> sol =
        solve_surface_constraint(rotation_family(surface.refs.b, M), A, surface.n, surface.refs.g.dot(surface.n));
    const T r = sol.curve.amplitude();
    const T d = surface.refs.g.dot(surface.n) - sol.curve.offset;
    const T slope = sqrt(T(r * r - d * d));
    EXPECT_LE(geodesic_distance(out.q_sel, truth), T(1e3) * ulp<T>() * A.norm() / slope) << i;
    if (out.candidates.size() == 2) {
      EXPECT_GT(out.candidates[1].distance, out.candidates[0].distance);
    }
  }
}

TYPED_TEST(Rev, NoiseFreeStaticInputIsReturnedUnchanged) {
  using T = TypeParam;
  test::Rng<T> rng(57);
  const SurfaceModel<T> surface;
  for (int i = 0; i < 50; ++i) {
    const UnitQuaternion<T> truth = rng.quat();
    const Vec3<T> A = accel_reading(truth, Vec3<T>(Vec3<T>::Zero()), surface.refs);
    const UnitQuaternion<T> pred = quat_mul(truth, quat_exp(rng.rotvec(0.05)));
    const LinAlgOutcome<T> out =
        linalg_gravity(pred, A, mag_reading(truth, surface.refs), surface, ConstraintKinematics<T>{});
    ASSERT_EQ(out.mode, LinAlgMode::Corrected);
    // Static gravity is a tangency of the constraint: accuracy is sqrt(ulp).
    const double tol = 1e2 * std::sqrt(to_double(ulp<T>()));
    EXPECT_LE(to_double(Vec3<T>(out.A_g - A).norm()), tol * 9.81);
    EXPECT_LE(to_double(geodesic_distance(out.q_sel, truth)), tol);
  }
}

TYPED_TEST(Rev, ExternalAccelerationCounterexampleIsRemoved) {
  using T = TypeParam;
  SurfaceModel<T> surface;
  surface.refs.g = v3<T>(0, 0, 1);
  surface.refs.b = v3<T>(0, 1, 0);
  for (double y : {0.0, 0.1, 1.0, 10.0, 1e3}) {
    const LinAlgOutcome<T> out = linalg_gravity(UnitQuaternion<T>::identity(), v3<T>(0, y, 1), v3<T>(0, 1, 0),
                                                surface, ConstraintKinematics<T>{});
    ASSERT_EQ(out.mode, LinAlgMode::Corrected) << y;
    EXPECT_LE(max_abs_entry(Vec3<T>(out.A_g - v3<T>(0, 0, 1))), T(64) * ulp<T>()) << y;
  }
}

// Perturbation perpendicular to A, i.e. tangent to the sphere |A| = const.
TEST(RevSensitivity, TangentialPerturbationMovesGravityLinearly) {
  test::Rng<double> rng(58);
  const SurfaceModel<double> surface;
  for (int trial = 0; trial < 10; ++trial) {
    const UnitQuaternion<double> truth = rng.quat();
    const Vec3<double> A = accel_reading(truth, horizontal(rng, 2.0), surface.refs);
    const Vec3<double> M = mag_reading(truth, surface.refs);
    const Vec3<double> tangent = normalized(Vec3<double>(A.cross(rng.vec())));
    const Vec3<double> base = linalg_gravity(truth, A, M, surface, ConstraintKinematics<double>{}).A_g;
    std::vector<double> x, y;
    for (int k = 3; k <= 8; ++k) {
      const double eps = std::pow(10.0, -k);
      const Vec3<double> moved =
          linalg_gravity(truth, Vec3<double>(A + tangent * eps), M, surface, ConstraintKinematics<double>{}).A_g;
      x.push_back(std::log10(eps));
      y.push_back(std::log10((moved - base).norm()));
    }
    const double slope = eval::least_squares_slope(x, y);
    EXPECT_LE(slope, 1.5) << trial;
    EXPECT_GE(slope, 0.8) << trial;
  }
}

TYPED_TEST(Rev, ReversalIsAnInvolutionAndActionComposes) {
  using T = TypeParam;
  test::Rng<T> rng(59);
  const GroupMeasurement<T> id_m{UnitQuaternion<T>::identity(), v3<T>(1, 2, 3), v3<T>(0, 1, 0), T(1) / 100};
  const GroupMeasurement<T> same = reverse_measurement(id_m);
  EXPECT_EQ(same.A, id_m.A);
  EXPECT_EQ(same.M, id_m.M);
  for (int i = 0; i < 100; ++i) {
    const GroupMeasurement<T> m{rng.quat(), rng.vec(), rng.unit(), T(1) / 100};
    const GroupMeasurement<T> twice = reverse_measurement(reverse_measurement(m));
    EXPECT_LE(geodesic_distance(twice.h, m.h), T(100) * ulp<T>());
    EXPECT_LE(max_abs_entry(Vec3<T>(twice.A - m.A)), T(100) * ulp<T>() * m.A.norm());
    EXPECT_LE(max_abs_entry(Vec3<T>(twice.M - m.M)), T(100) * ulp<T>());
    const UnitQuaternion<T> g1 = rng.quat(), g2 = rng.quat();
    const GroupMeasurement<T> lhs = act(quat_mul(g1, g2), m);
    const GroupMeasurement<T> rhs = act(g1, act(g2, m));
    EXPECT_LE(geodesic_distance(lhs.h, rhs.h), T(100) * ulp<T>());
    EXPECT_LE(max_abs_entry(Vec3<T>(lhs.A - rhs.A)), T(100) * ulp<T>() * m.A.norm());
  }
}

template <typename T>
FilterFn<T> rev_filter(const SurfaceModel<T>& surface) {
  return [surface](const mekf::FilterState<T>& s, const GroupMeasurement<T>& m) {
    return revmekf_step(s, to_sample(m), surface, mekf::NoiseMatrices<T>::diagonal(T(1) / 100, T(1) / 100)).state;
  };
}

/// Measurement taking truth q0 to q1 = q0 exp(omega dt), read at q1.
template <typename T>
GroupMeasurement<T> step_measurement(const UnitQuaternion<T>& q0, const Vec3<T>& omega, const T& dt,
                                     const Vec3<T>& a_ext, const ReferenceVectors<T>& refs) {
  sensors::ImuSample<T> s;
  s.dt = dt;
  s.omega = omega;
  const UnitQuaternion<T> q1 = sensors::integrate_gyro(q0, omega, dt);
  s.accel = accel_reading(q1, a_ext, refs);
  s.mag = mag_reading(q1, refs);
  return to_group_measurement(s);
}

template <typename T>
mekf::FilterState<T> start_state(const UnitQuaternion<T>& q) {
  mekf::FilterState<T> s;
  s.q = q;
  s.P = Mat6<T>::Identity() / T(100);
  return s;
}

TYPED_TEST(Rev, RevMekfReversesExactly) {
  using T = TypeParam;
  test::Rng<T> rng(60);
  const SurfaceModel<T> surface;
  const FilterFn<T> f = rev_filter(surface);
  for (int i = 0; i < 30; ++i) {
    const UnitQuaternion<T> q0 = rng.quat();
    const GroupMeasurement<T> m = step_measurement(q0, rng.vec(), T(1) / 100, horizontal(rng, T(2)), surface.refs);
    const ReversalErrors<T> e = check_reversibility(f, start_state(q0), m, T(0), Vec6<T>(Vec6<T>::Zero()));
    EXPECT_LE(e.exact, T(1e3) * ulp<T>() * T(2)) << i;
  }
  // A whole sequence, forward then backward.
  const UnitQuaternion<T> q0 = rng.quat();
  std::vector<GroupMeasurement<T>> ms;
  UnitQuaternion<T> q = q0;
  const int steps = 50;
  for (int k = 0; k < steps; ++k) {
    const Vec3<T> omega = rng.vec();
    ms.push_back(step_measurement(q, omega, T(1) / 100, horizontal(rng, T(2)), surface.refs));
    q = sensors::integrate_gyro(q, omega, T(1) / 100);
  }
  EXPECT_LE(check_sequence_reversibility(f, start_state(q0), ms), T(1e3) * ulp<T>() * T(2 * steps));
}

TYPED_TEST(Rev, RevMekfReversalIsStrong) {
  using T = TypeParam;
  test::Rng<T> rng(61);
  const SurfaceModel<T> surface;
  const FilterFn<T> f = rev_filter(surface);
  const int lo = std::is_same_v<T, double> ? 9 : 12;
  for (int i = 0; i < 10; ++i) {
    const UnitQuaternion<T> q0 = rng.quat();
    const GroupMeasurement<T> m = step_measurement(q0, rng.vec(), T(1) / 100, horizontal(rng, T(2)), surface.refs);
    Vec6<T> dir;
    dir << rng.vec(), rng.vec();
    std::vector<double> x, y;
    for (int k = 3; k <= lo; ++k) {
      const T eps = T(std::pow(10.0, -k));
      x.push_back(-k);
      y.push_back(to_double(T(log10(check_reversibility(f, start_state(q0), m, eps, dir).perturbed))));
    }
    const double slope = eval::least_squares_slope(x, y);
    EXPECT_GE(slope, 0.8) << i;
    EXPECT_LE(slope, 1.2) << i;
  }
}

TEST(RevCounterexample, MekfIsNotReversible) {
  ReferenceVectors<double> refs;
  refs.g = Vec3<double>(0, 0, 1);
  refs.b = Vec3<double>(0, 1, 0);
  SurfaceModel<double> surface;
  surface.refs = refs;
  const FilterFn<double> mekf_fn = [refs](const mekf::FilterState<double>& s, const GroupMeasurement<double>& m) {
    return mekf::mekf_step(s, to_sample(m), refs, mekf::NoiseMatrices<double>::diagonal(1e-2, 1e-2));
  };
  const FilterFn<double> rev_fn = rev_filter(surface);
  const GroupMeasurement<double> m{UnitQuaternion<double>::identity(), Vec3<double>(0, 10, 1),
                                   Vec3<double>(0, 1, 0), 0.01};
  mekf::FilterState<double> u;
  const double mekf_error = check_reversibility(mekf_fn, u, m, 0.0, Vec6<double>(Vec6<double>::Zero())).exact;
  const double rev_error = check_reversibility(rev_fn, u, m, 0.0, Vec6<double>(Vec6<double>::Zero())).exact;
  EXPECT_GT(mekf_error, 0.1);
  EXPECT_LE(rev_error, 1e3 * epsilon<double>());
}

TYPED_TEST(Rev, DetectionFiresOnLargeExternalAcceleration) {
  using T = TypeParam;
  test::Rng<T> rng(62);
  SurfaceModel<T> surface;
  for (int i = 0; i < 50; ++i) {
    const UnitQuaternion<T> truth = quat_exp(Vec3<T>(T(0), T(0), rng.uni(0, 6.28)));
    const Vec3<T> A = accel_reading(truth, horizontal(rng, T(3)), surface.refs);
    const LinAlgOutcome<T> out = detect_and_correct(truth, A, surface, T(2), ConstraintKinematics<T>{});
    ASSERT_EQ(out.mode, LinAlgMode::Corrected) << i;
    EXPECT_LE(to_double(out.candidates.front().distance), 1e2 * std::sqrt(to_double(ulp<T>())));
    EXPECT_GT(out.default_distance, T(2) * out.candidates.front().distance);
    EXPECT_GT(out.default_distance, T(1e-3));
    EXPECT_LE(max_abs_entry(Vec3<T>(out.A_g - accel_reading(truth, Vec3<T>(Vec3<T>::Zero()), surface.refs))),
              T(1e-6));
  }
}

TYPED_TEST(Rev, DetectionKeepsRawReadingWhenNoiseDominates) {
  using T = TypeParam;
  test::Rng<T> rng(63);
  SurfaceModel<T> surface;
  int kept = 0;
  for (int i = 0; i < 200; ++i) {
    const UnitQuaternion<T> truth = quat_exp(Vec3<T>(T(0), T(0), rng.uni(0, 6.28)));
    const Vec3<T> A = accel_reading(truth, horizontal(rng, T(1e-4)), surface.refs) + rng.vec() / T(10);
    const LinAlgOutcome<T> out = detect_and_correct(truth, A, surface, T(2), ConstraintKinematics<T>{});
    if (out.mode != LinAlgMode::Corrected) {
      ++kept;
      EXPECT_EQ(out.A_g, A);
    }
  }
  EXPECT_GE(kept, 180);
  EXPECT_THROW(detect_and_correct(UnitQuaternion<T>::identity(), surface.refs.g, surface, T(0.5),
                                  ConstraintKinematics<T>{}),
               std::invalid_argument);
}

TEST(RevDetection, VibrationVarianceIsReduced) {
  const ReferenceVectors<double> refs;
  sensors::OdometryRunSpec<double> spec;
  spec.speed = 10;
  spec.speed_variation = 0.2;
  spec.turn_rate_std = 0.05;
  spec.smoothing = 0.99;
  spec.duration = 20;
  sensors::NoiseSpec<double> noise;
  noise.accel_noise_std = 1e-3;
  noise.gyro_noise_std = 1e-4;
  sensors::OdometryRun<double> run = sensors::generate_odometry_run(spec, noise, refs);
  sensors::add_vibration(run.imu, 0.3, 15.0);
  eval::Dataset<double> data{run.imu, run.truth, {}};
  eval::RunConfig<double> config;
  config.gamma = 2;
  config.p0 = 1e-8;
  config.noise = mekf::NoiseMatrices<double>::diagonal(1e-8, 1.0);
  const eval::RunReport<double> report = eval::run_filter(eval::FilterId::RevMekfDetect, data, config);
  auto variance = [](const std::vector<double>& x) {
    double m = 0, s = 0;
    for (double v : x) m += v;
    m /= x.size();
    for (double v : x) s += (v - m) * (v - m);
    return s / x.size();
  };
  std::vector<double> raw, used;
  for (std::size_t k = 1; k < run.imu.size(); ++k) {
    raw.push_back(run.imu[k].accel.z());
    used.push_back(report.diagnostics[k].accel_used.z());
  }
  EXPECT_LT(variance(used), variance(raw));
  EXPECT_GT(report.correction_rate, 0.0);
}

// At fixed external acceleration magnitude the noise-free error does not
// depend on how much the acceleration varies.
TEST(RevMotion, ErrorIsIndependentOfAccelerationVariation) {
  const ReferenceVectors<Extended> refs;
  std::vector<double> errors;
  for (int k = 1; k <= 10; ++k) {
    sensors::TrajectorySpec<Extended> spec;
    spec.duration = Extended(10);
    spec.accel_variation = Extended(std::pow(10.0, -k));
    spec.base_accel = Extended(1);
    eval::Dataset<Extended> data;
    data.truth = sensors::generate_trajectory(spec, refs);
    data.imu = sensors::synthesize_imu(data.truth, sensors::NoiseSpec<Extended>{}, refs);
    const auto report = eval::run_filter(eval::FilterId::RevMekf, data, eval::RunConfig<Extended>{});
    errors.push_back(to_double(report.max_position_error));
  }
  const auto [lo, hi] = std::minmax_element(errors.begin(), errors.end());
  EXPECT_GT(*lo, 0.0);
  EXPECT_LT(*hi / *lo, 10.0);
}

}  // namespace
}  // namespace revkf
