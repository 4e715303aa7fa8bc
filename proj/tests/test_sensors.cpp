#include "support.hpp"

#include "revkf/csv.hpp"
#include "revkf/sensors.hpp"

#include <filesystem>
#include <fstream>

#include <unistd.h>

namespace revkf {
namespace {

using namespace sensors;
using std::abs;
using test::max_abs_entry;
using test::ulp;

namespace fs = std::filesystem;

template <typename T>
class Sensors : public ::testing::Test {};
TYPED_TEST_SUITE(Sensors, test::Precisions);

template <typename T>
TrajectorySpec<T> short_spec(double variation, std::uint64_t seed = 3) {
  TrajectorySpec<T> s;
  s.duration = T(5);
  s.accel_variation = T(variation);
  s.seed = seed;
  return s;
}

template <typename T>
std::vector<Vec3<T>> accel_of(const std::vector<ImuSample<T>>& imu) {
  std::vector<Vec3<T>> a;
  for (const auto& s : imu) a.push_back(s.accel);
  return a;
}

template <typename T>
bool same_stream(const GroundTruth<T>& a, const GroundTruth<T>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].t != b[k].t || a[k].q.w != b[k].q.w || a[k].q.x != b[k].q.x || a[k].q.y != b[k].q.y ||
        a[k].q.z != b[k].q.z || a[k].p != b[k].p || a[k].v != b[k].v || a[k].a_ext != b[k].a_ext) {
      return false;
    }
  }
  return true;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("revkf_test_" + std::to_string(::getpid()) + "_" + name);
}

TYPED_TEST(Sensors, IntegrateGyroExamples) {
  using T = TypeParam;
  const UnitQuaternion<T> id = UnitQuaternion<T>::identity();
  const UnitQuaternion<T> still = integrate_gyro(id, Vec3<T>(Vec3<T>::Zero()), T(1) / 100);
  EXPECT_EQ(still.w, T(1));
  EXPECT_EQ(still.vec(), Vec3<T>::Zero());
  const Vec3<T> quarter(T(0), T(0), pi<T>() / 2);
  EXPECT_LE(geodesic_distance(integrate_gyro(id, quarter, T(1)), quat_exp(quarter)), T(8) * ulp<T>());
}

TYPED_TEST(Sensors, GyroFoldTelescopes) {
  using T = TypeParam;
  test::Rng<T> rng(21);
  const T dt = T(1) / 100;
  std::vector<UnitQuaternion<T>> qs{rng.quat()};
  for (int k = 0; k < 500; ++k) qs.push_back(integrate_gyro(qs.back(), Vec3<T>(rng.vec() * T(2)), dt));
  UnitQuaternion<T> rebuilt = qs.front();
  for (std::size_t i = 0; i + 1 < qs.size(); ++i) rebuilt = quat_mul(rebuilt, quat_mul(quat_inverse(qs[i]), qs[i + 1]));
  EXPECT_LE(geodesic_distance(rebuilt, qs.back()), T(100) * ulp<T>() * T(500));
}

TYPED_TEST(Sensors, GenerationIsDeterministic) {
  using T = TypeParam;
  const ReferenceVectors<T> refs;
  const GroundTruth<T> a = generate_trajectory(short_spec<T>(1e-3), refs);
  const GroundTruth<T> b = generate_trajectory(short_spec<T>(1e-3), refs);
  const GroundTruth<T> c = generate_trajectory(short_spec<T>(1e-3, 4), refs);
  EXPECT_TRUE(same_stream(a, b));
  EXPECT_FALSE(same_stream(a, c));
  NoiseSpec<T> noise;
  noise.accel_noise_std = T(1e-3);
  noise.gyro_noise_std = T(1e-3);
  const auto ia = synthesize_imu(a, noise, refs);
  const auto ib = synthesize_imu(a, noise, refs);
  for (std::size_t k = 0; k < ia.size(); ++k) {
    ASSERT_EQ(ia[k].accel, ib[k].accel);
    ASSERT_EQ(ia[k].omega, ib[k].omega);
  }
}

TYPED_TEST(Sensors, VariationTargetIsMet) {
  using T = TypeParam;
  const ReferenceVectors<T> refs;
  for (double target : {1e-1, 1e-5, 1e-10}) {
    const auto imu = synthesize_imu(generate_trajectory(short_spec<T>(target), refs), NoiseSpec<T>{}, refs);
    const T measured = measure_accel_variation(std::span<const ImuSample<T>>(imu));
    EXPECT_GE(measured, T(0.8 * target)) << target;
    EXPECT_LE(measured, T(1.2 * target)) << target;
  }
}

TYPED_TEST(Sensors, ZeroVariationIsConstant) {
  using T = TypeParam;
  const ReferenceVectors<T> refs;
  const GroundTruth<T> truth = generate_trajectory(short_spec<T>(0.0), refs);
  for (const auto& s : truth) EXPECT_EQ(s.a_ext, truth.front().a_ext);
  const auto imu = synthesize_imu(truth, NoiseSpec<T>{}, refs);
  EXPECT_EQ(measure_accel_variation(std::span<const ImuSample<T>>(imu)), T(0));
}

TYPED_TEST(Sensors, ReintegrationReproducesTruth) {
  using T = TypeParam;
  const ReferenceVectors<T> refs;
  const GroundTruth<T> truth = generate_trajectory(short_spec<T>(1e-2), refs);
  const auto imu = synthesize_imu(truth, NoiseSpec<T>{}, refs);
  std::vector<UnitQuaternion<T>> q;
  for (const auto& s : truth) q.push_back(s.q);
  const auto a = accel_of(imu);
  const T dt = imu[1].dt;
  const auto p = dead_reckon(std::span<const UnitQuaternion<T>>(q), std::span<const Vec3<T>>(a), refs.g, dt,
                             truth.front().p, truth.front().v);
  T worst(0), scale(1);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    worst = std::max(worst, T((p[k] - truth[k].p).norm()));
    scale = std::max(scale, T(truth[k].p.norm()));
  }
  EXPECT_LE(worst, T(1000) * ulp<T>() * T(static_cast<long>(truth.size())) * scale);
}

TYPED_TEST(Sensors, DeadReckonStaticAndConstantAcceleration) {
  using T = TypeParam;
  const ReferenceVectors<T> refs;
  const std::size_t n = 101;
  std::vector<UnitQuaternion<T>> q(n, UnitQuaternion<T>::identity());
  std::vector<Vec3<T>> a(n, refs.g);
  const Vec3<T> zero(Vec3<T>::Zero());
  auto p = dead_reckon(std::span<const UnitQuaternion<T>>(q), std::span<const Vec3<T>>(a), refs.g, T(1) / 100, zero,
                       zero);
  for (const auto& x : p) EXPECT_EQ(x, zero);

  // Constant a_ext = (1,0,0) over T = 1 s: first-order error, halved with dt.
  auto endpoint_error = [&](std::size_t steps) {
    std::vector<UnitQuaternion<T>> qs(steps + 1, UnitQuaternion<T>::identity());
    std::vector<Vec3<T>> as(steps + 1, Vec3<T>(refs.g + Vec3<T>(T(1), T(0), T(0))));
    const T dt = T(1) / T(static_cast<long>(steps));
    const auto ps = dead_reckon(std::span<const UnitQuaternion<T>>(qs), std::span<const Vec3<T>>(as), refs.g, dt,
                                zero, zero);
    return T(ps.back().x() - T(1) / 2);
  };
  const T e1 = endpoint_error(100), e2 = endpoint_error(200);
  EXPECT_GT(e1, T(0));
  EXPECT_NEAR(to_double(e1 / e2), 2.0, 0.05);
}

// Truth produced at rate 2f and decimated agrees with truth at rate f to the
// integrator's first-order error, and the gap shrinks when dt halves again.
TYPED_TEST(Sensors, DeadReckonRichardson) {
  using T = TypeParam;
  const ReferenceVectors<T> refs;
  auto final_position = [&](std::size_t steps) {
    std::vector<UnitQuaternion<T>> qs;
    std::vector<Vec3<T>> as;
    const T dt = T(2) / T(static_cast<long>(steps));
    for (std::size_t k = 0; k <= steps; ++k) {
      using std::sin;
      using std::cos;
      const T t = T(static_cast<long>(k)) * dt;
      qs.push_back(quat_exp(Vec3<T>(T(0), T(0), t / 2)));
      const Vec3<T> a_ext(cos(t), sin(t), T(0));
      as.push_back(rotate_vec(quat_inverse(qs.back()), Vec3<T>(refs.g + a_ext)));
    }
    const Vec3<T> zero(Vec3<T>::Zero());
    return dead_reckon(std::span<const UnitQuaternion<T>>(qs), std::span<const Vec3<T>>(as), refs.g, dt, zero,
                       zero)
        .back();
  };
  const Vec3<T> p1 = final_position(200), p2 = final_position(400), p4 = final_position(800);
  const double ratio = to_double(T((p1 - p2).norm() / (p2 - p4).norm()));
  EXPECT_NEAR(ratio, 2.0, 0.1);
}

TYPED_TEST(Sensors, NoiseFreeFramesAreConsistent) {
  using T = TypeParam;
  const ReferenceVectors<T> refs;
  const GroundTruth<T> truth = generate_trajectory(short_spec<T>(1e-1), refs);
  const auto imu = synthesize_imu(truth, NoiseSpec<T>{}, refs);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const Vec3<T> a = external_acceleration(truth[k].q, imu[k].accel, refs.g);
    ASSERT_LE(max_abs_entry(Vec3<T>(a - truth[k].a_ext)), T(64) * ulp<T>() * T(16)) << k;
    ASSERT_EQ(imu[k].omega, truth[k].omega);
  }
}

TYPED_TEST(Sensors, StaticTruthReadsGravity) {
  using T = TypeParam;
  const ReferenceVectors<T> refs;
  TrajectorySpec<T> spec = short_spec<T>(0.0);
  spec.random_initial_orientation = false;
  const auto imu = synthesize_imu(generate_trajectory(spec, refs), NoiseSpec<T>{}, refs);
  for (const auto& s : imu) EXPECT_EQ(s.accel, refs.g);
}

TEST(SensorNoise, BiasAndNoiseLevels) {
  const ReferenceVectors<double> refs;
  TrajectorySpec<double> spec;
  spec.duration = 100;
  spec.accel_variation = 1e-3;
  const GroundTruth<double> truth = generate_trajectory(spec, refs);
  NoiseSpec<double> noise;
  noise.gyro_bias = Vec3<double>(1e-8, 0, 0);
  noise.gyro_noise_std = 1e-10;
  const auto imu = synthesize_imu(truth, noise, refs);
  Vec3<double> mean = Vec3<double>::Zero();
  for (std::size_t k = 0; k < imu.size(); ++k) mean += imu[k].omega - truth[k].omega;
  mean /= static_cast<double>(imu.size());
  EXPECT_NEAR(mean.x(), 1e-8, 1e-11);
  EXPECT_NEAR(mean.y(), 0.0, 1e-11);
  EXPECT_NEAR(mean.z(), 0.0, 1e-11);
}

TEST(SensorNoise, AccelNoiseStdAtExtendedPrecision) {
  const ReferenceVectors<Extended> refs;
  const GroundTruth<Extended> truth = generate_trajectory(short_spec<Extended>(1e-3), refs);
  const auto clean = synthesize_imu(truth, NoiseSpec<Extended>{}, refs);
  NoiseSpec<Extended> noise;
  noise.accel_noise_std = Extended("1e-15");
  const auto noisy = synthesize_imu(truth, noise, refs);
  Extended sum(0), sum2(0);
  std::size_t count = 0;
  for (std::size_t k = 0; k < noisy.size(); ++k) {
    for (int i = 0; i < 3; ++i) {
      const Extended d = noisy[k].accel(i) - clean[k].accel(i);
      sum += d;
      sum2 += d * d;
      ++count;
    }
  }
  const Extended n(static_cast<long>(count));
  const Extended var = sum2 / n - (sum / n) * (sum / n);
  EXPECT_NEAR(to_double(sqrt(var)) / 1e-15, 1.0, 0.1);
}

TYPED_TEST(Sensors, VariationIgnoresConstantOffset) {
  using T = TypeParam;
  const ReferenceVectors<T> refs;
  NoiseSpec<T> noise;
  noise.accel_noise_std = T(1e-4);
  auto imu = synthesize_imu(generate_trajectory(short_spec<T>(1e-2), refs), noise, refs);
  const T before = measure_accel_variation(std::span<const ImuSample<T>>(imu));
  for (auto& s : imu) s.accel += Vec3<T>(T(3), T(-7), T(11));
  const T after = measure_accel_variation(std::span<const ImuSample<T>>(imu));
  EXPECT_LE(abs(after - before), T(1e4) * ulp<T>() * before);
}

TYPED_TEST(Sensors, RejectsBadSpecs) {
  using T = TypeParam;
  const ReferenceVectors<T> refs;
  TrajectorySpec<T> s = short_spec<T>(-1.0);
  EXPECT_THROW(generate_trajectory(s, refs), std::invalid_argument);
  s = short_spec<T>(std::numeric_limits<double>::infinity());
  EXPECT_THROW(generate_trajectory(s, refs), std::invalid_argument);
  s = short_spec<T>(1e-3);
  s.rate = T(0);
  EXPECT_THROW(generate_trajectory(s, refs), std::invalid_argument);
  NoiseSpec<T> noise;
  noise.gyro_noise_std = T(-1);
  EXPECT_THROW(synthesize_imu(generate_trajectory(short_spec<T>(1e-3), refs), noise, refs), std::invalid_argument);
}

TYPED_TEST(Sensors, VibrationIsAZSinusoid) {
  using T = TypeParam;
  const ReferenceVectors<T> refs;
  const auto clean = synthesize_imu(generate_trajectory(short_spec<T>(1e-3), refs), NoiseSpec<T>{}, refs);
  auto shaken = clean;
  add_vibration(shaken, T(3) / 10, T(15));
  T peak(0);
  for (std::size_t k = 0; k < clean.size(); ++k) {
    EXPECT_EQ(shaken[k].accel.x(), clean[k].accel.x());
    EXPECT_EQ(shaken[k].accel.y(), clean[k].accel.y());
    peak = std::max(peak, T(abs(shaken[k].accel.z() - clean[k].accel.z())));
  }
  EXPECT_LE(peak, T(3) / 10 + T(16) * ulp<T>());
  EXPECT_GT(peak, T(29) / 100);
}

TYPED_TEST(Sensors, OdometryRunStaysOnPlane) {
  using T = TypeParam;
  using std::sin;
  using std::cos;
  const ReferenceVectors<T> refs;
  OdometryRunSpec<T> spec;
  spec.duration = T(5);
  const T tilt = pi<T>() / 18;
  spec.normal = Vec3<T>(sin(tilt), T(0), cos(tilt));
  const OdometryRun<T> run = generate_odometry_run(spec, NoiseSpec<T>{}, refs);
  ASSERT_EQ(run.truth.size(), run.odometry.size());
  ASSERT_EQ(run.truth.size(), run.imu.size());
  for (std::size_t k = 0; k < run.truth.size(); ++k) {
    const Vec3<T>& p = run.truth[k].p;
    EXPECT_LE(abs(p.dot(spec.normal)), T(1e3) * ulp<T>() * (p.norm() + T(1))) << k;
    const Vec3<T> body_z = rotate_vec(run.truth[k].q, Vec3<T>(T(0), T(0), T(1)));
    EXPECT_LE((body_z - spec.normal).norm(), T(1e3) * ulp<T>()) << k;
    ASSERT_TRUE(run.odometry[k].pressure.has_value());
    EXPECT_LE(abs(*run.odometry[k].pressure - p.z()), T(1e3) * ulp<T>() * (p.norm() + T(1)));
  }
}

// CSV

template <typename T>
std::vector<ImuSample<T>> sample_stream() {
  const ReferenceVectors<T> refs;
  NoiseSpec<T> noise;
  noise.accel_noise_std = T(1e-3);
  noise.mag_noise_std = T(1e-3);
  TrajectorySpec<T> spec = short_spec<T>(1e-2);
  spec.duration = T(1);
  return synthesize_imu(generate_trajectory(spec, refs), noise, refs);
}

TYPED_TEST(Sensors, CsvRoundTrip) {
  using T = TypeParam;
  const auto imu = sample_stream<T>();
  const fs::path path = temp_file("imu.csv");
  io::write_imu_csv(path, imu);
  io::CsvSchema schema = io::imu_schema();
  schema.normalize_mag = false;
  const auto back = io::load_imu_csv<T>(path, schema);
  fs::remove(path);
  ASSERT_EQ(back.size(), imu.size());
  for (std::size_t k = 0; k < imu.size(); ++k) {
    EXPECT_EQ(back[k].t, imu[k].t);
    EXPECT_EQ(back[k].dt, imu[k].dt);
    EXPECT_EQ(back[k].omega, imu[k].omega);
    EXPECT_EQ(back[k].accel, imu[k].accel);
    EXPECT_EQ(back[k].mag, imu[k].mag);
  }

  GroundTruth<T> truth = generate_trajectory(short_spec<T>(1e-2), ReferenceVectors<T>{});
  truth.resize(50);
  const fs::path tpath = temp_file("truth.csv");
  io::write_truth_csv(tpath, truth);
  const auto tback = io::load_truth_csv<T>(tpath);
  fs::remove(tpath);
  EXPECT_TRUE(same_stream(truth, tback));
}

TEST(Csv, ThreeRowFile) {
  const fs::path path = temp_file("three.csv");
  {
    std::ofstream o(path);
    o << "t,wx,wy,wz,ax,ay,az,mx,my,mz\n"
      << "0,0,0,0,0,0,9.81,0,1,0\n"
      << "0.01,0.1,0.2,0.3,1,2,3,0,2,0\n"
      << "0.02,0,0,0,0,0,9.81,0,0,3\n";
  }
  const auto imu = io::load_imu_csv<double>(path, io::imu_schema());
  fs::remove(path);
  ASSERT_EQ(imu.size(), 3u);
  EXPECT_EQ(imu[1].omega, Vec3<double>(0.1, 0.2, 0.3));
  EXPECT_EQ(imu[1].accel, Vec3<double>(1, 2, 3));
  EXPECT_EQ(imu[1].mag, Vec3<double>(0, 1, 0));
  EXPECT_DOUBLE_EQ(imu[2].dt, 0.01);
}

template <typename F>
io::CsvError capture(F&& f) {
  try {
    f();
  } catch (const io::CsvError& e) {
    return e;
  }
  ADD_FAILURE() << "no CsvError thrown";
  return io::CsvError(io::CsvErrorKind::Io, 0, "none");
}

TEST(Csv, ErrorsCarryKindAndLine) {
  const fs::path path = temp_file("bad.csv");
  auto write = [&](const std::string& text) {
    std::ofstream o(path);
    o << text;
  };
  const std::string header = "t,wx,wy,wz,ax,ay,az,mx,my,mz\n";
  write(header + "0,0,0,0,0,0,9.81,0,1,0\n0.02,0,0,0,0,0,9.81,0,1,0\n0.01,0,0,0,0,0,9.81,0,1,0\n");
  io::CsvError e = capture([&] { io::load_imu_csv<double>(path, io::imu_schema()); });
  EXPECT_EQ(e.kind(), io::CsvErrorKind::NonMonotoneTime);
  EXPECT_EQ(e.line(), 4u);

  write(header + "0,0,0,0,0,0,9.81,0,1,0\n0.01,0,0,zero,0,0,9.81,0,1,0\n");
  e = capture([&] { io::load_imu_csv<double>(path, io::imu_schema()); });
  EXPECT_EQ(e.kind(), io::CsvErrorKind::MalformedRow);
  EXPECT_EQ(e.line(), 3u);

  write(header + "0,0,0,0,0,0,9.81,0,1\n");
  e = capture([&] { io::load_imu_csv<double>(path, io::imu_schema()); });
  EXPECT_EQ(e.kind(), io::CsvErrorKind::MalformedRow);
  EXPECT_EQ(e.line(), 2u);

  write("t,wx,wy,wz,ax,ay,mx,my,mz\n0,0,0,0,0,0,0,1,0\n");
  e = capture([&] { io::load_imu_csv<double>(path, io::imu_schema()); });
  EXPECT_EQ(e.kind(), io::CsvErrorKind::MissingColumn);
  fs::remove(path);

  e = capture([&] { io::load_imu_csv<double>(temp_file("absent.csv"), io::imu_schema()); });
  EXPECT_EQ(e.kind(), io::CsvErrorKind::Io);
}

TEST(Csv, SchemaParsingAndUnitFactors) {
  const io::CsvSchema s = io::parse_schema("t=time;wx=gx*0.5;wy=gy;wz=gz;ax=a1;ay=a2;az=a3;mx=m1?;my=m2?;mz=m3?");
  const io::ColumnMap* wx = s.find("wx");
  ASSERT_NE(wx, nullptr);
  EXPECT_EQ(wx->column, "gx");
  EXPECT_EQ(wx->factor, 0.5);
  EXPECT_TRUE(s.find("mx")->optional);
  EXPECT_THROW(io::parse_schema("t"), std::invalid_argument);
  EXPECT_THROW(io::parse_schema("t=time*abc"), std::invalid_argument);

  const fs::path path = temp_file("schema.csv");
  {
    std::ofstream o(path);
    o << "time,gx,gy,gz,a1,a2,a3\n0,2,0,0,0,0,9.81\n1,4,0,0,0,0,9.81\n";
  }
  const auto imu = io::load_imu_csv<double>(path, s);
  fs::remove(path);
  ASSERT_EQ(imu.size(), 2u);
  EXPECT_EQ(imu[1].omega.x(), 2.0);
}

}  // namespace
}  // namespace revkf
