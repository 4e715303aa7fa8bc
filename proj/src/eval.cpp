#include "revkf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace revkf::eval {

namespace {

constexpr std::pair<FilterId, const char*> kFilterNames[] = {
    {FilterId::MekfAdditive, "mekf_additive"}, {FilterId::MekfMultiplicative, "mekf_multiplicative"},
    {FilterId::RevMekf, "revmekf"},            {FilterId::RevMekfDetect, "revmekf_detect"},
    {FilterId::Odo, "odo"},                    {FilterId::OdoRev, "odo_rev"},
};

constexpr std::pair<SweepParameter, const char*> kSweepNames[] = {
    {SweepParameter::AccelVariation, "accel_variation"}, {SweepParameter::UpdateNoise, "update_noise"},
    {SweepParameter::GyroBias, "gyro_bias"},             {SweepParameter::AccelNoise, "accel_noise"},
    {SweepParameter::Gamma, "gamma"},
};

bool is_odometry(FilterId id) { return id == FilterId::Odo || id == FilterId::OdoRev; }

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

template <typename T>
std::string fmt(const T& x) {
  return format_scalar(x);
}

}  // namespace

const char* to_string(FilterId id) {
  for (const auto& [k, name] : kFilterNames) {
    if (k == id) return name;
  }
  return "unknown";
}

FilterId parse_filter_id(const std::string& name) {
  for (const auto& [k, n] : kFilterNames) {
    if (name == n) return k;
  }
  if (name == "mekf") return FilterId::MekfAdditive;
  throw std::invalid_argument("unknown filter id '" + name + "'");
}

const char* to_string(SweepParameter p) {
  for (const auto& [k, name] : kSweepNames) {
    if (k == p) return name;
  }
  return "unknown";
}

SweepParameter parse_sweep_parameter(const std::string& name) {
  for (const auto& [k, n] : kSweepNames) {
    if (name == n) return k;
  }
  throw std::invalid_argument("unknown sweep parameter '" + name + "'");
}

template <typename T>
UnitQuaternion<T> triad(const Vec3<T>& accel, const Vec3<T>& mag, const ReferenceVectors<T>& refs) {
  const Vec3<T> t1 = normalized(accel);
  const Vec3<T> t2 = normalized(Vec3<T>(t1.cross(normalized(mag))));
  const Vec3<T> s1 = normalized(refs.g);
  const Vec3<T> s2 = normalized(Vec3<T>(s1.cross(normalized(refs.b))));
  Mat3<T> body;
  Mat3<T> global;
  body << t1, t2, t1.cross(t2);
  global << s1, s2, s1.cross(s2);
  return from_matrix(Mat3<T>(global * body.transpose()));
}

template <typename T>
RunReport<T> run_filter(FilterId id, const Dataset<T>& data, const RunConfig<T>& config) {
  const std::size_t n = data.imu.size();
  if (n == 0) throw std::invalid_argument("run_filter: empty data stream");
  if (is_odometry(id) && data.odometry.size() != n) {
    throw std::invalid_argument("run_filter: odometry stream must match the IMU stream sample for sample");
  }
  config.noise.validate();
  const SurfaceModel<T> surface = config.surface.validated();

  RunReport<T> report;
  report.filter = id;
  report.has_truth = data.truth.size() == n;
  report.position_error.assign(n, T(0));
  report.orientation_error.assign(n, T(0));
  report.diagnostics.reserve(n);
  report.orientation.reserve(n);
  report.position.reserve(n);
  report.mean_accel_variation = sensors::measure_accel_variation(std::span<const sensors::ImuSample<T>>(data.imu));

  UnitQuaternion<T> q0;
  Vec3<T> p0 = surface.point;
  Vec3<T> v0 = Vec3<T>::Zero();
  if (report.has_truth) {
    q0 = data.truth[0].q;
    p0 = data.truth[0].p;
    v0 = data.truth[0].v;
  } else {
    q0 = triad(data.imu[0].accel, data.imu[0].mag, surface.refs);
  }

  mekf::FilterState<T> ms{q0, Vec3<T>::Zero(), Mat6<T>::Identity() * config.p0, p0, v0};
  odom::OdomState<T> os{q0, p0, v0, Mat6<T>::Identity() * config.p0, config.half_track};
  rev::RevOptions<T> rev_opts;
  rev_opts.filter = config.filter;
  rev_opts.reading = config.reading;
  rev_opts.pseudo_reference = config.pseudo_reference;
  if (id == FilterId::RevMekfDetect) rev_opts.gamma = config.gamma;
  mekf::FilterOptions mekf_opts = config.filter;
  if (id == FilterId::MekfAdditive) mekf_opts.residual = mekf::ResidualMode::Additive;
  if (id == FilterId::MekfMultiplicative) mekf_opts.residual = mekf::ResidualMode::Multiplicative;
  odom::OdomOptions<T> odo_opts;
  odo_opts.form = config.odo_form;
  odo_opts.use_linalg = id == FilterId::OdoRev;
  if (config.odo_detect) odo_opts.gamma = config.gamma;

  std::size_t corrected = 0;
  T angle_sum(0);
  auto record = [&](std::size_t k, const UnitQuaternion<T>& q, const Vec3<T>& p) {
    report.orientation.push_back(q);
    report.position.push_back(p);
    if (report.has_truth) {
      report.position_error[k] = (p - data.truth[k].p).norm();
      report.orientation_error[k] = geodesic_distance(q, data.truth[k].q);
    }
  };
  record(0, q0, p0);
  StepDiagnostic<T> first;
  first.t = data.imu[0].t;
  first.accel_used = data.imu[0].accel;
  report.diagnostics.push_back(first);

  for (std::size_t k = 1; k < n; ++k) {
    sensors::ImuSample<T> sample = data.imu[k];
    if (!(sample.dt > 0)) sample.dt = sample.t - data.imu[k - 1].t;
    StepDiagnostic<T> diag;
    diag.step = k;
    diag.t = sample.t;
    diag.accel_used = sample.accel;
    std::optional<rev::LinAlgOutcome<T>> outcome;
    try {
      switch (id) {
        case FilterId::MekfAdditive:
        case FilterId::MekfMultiplicative:
          ms = mekf::mekf_step(ms, sample, surface.refs, config.noise, mekf_opts);
          break;
        case FilterId::RevMekf:
        case FilterId::RevMekfDetect: {
          rev::StepResult<T> r = rev::revmekf_step(ms, sample, surface, config.noise, rev_opts);
          ms = std::move(r.state);
          outcome = std::move(r.outcome);
          break;
        }
        case FilterId::Odo:
        case FilterId::OdoRev: {
          odom::OdomStepResult<T> r =
              odom::odo_revmekf_step(os, data.odometry[k], sample.accel, sample.dt, surface, config.odo_noise, odo_opts);
          os = std::move(r.state);
          outcome = std::move(r.outcome);
          break;
        }
      }
    } catch (const std::exception& e) {
      throw StepError(k, e.what());
    }
    if (outcome) {
      diag.mode = outcome->mode;
      diag.candidates = outcome->candidates.size();
      diag.closest_distance = outcome->candidates.empty() ? T(0) : outcome->candidates.front().distance;
      diag.default_distance = outcome->default_distance;
      diag.accel_used = outcome->A_g;
      diag.external_norm = (sample.accel - outcome->A_g).norm();
      if (outcome->mode == rev::LinAlgMode::Corrected) {
        ++corrected;
        angle_sum += outcome->correction_angle();
      }
    }
    report.diagnostics.push_back(diag);
    if (is_odometry(id)) {
      record(k, os.q, os.p);
    } else {
      record(k, ms.q, ms.p);
    }
  }
  if (n > 1) report.correction_rate = T(static_cast<long long>(corrected)) / T(static_cast<long long>(n - 1));
  if (corrected > 0) report.mean_correction_angle = angle_sum / T(static_cast<long long>(corrected));
  report.max_position_error = *std::max_element(report.position_error.begin(), report.position_error.end());
  report.final_orientation_error = report.orientation_error.back();
  return report;
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi > 0.0)) throw std::invalid_argument("log grid bounds must be positive");
  if (points == 0) throw std::invalid_argument("log grid needs at least one point");
  if (points == 1) return {lo};
  std::vector<double> out(points);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

template <typename T>
void SweepSpec<T>::validate() const {
  if (points == 0) throw std::invalid_argument("sweep grid is empty");
  if (trials == 0) throw std::invalid_argument("sweep needs at least one trial");
  if (!(lo > 0.0) || !(hi > 0.0) || hi < lo) throw std::invalid_argument("sweep bounds must satisfy 0 < lo <= hi");
}

template <typename T>
SweepTable sweep(const SweepSpec<T>& spec, FilterId id) {
  spec.validate();
  SweepTable table;
  table.parameter_name = to_string(spec.parameter);
  for (const double value : log_grid(spec.lo, spec.hi, spec.points)) {
    for (std::size_t trial = 0; trial < spec.trials; ++trial) {
      const std::uint64_t seed = spec.seed_base + trial;
      sensors::TrajectorySpec<T> traj = spec.trajectory;
      sensors::NoiseSpec<T> noise = spec.noise;
      RunConfig<T> run = spec.run;
      traj.seed = seed;
      noise.seed = seed * 2654435761ULL + 1;
      const T v(value);
      switch (spec.parameter) {
        case SweepParameter::AccelVariation: traj.accel_variation = v; break;
        case SweepParameter::UpdateNoise: run.noise.U = Mat6<T>::Identity() * v; break;
        case SweepParameter::GyroBias: noise.gyro_bias = Vec3<T>(v, v, v); break;
        case SweepParameter::AccelNoise: noise.accel_noise_std = v; break;
        case SweepParameter::Gamma: run.gamma = v; break;
      }
      Dataset<T> data;
      if (is_odometry(id)) {
        sensors::OdometryRunSpec<T> os = spec.odometry;
        os.seed = seed;
        sensors::OdometryRun<T> r = sensors::generate_odometry_run(os, noise, run.surface.refs);
        data.imu = std::move(r.imu);
        data.truth = std::move(r.truth);
        data.odometry = std::move(r.odometry);
      } else {
        data.truth = sensors::generate_trajectory(traj, run.surface.refs);
        data.imu = sensors::synthesize_imu(data.truth, noise, run.surface.refs);
      }
      const RunReport<T> report = run_filter(id, data, run);
      table.rows.push_back({value, to_double(report.max_position_error), trial, seed});
    }
  }
  std::stable_sort(table.rows.begin(), table.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.parameter != b.parameter ? a.parameter < b.parameter : a.trial < b.trial;
  });
  fit_trend(table);
  return table;
}

std::vector<std::pair<double, double>> per_parameter_min(const SweepTable& table) {
  std::map<double, double> best;
  for (const SweepRow& r : table.rows) {
    const auto it = best.find(r.parameter);
    if (it == best.end() || r.error < it->second) best[r.parameter] = r.error;
  }
  return {best.begin(), best.end()};
}

std::vector<std::pair<double, double>> per_parameter_mean(const SweepTable& table) {
  std::map<double, std::pair<double, std::size_t>> acc;
  for (const SweepRow& r : table.rows) {
    auto& [sum, count] = acc[r.parameter];
    sum += r.error;
    ++count;
  }
  std::vector<std::pair<double, double>> out;
  for (const auto& [p, sc] : acc) out.emplace_back(p, sc.first / static_cast<double>(sc.second));
  return out;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need two equal-length samples");
  return pearson(ranks(x), ranks(y));
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope: need two equal-length samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx == 0.0 ? 0.0 : sxy / sxx;
}

void fit_trend(SweepTable& table) {
  std::vector<double> x;
  std::vector<double> y;
  for (const SweepRow& r : table.rows) {
    x.push_back(std::log10(r.parameter));
    y.push_back(std::log10(std::max(r.error, std::numeric_limits<double>::denorm_min())));
  }
  if (x.size() < 2) return;
  table.slope = least_squares_slope(x, y);
  table.rank_correlation = spearman(x, y);
}

std::string sweep_csv(const SweepTable& table) {
  std::ostringstream out;
  out << "parameter,error,trial,seed\n";
  for (const SweepRow& r : table.rows) {
    out << format_scalar(r.parameter) << ',' << format_scalar(r.error) << ',' << r.trial << ',' << r.seed << '\n';
  }
  return out.str();
}

template <typename T>
std::string report_csv(const RunReport<T>& report) {
  std::ostringstream out;
  out << "metric,value\n";
  out << "filter," << to_string(report.filter) << '\n';
  out << "samples," << report.position_error.size() << '\n';
  out << "has_truth," << (report.has_truth ? 1 : 0) << '\n';
  out << "max_position_error," << fmt(report.max_position_error) << '\n';
  out << "final_orientation_error," << fmt(report.final_orientation_error) << '\n';
  out << "mean_accel_variation," << fmt(report.mean_accel_variation) << '\n';
  out << "correction_rate," << fmt(report.correction_rate) << '\n';
  out << "mean_correction_angle," << fmt(report.mean_correction_angle) << '\n';
  return out.str();
}

template <typename T>
std::string diagnostics_csv(const RunReport<T>& report) {
  std::ostringstream out;
  out << "step,t,mode,candidates,closest_distance,default_distance,external_norm,ax,ay,az,position_error,"
         "orientation_error\n";
  for (std::size_t k = 0; k < report.diagnostics.size(); ++k) {
    const StepDiagnostic<T>& d = report.diagnostics[k];
    out << d.step << ',' << fmt(d.t) << ',' << rev::to_string(d.mode) << ',' << d.candidates << ','
        << fmt(d.closest_distance) << ',' << fmt(d.default_distance) << ',' << fmt(d.external_norm) << ','
        << fmt(d.accel_used.x()) << ',' << fmt(d.accel_used.y()) << ',' << fmt(d.accel_used.z()) << ','
        << fmt(report.position_error[k]) << ',' << fmt(report.orientation_error[k]) << '\n';
  }
  return out.str();
}

#define REVKF_INSTANTIATE(T)                                                                                 \
  template UnitQuaternion<T> triad(const Vec3<T>&, const Vec3<T>&, const ReferenceVectors<T>&);              \
  template RunReport<T> run_filter(FilterId, const Dataset<T>&, const RunConfig<T>&);                        \
  template struct SweepSpec<T>;                                                                              \
  template SweepTable sweep(const SweepSpec<T>&, FilterId);                                                  \
  template std::string report_csv(const RunReport<T>&);                                                      \
  template std::string diagnostics_csv(const RunReport<T>&);

REVKF_INSTANTIATE(Real)
REVKF_INSTANTIATE(Extended)

}  // namespace revkf::eval
