#pragma once

// Experiment harness: runs a filter over a dataset against ground truth,
// sweeps one parameter on a log grid, and fits log-log trends.

#include "revkf/odom.hpp"
#include "revkf/reversible.hpp"
#include "revkf/sensors.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace revkf::eval {

enum class FilterId { MekfAdditive, MekfMultiplicative, RevMekf, RevMekfDetect, Odo, OdoRev };

const char* to_string(FilterId id);
/// Accepts the names produced by to_string; throws std::invalid_argument.
FilterId parse_filter_id(const std::string& name);

/// Filter failure annotated with the sample index it occurred at.
class StepError : public std::runtime_error {
 public:
  StepError(std::size_t step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

template <typename T>
struct RunConfig {
  mekf::NoiseMatrices<T> noise{mekf::NoiseMatrices<T>::diagonal(T(1) / 100, T(1) / 100)};
  T p0{T(1) / 100};  // initial covariance diagonal
  mekf::FilterOptions filter{};
  rev::ConstraintReading reading{rev::ConstraintReading::Tangency};
  T gamma{2};
  Vec3<T> pseudo_reference{T(0), T(1), T(0)};
  SurfaceModel<T> surface{};
  odom::OdomNoise<T> odo_noise{};
  odom::CovarianceForm odo_form{odom::CovarianceForm::AsWritten};
  T half_track{T(15) / 100};
  bool odo_detect{false};  // odo_rev: detection rules instead of plain LinAlg
};

template <typename T>
struct Dataset {
  std::vector<sensors::ImuSample<T>> imu;
  sensors::GroundTruth<T> truth;                   // empty when unknown
  std::vector<sensors::OdometrySample<T>> odometry;  // required by odo filters
};

template <typename T>
struct StepDiagnostic {
  std::size_t step{0};
  T t{0};
  rev::LinAlgMode mode{rev::LinAlgMode::NoIntersection};
  std::size_t candidates{0};
  T closest_distance{0};
  T default_distance{0};
  T external_norm{0};  // |A - A_g|
  Vec3<T> accel_used{Vec3<T>::Zero()};
};

template <typename T>
struct RunReport {
  FilterId filter{FilterId::MekfAdditive};
  bool has_truth{false};
  T max_position_error{0};
  T final_orientation_error{0};
  std::vector<T> position_error;     // one per sample; zeros without truth
  std::vector<T> orientation_error;  // one per sample
  T mean_accel_variation{0};
  T correction_rate{0};
  T mean_correction_angle{0};
  std::vector<UnitQuaternion<T>> orientation;
  std::vector<Vec3<T>> position;
  std::vector<StepDiagnostic<T>> diagnostics;
};

/// Orientation whose inverse maps g to the accelerometer reading and b to
/// the magnetometer reading, the accelerometer taking priority.
template <typename T>
UnitQuaternion<T> triad(const Vec3<T>& accel, const Vec3<T>& mag, const ReferenceVectors<T>& refs);

template <typename T>
RunReport<T> run_filter(FilterId id, const Dataset<T>& data, const RunConfig<T>& config);

enum class SweepParameter { AccelVariation, UpdateNoise, GyroBias, AccelNoise, Gamma };

const char* to_string(SweepParameter p);
SweepParameter parse_sweep_parameter(const std::string& name);

/// Log-spaced grid over [lo, hi] with `points` entries.
std::vector<double> log_grid(double lo, double hi, std::size_t points);

template <typename T>
struct SweepSpec {
  SweepParameter parameter{SweepParameter::AccelVariation};
  double lo{1e-10};
  double hi{1e-1};
  std::size_t points{10};
  std::size_t trials{5};
  std::uint64_t seed_base{1};
  sensors::TrajectorySpec<T> trajectory{};
  sensors::OdometryRunSpec<T> odometry{};  // used by the odometry filters
  sensors::NoiseSpec<T> noise{};
  RunConfig<T> run{};

  void validate() const;
};

struct SweepRow {
  double parameter;
  double error;
  std::size_t trial;
  std::uint64_t seed;
};

struct SweepTable {
  std::string parameter_name;
  std::vector<SweepRow> rows;  // sorted by (parameter, trial)
  double slope{0};             // least squares, log10 error vs log10 parameter
  double rank_correlation{0};  // Spearman, same axes
};

template <typename T>
SweepTable sweep(const SweepSpec<T>& spec, FilterId id);

/// Smallest error over the trials at each parameter value, ascending.
std::vector<std::pair<double, double>> per_parameter_min(const SweepTable& table);
std::vector<std::pair<double, double>> per_parameter_mean(const SweepTable& table);

double spearman(const std::vector<double>& x, const std::vector<double>& y);
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);
/// Fills slope and rank correlation from the rows (log10 of both columns).
void fit_trend(SweepTable& table);

std::string sweep_csv(const SweepTable& table);
template <typename T>
std::string report_csv(const RunReport<T>& report);
template <typename T>
std::string diagnostics_csv(const RunReport<T>& report);

}  // namespace revkf::eval
