#pragma once

// Experiment configuration: flat key = value text grouped in [sections].
//
//   [run]        precision, seed, filter, preset
//   [trajectory] kind, duration, rate, accel_variation, base_accel, smoothing,
//                normal, random_initial_orientation, vibration_amplitude, vibration_hz
//   [noise]      gyro_bias, gyro_noise_std, accel_noise_std, mag_noise_std
//   [filter]     q, u, p0, residual, transition, reading, gamma, pseudo_reference
//   [surface]    normal, point, g, b
//   [odometry]   speed, speed_variation, turn_rate_std, half_track, smoothing,
//                odometry_noise_std, pressure_noise_std, q, u, form, detect
//   [sweep]      parameter, lo, hi, points, trials, filters
//
// Vectors are written "x, y, z"; lists are comma separated; '#' and ';'
// start comments.

#include "revkf/eval.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace revkf::cli {

class ConfigParse : public std::invalid_argument {
 public:
  ConfigParse(std::size_t line, const std::string& key, const std::string& what)
      : std::invalid_argument(line > 0 ? "config line " + std::to_string(line) + (key.empty() ? "" : " (" + key + ")") +
                                             ": " + what
                                       : (key.empty() ? "" : key + ": ") + what),
        line_(line),
        key_(key) {}

  std::size_t line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  std::size_t line_;
  std::string key_;
};

enum class Precision { Double, Extended };

const char* to_string(Precision p);
/// "double" | "53" | "extended" | "160".
Precision parse_precision(const std::string& text);

using Triple = std::array<double, 3>;

struct ExperimentConfig {
  // [run]
  Precision precision{Precision::Double};
  std::uint64_t seed{1};
  std::string filter{"revmekf"};
  std::string preset;

  // [trajectory]
  std::string kind{"random"};  // random | odometry
  double duration{100};
  double rate{100};
  double accel_variation{1e-1};
  double base_accel{0};
  double smoothing{0.99};
  Triple trajectory_normal{0, 0, 1};
  bool random_initial_orientation{true};
  double vibration_amplitude{0};
  double vibration_hz{15};

  // [noise]
  Triple gyro_bias{0, 0, 0};
  double gyro_noise_std{0};
  double accel_noise_std{0};
  double mag_noise_std{0};

  // [filter]
  double q{1e-2};
  double u{1e-2};
  double p0{1e-2};
  std::string residual{"additive"};      // additive | multiplicative
  std::string transition{"first_order"};  // first_order | exact
  std::string reading{"tangency"};        // tangency | kinematic
  double gamma{2};
  Triple pseudo_reference{0, 1, 0};

  // [surface]
  Triple surface_normal{0, 0, 1};
  Triple surface_point{0, 0, 0};
  Triple g{0, 0, 9.81};
  std::optional<Triple> b;  // unset: unit field, 60 degrees inclination

  // [odometry]
  double speed{0.2};
  double speed_variation{0.1};
  double turn_rate_std{0.05};
  double half_track{0.15};
  double odo_smoothing{0.995};
  double odometry_noise_std{0};
  double pressure_noise_std{0};
  double odo_q{1e-4};
  double odo_u{1e-2};
  std::string odo_form{"as_written"};  // as_written | conventional
  bool odo_detect{false};

  // [sweep]
  std::string sweep_parameter{"accel_variation"};
  double sweep_lo{1e-10};
  double sweep_hi{1e-1};
  std::size_t sweep_points{10};
  std::size_t sweep_trials{5};
  std::vector<std::string> sweep_filters{"mekf_additive"};

  /// Cross-field checks; throws ConfigParse with line 0.
  void validate() const;
};

/// Names accepted by apply_preset.
std::vector<std::string> preset_names();
/// fig1: MEKF accel-variation sweep. fig2: update-noise sweep under gyro
/// bias. noise: Rev-MEKF accel-noise sweep at extended precision.
void apply_preset(ExperimentConfig& config, const std::string& name);

/// Overlays the settings in `text` on `config`. A [run] preset is applied
/// first so that explicit keys override it.
void parse_config(const std::string& text, ExperimentConfig& config);
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});

/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t value);

template <typename T>
struct Resolved {
  sensors::TrajectorySpec<T> trajectory;
  sensors::NoiseSpec<T> noise;
  sensors::OdometryRunSpec<T> odometry;
  eval::RunConfig<T> run;
  eval::SweepSpec<T> sweep;
};

/// Library-level specs at precision T.
template <typename T>
Resolved<T> resolve(const ExperimentConfig& config);

}  // namespace revkf::cli
