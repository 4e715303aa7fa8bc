#pragma once

// CSV ingestion and export for sensor streams.
//
// Files are comma-separated with a header row. A schema maps each sample field
// to a column name and a unit factor, so our own exports and third-party logs
// go through the same loader.

#include "revkf/sensors.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace revkf::io {

enum class CsvErrorKind { MalformedRow, NonMonotoneTime, MissingColumn, Io };

class CsvError : public std::runtime_error {
 public:
  CsvError(CsvErrorKind kind, std::size_t line, const std::string& what)
      : std::runtime_error(what), kind_(kind), line_(line) {}

  CsvErrorKind kind() const { return kind_; }
  /// 1-based line number in the file; 0 when not tied to a row.
  std::size_t line() const { return line_; }

 private:
  CsvErrorKind kind_;
  std::size_t line_;
};

struct ColumnMap {
  std::string field;   // e.g. "t", "wx", "ax", "mx", "d_left", "pressure", "dt"
  std::string column;  // header name in the file
  double factor{1.0};  // value = factor * column
  bool optional{false};
};

struct CsvSchema {
  std::vector<ColumnMap> columns;
  bool normalize_mag{true};

  const ColumnMap* find(const std::string& field) const;
};

/// t, dt (optional), wx..wz [rad/s], ax..az [m/s^2], mx..mz.
CsvSchema imu_schema();
/// t, d_left, d_right [m], pressure (optional) [m].
CsvSchema odometry_schema();
/// Dashboard IMU columns of the PVS driving dataset (gyro in deg/s, mag in uT).
CsvSchema pvs_dashboard_schema();

/// Parses "field=column[*factor][?]" entries separated by ';' or newlines; a
/// trailing '?' marks the column optional.
CsvSchema parse_schema(const std::string& text);

template <typename T>
std::vector<sensors::ImuSample<T>> load_imu_csv(const std::filesystem::path& path, const CsvSchema& schema);

template <typename T>
std::vector<sensors::OdometrySample<T>> load_odometry_csv(const std::filesystem::path& path,
                                                          const CsvSchema& schema);

template <typename T>
sensors::GroundTruth<T> load_truth_csv(const std::filesystem::path& path);

/// Writes with the default schema's column names at round-trip precision.
template <typename T>
void write_imu_csv(const std::filesystem::path& path, const std::vector<sensors::ImuSample<T>>& samples);

template <typename T>
void write_odometry_csv(const std::filesystem::path& path,
                        const std::vector<sensors::OdometrySample<T>>& samples);

template <typename T>
void write_truth_csv(const std::filesystem::path& path, const sensors::GroundTruth<T>& truth);

}  // namespace revkf::io
