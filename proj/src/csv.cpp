#include "revkf/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace revkf {

std::string format_scalar(double x) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::string format_scalar(const Extended& x) {
  return x.str(std::numeric_limits<Extended>::max_digits10, std::ios_base::scientific);
}

}  // namespace revkf

namespace revkf::io {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '"' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '"' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
std::optional<T> parse_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if constexpr (std::is_same_v<T, double>) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
  } else {
    // cpp_bin_float accepts some inputs from_chars rejects; validate the
    // shape with the double parser first.
    double probe = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), probe);
    if ((res.ec != std::errc() && res.ec != std::errc::result_out_of_range) || res.ptr != s.data() + s.size()) {
      return std::nullopt;
    }
    try {
      return T(s);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
}

// Reads the header, resolves schema columns, and hands each data row to `row`
// as a field -> value map.
template <typename T, typename RowFn>
void read_table(const std::filesystem::path& path, const CsvSchema& schema, RowFn&& row) {
  std::ifstream in(path);
  if (!in) throw CsvError(CsvErrorKind::Io, 0, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw CsvError(CsvErrorKind::MissingColumn, 1, "missing header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // UTF-8 BOM
  const std::vector<std::string> header = split(line, ',');
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index.emplace(header[i], i);

  struct Resolved {
    const ColumnMap* map;
    std::optional<std::size_t> col;
  };
  std::vector<Resolved> cols;
  for (const ColumnMap& c : schema.columns) {
    const auto it = index.find(c.column);
    if (it == index.end()) {
      if (!c.optional) throw CsvError(CsvErrorKind::MissingColumn, 1, "missing column '" + c.column + "'");
      cols.push_back({&c, std::nullopt});
    } else {
      cols.push_back({&c, it->second});
    }
  }

  std::size_t line_no = 1;
  std::map<std::string, std::optional<T>> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw CsvError(CsvErrorKind::MalformedRow, line_no,
                     "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                         " fields, got " + std::to_string(cells.size()));
    }
    values.clear();
    for (const Resolved& r : cols) {
      if (!r.col) {
        values[r.map->field] = std::nullopt;
        continue;
      }
      const std::string& cell = cells[*r.col];
      std::optional<T> v = parse_cell<T>(cell);
      if (!v && !(cell.empty() && r.map->optional)) {
        throw CsvError(CsvErrorKind::MalformedRow, line_no,
                       "line " + std::to_string(line_no) + ": cannot parse '" + cell + "' in column '" +
                           r.map->column + "'");
      }
      if (v && r.map->factor != 1.0) *v *= T(r.map->factor);
      values[r.map->field] = v;
    }
    row(values, line_no);
  }
}

template <typename T>
T required(const std::map<std::string, std::optional<T>>& values, const std::string& field, std::size_t line) {
  const auto it = values.find(field);
  if (it == values.end() || !it->second) {
    throw CsvError(CsvErrorKind::MalformedRow, line, "line " + std::to_string(line) + ": missing '" + field + "'");
  }
  return *it->second;
}

template <typename T>
std::optional<T> optional_field(const std::map<std::string, std::optional<T>>& values, const std::string& field) {
  const auto it = values.find(field);
  return it == values.end() ? std::nullopt : it->second;
}

void check_monotone(bool first, bool increasing, std::size_t line) {
  if (!first && !increasing) {
    throw CsvError(CsvErrorKind::NonMonotoneTime, line,
                   "line " + std::to_string(line) + ": timestamps must be strictly increasing");
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw CsvError(CsvErrorKind::Io, 0, "cannot write " + path.string());
  return out;
}

template <typename T>
void put_vec(std::ostream& out, const Vec3<T>& v) {
  out << ',' << format_scalar(v.x()) << ',' << format_scalar(v.y()) << ',' << format_scalar(v.z());
}

}  // namespace

const ColumnMap* CsvSchema::find(const std::string& field) const {
  for (const ColumnMap& c : columns) {
    if (c.field == field) return &c;
  }
  return nullptr;
}

CsvSchema imu_schema() {
  CsvSchema s;
  s.columns = {{"t", "t"},   {"dt", "dt", 1.0, true},
               {"wx", "wx"}, {"wy", "wy"}, {"wz", "wz"},
               {"ax", "ax"}, {"ay", "ay"}, {"az", "az"},
               {"mx", "mx"}, {"my", "my"}, {"mz", "mz"}};
  return s;
}

CsvSchema odometry_schema() {
  CsvSchema s;
  s.columns = {{"t", "t"}, {"d_left", "d_left"}, {"d_right", "d_right"}, {"pressure", "pressure", 1.0, true}};
  return s;
}

CsvSchema pvs_dashboard_schema() {
  constexpr double kDegToRad = 0.017453292519943295;
  CsvSchema s;
  s.columns = {{"t", "timestamp"},
               {"wx", "gyro_x_dashboard", kDegToRad}, {"wy", "gyro_y_dashboard", kDegToRad},
               {"wz", "gyro_z_dashboard", kDegToRad},
               {"ax", "acc_x_dashboard"}, {"ay", "acc_y_dashboard"}, {"az", "acc_z_dashboard"},
               {"mx", "mag_x_dashboard"}, {"my", "mag_y_dashboard"}, {"mz", "mag_z_dashboard"}};
  return s;
}

CsvSchema parse_schema(const std::string& text) {
  CsvSchema s;
  std::string normalized = text;
  for (char& c : normalized) {
    if (c == '\n') c = ';';
  }
  for (const std::string& entry : split(normalized, ';')) {
    if (entry.empty()) continue;
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("schema entry without '=': " + entry);
    ColumnMap c;
    c.field = trim(std::string_view(entry).substr(0, eq));
    std::string rhs = trim(std::string_view(entry).substr(eq + 1));
    if (!rhs.empty() && rhs.back() == '?') {
      c.optional = true;
      rhs.pop_back();
    }
    const std::size_t star = rhs.find('*');
    if (star != std::string::npos) {
      const std::string f = trim(std::string_view(rhs).substr(star + 1));
      const std::optional<double> factor = parse_cell<double>(f);
      if (!factor) throw std::invalid_argument("bad unit factor in schema entry: " + entry);
      c.factor = *factor;
      rhs = trim(std::string_view(rhs).substr(0, star));
    }
    c.column = rhs;
    if (c.field.empty() || c.column.empty()) throw std::invalid_argument("empty schema entry: " + entry);
    s.columns.push_back(std::move(c));
  }
  return s;
}

template <typename T>
std::vector<sensors::ImuSample<T>> load_imu_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::vector<sensors::ImuSample<T>> out;
  read_table<T>(path, schema, [&](const auto& v, std::size_t line) {
    sensors::ImuSample<T> s;
    s.t = required<T>(v, "t", line);
    const bool first = out.empty();
    check_monotone(first, first || s.t > out.back().t, line);
    const std::optional<T> dt = optional_field<T>(v, "dt");
    s.dt = dt ? *dt : (first ? T(0) : s.t - out.back().t);
    s.omega = Vec3<T>(required<T>(v, "wx", line), required<T>(v, "wy", line), required<T>(v, "wz", line));
    s.accel = Vec3<T>(required<T>(v, "ax", line), required<T>(v, "ay", line), required<T>(v, "az", line));
    // Magnetometer columns the schema marks optional read as zero when absent.
    auto mag = [&](const char* f) {
      const ColumnMap* c = schema.find(f);
      if (c && c->optional) return optional_field<T>(v, f).value_or(T(0));
      return required<T>(v, f, line);
    };
    s.mag = Vec3<T>(mag("mx"), mag("my"), mag("mz"));
    if (schema.normalize_mag && s.mag.norm() > 0) s.mag = normalized(s.mag);
    out.push_back(s);
  });
  return out;
}

template <typename T>
std::vector<sensors::OdometrySample<T>> load_odometry_csv(const std::filesystem::path& path,
                                                          const CsvSchema& schema) {
  std::vector<sensors::OdometrySample<T>> out;
  read_table<T>(path, schema, [&](const auto& v, std::size_t line) {
    sensors::OdometrySample<T> s;
    s.t = required<T>(v, "t", line);
    check_monotone(out.empty(), out.empty() || s.t > out.back().t, line);
    s.d_left = required<T>(v, "d_left", line);
    s.d_right = required<T>(v, "d_right", line);
    s.pressure = optional_field<T>(v, "pressure");
    out.push_back(s);
  });
  return out;
}

namespace {

CsvSchema truth_schema() {
  CsvSchema s;
  s.normalize_mag = false;
  for (const char* f : {"t", "qw", "qx", "qy", "qz", "px", "py", "pz", "vx", "vy", "vz", "ax", "ay", "az", "wx",
                        "wy", "wz"}) {
    s.columns.push_back({f, f});
  }
  return s;
}

}  // namespace

template <typename T>
sensors::GroundTruth<T> load_truth_csv(const std::filesystem::path& path) {
  sensors::GroundTruth<T> out;
  read_table<T>(path, truth_schema(), [&](const auto& v, std::size_t line) {
    sensors::TruthSample<T> s;
    s.t = required<T>(v, "t", line);
    check_monotone(out.empty(), out.empty() || s.t > out.back().t, line);
    s.q = {required<T>(v, "qw", line), required<T>(v, "qx", line), required<T>(v, "qy", line),
           required<T>(v, "qz", line)};
    s.p = Vec3<T>(required<T>(v, "px", line), required<T>(v, "py", line), required<T>(v, "pz", line));
    s.v = Vec3<T>(required<T>(v, "vx", line), required<T>(v, "vy", line), required<T>(v, "vz", line));
    s.a_ext = Vec3<T>(required<T>(v, "ax", line), required<T>(v, "ay", line), required<T>(v, "az", line));
    s.omega = Vec3<T>(required<T>(v, "wx", line), required<T>(v, "wy", line), required<T>(v, "wz", line));
    out.push_back(s);
  });
  return out;
}

template <typename T>
void write_imu_csv(const std::filesystem::path& path, const std::vector<sensors::ImuSample<T>>& samples) {
  std::ofstream out = open_out(path);
  out << "t,dt,wx,wy,wz,ax,ay,az,mx,my,mz\n";
  for (const auto& s : samples) {
    out << format_scalar(s.t) << ',' << format_scalar(s.dt);
    put_vec(out, s.omega);
    put_vec(out, s.accel);
    put_vec(out, s.mag);
    out << '\n';
  }
}

template <typename T>
void write_odometry_csv(const std::filesystem::path& path,
                        const std::vector<sensors::OdometrySample<T>>& samples) {
  std::ofstream out = open_out(path);
  out << "t,d_left,d_right,pressure\n";
  for (const auto& s : samples) {
    out << format_scalar(s.t) << ',' << format_scalar(s.d_left) << ',' << format_scalar(s.d_right) << ',';
    if (s.pressure) out << format_scalar(*s.pressure);
    out << '\n';
  }
}

template <typename T>
void write_truth_csv(const std::filesystem::path& path, const sensors::GroundTruth<T>& truth) {
  std::ofstream out = open_out(path);
  out << "t,qw,qx,qy,qz,px,py,pz,vx,vy,vz,ax,ay,az,wx,wy,wz\n";
  for (const auto& s : truth) {
    out << format_scalar(s.t) << ',' << format_scalar(s.q.w) << ',' << format_scalar(s.q.x) << ','
        << format_scalar(s.q.y) << ',' << format_scalar(s.q.z);
    put_vec(out, s.p);
    put_vec(out, s.v);
    put_vec(out, s.a_ext);
    put_vec(out, s.omega);
    out << '\n';
  }
}

#define REVKF_INSTANTIATE(T)                                                                                      \
  template std::vector<sensors::ImuSample<T>> load_imu_csv(const std::filesystem::path&, const CsvSchema&);      \
  template std::vector<sensors::OdometrySample<T>> load_odometry_csv(const std::filesystem::path&,               \
                                                                     const CsvSchema&);                          \
  template sensors::GroundTruth<T> load_truth_csv(const std::filesystem::path&);                                 \
  template void write_imu_csv(const std::filesystem::path&, const std::vector<sensors::ImuSample<T>>&);          \
  template void write_odometry_csv(const std::filesystem::path&, const std::vector<sensors::OdometrySample<T>>&); \
  template void write_truth_csv(const std::filesystem::path&, const sensors::GroundTruth<T>&);

REVKF_INSTANTIATE(Real)
REVKF_INSTANTIATE(Extended)

}  // namespace revkf::io
