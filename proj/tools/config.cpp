#include "revkf/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace revkf::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

struct Ctx {
  std::size_t line;
  std::string key;

  [[noreturn]] void fail(const std::string& what) const { throw ConfigParse(line, key, what); }
};

double to_number(const std::string& text, const Ctx& ctx) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) ctx.fail("expected a number, got '" + t + "'");
  return v;
}

std::uint64_t to_unsigned(const std::string& text, const Ctx& ctx) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    ctx.fail("expected a non-negative integer, got '" + t + "'");
  }
  return v;
}

bool to_bool(const std::string& text, const Ctx& ctx) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  ctx.fail("expected a boolean, got '" + t + "'");
}

Triple to_triple(const std::string& text, const Ctx& ctx) {
  const std::vector<std::string> parts = split_list(text);
  if (parts.size() == 1) {
    const double v = to_number(parts[0], ctx);
    return {v, v, v};
  }
  if (parts.size() != 3) ctx.fail("expected 'x, y, z'");
  return {to_number(parts[0], ctx), to_number(parts[1], ctx), to_number(parts[2], ctx)};
}

std::string to_choice(const std::string& text, std::initializer_list<const char*> allowed, const Ctx& ctx) {
  const std::string t = trim(text);
  for (const char* a : allowed) {
    if (t == a) return t;
  }
  std::string list;
  for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
  ctx.fail("expected one of {" + list + "}, got '" + t + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const Ctx&)>;

#define NUM(field) [](ExperimentConfig& c, const std::string& v, const Ctx& x) { c.field = to_number(v, x); }
#define TRI(field) [](ExperimentConfig& c, const std::string& v, const Ctx& x) { c.field = to_triple(v, x); }
#define BOOL(field) [](ExperimentConfig& c, const std::string& v, const Ctx& x) { c.field = to_bool(v, x); }

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"run",
       {
           {"precision", [](ExperimentConfig& c, const std::string& v, const Ctx& x) {
              try {
                c.precision = parse_precision(trim(v));
              } catch (const std::invalid_argument& e) {
                x.fail(e.what());
              }
            }},
           {"seed", [](ExperimentConfig& c, const std::string& v, const Ctx& x) { c.seed = to_unsigned(v, x); }},
           {"filter", [](ExperimentConfig& c, const std::string& v, const Ctx& x) {
              try {
                eval::parse_filter_id(trim(v));
              } catch (const std::invalid_argument& e) {
                x.fail(e.what());
              }
              c.filter = trim(v);
            }},
           {"preset", [](ExperimentConfig& c, const std::string& v, const Ctx&) { c.preset = trim(v); }},
       }},
      {"trajectory",
       {
           {"kind", [](ExperimentConfig& c, const std::string& v, const Ctx& x) {
              c.kind = to_choice(v, {"random", "odometry"}, x);
            }},
           {"duration", NUM(duration)},
           {"rate", NUM(rate)},
           {"accel_variation", NUM(accel_variation)},
           {"base_accel", NUM(base_accel)},
           {"smoothing", NUM(smoothing)},
           {"normal", TRI(trajectory_normal)},
           {"random_initial_orientation", BOOL(random_initial_orientation)},
           {"vibration_amplitude", NUM(vibration_amplitude)},
           {"vibration_hz", NUM(vibration_hz)},
       }},
      {"noise",
       {
           {"gyro_bias", TRI(gyro_bias)},
           {"gyro_noise_std", NUM(gyro_noise_std)},
           {"accel_noise_std", NUM(accel_noise_std)},
           {"mag_noise_std", NUM(mag_noise_std)},
       }},
      {"filter",
       {
           {"q", NUM(q)},
           {"u", NUM(u)},
           {"p0", NUM(p0)},
           {"residual", [](ExperimentConfig& c, const std::string& v, const Ctx& x) {
              c.residual = to_choice(v, {"additive", "multiplicative"}, x);
            }},
           {"transition", [](ExperimentConfig& c, const std::string& v, const Ctx& x) {
              c.transition = to_choice(v, {"first_order", "exact"}, x);
            }},
           {"reading", [](ExperimentConfig& c, const std::string& v, const Ctx& x) {
              c.reading = to_choice(v, {"tangency", "kinematic"}, x);
            }},
           {"gamma", NUM(gamma)},
           {"pseudo_reference", TRI(pseudo_reference)},
       }},
      {"surface",
       {
           {"normal", TRI(surface_normal)},
           {"point", TRI(surface_point)},
           {"g", TRI(g)},
           {"b", [](ExperimentConfig& c, const std::string& v, const Ctx& x) { c.b = to_triple(v, x); }},
       }},
      {"odometry",
       {
           {"speed", NUM(speed)},
           {"speed_variation", NUM(speed_variation)},
           {"turn_rate_std", NUM(turn_rate_std)},
           {"half_track", NUM(half_track)},
           {"smoothing", NUM(odo_smoothing)},
           {"odometry_noise_std", NUM(odometry_noise_std)},
           {"pressure_noise_std", NUM(pressure_noise_std)},
           {"q", NUM(odo_q)},
           {"u", NUM(odo_u)},
           {"form", [](ExperimentConfig& c, const std::string& v, const Ctx& x) {
              c.odo_form = to_choice(v, {"as_written", "conventional"}, x);
            }},
           {"detect", BOOL(odo_detect)},
       }},
      {"sweep",
       {
           {"parameter", [](ExperimentConfig& c, const std::string& v, const Ctx& x) {
              try {
                eval::parse_sweep_parameter(trim(v));
              } catch (const std::invalid_argument& e) {
                x.fail(e.what());
              }
              c.sweep_parameter = trim(v);
            }},
           {"lo", NUM(sweep_lo)},
           {"hi", NUM(sweep_hi)},
           {"points", [](ExperimentConfig& c, const std::string& v, const Ctx& x) {
              c.sweep_points = static_cast<std::size_t>(to_unsigned(v, x));
              if (c.sweep_points == 0) x.fail("sweep grid is empty");
            }},
           {"trials", [](ExperimentConfig& c, const std::string& v, const Ctx& x) {
              c.sweep_trials = static_cast<std::size_t>(to_unsigned(v, x));
            }},
           {"filters", [](ExperimentConfig& c, const std::string& v, const Ctx& x) {
              std::vector<std::string> names;
              for (const std::string& n : split_list(v)) {
                if (n.empty()) continue;
                try {
                  eval::parse_filter_id(n);
                } catch (const std::invalid_argument& e) {
                  x.fail(e.what());
                }
                names.push_back(n);
              }
              if (names.empty()) x.fail("filter list is empty");
              c.sweep_filters = std::move(names);
            }},
       }},
  };
  return table;
}

#undef NUM
#undef TRI
#undef BOOL

struct Entry {
  std::size_t line;
  std::string section;
  std::string key;
  std::string value;
};

std::vector<Entry> tokenize(const std::string& text) {
  std::vector<Entry> out;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find_first_of("#;");
    std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigParse(line, "", "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!setters().count(section)) throw ConfigParse(line, section, "unknown section");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigParse(line, "", "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ConfigParse(line, "", "missing key");
    if (section.empty()) throw ConfigParse(line, key, "key outside of any section");
    if (!setters().at(section).count(key)) throw ConfigParse(line, section + "." + key, "unknown key");
    out.push_back({line, section, key, trim(s.substr(eq + 1))});
  }
  return out;
}

std::string fmt(double x) { return format_scalar(x); }
std::string fmt(const Triple& t) { return fmt(t[0]) + ", " + fmt(t[1]) + ", " + fmt(t[2]); }
const char* fmt(bool b) { return b ? "true" : "false"; }

template <typename T>
Vec3<T> vec(const Triple& t) {
  return Vec3<T>(T(t[0]), T(t[1]), T(t[2]));
}

}  // namespace

const char* to_string(Precision p) { return p == Precision::Double ? "double" : "extended"; }

Precision parse_precision(const std::string& text) {
  if (text == "double" || text == "53") return Precision::Double;
  if (text == "extended" || text == "160") return Precision::Extended;
  throw std::invalid_argument("unsupported precision '" + text + "' (double/53 or extended/160)");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& what) { throw ConfigParse(0, key, what); };
  if (!(duration > 0)) fail("trajectory.duration", "must be positive");
  if (!(rate > 0)) fail("trajectory.rate", "must be positive");
  if (!(accel_variation >= 0)) fail("trajectory.accel_variation", "must be non-negative");
  if (!(base_accel >= 0)) fail("trajectory.base_accel", "must be non-negative");
  if (!(smoothing >= 0 && smoothing < 1)) fail("trajectory.smoothing", "must lie in [0, 1)");
  if (!(vibration_amplitude >= 0) || !(vibration_hz > 0)) fail("trajectory.vibration", "amplitude >= 0, hz > 0");
  if (!(gyro_noise_std >= 0) || !(accel_noise_std >= 0) || !(mag_noise_std >= 0)) {
    fail("noise", "standard deviations must be non-negative");
  }
  if (!(q >= 0)) fail("filter.q", "must be non-negative");
  if (!(u > 0)) fail("filter.u", "must be positive");
  if (!(p0 > 0)) fail("filter.p0", "must be positive");
  if (!(gamma > 0)) fail("filter.gamma", "must be positive");
  if (!(half_track > 0)) fail("odometry.half_track", "must be positive");
  if (!(odo_smoothing >= 0 && odo_smoothing < 1)) fail("odometry.smoothing", "must lie in [0, 1)");
  if (!(odo_q >= 0) || !(odo_u > 0)) fail("odometry.q/u", "q >= 0, u > 0");
  if (sweep_points == 0) fail("sweep.points", "sweep grid is empty");
  if (sweep_trials == 0) fail("sweep.trials", "must be at least 1");
  if (!(sweep_lo > 0) || !(sweep_hi >= sweep_lo)) fail("sweep.lo/hi", "need 0 < lo <= hi");
  if (sweep_filters.empty()) fail("sweep.filters", "filter list is empty");
  if (!preset.empty()) {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), preset) == names.end()) fail("run.preset", "unknown preset");
  }
}

std::vector<std::string> preset_names() { return {"fig1", "fig2", "noise"}; }

void apply_preset(ExperimentConfig& c, const std::string& name) {
  if (name == "fig1") {
    c.kind = "random";
    c.duration = 100;
    c.sweep_parameter = "accel_variation";
    c.sweep_lo = 1e-10;
    c.sweep_hi = 1e-1;
    c.sweep_points = 10;
    c.sweep_trials = 5;
    c.sweep_filters = {"mekf_additive"};
  } else if (name == "fig2") {
    c.kind = "random";
    c.duration = 100;
    c.accel_variation = 1e-5;
    c.gyro_bias = {1e-2, 1e-2, 1e-2};
    c.sweep_parameter = "update_noise";
    c.sweep_lo = 1e-10;
    c.sweep_hi = 1e-1;
    c.sweep_points = 10;
    c.sweep_trials = 5;
    c.sweep_filters = {"mekf_additive", "revmekf"};
  } else if (name == "noise") {
    c.precision = Precision::Extended;
    c.kind = "random";
    c.duration = 10;
    c.accel_variation = 5e-2;
    c.base_accel = 2;
    c.gyro_noise_std = 1e-8;
    c.u = 1e-10;
    c.sweep_parameter = "accel_noise";
    c.sweep_lo = 1e-15;
    c.sweep_hi = 1e-6;
    c.sweep_points = 10;
    c.sweep_trials = 1;
    c.sweep_filters = {"revmekf"};
  } else {
    throw ConfigParse(0, "run.preset", "unknown preset '" + name + "'");
  }
  c.preset = name;
}

void parse_config(const std::string& text, ExperimentConfig& config) {
  const std::vector<Entry> entries = tokenize(text);
  for (const Entry& e : entries) {
    if (e.section == "run" && e.key == "preset") {
      try {
        apply_preset(config, e.value);
      } catch (const ConfigParse& err) {
        throw ConfigParse(e.line, "run.preset", "unknown preset '" + e.value + "'");
      }
    }
  }
  for (const Entry& e : entries) {
    setters().at(e.section).at(e.key)(config, e.value, Ctx{e.line, e.section + "." + e.key});
  }
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigParse(0, "", "cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  parse_config(text.str(), base);
  return base;
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[run]\n"
    << "precision = " << to_string(c.precision) << "\nseed = " << c.seed << "\nfilter = " << c.filter << '\n';
  o << "\n[trajectory]\n"
    << "kind = " << c.kind << "\nduration = " << fmt(c.duration) << "\nrate = " << fmt(c.rate)
    << "\naccel_variation = " << fmt(c.accel_variation) << "\nbase_accel = " << fmt(c.base_accel)
    << "\nsmoothing = " << fmt(c.smoothing) << "\nnormal = " << fmt(c.trajectory_normal)
    << "\nrandom_initial_orientation = " << fmt(c.random_initial_orientation)
    << "\nvibration_amplitude = " << fmt(c.vibration_amplitude) << "\nvibration_hz = " << fmt(c.vibration_hz)
    << '\n';
  o << "\n[noise]\n"
    << "gyro_bias = " << fmt(c.gyro_bias) << "\ngyro_noise_std = " << fmt(c.gyro_noise_std)
    << "\naccel_noise_std = " << fmt(c.accel_noise_std) << "\nmag_noise_std = " << fmt(c.mag_noise_std) << '\n';
  o << "\n[filter]\n"
    << "q = " << fmt(c.q) << "\nu = " << fmt(c.u) << "\np0 = " << fmt(c.p0) << "\nresidual = " << c.residual
    << "\ntransition = " << c.transition << "\nreading = " << c.reading << "\ngamma = " << fmt(c.gamma)
    << "\npseudo_reference = " << fmt(c.pseudo_reference) << '\n';
  o << "\n[surface]\n"
    << "normal = " << fmt(c.surface_normal) << "\npoint = " << fmt(c.surface_point) << "\ng = " << fmt(c.g) << '\n';
  if (c.b) o << "b = " << fmt(*c.b) << '\n';
  o << "\n[odometry]\n"
    << "speed = " << fmt(c.speed) << "\nspeed_variation = " << fmt(c.speed_variation)
    << "\nturn_rate_std = " << fmt(c.turn_rate_std) << "\nhalf_track = " << fmt(c.half_track)
    << "\nsmoothing = " << fmt(c.odo_smoothing) << "\nodometry_noise_std = " << fmt(c.odometry_noise_std)
    << "\npressure_noise_std = " << fmt(c.pressure_noise_std) << "\nq = " << fmt(c.odo_q)
    << "\nu = " << fmt(c.odo_u) << "\nform = " << c.odo_form << "\ndetect = " << fmt(c.odo_detect) << '\n';
  o << "\n[sweep]\n"
    << "parameter = " << c.sweep_parameter << "\nlo = " << fmt(c.sweep_lo) << "\nhi = " << fmt(c.sweep_hi)
    << "\npoints = " << c.sweep_points << "\ntrials = " << c.sweep_trials << "\nfilters = ";
  for (std::size_t i = 0; i < c.sweep_filters.size(); ++i) o << (i ? ", " : "") << c.sweep_filters[i];
  o << '\n';
  return o.str();
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

template <typename T>
Resolved<T> resolve(const ExperimentConfig& c) {
  c.validate();
  Resolved<T> r;
  r.trajectory.duration = T(c.duration);
  r.trajectory.rate = T(c.rate);
  r.trajectory.accel_variation = T(c.accel_variation);
  r.trajectory.base_accel = T(c.base_accel);
  r.trajectory.smoothing = c.smoothing;
  r.trajectory.seed = c.seed;
  r.trajectory.normal = vec<T>(c.trajectory_normal);
  r.trajectory.origin = vec<T>(c.surface_point);
  r.trajectory.random_initial_orientation = c.random_initial_orientation;

  r.noise.gyro_bias = vec<T>(c.gyro_bias);
  r.noise.gyro_noise_std = T(c.gyro_noise_std);
  r.noise.accel_noise_std = T(c.accel_noise_std);
  r.noise.mag_noise_std = T(c.mag_noise_std);
  r.noise.seed = c.seed * 2654435761ULL + 1;

  r.odometry.duration = T(c.duration);
  r.odometry.rate = T(c.rate);
  r.odometry.speed = T(c.speed);
  r.odometry.speed_variation = T(c.speed_variation);
  r.odometry.turn_rate_std = T(c.turn_rate_std);
  r.odometry.half_track = T(c.half_track);
  r.odometry.normal = vec<T>(c.surface_normal);
  r.odometry.smoothing = c.odo_smoothing;
  r.odometry.odometry_noise_std = T(c.odometry_noise_std);
  r.odometry.pressure_noise_std = T(c.pressure_noise_std);
  r.odometry.seed = c.seed;

  eval::RunConfig<T>& run = r.run;
  run.noise = mekf::NoiseMatrices<T>::diagonal(T(c.q), T(c.u));
  run.p0 = T(c.p0);
  run.filter.residual =
      c.residual == "multiplicative" ? mekf::ResidualMode::Multiplicative : mekf::ResidualMode::Additive;
  run.filter.transition = c.transition == "exact" ? mekf::TransitionModel::Exact : mekf::TransitionModel::FirstOrder;
  run.reading = c.reading == "kinematic" ? rev::ConstraintReading::Kinematic : rev::ConstraintReading::Tangency;
  run.gamma = T(c.gamma);
  run.pseudo_reference = vec<T>(c.pseudo_reference);
  run.surface.n = vec<T>(c.surface_normal);
  run.surface.point = vec<T>(c.surface_point);
  run.surface.refs.g = vec<T>(c.g);
  if (c.b) run.surface.refs.b = vec<T>(*c.b);
  run.odo_noise.Q = odom::Mat2<T>::Identity() * T(c.odo_q);
  run.odo_noise.U = Mat6<T>::Identity() * T(c.odo_u);
  run.odo_form = c.odo_form == "conventional" ? odom::CovarianceForm::Conventional : odom::CovarianceForm::AsWritten;
  run.half_track = T(c.half_track);
  run.odo_detect = c.odo_detect;

  r.sweep.parameter = eval::parse_sweep_parameter(c.sweep_parameter);
  r.sweep.lo = c.sweep_lo;
  r.sweep.hi = c.sweep_hi;
  r.sweep.points = c.sweep_points;
  r.sweep.trials = c.sweep_trials;
  r.sweep.seed_base = c.seed;
  r.sweep.trajectory = r.trajectory;
  r.sweep.odometry = r.odometry;
  r.sweep.noise = r.noise;
  r.sweep.run = run;
  return r;
}

template Resolved<Real> resolve(const ExperimentConfig&);
template Resolved<Extended> resolve(const ExperimentConfig&);

}  // namespace revkf::cli
