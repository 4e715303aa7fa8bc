#include "revkf/cli.hpp"

#include "revkf/config.hpp"
#include "revkf/csv.hpp"
#include "revkf/plot.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace revkf::cli {

namespace fs = std::filesystem;

namespace {

// Setup failures (bad flags, bad config) exit with 2; everything after the
// command starts running exits with 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> precision;
  std::optional<double> gamma;
  std::optional<std::string> filter;
};

ExperimentConfig build_config(const CommonFlags& f) {
  ExperimentConfig c;
  if (!f.preset.empty()) apply_preset(c, f.preset);
  if (!f.config_path.empty()) c = load_config_file(f.config_path, c);
  if (f.seed) c.seed = *f.seed;
  if (f.precision) {
    try {
      c.precision = parse_precision(*f.precision);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (f.gamma) c.gamma = *f.gamma;
  if (f.filter) {
    try {
      eval::parse_filter_id(*f.filter);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    c.filter = *f.filter;
  }
  c.validate();
  return c;
}

class Manifest {
 public:
  Manifest(std::string command, const ExperimentConfig& c, fs::path dir) : dir_(std::move(dir)) {
    head_ << "command = " << command << '\n'
          << "precision = " << to_string(c.precision) << '\n'
          << "seed = " << c.seed << '\n'
          << "config_hash = " << hex64(fnv1a(to_text(c))) << '\n';
  }

  void add(const std::string& name, const std::string& contents) {
    const fs::path p = dir_ / name;
    std::ofstream o(p, std::ios::binary);
    o << contents;
    if (!o) throw std::runtime_error("cannot write '" + p.string() + "'");
    files_ << "output = " << name << ' ' << hex64(fnv1a(contents)) << '\n';
  }

  /// Registers a file already written by another routine.
  void add_existing(const std::string& name) {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files_ << "output = " << name << ' ' << hex64(fnv1a(s.str())) << '\n';
  }

  void write() {
    std::ofstream o(dir_ / "manifest.txt", std::ios::binary);
    o << head_.str() << files_.str();
    if (!o) throw std::runtime_error("cannot write manifest");
  }

 private:
  fs::path dir_;
  std::ostringstream head_;
  std::ostringstream files_;
};

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

template <typename T>
int cmd_generate(const ExperimentConfig& c, const fs::path& out_dir, std::ostream& out) {
  const Resolved<T> r = resolve<T>(c);
  Manifest manifest("generate", c, out_dir);
  manifest.add("config.ini", to_text(c));
  sensors::GroundTruth<T> truth;
  std::vector<sensors::ImuSample<T>> imu;
  if (c.kind == "odometry") {
    sensors::OdometryRun<T> run = sensors::generate_odometry_run(r.odometry, r.noise, r.run.surface.refs);
    truth = std::move(run.truth);
    imu = std::move(run.imu);
    io::write_odometry_csv(out_dir / "odo.csv", run.odometry);
    manifest.add_existing("odo.csv");
  } else {
    truth = sensors::generate_trajectory(r.trajectory, r.run.surface.refs);
    imu = sensors::synthesize_imu(truth, r.noise, r.run.surface.refs);
  }
  if (c.vibration_amplitude > 0) sensors::add_vibration(imu, T(c.vibration_amplitude), T(c.vibration_hz));
  io::write_truth_csv(out_dir / "truth.csv", truth);
  io::write_imu_csv(out_dir / "imu.csv", imu);
  manifest.add_existing("truth.csv");
  manifest.add_existing("imu.csv");
  manifest.write();
  out << "samples " << imu.size() << ", mean accel variation "
      << format_scalar(to_double(sensors::measure_accel_variation(std::span<const sensors::ImuSample<T>>(imu))))
      << '\n';
  return kExitOk;
}

io::CsvSchema schema_from_flag(const std::string& s) {
  if (s.empty() || s == "default") return io::imu_schema();
  if (s == "pvs") return io::pvs_dashboard_schema();
  try {
    return io::parse_schema(s);
  } catch (const std::exception& e) {
    throw UsageError(std::string("bad --schema: ") + e.what());
  }
}

template <typename T>
int cmd_run(const ExperimentConfig& c, const fs::path& data_dir, const io::CsvSchema& schema,
            const fs::path& out_dir, std::ostream& out) {
  const Resolved<T> r = resolve<T>(c);
  const eval::FilterId id = eval::parse_filter_id(c.filter);
  eval::Dataset<T> data;
  data.imu = io::load_imu_csv<T>(data_dir / "imu.csv", schema);
  if (fs::exists(data_dir / "truth.csv")) data.truth = io::load_truth_csv<T>(data_dir / "truth.csv");
  if (fs::exists(data_dir / "odo.csv")) {
    data.odometry = io::load_odometry_csv<T>(data_dir / "odo.csv", io::odometry_schema());
  }
  const eval::RunReport<T> report = eval::run_filter(id, data, r.run);
  Manifest manifest("run", c, out_dir);
  manifest.add("config.ini", to_text(c));
  manifest.add("report.csv", eval::report_csv(report));
  manifest.add("diagnostics.csv", eval::diagnostics_csv(report));
  manifest.write();
  out << eval::to_string(id) << ": max position error " << format_scalar(report.max_position_error)
      << ", final orientation error " << format_scalar(report.final_orientation_error) << ", correction rate "
      << format_scalar(report.correction_rate) << '\n';
  return kExitOk;
}

template <typename T>
int cmd_sweep(const ExperimentConfig& c, const fs::path& out_dir, std::ostream& out) {
  const Resolved<T> r = resolve<T>(c);
  Manifest manifest("sweep", c, out_dir);
  manifest.add("config.ini", to_text(c));
  std::vector<std::string> filters = c.sweep_filters;
  for (const std::string& name : filters) {
    const eval::FilterId id = eval::parse_filter_id(name);
    const eval::SweepTable table = eval::sweep(r.sweep, id);
    eval::AxesSpec axes;
    axes.title = std::string(eval::to_string(id)) + ": max position error vs " + table.parameter_name;
    axes.x_label = "log10 " + table.parameter_name;
    axes.y_label = "log10 max position error (m)";
    manifest.add("sweep_" + name + ".csv", eval::sweep_csv(table));
    manifest.add("sweep_" + name + ".svg", eval::plot_sweep(table, axes));
    std::ostringstream floor;
    floor << "parameter,min_error\n";
    for (const auto& [p, e] : eval::per_parameter_min(table)) floor << format_scalar(p) << ',' << format_scalar(e) << '\n';
    manifest.add("floor_" + name + ".csv", floor.str());
    out << name << ": slope " << format_scalar(table.slope) << ", rank correlation "
        << format_scalar(table.rank_correlation) << '\n';
  }
  manifest.write();
  return kExitOk;
}

void add_common(CLI::App* cmd, CommonFlags& f, bool with_filter) {
  cmd->add_option("--config", f.config_path, "Experiment config file");
  cmd->add_option("--preset", f.preset, "Named preset applied before the config file")
      ->check(CLI::IsMember(preset_names()));
  cmd->add_option("--out", f.out_dir, "Output directory")->required();
  cmd->add_option("--seed", f.seed, "Base seed");
  cmd->add_option("--precision", f.precision, "double | extended");
  cmd->add_option("--gamma", f.gamma, "Detection threshold");
  if (with_filter) cmd->add_option("--filter", f.filter, "Filter id");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reversible MEKF experiments: synthetic data, filter runs and parameter sweeps", "revkf"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  CLI::App* gen = app.add_subcommand("generate", "Write truth.csv, imu.csv (and odo.csv) from a config");
  add_common(gen, gen_flags, false);

  CommonFlags run_flags;
  std::string data_dir;
  std::string schema_text;
  CLI::App* run = app.add_subcommand("run", "Run one filter on a data directory");
  add_common(run, run_flags, true);
  run->get_option("--filter")->required();
  run->add_option("--data", data_dir, "Directory holding imu.csv [truth.csv] [odo.csv]")->required();
  run->add_option("--schema", schema_text, "IMU column schema: default | pvs | field=column[*factor][?];...");

  CommonFlags sweep_flags;
  CLI::App* sw = app.add_subcommand("sweep", "Sweep one parameter on a log grid and plot the result");
  add_common(sw, sweep_flags, true);

  std::vector<const char*> argv{"revkf"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  ExperimentConfig config;
  fs::path out_dir;
  io::CsvSchema schema;
  try {
    if (gen->parsed()) {
      config = build_config(gen_flags);
      out_dir = gen_flags.out_dir;
    } else if (run->parsed()) {
      config = build_config(run_flags);
      out_dir = run_flags.out_dir;
      schema = schema_from_flag(schema_text);
    } else {
      config = build_config(sweep_flags);
      out_dir = sweep_flags.out_dir;
      if (sweep_flags.filter) config.sweep_filters = {*sweep_flags.filter};
    }
  } catch (const ConfigParse& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  const bool extended = config.precision == Precision::Extended;
  try {
    prepare_out(out_dir.string());
    if (gen->parsed()) {
      return extended ? cmd_generate<Extended>(config, out_dir, out) : cmd_generate<Real>(config, out_dir, out);
    }
    if (run->parsed()) {
      return extended ? cmd_run<Extended>(config, data_dir, schema, out_dir, out)
                      : cmd_run<Real>(config, data_dir, schema, out_dir, out);
    }
    return extended ? cmd_sweep<Extended>(config, out_dir, out) : cmd_sweep<Real>(config, out_dir, out);
  } catch (const eval::StepError& e) {
    err << "filter error at step " << e.step() << ": " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace revkf::cli
