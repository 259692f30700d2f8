#include "symk/dataset.hpp"
#include "symk/error.hpp"
#include "symk/experiment.hpp"
#include "symk/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace symk;

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string scale = "desk";
  std::string system;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_system) {
  cmd->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seed, "Global seed");
  cmd->add_option("--scale", f.scale, "Problem sizes")->check(CLI::IsMember({"desk", "paper"}));
  if (with_system) {
    cmd->add_option("--system", f.system, "pendulum, chain or wave")
        ->check(CLI::IsMember({"pendulum", "chain", "wave"}));
  }
}

ExperimentConfig resolve(const CommonFlags& f, const std::string& fallback_system) {
  const Scale scale = scale_from_string(f.scale);
  ExperimentConfig cfg;
  if (!f.config.empty()) {
    cfg = load_config(f.config, scale, f.system.empty() ? std::nullopt : std::optional<std::string>(f.system));
  } else {
    cfg = default_config(f.system.empty() ? fallback_system : f.system, scale);
  }
  if (f.seed) reseed(cfg, *f.seed);
  if (!f.out.empty()) cfg.out_dir = f.out;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(bool(out), ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorCode::IoError, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Vector parse_state(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      fail(ErrorCode::ConfigError, "--x0: cannot parse '" + cell + "'");
    }
  }
  return Eigen::Map<const Vector>(values.data(), Eigen::Index(values.size()));
}

int cmd_experiment(const CommonFlags& f, const std::string& system) {
  CommonFlags g = f;
  g.system = system;
  const ExperimentConfig cfg = resolve(g, system);
  const ExperimentResult result = run_experiment(cfg);
  for (const auto& s : result.steps) {
    std::cout << cfg.system << " dT=" << s.delta_t << " kernel=" << to_string(s.kernel.family())
              << " eps=" << s.kernel.epsilon() << " centers=" << s.centers
              << " train_E=" << s.train_curve.back() << " kernel_rel_T=" << s.kernel_mean_rel.back()
              << " midpoint_rel_T=" << s.baseline_mean_rel.back() << '\n';
  }
  std::cout << "wrote " << result.files.size() << " files to " << cfg.out_dir.string() << '\n';
  return 0;
}

int cmd_train(const CommonFlags& f) {
  const ExperimentConfig cfg = resolve(f, "pendulum");
  fs::create_directories(cfg.out_dir);
  const ExperimentSystem sys = make_system(cfg);
  const auto states = training_states(cfg, sys);
  for (double dt : cfg.delta_ts) {
    std::ostringstream tag;
    tag << dt;
    const TrainedModel trained = train_model(cfg, sys, states, dt);
    auto model_out = open_out(cfg.out_dir / ("model_dt" + tag.str() + ".json"));
    write_model_json(PredictorModel(trained.surrogate, dt), model_out);
    auto trace_out = open_out(cfg.out_dir / ("greedy_trace_dt" + tag.str() + ".csv"));
    write_trace_csv(trained.trace, trace_out);
    std::cout << "dT=" << dt << " kernel=" << to_string(trained.selection.kernel.family())
              << " eps=" << trained.selection.kernel.epsilon() << " centers=" << trained.surrogate.size()
              << " train_E=" << trained.trace.final_max_residual << '\n';
  }
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& x0_text, long steps, const std::string& out) {
  const PredictorModel model = read_model_json(read_text(model_path));
  const Vector x0 = parse_state(x0_text);
  require(x0.size() == model.surrogate().dim(), ErrorCode::ConfigError,
          "--x0 needs " + std::to_string(model.surrogate().dim()) + " values");
  require(steps >= 0, ErrorCode::ConfigError, "--steps must be non-negative");
  const Trajectory traj = rollout(model, x0, steps);
  if (out.empty()) {
    write_trajectory_csv(traj, std::cout, true);
  } else {
    auto file = open_out(out);
    write_trajectory_csv(traj, file, true);
  }
  return 0;
}

int cmd_separability(const CommonFlags& f) {
  const ExperimentConfig cfg = resolve(f, "pendulum");
  require(cfg.system == "pendulum", ErrorCode::ConfigError, "diagnose-separability needs a one-degree-of-freedom system");
  fs::create_directories(cfg.out_dir);
  const ExperimentSystem sys = make_system(cfg);
  const HBDataset data = build_hb_dataset(sys.model_space, training_states(cfg, sys), cfg.delta_ts.front(),
                                          cfg.micro_dt);
  const SeparabilityTables tables = separability_diagnostic(data);
  auto a = open_out(cfg.out_dir / "separability_a.csv");
  auto b = open_out(cfg.out_dir / "separability_b.csv");
  write_separability_csv(tables, a, b);
  const double spread_a = max_bin_spread(tables.table_a, {0, 2}, {1}, 1e-3);
  const double spread_b = max_bin_spread(tables.table_b, {0, 1}, {2, 3}, 1e-3);
  std::cout << "table A max spread in a 1e-3 input bin: " << spread_a << '\n'
            << "table B max spread in a 1e-3 x 1e-3 bin: " << spread_b << '\n';
  return 0;
}

int cmd_check_bounds(const CommonFlags& f, const std::string& model_path) {
  const ExperimentConfig cfg = resolve(f, "pendulum");
  fs::create_directories(cfg.out_dir);
  const ExperimentSystem sys = make_system(cfg);
  const auto states = training_states(cfg, sys);
  std::ostringstream csv;
  csv << "quantity,delta_t,value\n";
  const double bound = step_size_bound(sys.model_space, states, cfg.test.horizon);
  csv << csv_line({"step_size_bound_sample", "", format_double(bound)});
  std::cout << "step size bound over the training sample: " << bound << '\n';
  if (const auto* box = std::get_if<UniformBoxSampler>(&cfg.sampler.mode)) {
    const double b = step_size_bound_box(sys.model_space, box->lower, box->upper, cfg.test.horizon);
    csv << csv_line({"step_size_bound_box", "", format_double(b)});
    std::cout << "step size bound over the sampling box: " << b << '\n';
  } else if (const auto* grid = std::get_if<GridSampler>(&cfg.sampler.mode)) {
    const double b = step_size_bound_box(sys.model_space, grid->lower, grid->upper, cfg.test.horizon);
    csv << csv_line({"step_size_bound_box", "", format_double(b)});
    std::cout << "step size bound over the sampling box: " << b << '\n';
  }
  if (cfg.system == "wave") {
    for (double dt : cfg.delta_ts) {
      const ResonanceReport r = resonance_check(sys.model_space, dt);
      csv << csv_line({"resonance_det_d", format_double(dt), format_double(r.det_d)});
      csv << csv_line({"resonant", format_double(dt), r.resonant ? "1" : "0"});
      std::cout << "dT=" << dt << " det D=" << r.det_d << (r.resonant ? " resonant" : " non-resonant") << '\n';
    }
  }
  if (!model_path.empty()) {
    const PredictorModel model = read_model_json(read_text(model_path));
    require(model.surrogate().dim() == sys.model_space.dim(), ErrorCode::ConfigError,
            "model dimension does not match the configured system");
    const double margin = contraction_margin(model, states);
    csv << csv_line({"contraction_margin", format_double(model.delta_t()), format_double(margin)});
    std::cout << "contraction margin dT*L_s: " << margin << (margin < 1.0 ? " (< 1)" : " (>= 1)") << '\n';
  }
  auto out = open_out(cfg.out_dir / "bounds.csv");
  out << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symplectic kernel predictor for Hamiltonian dynamics"};
  app.require_subcommand(1);

  CommonFlags train_flags, exp_flags, sep_flags, bounds_flags;
  auto* train = app.add_subcommand("train", "Select a kernel and train one model per dT");
  add_common(train, train_flags, true);

  auto* predict = app.add_subcommand("predict", "Roll out a trained model");
  std::string model_path, x0_text, predict_out;
  long steps = 0;
  predict->add_option("--model", model_path, "Model JSON file")->required()->check(CLI::ExistingFile);
  predict->add_option("--x0", x0_text, "Initial state q_1,..,q_n,p_1,..,p_n")->required();
  predict->add_option("--steps", steps, "Number of macro steps")->required();
  predict->add_option("--out", predict_out, "Trajectory CSV (stdout when omitted)");

  auto* experiment = app.add_subcommand("experiment", "Run a benchmark end to end");
  std::string exp_system;
  experiment->add_option("system", exp_system, "pendulum, chain or wave")
      ->required()
      ->check(CLI::IsMember({"pendulum", "chain", "wave"}));
  add_common(experiment, exp_flags, false);

  auto* separability = app.add_subcommand("diagnose-separability", "Write the scatter tables for one-DOF data");
  add_common(separability, sep_flags, true);

  auto* bounds = app.add_subcommand("check-bounds", "Step-size bound, resonance and contraction margin");
  add_common(bounds, bounds_flags, true);
  std::string bounds_model;
  bounds->add_option("--model", bounds_model, "Model JSON for the contraction margin")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) return cmd_train(train_flags);
    if (*predict) return cmd_predict(model_path, x0_text, steps, predict_out);
    if (*experiment) return cmd_experiment(exp_flags, exp_system);
    if (*separability) return cmd_separability(sep_flags);
    if (*bounds) return cmd_check_bounds(bounds_flags, bounds_model);
  } catch (const Error& e) {
    std::cerr << "symk: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "symk: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
