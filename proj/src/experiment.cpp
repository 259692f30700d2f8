#include "symk/experiment.hpp"

#include "symk/error.hpp"
#include "symk/io.hpp"
#include "symk/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace symk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { fail(ErrorCode::ConfigError, what); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr Eigen::Index kFeasibilityStates = 20;

enum SeedStream : std::uint64_t { kSamplerStream = 1, kTestStream = 2, kSplitStream = 3 };

std::string dt_tag(double dt) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", dt);
  return buf;
}

// ---------------------------------------------------------------- JSON input

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      config_error(where + ": unknown key '" + key + "'");
    }
  }
}

double get_double(const json& v, const std::string& where) {
  if (!v.is_number()) config_error(where + ": expected a number");
  return v.get<double>();
}

Eigen::Index get_count(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0) config_error(where + ": expected a non-negative integer");
  return Eigen::Index(v.get<long long>());
}

std::uint64_t get_seed(const json& v, const std::string& where) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    config_error(where + ": expected a non-negative integer seed");
  }
  return v.get<std::uint64_t>();
}

bool get_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) config_error(where + ": expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) config_error(where + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> get_doubles(const json& v, const std::string& where) {
  if (!v.is_array()) config_error(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_double(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Vector get_vector(const json& v, const std::string& where) {
  const auto d = get_doubles(v, where);
  return Eigen::Map<const Vector>(d.data(), Eigen::Index(d.size()));
}

KernelFamily get_family(const json& v, const std::string& where) {
  try {
    return kernel_family_from_string(get_string(v, where));
  } catch (const Error& e) {
    config_error(where + ": " + e.what());
  }
}

void apply_system_params(ExperimentConfig& cfg, const json& j) {
  const std::string where = "system_params";
  if (cfg.system == "pendulum") {
    check_keys(j, where, {"mass", "length", "gravity"});
    if (j.contains("mass")) cfg.pendulum.mass = get_double(j["mass"], where + ".mass");
    if (j.contains("length")) cfg.pendulum.length = get_double(j["length"], where + ".length");
    if (j.contains("gravity")) cfg.pendulum.gravity = get_double(j["gravity"], where + ".gravity");
  } else if (cfg.system == "chain") {
    check_keys(j, where, {"masses", "alpha", "beta"});
    if (j.contains("masses")) cfg.chain.masses = get_count(j["masses"], where + ".masses");
    if (j.contains("alpha")) cfg.chain.alpha = get_double(j["alpha"], where + ".alpha");
    if (j.contains("beta")) cfg.chain.beta = get_double(j["beta"], where + ".beta");
  } else {
    check_keys(j, where, {"nodes", "speed", "length"});
    if (j.contains("nodes")) cfg.wave.nodes = get_count(j["nodes"], where + ".nodes");
    if (j.contains("speed")) cfg.wave.speed = get_double(j["speed"], where + ".speed");
    if (j.contains("length")) cfg.wave.length = get_double(j["length"], where + ".length");
  }
}

void apply_sampler(SamplerSpec& spec, const json& j) {
  const std::string where = "sampler";
  check_keys(j, where, {"mode", "counts", "lower", "upper", "target_count", "seed", "z_max", "modes",
                        "energy_cap", "halfspace"});
  if (j.contains("mode")) {
    const std::string mode = get_string(j["mode"], where + ".mode");
    const bool same = (mode == "grid" && std::holds_alternative<GridSampler>(spec.mode)) ||
                      (mode == "uniform_box" && std::holds_alternative<UniformBoxSampler>(spec.mode)) ||
                      (mode == "reduced_box" && std::holds_alternative<ReducedBoxSampler>(spec.mode)) ||
                      (mode == "sine_modes" && std::holds_alternative<SineModesSampler>(spec.mode));
    if (!same) {
      const std::uint64_t seed = std::visit(
          [](const auto& m) -> std::uint64_t {
            if constexpr (requires { m.seed; }) return m.seed;
            return 0;
          },
          spec.mode);
      if (mode == "grid") spec.mode = GridSampler{};
      else if (mode == "uniform_box") spec.mode = UniformBoxSampler{Vector(), Vector(), 1, seed};
      else if (mode == "reduced_box") spec.mode = ReducedBoxSampler{1.0, 1, seed};
      else if (mode == "sine_modes") spec.mode = SineModesSampler{};
      else config_error(where + ".mode: unknown mode '" + mode + "'");
    }
  }
  auto reject = [&](const char* key, const char* mode) {
    if (j.contains(key)) config_error(where + "." + key + " does not apply to mode " + mode);
  };
  if (auto* g = std::get_if<GridSampler>(&spec.mode)) {
    for (const char* k : {"target_count", "seed", "z_max", "modes"}) reject(k, "grid");
    if (j.contains("counts")) {
      g->counts.clear();
      if (!j["counts"].is_array()) config_error(where + ".counts: expected an array");
      for (std::size_t i = 0; i < j["counts"].size(); ++i) {
        g->counts.push_back(get_count(j["counts"][i], where + ".counts[" + std::to_string(i) + "]"));
      }
    }
    if (j.contains("lower")) g->lower = get_vector(j["lower"], where + ".lower");
    if (j.contains("upper")) g->upper = get_vector(j["upper"], where + ".upper");
  } else if (auto* b = std::get_if<UniformBoxSampler>(&spec.mode)) {
    for (const char* k : {"counts", "z_max", "modes"}) reject(k, "uniform_box");
    if (j.contains("lower")) b->lower = get_vector(j["lower"], where + ".lower");
    if (j.contains("upper")) b->upper = get_vector(j["upper"], where + ".upper");
    if (j.contains("target_count")) b->target_count = get_count(j["target_count"], where + ".target_count");
    if (j.contains("seed")) b->seed = get_seed(j["seed"], where + ".seed");
  } else if (auto* r = std::get_if<ReducedBoxSampler>(&spec.mode)) {
    for (const char* k : {"counts", "lower", "upper", "modes"}) reject(k, "reduced_box");
    if (j.contains("z_max")) r->z_max = get_double(j["z_max"], where + ".z_max");
    if (j.contains("target_count")) r->target_count = get_count(j["target_count"], where + ".target_count");
    if (j.contains("seed")) r->seed = get_seed(j["seed"], where + ".seed");
  } else if (auto* s = std::get_if<SineModesSampler>(&spec.mode)) {
    for (const char* k : {"counts", "lower", "upper", "target_count", "seed", "z_max"}) reject(k, "sine_modes");
    if (j.contains("modes")) s->modes = get_count(j["modes"], where + ".modes");
  }
  if (j.contains("energy_cap")) {
    const json& cap = j["energy_cap"];
    if (cap.is_null()) {
      spec.energy_cap.reset();
    } else {
      check_keys(cap, where + ".energy_cap", {"value", "strict"});
      EnergyCap c = spec.energy_cap.value_or(EnergyCap{});
      if (cap.contains("value")) c.value = get_double(cap["value"], where + ".energy_cap.value");
      if (cap.contains("strict")) c.strict = get_bool(cap["strict"], where + ".energy_cap.strict");
      spec.energy_cap = c;
    }
  }
  if (j.contains("halfspace")) {
    const json& hs = j["halfspace"];
    if (hs.is_null()) {
      spec.halfspace.reset();
    } else {
      check_keys(hs, where + ".halfspace", {"coordinate", "sign"});
      HalfSpace h = spec.halfspace.value_or(HalfSpace{});
      if (hs.contains("coordinate")) h.coordinate = get_count(hs["coordinate"], where + ".halfspace.coordinate");
      if (hs.contains("sign")) {
        const double sign = get_double(hs["sign"], where + ".halfspace.sign");
        if (sign != 1.0 && sign != -1.0) config_error(where + ".halfspace.sign must be 1 or -1");
        h.sign = int(sign);
      }
      spec.halfspace = h;
    }
  }
}

void apply_greedy(GreedyConfig& g, const json& j) {
  check_keys(j, "greedy", {"max_centers", "residual_tolerance", "power_cutoff"});
  if (j.contains("max_centers")) g.max_centers = get_count(j["max_centers"], "greedy.max_centers");
  if (j.contains("residual_tolerance")) {
    g.residual_tolerance = get_double(j["residual_tolerance"], "greedy.residual_tolerance");
  }
  if (j.contains("power_cutoff")) g.power_cutoff = get_double(j["power_cutoff"], "greedy.power_cutoff");
}

void apply_selection(SelectionSpec& s, const json& j) {
  check_keys(j, "selection", {"families", "epsilons", "m_star", "validation_fraction", "kernel"});
  if (j.contains("families")) {
    if (!j["families"].is_array()) config_error("selection.families: expected an array");
    s.families.clear();
    for (std::size_t i = 0; i < j["families"].size(); ++i) {
      s.families.push_back(get_family(j["families"][i], "selection.families[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("epsilons")) s.epsilons = get_doubles(j["epsilons"], "selection.epsilons");
  if (j.contains("m_star")) s.m_star = get_count(j["m_star"], "selection.m_star");
  if (j.contains("validation_fraction")) {
    s.validation_fraction = get_double(j["validation_fraction"], "selection.validation_fraction");
  }
  if (j.contains("kernel")) {
    const json& k = j["kernel"];
    if (k.is_null()) {
      s.fixed.reset();
    } else {
      check_keys(k, "selection.kernel", {"family", "epsilon"});
      if (!k.contains("family") || !k.contains("epsilon")) {
        config_error("selection.kernel needs both family and epsilon");
      }
      const double eps = get_double(k["epsilon"], "selection.kernel.epsilon");
      if (!(eps > 0.0)) config_error("selection.kernel.epsilon must be positive");
      s.fixed = KernelSpec(get_family(k["family"], "selection.kernel.family"), eps);
    }
  }
}

void apply_test(TestSpec& t, const json& j) {
  check_keys(j, "test", {"count", "q_lower", "q_upper", "horizon", "seed"});
  if (j.contains("count")) t.count = get_count(j["count"], "test.count");
  if (j.contains("q_lower")) t.q_lower = get_vector(j["q_lower"], "test.q_lower");
  if (j.contains("q_upper")) t.q_upper = get_vector(j["q_upper"], "test.q_upper");
  if (j.contains("horizon")) t.horizon = get_double(j["horizon"], "test.horizon");
  if (j.contains("seed")) t.seed = get_seed(j["seed"], "test.seed");
}

void apply_mor(MorSpec& m, const json& j) {
  check_keys(j, "mor", {"modes", "reduced_n"});
  if (j.contains("modes")) m.modes = get_count(j["modes"], "mor.modes");
  if (j.contains("reduced_n")) m.reduced_n = get_count(j["reduced_n"], "mor.reduced_n");
}

// ------------------------------------------------------------ model file I/O

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// ------------------------------------------------------------ CSV helpers

void write_file(const fs::path& path, const std::string& content, std::vector<fs::path>& files) {
  std::ofstream out(path, std::ios::binary);
  require(bool(out), ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << content;
  require(bool(out), ErrorCode::IoError, "write failed for " + path.string());
  files.push_back(path);
}

void write_manifest(const fs::path& dir, const std::vector<fs::path>& files, const std::string& status) {
  std::ofstream out(dir / "MANIFEST", std::ios::binary);
  out << "status: " << status << '\n';
  for (const auto& f : files) out << "file: " << f.filename().string() << '\n';
}

double rel_error(const Vector& pred, const Vector& ref) {
  const double denom = ref.norm();
  const double num = (pred - ref).norm();
  return denom > 0.0 ? num / denom : num;
}

// Start states x0 = (q0, p_dT + dT y_q) recovered from validation rows.
void check_predictor(const Surrogate& s, const HBDataset& validation) {
  const PredictorModel model(s, validation.delta_t);
  const Eigen::Index n = validation.dim() / 2;
  const Eigen::Index stride = std::max<Eigen::Index>(1, validation.size() / kFeasibilityStates);
  for (Eigen::Index j = 0; j < validation.size(); j += stride) {
    Vector x0 = validation.inputs.row(j).transpose();
    x0.tail(n) += validation.delta_t * validation.targets.row(j).head(n).transpose();
    try {
      predict_step(model, x0);
    } catch (const Error& e) {
      fail(e.code(), std::string("predictor check: ") + e.what());
    }
  }
}

}  // namespace

// ------------------------------------------------------------------- config

Scale scale_from_string(const std::string& name) {
  if (name == "desk") return Scale::Desk;
  if (name == "paper") return Scale::Paper;
  config_error("unknown scale '" + name + "' (expected desk or paper)");
}

void reseed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  std::visit(
      [&](auto& m) {
        if constexpr (requires { m.seed; }) m.seed = derive_seed(seed, kSamplerStream);
      },
      cfg.sampler.mode);
  cfg.test.seed = derive_seed(seed, kTestStream);
}

ExperimentConfig default_config(const std::string& system, Scale scale) {
  const bool paper = scale == Scale::Paper;
  ExperimentConfig cfg;
  cfg.system = system;
  cfg.micro_dt = 1e-3;
  if (system == "pendulum") {
    const double g = cfg.pendulum.gravity;
    const Eigen::Index n = paper ? 200 : 50;
    cfg.sampler = {GridSampler{{n, n},
                               (Vector(2) << -std::numbers::pi, -2.0 * std::sqrt(g)).finished(),
                               (Vector(2) << std::numbers::pi, 2.0 * std::sqrt(g)).finished()},
                   EnergyCap{2.0 * g, true}, std::nullopt};
    cfg.delta_ts = {0.1, 0.05, 0.025};
    cfg.greedy.max_centers = paper ? 500 : 300;
    cfg.test = {10, Vector::Zero(1), Vector::Constant(1, std::numbers::pi), 6.0, 0};
  } else if (system == "chain") {
    cfg.sampler = {UniformBoxSampler{Vector::Constant(6, -0.5), Vector::Constant(6, 0.5), paper ? 10000 : 2000, 0},
                   EnergyCap{0.5, false}, std::nullopt};
    cfg.delta_ts = paper ? std::vector<double>{0.1, 0.05, 0.025} : std::vector<double>{0.1};
    cfg.greedy.max_centers = paper ? 1000 : 400;
    cfg.test = {10, Vector::Zero(3), Vector::Constant(3, 0.5), 10.0, 0};
  } else if (system == "wave") {
    cfg.wave = {paper ? 1000 : 200, 0.3, 1.0};
    cfg.sampler = {ReducedBoxSampler{1.0, paper ? 20000 : 2000, 0}, EnergyCap{5.0, false}, std::nullopt};
    cfg.delta_ts = paper ? std::vector<double>{0.1, 0.05, 0.025} : std::vector<double>{0.1};
    cfg.greedy.max_centers = 400;
    cfg.test = {10, Vector(), Vector(), 6.0, 0};
    cfg.mor = {2, 2};
  } else {
    config_error("unknown system '" + system + "' (expected pendulum, chain or wave)");
  }
  cfg.out_dir = fs::path("out") / system;
  reseed(cfg, 1);
  return cfg;
}

void ExperimentConfig::validate() const {
  if (system != "pendulum" && system != "chain" && system != "wave") config_error("unknown system '" + system + "'");
  if (delta_ts.empty()) config_error("delta_t list is empty");
  if (!(micro_dt > 0.0)) config_error("micro_dt must be positive");
  if (!(test.horizon > 0.0)) config_error("test.horizon must be positive");
  for (double dt : delta_ts) {
    if (!(dt > 0.0)) config_error("every delta_t must be positive");
    try {
      exact_step_ratio(dt, micro_dt);
      exact_step_ratio(test.horizon, dt);
    } catch (const Error&) {
      config_error("delta_t " + dt_tag(dt) + " must be a multiple of micro_dt and divide the horizon");
    }
  }
  if (selection.families.empty() && !selection.fixed) config_error("selection.families is empty");
  if (selection.epsilons.empty() && !selection.fixed) config_error("selection.epsilons is empty");
  for (double e : selection.epsilons) {
    if (!(e > 0.0)) config_error("selection.epsilons must be positive");
  }
  if (selection.m_star < 0) config_error("selection.m_star must be >= 0");
  if (!(selection.validation_fraction > 0.0 && selection.validation_fraction < 1.0)) {
    config_error("selection.validation_fraction must lie in (0, 1)");
  }
  if (greedy.max_centers < 1) config_error("greedy.max_centers must be >= 1");
  if (test.count < 1) config_error("test.count must be >= 1");
  if (system != "wave") {
    const Eigen::Index n = system == "pendulum" ? 1 : chain.masses;
    if (test.q_lower.size() != n || test.q_upper.size() != n) {
      config_error("test.q_lower and test.q_upper need " + std::to_string(n) + " entries");
    }
    if ((test.q_upper - test.q_lower).minCoeff() < 0.0) config_error("test bounds are not ordered");
  } else {
    if (!std::holds_alternative<ReducedBoxSampler>(sampler.mode)) {
      config_error("the wave experiment samples with mode reduced_box");
    }
    if (mor.modes < 1 || mor.reduced_n < 1) config_error("mor.modes and mor.reduced_n must be >= 1");
  }
}

ExperimentConfig apply_config_json(ExperimentConfig cfg, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(std::string("invalid JSON: ") + e.what());
  }
  check_keys(j, "config", {"system", "system_params", "sampler", "delta_t", "micro_dt", "greedy", "selection",
                           "test", "mor", "seed", "out_dir"});
  if (j.contains("system") && get_string(j["system"], "system") != cfg.system) {
    config_error("config system '" + j["system"].get<std::string>() + "' differs from '" + cfg.system + "'");
  }
  if (j.contains("seed")) reseed(cfg, get_seed(j["seed"], "seed"));
  if (j.contains("system_params")) apply_system_params(cfg, j["system_params"]);
  if (j.contains("sampler")) apply_sampler(cfg.sampler, j["sampler"]);
  if (j.contains("delta_t")) cfg.delta_ts = get_doubles(j["delta_t"], "delta_t");
  if (j.contains("micro_dt")) cfg.micro_dt = get_double(j["micro_dt"], "micro_dt");
  if (j.contains("greedy")) apply_greedy(cfg.greedy, j["greedy"]);
  if (j.contains("selection")) apply_selection(cfg.selection, j["selection"]);
  if (j.contains("test")) apply_test(cfg.test, j["test"]);
  if (j.contains("mor")) {
    if (cfg.system != "wave") config_error("mor applies to the wave system only");
    apply_mor(cfg.mor, j["mor"]);
  }
  if (j.contains("out_dir")) cfg.out_dir = get_string(j["out_dir"], "out_dir");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path, Scale scale, const std::optional<std::string>& system_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::string system;
  try {
    const json j = json::parse(text);
    if (j.is_object() && j.contains("system") && j["system"].is_string()) system = j["system"].get<std::string>();
  } catch (const json::parse_error& e) {
    config_error(path.string() + ": invalid JSON: " + e.what());
  }
  if (system_override) {
    if (!system.empty() && system != *system_override) {
      config_error(path.string() + " is a '" + system + "' config, not '" + *system_override + "'");
    }
    system = *system_override;
  }
  if (system.empty()) config_error(path.string() + ": missing \"system\"");
  return apply_config_json(default_config(system, scale), text);
}

// ------------------------------------------------------------------ systems

ExperimentSystem make_system(const ExperimentConfig& cfg) {
  if (cfg.system == "pendulum") {
    const auto s = HamiltonianSystem::pendulum(cfg.pendulum);
    return {s, s, std::nullopt};
  }
  if (cfg.system == "chain") {
    const auto s = HamiltonianSystem::chain(cfg.chain);
    return {s, s, std::nullopt};
  }
  const auto wave = HamiltonianSystem::wave(cfg.wave);
  const auto snapshots = sample_states(wave, {SineModesSampler{cfg.mor.modes}, std::nullopt, std::nullopt});
  const Eigen::Index n = wave.dof(), m = Eigen::Index(snapshots.size());
  Matrix q(n, m), p(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    q.col(j) = snapshots[std::size_t(j)].head(n);
    p.col(j) = snapshots[std::size_t(j)].tail(n);
  }
  ReducedBasis basis = csvd_basis(q, p, cfg.mor.reduced_n);
  const auto reduced = reduce_quadratic(basis, wave);
  return {wave, reduced, std::move(basis)};
}

std::vector<Vector> training_states(const ExperimentConfig& cfg, const ExperimentSystem& sys) {
  return sample_states(sys.model_space, cfg.sampler);
}

std::vector<Vector> test_initial_states(const ExperimentConfig& cfg, const ExperimentSystem& sys) {
  if (cfg.system == "wave") {
    // Reduced test states come from the training box with an independent seed.
    SamplerSpec spec = cfg.sampler;
    auto& box = std::get<ReducedBoxSampler>(spec.mode);
    box.target_count = cfg.test.count;
    box.seed = cfg.test.seed;
    return sample_states(sys.model_space, spec);
  }
  Rng rng(cfg.test.seed);
  const Eigen::Index n = sys.model_space.dof();
  std::vector<Vector> out;
  for (Eigen::Index k = 0; k < cfg.test.count; ++k) {
    Vector x = Vector::Zero(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = rng.uniform(cfg.test.q_lower(i), cfg.test.q_upper(i));
    out.push_back(std::move(x));
  }
  return out;
}

// ---------------------------------------------------------------- selection

Selection select_model(const SelectionSpec& spec, const GreedyConfig& greedy, const HBDataset& train,
                       const HBDataset& validation) {
  require(validation.size() > 0, ErrorCode::EmptyDataset, "select_model: empty validation set");
  std::vector<KernelSpec> candidates;
  if (spec.fixed) {
    candidates.push_back(*spec.fixed);
  } else {
    require(!spec.families.empty() && !spec.epsilons.empty(), ErrorCode::InvalidArgument,
            "select_model: empty kernel grid");
    std::vector<double> eps = spec.epsilons;
    std::stable_sort(eps.begin(), eps.end());
    for (KernelFamily f : spec.families) {
      for (double e : eps) candidates.emplace_back(f, e);
    }
  }
  GreedyConfig cfg = greedy;
  if (spec.m_star > 0) cfg.max_centers = spec.m_star;

  Selection out;
  bool found = false;
  double best = 0.0;
  for (const auto& k : candidates) {
    SelectionRow row{k.family(), k.epsilon(), std::numeric_limits<double>::quiet_NaN(), false, ""};
    try {
      auto [s, trace] = train_f_greedy(k, train, cfg, &validation);
      row.validation_error = max_residual(s, validation);
      if (!std::isfinite(row.validation_error)) fail(ErrorCode::NonFinite, "validation error is not finite");
      if (!found || row.validation_error < best) {
        check_predictor(s, validation);
        found = true;
        best = row.validation_error;
        out.kernel = k;
        out.surrogate = std::move(s);
        out.trace = std::move(trace);
        out.selected_row = out.table.size();
      }
    } catch (const Error& e) {
      row.failed = true;
      row.message = e.what();
    }
    out.table.push_back(std::move(row));
  }
  if (!found) fail(ErrorCode::AllCandidatesFailed, "every (kernel, epsilon) candidate failed");
  return out;
}

TrainedModel train_model(const ExperimentConfig& cfg, const ExperimentSystem& sys, const std::vector<Vector>& states,
                         double delta_t) {
  TrainedModel out;
  HBDataset data = build_hb_dataset(sys.model_space, states, delta_t, cfg.micro_dt);
  data.system = cfg.system;
  std::tie(out.train, out.validation) =
      split_train_validation(data, 1.0 - cfg.selection.validation_fraction, derive_seed(cfg.seed, kSplitStream));
  out.selection = select_model(cfg.selection, cfg.greedy, out.train, out.validation);
  const Eigen::Index m_star = cfg.selection.m_star;
  if (m_star == 0 || m_star == cfg.greedy.max_centers) {
    out.surrogate = out.selection.surrogate;
    out.trace = out.selection.trace;
  } else {
    std::tie(out.surrogate, out.trace) =
        train_f_greedy(out.selection.kernel, out.train, cfg.greedy, &out.validation);
    check_predictor(out.surrogate, out.validation);
  }
  return out;
}

// ------------------------------------------------------------------ metrics

TrajectoryMetrics compute_metrics(const Trajectory& pred, const Trajectory& baseline, const Trajectory& reference,
                                  const HamiltonianSystem& sys) {
  require(pred.size() == baseline.size(), ErrorCode::GridMismatch,
          "predictor and baseline trajectories have different lengths");
  require(pred.size() >= 1 && reference.size() >= 1, ErrorCode::GridMismatch, "empty trajectory");
  require(std::abs(pred.step - baseline.step) <= 1e-12 * std::abs(pred.step), ErrorCode::GridMismatch,
          "predictor and baseline use different macro steps");
  long ratio = 1;
  if (pred.size() > 1) {
    try {
      ratio = exact_step_ratio(pred.step, reference.step);
    } catch (const Error&) {
      fail(ErrorCode::GridMismatch, "macro step is not a multiple of the reference step");
    }
  }
  const std::size_t last = (pred.size() - 1) * std::size_t(ratio);
  require(last < reference.size(), ErrorCode::GridMismatch, "reference trajectory is shorter than the prediction");

  TrajectoryMetrics m;
  m.kernel_rel.label = "kernel";
  m.baseline_rel.label = "midpoint";
  m.kernel_energy.label = "kernel";
  m.baseline_energy.label = "midpoint";
  m.reference_energy.label = "reference";
  const double h0 = sys.energy(reference.states.front());
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const Vector& ref = reference.states[k * std::size_t(ratio)];
    const double t = pred.times[k];
    for (Series* s : {&m.kernel_rel, &m.baseline_rel, &m.kernel_energy, &m.baseline_energy, &m.reference_energy}) {
      s->x.push_back(t);
    }
    m.kernel_rel.y.push_back(rel_error(pred.states[k], ref));
    m.baseline_rel.y.push_back(rel_error(baseline.states[k], ref));
    m.kernel_energy.y.push_back(std::abs(h0 - sys.energy(pred.states[k])));
    m.baseline_energy.y.push_back(std::abs(h0 - sys.energy(baseline.states[k])));
    m.reference_energy.y.push_back(std::abs(h0 - sys.energy(ref)));
  }
  return m;
}

// --------------------------------------------------------------- model file

void write_model_json(const PredictorModel& model, std::ostream& out) {
  const Surrogate& s = model.surrogate();
  json j;
  j["version"] = 1;
  j["kernel"] = {{"family", std::string(to_string(s.kernel().family()))}, {"epsilon", s.kernel().epsilon()}};
  j["dim"] = s.dim();
  j["delta_T"] = model.delta_t();
  j["solver"] = {{"tolerance", model.settings().tolerance}, {"max_iterations", model.settings().max_iterations}};
  json fs_json = json::array();
  for (const auto& f : s.functionals()) fs_json.push_back({{"center", vector_json(f.center)}, {"coord", f.coord}});
  j["functionals"] = std::move(fs_json);
  j["coeffs"] = vector_json(s.coeffs());
  out << j.dump(1) << '\n';
}

PredictorModel read_model_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::IoError, std::string("model file: invalid JSON: ") + e.what());
  }
  try {
    check_keys(j, "model", {"version", "kernel", "dim", "delta_T", "solver", "functionals", "coeffs"});
    if (j.at("version").get<int>() != 1) fail(ErrorCode::IoError, "model file: unsupported version");
    const KernelSpec kernel(get_family(j.at("kernel").at("family"), "model.kernel.family"),
                            get_double(j.at("kernel").at("epsilon"), "model.kernel.epsilon"));
    const Eigen::Index dim = get_count(j.at("dim"), "model.dim");
    std::vector<DerivFunctional> functionals;
    for (const auto& f : j.at("functionals")) {
      functionals.push_back({get_vector(f.at("center"), "model.functionals.center"),
                             get_count(f.at("coord"), "model.functionals.coord")});
    }
    const Vector coeffs = get_vector(j.at("coeffs"), "model.coeffs");
    PredictorSettings settings;
    if (j.contains("solver")) {
      settings.tolerance = get_double(j["solver"].at("tolerance"), "model.solver.tolerance");
      settings.max_iterations = int(get_count(j["solver"].at("max_iterations"), "model.solver.max_iterations"));
    }
    return PredictorModel(Surrogate(kernel, dim, std::move(functionals), coeffs),
                          get_double(j.at("delta_T"), "model.delta_T"), settings);
  } catch (const json::exception& e) {
    fail(ErrorCode::IoError, std::string("model file: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) fail(ErrorCode::IoError, e.what());
    throw;
  }
}

// --------------------------------------------------------------- experiment

namespace {

struct Accumulator {
  std::vector<double> sum;
  std::vector<double> max;

  void add(const std::vector<double>& v) {
    if (sum.empty()) {
      sum.assign(v.size(), 0.0);
      max.assign(v.size(), 0.0);
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      sum[i] += v[i];
      max[i] = std::max(max[i], v[i]);
    }
  }

  std::vector<double> mean(std::size_t count) const {
    std::vector<double> out(sum);
    for (double& x : out) x /= double(count);
    return out;
  }
};

std::string convergence_csv(const GreedyTrace& trace) {
  const auto train = trace.train_curve();
  const auto val = trace.monitor_curve();
  std::ostringstream out;
  out << "m,train_max_residual,validation_max_residual\n";
  for (std::size_t m = 0; m < train.size(); ++m) {
    out << csv_line({std::to_string(m), format_double(train[m]), m < val.size() ? format_double(val[m]) : ""});
  }
  return out.str();
}

Series curve_series(const std::vector<double>& curve, const std::string& label) {
  Series s{label, {}, {}};
  for (std::size_t m = 1; m < curve.size(); ++m) {
    s.x.push_back(double(m));
    s.y.push_back(curve[m]);
  }
  return s;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  ExperimentResult result;
  auto& files = result.files;
  try {
    const ExperimentSystem sys = make_system(cfg);
    if (sys.basis) {
      std::ostringstream out;
      const Matrix& v = sys.basis->v;
      std::vector<std::string> header;
      for (Eigen::Index c = 0; c < v.cols(); ++c) header.push_back("v_" + std::to_string(c + 1));
      out << csv_line(header);
      for (Eigen::Index r = 0; r < v.rows(); ++r) {
        std::vector<std::string> row;
        for (Eigen::Index c = 0; c < v.cols(); ++c) row.push_back(format_double(v(r, c)));
        out << csv_line(row);
      }
      write_file(cfg.out_dir / "mor_basis.csv", out.str(), files);
    }

    const auto states = training_states(cfg, sys);
    const auto tests = test_initial_states(cfg, sys);
    const long ref_steps = exact_step_ratio(cfg.test.horizon, cfg.micro_dt);
    std::vector<Trajectory> references;
    for (const auto& x0 : tests) references.push_back(propagate(sys.model_space, x0, cfg.micro_dt, ref_steps));

    std::ostringstream selection_csv, rel_csv, energy_csv, summary_csv;
    selection_csv << "delta_t,family,epsilon,validation_error,status,selected\n";
    rel_csv << "delta_t,t,kernel_mean,kernel_max,midpoint_mean,midpoint_max\n";
    energy_csv << "delta_t,t,kernel_mean,midpoint_mean,reference_mean\n";
    summary_csv << "delta_t,family,epsilon,centers,train_max_residual,validation_max_residual,"
                   "kernel_final_mean_rel,midpoint_final_mean_rel,contraction_margin\n";
    std::vector<Series> convergence_plot, rel_plot;

    for (double dt : cfg.delta_ts) {
      const std::string tag = dt_tag(dt);
      TrainedModel trained = train_model(cfg, sys, states, dt);

      for (std::size_t r = 0; r < trained.selection.table.size(); ++r) {
        const auto& row = trained.selection.table[r];
        selection_csv << csv_line({format_double(dt), std::string(to_string(row.family)), format_double(row.epsilon),
                                   std::isnan(row.validation_error) ? "" : format_double(row.validation_error),
                                   row.failed ? "failed" : "ok",
                                   r == trained.selection.selected_row ? "1" : "0"});
      }
      {
        std::ostringstream trace;
        write_trace_csv(trained.trace, trace);
        write_file(cfg.out_dir / ("greedy_trace_dt" + tag + ".csv"), trace.str(), files);
        write_file(cfg.out_dir / ("convergence_dt" + tag + ".csv"), convergence_csv(trained.trace), files);
      }

      const PredictorModel model(trained.surrogate, dt);
      {
        std::ostringstream out;
        write_model_json(model, out);
        write_file(cfg.out_dir / ("model_dt" + tag + ".json"), out.str(), files);
      }

      const long macro_steps = exact_step_ratio(cfg.test.horizon, dt);
      Accumulator kernel_rel, base_rel, kernel_e, base_e, ref_e;
      for (std::size_t i = 0; i < tests.size(); ++i) {
        const Trajectory pred = rollout(model, tests[i], macro_steps);
        const Trajectory base = propagate(sys.model_space, tests[i], dt, macro_steps);
        const TrajectoryMetrics m = compute_metrics(pred, base, references[i], sys.model_space);
        kernel_rel.add(m.kernel_rel.y);
        base_rel.add(m.baseline_rel.y);
        kernel_e.add(m.kernel_energy.y);
        base_e.add(m.baseline_energy.y);
        ref_e.add(m.reference_energy.y);
      }
      const auto kmean = kernel_rel.mean(tests.size()), bmean = base_rel.mean(tests.size());
      const auto kemean = kernel_e.mean(tests.size()), bemean = base_e.mean(tests.size()),
                 remean = ref_e.mean(tests.size());
      Series krel{"kernel dT=" + tag, {}, {}}, brel{"midpoint dT=" + tag, {}, {}};
      for (long k = 0; k <= macro_steps; ++k) {
        const std::size_t i = std::size_t(k);
        const double t = double(k) * dt;
        rel_csv << csv_line({format_double(dt), format_double(t), format_double(kmean[i]),
                             format_double(kernel_rel.max[i]), format_double(bmean[i]), format_double(base_rel.max[i])});
        energy_csv << csv_line({format_double(dt), format_double(t), format_double(kemean[i]),
                                format_double(bemean[i]), format_double(remean[i])});
        if (k > 0) {
          krel.x.push_back(t);
          krel.y.push_back(kmean[i]);
          brel.x.push_back(t);
          brel.y.push_back(bmean[i]);
        }
      }
      rel_plot.push_back(std::move(krel));
      rel_plot.push_back(std::move(brel));

      // The training inputs are mixed arguments (q0, p_dT), the region the solver sees.
      std::vector<Vector> region;
      const Eigen::Index stride = std::max<Eigen::Index>(1, trained.train.size() / 200);
      for (Eigen::Index j = 0; j < trained.train.size(); j += stride) {
        region.push_back(trained.train.inputs.row(j).transpose());
      }

      StepResult step;
      step.delta_t = dt;
      step.kernel = trained.selection.kernel;
      step.centers = trained.surrogate.size();
      step.train_curve = trained.trace.train_curve();
      step.validation_curve = trained.trace.monitor_curve();
      step.kernel_mean_rel = kmean;
      step.baseline_mean_rel = bmean;
      step.contraction_margin = contraction_margin(model, region);

      summary_csv << csv_line({format_double(dt), std::string(to_string(step.kernel.family())),
                               format_double(step.kernel.epsilon()), std::to_string(step.centers),
                               format_double(step.train_curve.back()),
                               step.validation_curve.empty() ? "" : format_double(step.validation_curve.back()),
                               format_double(kmean.back()), format_double(bmean.back()),
                               format_double(step.contraction_margin)});

      convergence_plot.push_back(curve_series(step.train_curve, "train dT=" + tag));
      if (!step.validation_curve.empty()) {
        convergence_plot.push_back(curve_series(step.validation_curve, "validation dT=" + tag));
      }
      result.steps.push_back(std::move(step));
    }

    write_file(cfg.out_dir / "selection_table.csv", selection_csv.str(), files);
    write_file(cfg.out_dir / "rel_error.csv", rel_csv.str(), files);
    write_file(cfg.out_dir / "energy_error.csv", energy_csv.str(), files);
    write_file(cfg.out_dir / "summary.csv", summary_csv.str(), files);
    {
      std::ostringstream out;
      write_line_plot(convergence_plot, {cfg.system + ": f-greedy convergence", "centers m", "max residual E(m)", true, true},
                      out);
      write_file(cfg.out_dir / "convergence.svg", out.str(), files);
    }
    {
      std::ostringstream out;
      write_line_plot(rel_plot, {cfg.system + ": relative error over time", "t", "mean e_rel", false, true}, out);
      write_file(cfg.out_dir / "rel_error.svg", out.str(), files);
    }
  } catch (const std::exception& e) {
    write_manifest(cfg.out_dir, files, std::string("failed: ") + e.what());
    throw;
  }
  write_manifest(cfg.out_dir, files, "complete");
  return result;
}

}  // namespace symk
