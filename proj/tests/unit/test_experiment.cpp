#include "symk/error.hpp"
#include "symk/experiment.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

using namespace symk;
namespace fs = std::filesystem;

namespace {

Vector state(std::initializer_list<double> v) {
  Vector out(Eigen::Index(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Trajectory make_traj(double step, std::vector<Vector> states) {
  Trajectory t;
  t.step = step;
  for (std::size_t k = 0; k < states.size(); ++k) {
    t.times.push_back(double(k) * step);
    t.solver_iterations.push_back(0);
  }
  t.states = std::move(states);
  return t;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

/// Pendulum pipeline small enough for a unit test.
ExperimentConfig tiny_pendulum(const fs::path& out) {
  ExperimentConfig cfg = default_config("pendulum", Scale::Desk);
  cfg = apply_config_json(cfg, R"({
    "sampler": {"counts": [12, 12]},
    "delta_t": [0.1, 0.05, 0.025],
    "greedy": {"max_centers": 40},
    "selection": {"families": ["gaussian", "imq"], "epsilons": [0.5, 1]},
    "test": {"count": 3, "horizon": 1}
  })");
  cfg.out_dir = out;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("symk_unit_" + name);
  fs::remove_all(dir);
  return dir;
}

HBDataset small_pendulum_data(double dt) {
  const auto sys = HamiltonianSystem::pendulum();
  GridSampler grid{{10, 10}, state({-3.0, -6.0}), state({3.0, 6.0})};
  const auto states = sample_states(sys, {grid, EnergyCap{2.0 * 9.81, true}, std::nullopt});
  return build_hb_dataset(sys, states, dt, 1e-3);
}

}  // namespace

TEST_CASE("compute_metrics on a hand-built one-step case") {
  const auto sys = HamiltonianSystem::quadratic(Matrix::Identity(2, 2));
  const Vector x0 = state({1.0, 0.0});
  const auto pred = make_traj(0.5, {x0, state({1.0, 0.0})});
  const auto ref = make_traj(0.5, {x0, state({0.8, 0.6})});
  const auto m = compute_metrics(pred, pred, ref, sys);
  // Oracle: |(0.2, -0.6)| / |(0.8, 0.6)| computed with hypot.
  const double expected = std::hypot(0.2, -0.6) / std::hypot(0.8, 0.6);
  CHECK(m.kernel_rel.y[1] == doctest::Approx(expected).epsilon(1e-14));
  CHECK(m.kernel_rel.y[1] == doctest::Approx(0.63246).epsilon(1e-5));
  CHECK(m.kernel_rel.y[0] == 0.0);
  CHECK(m.kernel_rel.x == std::vector<double>{0.0, 0.5});
}

TEST_CASE("compute_metrics identities") {
  const auto sys = HamiltonianSystem::pendulum();
  const Vector x0 = state({1.0, 0.2});
  const auto ref = propagate(sys, x0, 0.01, 20);
  const auto pred = propagate(sys, x0, 0.1, 2);
  SUBCASE("prediction equal to the reference has zero relative error") {
    const auto same = make_traj(0.1, {ref.states[0], ref.states[10], ref.states[20]});
    const auto m = compute_metrics(same, same, ref, sys);
    for (double e : m.kernel_rel.y) CHECK(e == 0.0);
    for (double e : m.baseline_rel.y) CHECK(e == 0.0);
  }
  SUBCASE("constant trajectories have zero energy error") {
    const auto still = make_traj(0.1, {x0, x0, x0});
    const auto m = compute_metrics(still, still, make_traj(0.1, {x0, x0, x0}), sys);
    for (double e : m.kernel_energy.y) CHECK(e == 0.0);
    for (double e : m.reference_energy.y) CHECK(e == 0.0);
  }
  SUBCASE("macro states are compared with the matching micro state") {
    const auto m = compute_metrics(pred, pred, ref, sys);
    REQUIRE(m.kernel_rel.y.size() == 3);
    const double direct = (pred.states[2] - ref.states[20]).norm() / ref.states[20].norm();
    CHECK(m.kernel_rel.y[2] == direct);
  }
  SUBCASE("grid mismatches") {
    CHECK(code_of([&] { compute_metrics(pred, pred, propagate(sys, x0, 0.03, 40), sys); }) ==
          ErrorCode::GridMismatch);
    CHECK(code_of([&] { compute_metrics(pred, pred, propagate(sys, x0, 0.01, 15), sys); }) ==
          ErrorCode::GridMismatch);
    CHECK(code_of([&] { compute_metrics(pred, propagate(sys, x0, 0.1, 1), ref, sys); }) ==
          ErrorCode::GridMismatch);
  }
}

TEST_CASE("default configs validate at both scales") {
  for (const char* system : {"pendulum", "chain", "wave"}) {
    for (Scale scale : {Scale::Desk, Scale::Paper}) {
      const auto cfg = default_config(system, scale);
      CHECK_NOTHROW(cfg.validate());
      CHECK(cfg.system == system);
    }
  }
  const auto p = default_config("pendulum", Scale::Desk);
  CHECK(p.delta_ts == std::vector<double>{0.1, 0.05, 0.025});
  CHECK(std::get<GridSampler>(p.sampler.mode).counts == std::vector<Eigen::Index>{50, 50});
  CHECK(std::get<GridSampler>(default_config("pendulum", Scale::Paper).sampler.mode).counts ==
        std::vector<Eigen::Index>{200, 200});
  const auto c = default_config("chain", Scale::Desk);
  CHECK(c.chain.alpha == 1.0);
  CHECK(c.chain.beta == 0.25);
  CHECK(std::get<UniformBoxSampler>(c.sampler.mode).target_count == 2000);
  CHECK(c.greedy.max_centers == 400);
  const auto w = default_config("wave", Scale::Desk);
  CHECK(w.wave.nodes == 200);
  CHECK(w.wave.speed == 0.3);
  CHECK(code_of([] { default_config("rotor", Scale::Desk); }) == ErrorCode::ConfigError);
  CHECK(scale_from_string("paper") == Scale::Paper);
  CHECK(code_of([] { scale_from_string("huge"); }) == ErrorCode::ConfigError);
}

TEST_CASE("config overrides and validation errors") {
  const auto base = default_config("pendulum", Scale::Desk);
  const auto cfg = apply_config_json(base, R"({"selection": {"epsilons": [0.25, 3]}, "seed": 9})");
  CHECK(cfg.selection.epsilons == std::vector<double>{0.25, 3.0});
  CHECK(cfg.seed == 9);
  CHECK(cfg.test.seed != base.test.seed);

  const auto fixed = apply_config_json(base, R"({"selection": {"kernel": {"family": "matern32", "epsilon": 2}}})");
  REQUIRE(fixed.selection.fixed);
  CHECK(*fixed.selection.fixed == KernelSpec(KernelFamily::Matern32, 2.0));

  for (const char* bad : {
           R"({"epsilon_grid": [1]})",
           R"({"selection": {"epsilon": [1]}})",
           R"({"sampler": {"energy_cap": {"value": 1, "strict": true, "extra": 0}}})",
           R"({"delta_t": "0.1"})",
           R"({"delta_t": [0.1005]})",
           R"({"test": {"horizon": 6.05}})",
           R"({"selection": {"epsilons": [1, -1]}})",
           R"({"system": "chain"})",
           R"({"sampler": {"z_max": 1}})",
           R"({"mor": {"modes": 2}})",
           R"({"selection": {"kernel": {"family": "cubic", "epsilon": 1}}})",
           R"({"delta_t": [0.1],)",
       }) {
    CAPTURE(bad);
    CHECK(code_of([&] { apply_config_json(base, bad); }) == ErrorCode::ConfigError);
  }
}

TEST_CASE("reseeding is deterministic and changes every sub-seed") {
  auto a = default_config("chain", Scale::Desk);
  auto b = a;
  reseed(a, 7);
  reseed(b, 7);
  CHECK(std::get<UniformBoxSampler>(a.sampler.mode).seed == std::get<UniformBoxSampler>(b.sampler.mode).seed);
  CHECK(a.test.seed == b.test.seed);
  reseed(b, 8);
  CHECK(std::get<UniformBoxSampler>(a.sampler.mode).seed != std::get<UniformBoxSampler>(b.sampler.mode).seed);
  CHECK(a.test.seed != b.test.seed);
}

TEST_CASE("test initial states lie in the configured box with zero momentum") {
  const auto cfg = default_config("chain", Scale::Desk);
  const auto sys = make_system(cfg);
  const auto xs = test_initial_states(cfg, sys);
  REQUIRE(xs.size() == 10);
  for (const auto& x : xs) {
    CHECK(x.size() == 6);
    CHECK(x.head(3).minCoeff() >= 0.0);
    CHECK(x.head(3).maxCoeff() <= 0.5);
    CHECK(x.tail(3).isZero(0.0));
  }
  CHECK(test_initial_states(cfg, sys)[3] == xs[3]);
}

TEST_CASE("wave system reduces to the configured dimension") {
  const auto cfg = default_config("wave", Scale::Desk);
  const auto sys = make_system(cfg);
  REQUIRE(sys.basis);
  CHECK(sys.full.dof() == 200);
  CHECK(sys.model_space.dof() == 2);
  CHECK(sys.basis->v.rows() == 400);
  const auto xs = test_initial_states(cfg, sys);
  CHECK(xs.size() == 10);
  for (const auto& x : xs) CHECK(x.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("model selection") {
  const auto data = small_pendulum_data(0.1);
  const auto [train, val] = split_train_validation(data, 0.8, 3);
  GreedyConfig greedy;
  greedy.max_centers = 25;

  SUBCASE("a grid of one candidate selects that candidate") {
    SelectionSpec spec;
    spec.families = {KernelFamily::Matern52};
    spec.epsilons = {0.7};
    const auto sel = select_model(spec, greedy, train, val);
    CHECK(sel.kernel == KernelSpec(KernelFamily::Matern52, 0.7));
    CHECK(sel.table.size() == 1);
    CHECK(sel.surrogate.size() == 25);
  }
  SUBCASE("duplicate candidates resolve to the first in tie-break order") {
    SelectionSpec spec;
    spec.families = {KernelFamily::Gaussian, KernelFamily::Gaussian};
    spec.epsilons = {1.0, 1.0};
    const auto sel = select_model(spec, greedy, train, val);
    REQUIRE(sel.table.size() == 4);
    for (const auto& row : sel.table) CHECK(row.validation_error == sel.table[0].validation_error);
    CHECK(sel.selected_row == 0);
  }
  SUBCASE("the selected pair attains the table minimum") {
    SelectionSpec spec;
    spec.families = {KernelFamily::Gaussian, KernelFamily::IMQ, KernelFamily::Matern52};
    spec.epsilons = {4.0, 1.0, 2.0};
    const auto sel = select_model(spec, greedy, train, val);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& row : sel.table) {
      if (!row.failed) best = std::min(best, row.validation_error);
    }
    const auto& chosen = sel.table[sel.selected_row];
    CHECK_FALSE(chosen.failed);
    CHECK(chosen.validation_error == best);
    CHECK(chosen.family == sel.kernel.family());
    CHECK(chosen.epsilon == sel.kernel.epsilon());
    CHECK(max_residual(sel.surrogate, val) == best);
    // Epsilons are scanned in ascending order within each family.
    CHECK(sel.table[0].epsilon == 1.0);
    CHECK(sel.table[2].epsilon == 4.0);
    CHECK(sel.table[3].family == KernelFamily::IMQ);
  }
  SUBCASE("a fixed kernel bypasses the grid") {
    SelectionSpec spec;
    spec.fixed = KernelSpec(KernelFamily::IMQ, 1.5);
    const auto sel = select_model(spec, greedy, train, val);
    CHECK(sel.table.size() == 1);
    CHECK(sel.kernel == *spec.fixed);
  }
  SUBCASE("m_star limits the centers used for selection") {
    SelectionSpec spec;
    spec.fixed = KernelSpec(KernelFamily::Gaussian, 1.0);
    spec.m_star = 10;
    CHECK(select_model(spec, greedy, train, val).surrogate.size() == 10);
  }
  SUBCASE("empty validation set") {
    SelectionSpec spec;
    CHECK(code_of([&] { select_model(spec, greedy, train, subset(val, {})); }) == ErrorCode::EmptyDataset);
  }
}

TEST_CASE("model files round-trip bit-exactly") {
  const auto data = small_pendulum_data(0.1);
  GreedyConfig greedy;
  greedy.max_centers = 15;
  const auto [s, trace] = train_f_greedy(KernelSpec(KernelFamily::Matern32, 1.3), data, greedy);
  const PredictorModel model(s, 0.1);
  std::ostringstream out;
  write_model_json(model, out);
  const PredictorModel back = read_model_json(out.str());
  CHECK(back.delta_t() == 0.1);
  CHECK(back.surrogate().kernel() == s.kernel());
  CHECK(back.surrogate().coeffs() == s.coeffs());
  const Vector x0 = state({0.4, -0.3});
  CHECK(predict_step(back, x0).first == predict_step(model, x0).first);
  std::ostringstream again;
  write_model_json(back, again);
  CHECK(again.str() == out.str());

  CHECK(code_of([] { read_model_json("{"); }) == ErrorCode::IoError);
  CHECK(code_of([] { read_model_json(R"({"version": 2})"); }) == ErrorCode::IoError);
  CHECK(code_of([] { read_model_json(R"({"version": 1, "dim": 2})"); }) == ErrorCode::IoError);
}

TEST_CASE("pendulum pipeline writes every artifact and reruns byte-identically") {
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  const auto result = run_experiment(tiny_pendulum(a));
  run_experiment(tiny_pendulum(b));

  REQUIRE(result.steps.size() == 3);
  for (const char* name : {"selection_table.csv", "rel_error.csv", "energy_error.csv", "summary.csv",
                           "greedy_trace_dt0.1.csv", "greedy_trace_dt0.05.csv", "greedy_trace_dt0.025.csv",
                           "convergence_dt0.1.csv", "model_dt0.1.json", "convergence.svg", "rel_error.svg",
                           "MANIFEST"}) {
    CAPTURE(name);
    CHECK(fs::exists(a / name));
  }
  CHECK(slurp(a / "MANIFEST").rfind("status: complete\n", 0) == 0);
  const std::string rel = slurp(a / "rel_error.csv");
  CHECK(rel.rfind("delta_t,t,kernel_mean,kernel_max,midpoint_mean,midpoint_max\n", 0) == 0);
  CHECK(rel.find("\n0.025,1,") != std::string::npos);

  for (const auto& entry : fs::directory_iterator(a)) {
    CAPTURE(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
  }

  // Baseline sanity: the macro midpoint error shrinks with the macro step.
  CHECK(result.steps[1].baseline_mean_rel.back() < result.steps[0].baseline_mean_rel.back());
  CHECK(result.steps[2].baseline_mean_rel.back() < result.steps[1].baseline_mean_rel.back());

  // Two series (train, validation) per dT in the convergence plot; two per dT in the error plot.
  const std::string conv = slurp(a / "convergence.svg");
  std::size_t lines = 0;
  for (auto pos = conv.find("<polyline"); pos != std::string::npos; pos = conv.find("<polyline", pos + 1)) ++lines;
  CHECK(lines == 6);

  for (const auto& step : result.steps) {
    CHECK(step.centers == 40);
    CHECK(step.kernel_mean_rel.size() == std::size_t(std::lround(1.0 / step.delta_t)) + 1);
    CHECK(step.validation_curve.size() == step.train_curve.size());
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("runtime failures leave a MANIFEST marked failed") {
  const fs::path dir = scratch("failed");
  ExperimentConfig cfg = tiny_pendulum(dir);
  // No grid node lies below this cap, so the pipeline stops at the dataset.
  cfg.sampler.energy_cap = EnergyCap{1e-12, true};
  CHECK_THROWS_AS(run_experiment(cfg), Error);
  REQUIRE(fs::exists(dir / "MANIFEST"));
  CHECK(slurp(dir / "MANIFEST").rfind("status: failed: ", 0) == 0);
  fs::remove_all(dir);
}
