#include "symk/dataset.hpp"
#include "symk/error.hpp"
#include "symk/integrators.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace symk;
using symk::test::random_vector;

namespace {

Vector state(std::initializer_list<double> v) {
  Vector out(Eigen::Index(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

const double kG = 9.81;

SamplerSpec pendulum_grid(Eigen::Index per_axis) {
  GridSampler grid{{per_axis, per_axis},
                   state({-std::numbers::pi, -2.0 * std::sqrt(kG)}),
                   state({std::numbers::pi, 2.0 * std::sqrt(kG)})};
  return {grid, EnergyCap{2.0 * kG, true}, std::nullopt};
}

SamplerSpec chain_box(std::uint64_t seed) {
  UniformBoxSampler box{Vector::Constant(6, -0.5), Vector::Constant(6, 0.5), 200, seed};
  return {box, EnergyCap{0.5, false}, std::nullopt};
}

bool contains(const std::vector<Vector>& states, const Vector& x) {
  return std::any_of(states.begin(), states.end(), [&](const Vector& s) { return s == x; });
}

}  // namespace

TEST_CASE("pendulum grid with a strict energy cap") {
  const auto pend = HamiltonianSystem::pendulum();
  // Odd per-axis count puts (0, 0) on the grid; 3 points per axis include (0, 2 sqrt g).
  const auto three = sample_states(pend, pendulum_grid(3));
  CHECK(contains(three, state({0.0, 0.0})));
  CHECK_FALSE(contains(three, state({0.0, 2.0 * std::sqrt(kG)})));

  const auto grid = sample_states(pend, pendulum_grid(21));
  CHECK(grid.size() < 21u * 21u);
  for (const auto& x : grid) CHECK(pend.energy(x) < 2.0 * kG);
}

TEST_CASE("uniform box sampling is deterministic and respects the cap") {
  const auto chain = HamiltonianSystem::chain();
  const auto a = sample_states(chain, chain_box(5));
  const auto b = sample_states(chain, chain_box(5));
  REQUIRE(a.size() == 200);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  for (const auto& x : a) {
    CHECK(chain.energy(x) <= 0.5);
    CHECK(x.cwiseAbs().maxCoeff() <= 0.5);
  }
  const auto c = sample_states(chain, chain_box(6));
  CHECK(c[0] != a[0]);

  // Same box without the cap accepts states the cap rejects.
  SamplerSpec open = chain_box(5);
  open.energy_cap.reset();
  const auto raw = sample_states(chain, open);
  CHECK(std::any_of(raw.begin(), raw.end(), [&](const Vector& x) { return chain.energy(x) > 0.5; }));
}

TEST_CASE("half-space restriction keeps p2 <= 0") {
  const auto chain = HamiltonianSystem::chain();
  SamplerSpec spec = chain_box(9);
  spec.halfspace = HalfSpace{4, -1};
  for (const auto& x : sample_states(chain, spec)) CHECK(x(4) <= 0.0);
}

TEST_CASE("a filter that rejects everything fails") {
  const auto chain = HamiltonianSystem::chain();
  SamplerSpec spec = chain_box(1);
  spec.energy_cap = EnergyCap{-1.0, false};
  try {
    sample_states(chain, spec);
    FAIL("expected FilterTooTight");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FilterTooTight);
  }
  SamplerSpec wrong = chain_box(1);
  std::get<UniformBoxSampler>(wrong.mode).lower = Vector::Constant(4, -0.5);
  CHECK_THROWS_AS(sample_states(chain, wrong), Error);
}

TEST_CASE("reduced box and sine-mode samplers") {
  const auto osc = HamiltonianSystem::quadratic(Matrix::Identity(4, 4));
  SamplerSpec spec{ReducedBoxSampler{1.0, 50, 3}, EnergyCap{0.5, false}, std::nullopt};
  const auto states = sample_states(osc, spec);
  CHECK(states.size() == 50);
  for (const auto& z : states) {
    CHECK(z.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(osc.energy(z) <= 0.5);
  }

  const auto wave = HamiltonianSystem::wave({10, 0.3, 1.0});
  const auto modes = sample_states(wave, {SineModesSampler{2}, std::nullopt, std::nullopt});
  REQUIRE(modes.size() == 4);
  const Vector phi1 = sine_mode(10, 1.0, 1), phi2 = sine_mode(10, 1.0, 2);
  CHECK(modes[1].head(10) == phi1);
  CHECK(modes[1].tail(10) == phi2);
  CHECK(modes[2].head(10) == phi2);
  CHECK(phi1(0) == doctest::Approx(std::sin(std::numbers::pi / 11.0)).epsilon(1e-15));
  CHECK(phi1.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("hb dataset examples") {
  const auto pend = HamiltonianSystem::pendulum();
  const HBDataset eq = build_hb_dataset(pend, {state({0, 0})}, 0.1, 1e-3);
  CHECK(eq.inputs.cwiseAbs().maxCoeff() == 0.0);
  CHECK(eq.targets.cwiseAbs().maxCoeff() == 0.0);

  Matrix h = Matrix::Zero(2, 2);
  h(1, 1) = 1.0;
  const auto drift = HamiltonianSystem::quadratic(h);
  const HBDataset d = build_hb_dataset(drift, {state({0, 1})}, 0.1, 1e-3);
  CHECK(d.inputs(0, 0) == 0.0);
  CHECK(d.inputs(0, 1) == 1.0);
  CHECK(std::abs(d.targets(0, 0)) <= 1e-15);
  CHECK(d.targets(0, 1) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(build_hb_dataset(pend, {state({0, 0})}, 0.1, 0.03), Error);
  try {
    build_hb_dataset(pend, {state({0, 0}), state({0, 0, 0})}, 0.1, 1e-3);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
    CHECK(std::string(e.what()).find("sample 1") != std::string::npos);
  }
}

TEST_CASE("single micro step targets approach the gradient") {
  const auto pend = HamiltonianSystem::pendulum();
  Rng rng(10);
  std::vector<Vector> states;
  for (int i = 0; i < 10; ++i) states.push_back(random_vector(rng, 2, -1, 1));
  for (double dt : {1e-2, 1e-3}) {
    const HBDataset d = build_hb_dataset(pend, states, dt, dt);
    for (std::size_t j = 0; j < states.size(); ++j) {
      const Vector g = pend.grad(states[j]);
      CHECK((d.targets.row(Eigen::Index(j)).transpose() - g).norm() <= 20.0 * dt * (1.0 + g.norm()));
    }
  }
}

TEST_CASE("momentum reversal mirrors the chain dataset") {
  const auto chain = HamiltonianSystem::chain();
  Rng rng(20);
  for (int t = 0; t < 5; ++t) {
    const Vector x0 = random_vector(rng, 6, -0.3, 0.3);
    const Vector x1 = midpoint_flow(chain, x0, 1e-3, 100);
    Vector back(6);
    back << x1.head(3), -x1.tail(3);
    const HBDataset fwd = build_hb_dataset(chain, {x0}, 0.1, 1e-3);
    const HBDataset rev = build_hb_dataset(chain, {back}, 0.1, 1e-3);
    Vector xi_expected(6);
    xi_expected << x1.head(3), -x0.tail(3);
    CHECK((rev.inputs.row(0).transpose() - xi_expected).lpNorm<Eigen::Infinity>() <= 1e-6);
    // J^T(a, b) = (-b, a): reversal keeps the q-block target and negates the p-block target.
    CHECK((rev.targets.row(0).head(3) - fwd.targets.row(0).head(3)).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK((rev.targets.row(0).tail(3) + fwd.targets.row(0).tail(3)).lpNorm<Eigen::Infinity>() <= 1e-6);
  }
}

TEST_CASE("train/validation split") {
  HBDataset d;
  d.inputs = Matrix(10, 2);
  d.targets = Matrix(10, 2);
  for (int i = 0; i < 10; ++i) {
    d.inputs.row(i) << i, -i;
    d.targets.row(i) << 2 * i, 0;
  }
  d.delta_t = 0.1;
  const auto [tr, va] = split_train_validation(d, 0.8, 42);
  CHECK(tr.size() == 8);
  CHECK(va.size() == 2);
  const auto [tr2, va2] = split_train_validation(d, 0.8, 42);
  CHECK(tr.inputs == tr2.inputs);
  CHECK(va.inputs == va2.inputs);
  std::vector<double> ids;
  for (Eigen::Index i = 0; i < tr.size(); ++i) ids.push_back(tr.inputs(i, 0));
  for (Eigen::Index i = 0; i < va.size(); ++i) ids.push_back(va.inputs(i, 0));
  std::sort(ids.begin(), ids.end());
  for (int i = 0; i < 10; ++i) CHECK(ids[std::size_t(i)] == double(i));
  for (Eigen::Index i = 0; i < tr.size(); ++i) CHECK(tr.targets(i, 0) == 2.0 * tr.inputs(i, 0));

  try {
    split_train_validation(subset(d, {0}), 0.5, 1);
    FAIL("expected TooFewSamples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewSamples);
  }
  CHECK_THROWS_AS(split_train_validation(d, 1.0, 1), Error);
}

TEST_CASE("separability diagnostic") {
  const auto pend = HamiltonianSystem::pendulum();
  const HBDataset eq = build_hb_dataset(pend, {state({0, 0}), state({std::numbers::pi, 0})}, 0.1, 1e-3);
  const SeparabilityTables et = separability_diagnostic(eq);
  CHECK(et.table_a.col(1).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(et.table_b.rightCols(2).cwiseAbs().maxCoeff() <= 1e-12);

  const auto states = sample_states(pend, pendulum_grid(21));
  const HBDataset d = build_hb_dataset(pend, states, 0.1, 1e-3);
  const SeparabilityTables t = separability_diagnostic(d);
  CHECK(t.table_a.rows() == 2 * d.size());
  CHECK(t.table_b.rows() == d.size());
  CHECK(max_bin_spread(t.table_a, {0, 2}, {1}, 1e-3) > 1e-2);
  CHECK(max_bin_spread(t.table_b, {0, 1}, {2, 3}, 1e-3) <= 1e-6);

  HBDataset two = build_hb_dataset(HamiltonianSystem::chain({1, 1.0, 0.25}), {state({0.1, 0.0})}, 0.1, 1e-3);
  CHECK(two.dim() == 2);
  const auto chain2 = HamiltonianSystem::chain({2, 1.0, 0.25});
  try {
    separability_diagnostic(build_hb_dataset(chain2, {Vector::Zero(4)}, 0.1, 1e-3));
    FAIL("expected NotOneDOF");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotOneDOF);
  }

  std::ostringstream a, b;
  write_separability_csv(t, a, b);
  CHECK(a.str().rfind("input,output,family\n", 0) == 0);
  CHECK(b.str().rfind("xi_1,xi_2,y_1,y_2\n", 0) == 0);
}

TEST_CASE("max_bin_spread on a hand table") {
  Matrix t(4, 2);
  t << 0.0, 1.0,  //
      0.0004, 1.5,  //
      0.5, 7.0,  //
      0.9, 7.0;
  CHECK(max_bin_spread(t, {0}, {1}, 1e-3) == doctest::Approx(0.5));
  CHECK(max_bin_spread(t, {0}, {1}, 10.0) == doctest::Approx(6.0));
}

TEST_CASE("dataset CSV round trip") {
  const auto chain = HamiltonianSystem::chain();
  const auto states = sample_states(chain, chain_box(2));
  const HBDataset d = build_hb_dataset(chain, {states[0], states[1], states[2]}, 0.1, 1e-3);
  const std::string path = "symk_dataset_roundtrip.csv";
  {
    std::ofstream out(path);
    write_dataset_csv(d, out);
  }
  const HBDataset back = read_dataset_csv(path, 0.1);
  std::remove(path.c_str());
  CHECK(back.inputs == d.inputs);
  CHECK(back.targets == d.targets);
  CHECK(back.delta_t == 0.1);
  CHECK_THROWS_AS(read_dataset_csv("does_not_exist.csv", 0.1), Error);
}
