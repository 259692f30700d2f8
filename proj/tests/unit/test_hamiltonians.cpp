#include "symk/error.hpp"
#include "symk/hamiltonians.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace symk;
using symk::test::random_vector;

namespace {

Vector state(std::initializer_list<double> v) {
  Vector out(Eigen::Index(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::vector<HamiltonianSystem> all_systems() {
  Matrix h(4, 4);
  h << 2.0, 0.3, 0.1, 0.0,  //
      0.3, 1.0, 0.0, 0.2,   //
      0.1, 0.0, 1.5, 0.4,   //
      0.0, 0.2, 0.4, 3.0;
  return {HamiltonianSystem::pendulum(), HamiltonianSystem::pendulum({0.7, 1.3, 9.81}),
          HamiltonianSystem::chain(), HamiltonianSystem::wave({6, 0.3, 1.0}),
          HamiltonianSystem::quadratic(h)};
}

}  // namespace

TEST_CASE("energy examples") {
  const auto pend = HamiltonianSystem::pendulum();
  CHECK(pend.energy(state({0, 0})) == 0.0);
  CHECK(pend.energy(state({std::numbers::pi, 0})) == doctest::Approx(19.62).epsilon(1e-14));
  const auto chain = HamiltonianSystem::chain({3, 1.0, 0.25});
  // delta = (1, -1, 0, 0): two springs with 1/2 + 1/16 each
  CHECK(chain.energy(state({1, 0, 0, 0, 0, 0})) == doctest::Approx(1.125).epsilon(1e-15));
  CHECK_THROWS_AS(pend.energy(state({0, 0, 0})), Error);
}

TEST_CASE("gradient and Hessian examples") {
  const auto pend = HamiltonianSystem::pendulum();
  CHECK(pend.grad(state({0, 0})).cwiseAbs().maxCoeff() == 0.0);
  const Matrix h0 = pend.hessian(state({0, 0}));
  CHECK(h0(0, 0) == doctest::Approx(9.81));
  CHECK(h0(1, 1) == 1.0);
  CHECK(h0(0, 1) == 0.0);
  const Vector g = pend.grad(state({std::numbers::pi / 2, 1}));
  CHECK(g(0) == doctest::Approx(9.81).epsilon(1e-15));
  CHECK(g(1) == 1.0);
}

TEST_CASE("gradient and Hessian match finite differences at random states") {
  Rng rng(71);
  for (const auto& sys : all_systems()) {
    for (int t = 0; t < 20; ++t) {
      const Vector x = random_vector(rng, sys.dim(), -1.0, 1.0);
      const Vector g = sys.grad(x);
      const Vector fd = test::fd_gradient([&](const Vector& z) { return sys.energy(z); }, x, 1e-5);
      CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
      const Matrix hess = sys.hessian(x);
      const Matrix fdh = test::fd_jacobian([&](const Vector& z) { return sys.grad(z); }, x, 1e-5);
      CHECK((hess - fdh).norm() <= 1e-6 * std::max(1.0, hess.norm()));
      CHECK((hess - hess.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("constant Hessians for linear variants") {
  Rng rng(2);
  const std::vector<HamiltonianSystem> linear{HamiltonianSystem::chain({4, 1.0, 0.0}),
                                              HamiltonianSystem::wave({5, 0.3, 1.0}),
                                              HamiltonianSystem::quadratic(Matrix::Identity(2, 2))};
  for (const auto& sys : linear) {
    const Vector a = random_vector(rng, sys.dim()), b = random_vector(rng, sys.dim());
    CHECK((sys.hessian(a) - sys.hessian(b)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("chain elongation matrix spectrum lies in [0, 4]") {
  for (Eigen::Index n : {1, 2, 3, 10, 50}) {
    const Matrix b = chain_elongation_matrix(n);
    CHECK(b.rows() == n + 1);
    const Vector ev = sym_eigen(b.transpose() * b).values;
    CHECK(ev.maxCoeff() <= 4.0 + 1e-12);
    CHECK(ev.minCoeff() >= -1e-12);
  }
}

TEST_CASE("wave Laplacian is symmetric positive definite") {
  const Matrix d = dirichlet_laplacian(20, 1.0);
  CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sym_eigen(d).values.minCoeff() > 0.0);
  // h = 1/21, so the diagonal is 2 * 21^2
  CHECK(d(0, 0) == doctest::Approx(2.0 * 441.0));
}

TEST_CASE("separable parts reproduce the full gradient") {
  Rng rng(9);
  for (const auto& sys : {HamiltonianSystem::pendulum(), HamiltonianSystem::chain(),
                          HamiltonianSystem::wave({4, 0.3, 1.0})}) {
    REQUIRE(sys.is_separable());
    const Vector x = random_vector(rng, sys.dim());
    const Eigen::Index n = sys.dof();
    Vector g(2 * n);
    g << sys.grad_potential(x.head(n)), sys.grad_kinetic(x.tail(n));
    CHECK((g - sys.grad(x)).norm() <= 1e-12 * (1.0 + g.norm()));
  }
  Matrix coupled = Matrix::Identity(2, 2);
  coupled(0, 1) = coupled(1, 0) = 0.5;
  const auto sys = HamiltonianSystem::quadratic(coupled);
  CHECK_FALSE(sys.is_separable());
  CHECK_THROWS_AS(sys.grad_potential(Vector::Zero(1)), Error);
}

TEST_CASE("step-size bound values") {
  const auto pend = HamiltonianSystem::pendulum();
  const Vector lo = state({-std::numbers::pi, -2.0 * std::sqrt(9.81)});
  const Vector hi = -lo;
  const double pend_bound = step_size_bound_box(pend, lo, hi, 6.0);
  CHECK(pend_bound == doctest::Approx(std::log(2.0) / 9.81).epsilon(1e-14));
  CHECK(pend_bound == doctest::Approx(7.07e-2).epsilon(5e-3));

  // Sample-based path: the sample includes q = 0, where |cos q| = 1.
  std::vector<Vector> sample{state({0.0, 0.0}), state({1.0, 2.0})};
  CHECK(step_size_bound(pend, sample, 6.0) == doctest::Approx(std::log(2.0) / 9.81));

  const auto chain = HamiltonianSystem::chain({3, 1.0, 0.25});
  const Vector clo = Vector::Constant(6, -0.5), chi = Vector::Constant(6, 0.5);
  // delta_K = 1, Gershgorin |B|^2 <= 4: L_K = 4 (1 + 3/4) = 7
  CHECK(lipschitz_bound_box(chain, clo, chi) == doctest::Approx(7.0).epsilon(1e-15));
  const double chain_bound = step_size_bound_box(chain, clo, chi, 10.0);
  CHECK(chain_bound >= 9.90e-2);
  CHECK(chain_bound == doctest::Approx(std::log(2.0) / 7.0));

  const auto free = HamiltonianSystem::quadratic(Matrix::Zero(2, 2));
  std::vector<Vector> one{state({1.0, 1.0})};
  CHECK(step_size_bound(free, one, 6.0) == 6.0);
  CHECK_THROWS_AS(step_size_bound(free, std::vector<Vector>{}, 6.0), Error);
}

TEST_CASE("resonance check for the harmonic oscillator") {
  const auto osc = HamiltonianSystem::quadratic(Matrix::Identity(2, 2));
  const auto r0 = resonance_check(osc, 0.0);
  CHECK(r0.det_d == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_FALSE(r0.resonant);
  const auto r1 = resonance_check(osc, std::numbers::pi / 4);
  CHECK(r1.det_d == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
  CHECK_FALSE(r1.resonant);
  const auto r2 = resonance_check(osc, std::numbers::pi / 2);
  CHECK(std::abs(r2.det_d) < 1e-10);
  CHECK(r2.resonant);

  // n uncoupled oscillators: det D = cos(dT)^n
  const auto osc3 = HamiltonianSystem::quadratic(Matrix::Identity(6, 6));
  CHECK(resonance_check(osc3, 0.7).det_d == doctest::Approx(std::pow(std::cos(0.7), 3)).epsilon(1e-12));

  try {
    resonance_check(HamiltonianSystem::pendulum(), 0.1);
    FAIL("expected NotQuadratic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotQuadratic);
  }
}

TEST_CASE("phase state helpers") {
  const PhaseState s{state({1, 2}), state({3, 4})};
  const Vector x = stack(s);
  CHECK(x(2) == 3.0);
  const PhaseState back = split(x);
  CHECK(back.q == s.q);
  CHECK(back.p == s.p);
  CHECK_THROWS_AS(stack({state({1}), state({1, 2})}), Error);
}
