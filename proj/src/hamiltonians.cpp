#include "symk/hamiltonians.hpp"

#include "symk/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace symk {

Vector stack(const PhaseState& s) {
  require(s.q.size() == s.p.size(), ErrorCode::DimensionMismatch, "q and p differ in length");
  Vector x(2 * s.q.size());
  x << s.q, s.p;
  return x;
}

PhaseState split(const Eigen::Ref<const Vector>& x) {
  require(x.size() % 2 == 0, ErrorCode::DimensionMismatch, "phase vector has odd length");
  const Eigen::Index n = x.size() / 2;
  return {x.head(n), x.tail(n)};
}

Matrix chain_elongation_matrix(Eigen::Index masses) {
  require(masses >= 1, ErrorCode::InvalidArgument, "chain needs at least one mass");
  Matrix b = Matrix::Zero(masses + 1, masses);
  for (Eigen::Index i = 0; i < masses; ++i) {
    b(i, i) = 1.0;
    b(i + 1, i) = -1.0;
  }
  return b;
}

Matrix dirichlet_laplacian(Eigen::Index nodes, double length) {
  require(nodes >= 1 && length > 0.0, ErrorCode::InvalidArgument, "invalid wave grid");
  const double h = length / double(nodes + 1);
  const double inv_h2 = 1.0 / (h * h);
  Matrix d = Matrix::Zero(nodes, nodes);
  for (Eigen::Index i = 0; i < nodes; ++i) {
    d(i, i) = 2.0 * inv_h2;
    if (i + 1 < nodes) {
      d(i, i + 1) = -inv_h2;
      d(i + 1, i) = -inv_h2;
    }
  }
  return d;
}

HamiltonianSystem::HamiltonianSystem(Variant params, Eigen::Index dof)
    : params_(std::move(params)), dof_(dof) {}

HamiltonianSystem HamiltonianSystem::pendulum(PendulumParams params) {
  require(params.mass > 0.0 && params.length > 0.0, ErrorCode::InvalidArgument,
          "pendulum mass and length must be positive");
  return HamiltonianSystem(params, 1);
}

HamiltonianSystem HamiltonianSystem::chain(ChainParams params) {
  HamiltonianSystem sys(params, params.masses);
  sys.elongation_ = chain_elongation_matrix(params.masses);
  return sys;
}

HamiltonianSystem HamiltonianSystem::wave(WaveParams params) {
  HamiltonianSystem sys(params, params.nodes);
  const Eigen::Index n = params.nodes;
  sys.quadratic_ = Matrix::Zero(2 * n, 2 * n);
  sys.quadratic_.topLeftCorner(n, n) =
      params.speed * params.speed * dirichlet_laplacian(n, params.length);
  sys.quadratic_.bottomRightCorner(n, n).setIdentity();
  return sys;
}

HamiltonianSystem HamiltonianSystem::quadratic(Matrix h) {
  require(h.rows() == h.cols() && h.rows() % 2 == 0 && h.rows() > 0,
          ErrorCode::DimensionMismatch, "quadratic Hamiltonian needs an even square matrix");
  require_finite(h, "quadratic Hamiltonian");
  require((h - h.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff()),
          ErrorCode::InvalidArgument, "quadratic Hamiltonian matrix must be symmetric");
  const Eigen::Index n = h.rows() / 2;
  HamiltonianSystem sys(QuadraticParams{h}, n);
  sys.quadratic_ = 0.5 * (h + h.transpose());
  return sys;
}

std::string HamiltonianSystem::name() const {
  struct Visitor {
    std::string operator()(const PendulumParams&) const { return "pendulum"; }
    std::string operator()(const ChainParams&) const { return "chain"; }
    std::string operator()(const WaveParams&) const { return "wave"; }
    std::string operator()(const QuadraticParams&) const { return "quadratic"; }
  };
  return std::visit(Visitor{}, params_);
}

bool HamiltonianSystem::is_quadratic() const noexcept {
  return std::holds_alternative<WaveParams>(params_) ||
         std::holds_alternative<QuadraticParams>(params_);
}

const Matrix& HamiltonianSystem::quadratic_matrix() const {
  require(is_quadratic(), ErrorCode::NotQuadratic, name() + " is not a quadratic system");
  return quadratic_;
}

const Matrix& HamiltonianSystem::chain_elongation() const {
  require(std::holds_alternative<ChainParams>(params_), ErrorCode::InvalidArgument,
          "elongation matrix only exists for the chain");
  return elongation_;
}

void HamiltonianSystem::require_state(const Eigen::Ref<const Vector>& x) const {
  require(x.size() == dim(), ErrorCode::DimensionMismatch,
          name() + ": state has dimension " + std::to_string(x.size()) + ", expected " +
              std::to_string(dim()));
}

double HamiltonianSystem::energy(const Eigen::Ref<const Vector>& x) const {
  require_state(x);
  if (is_quadratic()) return 0.5 * x.dot(quadratic_ * x);
  if (const auto* pend = std::get_if<PendulumParams>(&params_)) {
    const double ml2 = pend->mass * pend->length * pend->length;
    return x(1) * x(1) / (2.0 * ml2) +
           pend->mass * pend->gravity * pend->length * (1.0 - std::cos(x(0)));
  }
  const auto& ch = std::get<ChainParams>(params_);
  const Vector delta = elongation_ * x.head(dof_);
  const double potential = (0.5 * ch.alpha * delta.array().square() +
                            0.25 * ch.beta * delta.array().square().square())
                               .sum();
  return 0.5 * x.tail(dof_).squaredNorm() + potential;
}

Vector HamiltonianSystem::grad(const Eigen::Ref<const Vector>& x) const {
  require_state(x);
  if (is_quadratic()) return quadratic_ * x;
  Vector g(dim());
  g << grad_potential(x.head(dof_)), grad_kinetic(x.tail(dof_));
  return g;
}

Matrix HamiltonianSystem::hessian(const Eigen::Ref<const Vector>& x) const {
  require_state(x);
  if (is_quadratic()) return quadratic_;
  Matrix h = Matrix::Zero(dim(), dim());
  if (const auto* pend = std::get_if<PendulumParams>(&params_)) {
    h(0, 0) = pend->mass * pend->gravity * pend->length * std::cos(x(0));
    h(1, 1) = 1.0 / (pend->mass * pend->length * pend->length);
    return h;
  }
  const auto& ch = std::get<ChainParams>(params_);
  const Vector delta = elongation_ * x.head(dof_);
  const Vector stiffness = (ch.alpha + 3.0 * ch.beta * delta.array().square()).matrix();
  h.topLeftCorner(dof_, dof_) = elongation_.transpose() * stiffness.asDiagonal() * elongation_;
  h.bottomRightCorner(dof_, dof_).setIdentity();
  return h;
}

bool HamiltonianSystem::is_separable() const {
  if (!is_quadratic()) return true;
  return quadratic_.topRightCorner(dof_, dof_).cwiseAbs().maxCoeff() == 0.0;
}

Vector HamiltonianSystem::grad_potential(const Eigen::Ref<const Vector>& q) const {
  require(q.size() == dof_, ErrorCode::DimensionMismatch, "grad_potential: wrong q length");
  require(is_separable(), ErrorCode::InvalidArgument, name() + " is not separable");
  if (is_quadratic()) return quadratic_.topLeftCorner(dof_, dof_) * q;
  if (const auto* pend = std::get_if<PendulumParams>(&params_)) {
    Vector g(1);
    g(0) = pend->mass * pend->gravity * pend->length * std::sin(q(0));
    return g;
  }
  const auto& ch = std::get<ChainParams>(params_);
  const Vector delta = elongation_ * q;
  const Vector sigma = (ch.alpha * delta.array() + ch.beta * delta.array().cube()).matrix();
  return elongation_.transpose() * sigma;
}

Vector HamiltonianSystem::grad_kinetic(const Eigen::Ref<const Vector>& p) const {
  require(p.size() == dof_, ErrorCode::DimensionMismatch, "grad_kinetic: wrong p length");
  require(is_separable(), ErrorCode::InvalidArgument, name() + " is not separable");
  if (is_quadratic()) return quadratic_.bottomRightCorner(dof_, dof_) * p;
  if (const auto* pend = std::get_if<PendulumParams>(&params_)) {
    return p / (pend->mass * pend->length * pend->length);
  }
  return p;
}

namespace {

double log2_over(double lipschitz, double horizon) {
  if (lipschitz <= 0.0) return horizon;
  return std::min(horizon, std::numbers::ln2 / lipschitz);
}

double symmetric_norm(const Matrix& h) { return sym_eigen(h).values.cwiseAbs().maxCoeff(); }

double sup_abs_cos(double lo, double hi) {
  // |cos| reaches 1 at multiples of pi.
  const double k = std::ceil(lo / std::numbers::pi);
  if (k * std::numbers::pi <= hi) return 1.0;
  return std::max(std::abs(std::cos(lo)), std::abs(std::cos(hi)));
}

}  // namespace

double step_size_bound(const HamiltonianSystem& sys, std::span<const Vector> sample, double horizon) {
  require(!sample.empty(), ErrorCode::EmptySample, "step_size_bound: empty sample");
  require(horizon > 0.0, ErrorCode::InvalidArgument, "horizon must be positive");
  double lipschitz = 0.0;
  if (sys.is_quadratic()) {
    sys.hessian(sample.front());  // dimension check
    lipschitz = symmetric_norm(sys.quadratic_matrix());
  } else {
    for (const auto& x : sample) lipschitz = std::max(lipschitz, symmetric_norm(sys.hessian(x)));
  }
  return log2_over(lipschitz, horizon);
}

double lipschitz_bound_box(const HamiltonianSystem& sys, const Vector& lower, const Vector& upper) {
  require(lower.size() == sys.dim() && upper.size() == sys.dim(), ErrorCode::DimensionMismatch,
          "box bounds must match the phase-space dimension");
  require((upper.array() >= lower.array()).all(), ErrorCode::InvalidArgument,
          "box bounds are not ordered");
  if (sys.is_quadratic()) return symmetric_norm(sys.quadratic_matrix());
  if (const auto* pend = std::get_if<PendulumParams>(&sys.params())) {
    const double potential = pend->mass * pend->gravity * pend->length * sup_abs_cos(lower(0), upper(0));
    const double kinetic = 1.0 / (pend->mass * pend->length * pend->length);
    return std::max(potential, kinetic);
  }
  const auto& ch = std::get<ChainParams>(sys.params());
  const Eigen::Index n = sys.dof();
  // Largest |B q| entry over the q-box.
  double delta_max = std::max(std::abs(lower(0)), std::abs(upper(0)));
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    delta_max = std::max({delta_max, std::abs(upper(i + 1) - lower(i)), std::abs(lower(i + 1) - upper(i))});
  }
  delta_max = std::max({delta_max, std::abs(lower(n - 1)), std::abs(upper(n - 1))});
  const Matrix& b = sys.chain_elongation();
  const double gershgorin = (b.transpose() * b).cwiseAbs().rowwise().sum().maxCoeff();
  return std::max(1.0, gershgorin * (ch.alpha + 3.0 * ch.beta * delta_max * delta_max));
}

double step_size_bound_box(const HamiltonianSystem& sys, const Vector& lower, const Vector& upper,
                           double horizon) {
  require(horizon > 0.0, ErrorCode::InvalidArgument, "horizon must be positive");
  return log2_over(lipschitz_bound_box(sys, lower, upper), horizon);
}

ResonanceReport resonance_check(const HamiltonianSystem& sys, double delta_t) {
  require(sys.is_quadratic(), ErrorCode::NotQuadratic,
          "resonance check needs a quadratic Hamiltonian, got " + sys.name());
  const Eigen::Index n = sys.dof();
  const Matrix flow = expm(delta_t * poisson_matrix(n) * sys.quadratic_matrix());
  ResonanceReport out;
  out.det_d = flow.bottomRightCorner(n, n).determinant();
  out.resonant = std::abs(out.det_d) < 1e-10;
  return out;
}

}  // namespace symk
