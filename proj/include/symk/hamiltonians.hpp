#pragma once

#include "symk/linalg.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace symk {

/// Canonical state split into positions and momenta. Most of the library
/// works on the stacked vector x = (q, p); these helpers convert.
struct PhaseState {
  Vector q;
  Vector p;
};

Vector stack(const PhaseState& s);
PhaseState split(const Eigen::Ref<const Vector>& x);

struct PendulumParams {
  double mass = 1.0;
  double length = 1.0;
  double gravity = 9.81;
};

/// Spring-mass chain with fixed walls and quartic springs
/// f(d) = alpha d^2 / 2 + beta d^4 / 4, unit masses.
struct ChainParams {
  Eigen::Index masses = 3;
  double alpha = 1.0;
  double beta = 0.25;
};

/// Semi-discrete 1-D wave equation, Dirichlet ends, 3-point stencil.
struct WaveParams {
  Eigen::Index nodes = 1000;
  double speed = 0.3;
  double length = 1.0;
};

/// H(x) = x^T H x / 2.
struct QuadraticParams {
  Matrix h;
};

class HamiltonianSystem {
 public:
  using Variant = std::variant<PendulumParams, ChainParams, WaveParams, QuadraticParams>;

  static HamiltonianSystem pendulum(PendulumParams params = {});
  static HamiltonianSystem chain(ChainParams params = {});
  static HamiltonianSystem wave(WaveParams params = {});
  static HamiltonianSystem quadratic(Matrix h);

  const Variant& params() const noexcept { return params_; }
  std::string name() const;

  /// Degrees of freedom n; the phase space is R^{2n}.
  Eigen::Index dof() const noexcept { return dof_; }
  Eigen::Index dim() const noexcept { return 2 * dof_; }

  double energy(const Eigen::Ref<const Vector>& x) const;
  Vector grad(const Eigen::Ref<const Vector>& x) const;
  Matrix hessian(const Eigen::Ref<const Vector>& x) const;

  /// Wave and quadratic systems have a state-independent Hessian.
  bool is_quadratic() const noexcept;
  /// The matrix H of a quadratic system (wave included).
  const Matrix& quadratic_matrix() const;

  /// H = T(p) + V(q) split, needed by explicit symplectic Euler.
  bool is_separable() const;
  Vector grad_potential(const Eigen::Ref<const Vector>& q) const;
  Vector grad_kinetic(const Eigen::Ref<const Vector>& p) const;

  /// Chain elongation matrix B, (n+1) x n. Throws for other systems.
  const Matrix& chain_elongation() const;

 private:
  HamiltonianSystem(Variant params, Eigen::Index dof);
  void require_state(const Eigen::Ref<const Vector>& x) const;

  Variant params_;
  Eigen::Index dof_;
  Matrix quadratic_;  // H for wave/quadratic
  Matrix elongation_; // B for the chain
};

/// Chain elongation matrix with virtual fixed nodes q_0 = q_{n+1} = 0.
Matrix chain_elongation_matrix(Eigen::Index masses);

/// Central-difference matrix for -d^2/dx^2 with homogeneous Dirichlet ends.
Matrix dirichlet_laplacian(Eigen::Index nodes, double length);

/// min{T, log 2 / L_K} with L_K the largest Hessian spectral norm over the
/// sample; +inf handling per L_K = 0 gives T.
double step_size_bound(const HamiltonianSystem& sys, std::span<const Vector> sample, double horizon);

/// Analytic L_K over the box [lower, upper] in phase space: pendulum uses
/// sup |cos q| over the box, the chain a Gershgorin bound on B^T B and the
/// largest elongation in the box, quadratic systems the spectral norm of H.
double lipschitz_bound_box(const HamiltonianSystem& sys, const Vector& lower, const Vector& upper);
double step_size_bound_box(const HamiltonianSystem& sys, const Vector& lower, const Vector& upper,
                           double horizon);

struct ResonanceReport {
  double det_d = 0.0;
  bool resonant = false;
};

/// det of the momentum-momentum block D of exp(dT J H); resonant when
/// |det D| < 1e-10. Only for quadratic systems.
ResonanceReport resonance_check(const HamiltonianSystem& sys, double delta_t);

}  // namespace symk
