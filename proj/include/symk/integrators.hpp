#pragma once

#include "symk/hamiltonians.hpp"

#include <ostream>
#include <utility>
#include <vector>

namespace symk {

struct SolveReport {
  int iterations = 0;
  double final_residual_norm = 0.0;
  bool converged = false;
};

/// States on the uniform grid t_k = k * step. `solver_iterations` is filled
/// by implicit steppers (entry 0 belongs to the initial state and is 0).
struct Trajectory {
  double step = 0.0;
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<int> solver_iterations;

  std::size_t size() const noexcept { return states.size(); }
};

enum class Stepper { ImplicitMidpoint, SymplecticEuler };

/// x+ = x + dt J grad H((x + x+) / 2), solved by Newton with the analytic
/// Hessian and step halving when the residual grows. Quadratic systems take
/// one exact linear solve. A negative dt steps backward.
std::pair<Vector, SolveReport> implicit_midpoint_step(const HamiltonianSystem& sys,
                                                      const Eigen::Ref<const Vector>& x, double dt);

/// p+ = p - dt grad V(q), q+ = q + dt grad T(p+).
Vector symplectic_euler_step(const HamiltonianSystem& sys, const Eigen::Ref<const Vector>& x,
                             double dt);

Trajectory propagate(const HamiltonianSystem& sys, const Vector& x0, double dt, long steps,
                     Stepper method = Stepper::ImplicitMidpoint);

/// Final state of `steps` midpoint steps, without storing the path.
Vector midpoint_flow(const HamiltonianSystem& sys, const Vector& x0, double dt, long steps);

/// Number of micro steps in a macro step; throws InvalidArgument unless
/// macro / micro is an integer to within 1e-9 relative.
long exact_step_ratio(double macro, double micro);

/// Columns t,q_1..q_n,p_1..p_n, plus solver_iterations when requested.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out, bool with_solver_iterations = false);

}  // namespace symk
