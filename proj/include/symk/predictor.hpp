#pragma once

#include "symk/hb_surrogate.hpp"
#include "symk/integrators.hpp"

#include <span>
#include <utility>

namespace symk {

enum class SolverMode { FixedPointThenNewton, FixedPoint, Newton };

struct PredictorSettings {
  /// Converged when |residual|_inf <= tolerance * (1 + |p0|_inf).
  double tolerance = 1e-11;
  int max_iterations = 200;
  SolverMode mode = SolverMode::FixedPointThenNewton;
  /// Extra iterations after convergence while the residual keeps shrinking.
  int polish_iterations = 5;
};

/// Implicit kernel predictor: given x0 = (q0, p0), solves
/// P = p0 - dT grad_q s(q0, P) and sets Q = q0 + dT grad_p s(q0, P).
class PredictorModel {
 public:
  PredictorModel(Surrogate surrogate, double delta_t, PredictorSettings settings = {});

  const Surrogate& surrogate() const noexcept { return surrogate_; }
  double delta_t() const noexcept { return delta_t_; }
  const PredictorSettings& settings() const noexcept { return settings_; }
  Eigen::Index dof() const noexcept { return surrogate_.dim() / 2; }

 private:
  Surrogate surrogate_;
  double delta_t_;
  PredictorSettings settings_;
};

std::pair<Vector, SolveReport> predict_step(const PredictorModel& model,
                                            const Eigen::Ref<const Vector>& x0);

/// Composed macro steps; the trajectory records solver iterations per step.
Trajectory rollout(const PredictorModel& model, const Vector& x0, long num_macro_steps);

/// |D Psi^T J D Psi - J|_inf with D Psi from central differences of
/// predict_step.
double symplecticity_defect(const PredictorModel& model, const Vector& x0, double fd_step = 1e-6);

/// dT * max over the sample of the spectral norm of d/dP grad_q s(q0, P),
/// each sample state read as the mixed argument (q0, P).
double contraction_margin(const PredictorModel& model, std::span<const Vector> region_sample,
                          double fd_step = 1e-6);

}  // namespace symk
