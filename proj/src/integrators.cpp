#include "symk/integrators.hpp"

#include "symk/error.hpp"
#include "symk/io.hpp"

#include <cmath>

namespace symk {

namespace {

constexpr int kMaxNewtonIterations = 30;
constexpr int kMaxHalvings = 20;

// J v for v = (a, b): (b, -a).
Vector apply_poisson(const Vector& v) {
  const Eigen::Index n = v.size() / 2;
  Vector out(v.size());
  out.head(n) = v.tail(n);
  out.tail(n) = -v.head(n);
  return out;
}

void require_step(double dt) {
  require(std::isfinite(dt) && dt != 0.0, ErrorCode::InvalidArgument,
          "time step must be finite and nonzero");
}

}  // namespace

std::pair<Vector, SolveReport> implicit_midpoint_step(const HamiltonianSystem& sys,
                                                      const Eigen::Ref<const Vector>& x, double dt) {
  require_step(dt);
  require(x.size() == sys.dim(), ErrorCode::DimensionMismatch, "midpoint: state dimension mismatch");
  require(x.allFinite(), ErrorCode::NonFinite, "midpoint: state is not finite");
  const Eigen::Index d = sys.dim();
  const Matrix j = poisson_matrix(sys.dof());
  const double tol = 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>());

  auto residual = [&](const Vector& y) -> Vector {
    return y - x - dt * apply_poisson(sys.grad(0.5 * (x + y)));
  };

  SolveReport report;
  if (sys.is_quadratic()) {
    const Matrix a = 0.5 * dt * j * sys.quadratic_matrix();
    const Matrix lhs = Matrix::Identity(d, d) - a;
    Vector y = lhs.partialPivLu().solve(x + a * x);
    report.iterations = 1;
    report.final_residual_norm = residual(y).lpNorm<Eigen::Infinity>();
    report.converged = report.final_residual_norm <= tol;
    // One refinement pass when roundoff in the solve exceeds the tolerance.
    if (!report.converged) {
      y -= lhs.partialPivLu().solve(residual(y));
      report.iterations = 2;
      report.final_residual_norm = residual(y).lpNorm<Eigen::Infinity>();
      report.converged = report.final_residual_norm <= tol;
    }
    require(report.converged, ErrorCode::NoConvergence,
            "midpoint linear solve residual " + format_double(report.final_residual_norm));
    return {y, report};
  }

  Vector y = x;
  Vector r = residual(y);
  double rnorm = r.lpNorm<Eigen::Infinity>();
  while (rnorm > tol) {
    if (report.iterations == kMaxNewtonIterations) {
      report.final_residual_norm = rnorm;
      fail(ErrorCode::NoConvergence, "midpoint Newton: residual " + format_double(rnorm) + " after " +
                                         std::to_string(kMaxNewtonIterations) + " iterations");
    }
    ++report.iterations;
    const Matrix jac = Matrix::Identity(d, d) - 0.5 * dt * j * sys.hessian(0.5 * (x + y));
    const Vector delta = jac.partialPivLu().solve(-r);
    double lambda = 1.0;
    Vector trial = y + delta;
    Vector trial_r = residual(trial);
    double trial_norm = trial_r.lpNorm<Eigen::Infinity>();
    for (int h = 0; h < kMaxHalvings && !(trial_norm < rnorm); ++h) {
      lambda *= 0.5;
      trial = y + lambda * delta;
      trial_r = residual(trial);
      trial_norm = trial_r.lpNorm<Eigen::Infinity>();
    }
    if (!(trial_norm < rnorm)) {
      // No descent left: roundoff floor reached.
      break;
    }
    y = std::move(trial);
    r = std::move(trial_r);
    rnorm = trial_norm;
  }
  report.final_residual_norm = rnorm;
  report.converged = rnorm <= tol;
  require(report.converged, ErrorCode::NoConvergence,
          "midpoint Newton stalled at residual " + format_double(rnorm));
  return {y, report};
}

Vector symplectic_euler_step(const HamiltonianSystem& sys, const Eigen::Ref<const Vector>& x,
                             double dt) {
  require_step(dt);
  require(x.size() == sys.dim(), ErrorCode::DimensionMismatch,
          "symplectic Euler: state dimension mismatch");
  const Eigen::Index n = sys.dof();
  Vector out(x.size());
  out.tail(n) = x.tail(n) - dt * sys.grad_potential(x.head(n));
  out.head(n) = x.head(n) + dt * sys.grad_kinetic(out.tail(n));
  return out;
}

Trajectory propagate(const HamiltonianSystem& sys, const Vector& x0, double dt, long steps,
                     Stepper method) {
  require(steps >= 0, ErrorCode::InvalidArgument, "propagate: negative step count");
  require_step(dt);
  require(x0.size() == sys.dim(), ErrorCode::DimensionMismatch, "propagate: state dimension mismatch");
  Trajectory traj;
  traj.step = dt;
  traj.times.reserve(std::size_t(steps) + 1);
  traj.states.reserve(std::size_t(steps) + 1);
  traj.solver_iterations.reserve(std::size_t(steps) + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(x0);
  traj.solver_iterations.push_back(0);
  for (long k = 1; k <= steps; ++k) {
    try {
      if (method == Stepper::ImplicitMidpoint) {
        auto [next, report] = implicit_midpoint_step(sys, traj.states.back(), dt);
        traj.states.push_back(std::move(next));
        traj.solver_iterations.push_back(report.iterations);
      } else {
        traj.states.push_back(symplectic_euler_step(sys, traj.states.back(), dt));
        traj.solver_iterations.push_back(0);
      }
    } catch (const Error& e) {
      fail(e.code(), "step " + std::to_string(k) + ": " + e.what());
    }
    traj.times.push_back(double(k) * dt);
  }
  return traj;
}

Vector midpoint_flow(const HamiltonianSystem& sys, const Vector& x0, double dt, long steps) {
  require(steps >= 0, ErrorCode::InvalidArgument, "midpoint_flow: negative step count");
  Vector x = x0;
  for (long k = 1; k <= steps; ++k) {
    try {
      x = implicit_midpoint_step(sys, x, dt).first;
    } catch (const Error& e) {
      fail(e.code(), "step " + std::to_string(k) + ": " + e.what());
    }
  }
  return x;
}

long exact_step_ratio(double macro, double micro) {
  require(macro > 0.0 && micro > 0.0 && std::isfinite(macro) && std::isfinite(micro),
          ErrorCode::InvalidArgument, "step sizes must be positive");
  const double ratio = macro / micro;
  const double k = std::round(ratio);
  require(k >= 1.0 && std::abs(ratio - k) <= 1e-9 * k, ErrorCode::InvalidArgument,
          "macro step " + format_double(macro) + " is not an integer multiple of micro step " +
              format_double(micro));
  return long(k);
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out, bool with_solver_iterations) {
  require(!traj.states.empty(), ErrorCode::EmptySeries, "trajectory has no states");
  const Eigen::Index n = traj.states.front().size() / 2;
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 1; i <= n; ++i) header.push_back("q_" + std::to_string(i));
  for (Eigen::Index i = 1; i <= n; ++i) header.push_back("p_" + std::to_string(i));
  if (with_solver_iterations) header.push_back("solver_iterations");
  out << csv_line(header);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    std::vector<std::string> row{format_double(traj.times[k])};
    for (Eigen::Index i = 0; i < 2 * n; ++i) row.push_back(format_double(traj.states[k](i)));
    if (with_solver_iterations) {
      const int it = k < traj.solver_iterations.size() ? traj.solver_iterations[k] : 0;
      row.push_back(std::to_string(it));
    }
    out << csv_line(row);
  }
}

}  // namespace symk
