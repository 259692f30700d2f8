#include "symk/predictor.hpp"

#include "symk/error.hpp"
#include "symk/io.hpp"

#include <cmath>

namespace symk {

PredictorModel::PredictorModel(Surrogate surrogate, double delta_t, PredictorSettings settings)
    : surrogate_(std::move(surrogate)), delta_t_(delta_t), settings_(settings) {
  require(surrogate_.dim() % 2 == 0, ErrorCode::DimensionMismatch,
          "predictor surrogate must live on an even-dimensional phase space");
  require(delta_t > 0.0 && std::isfinite(delta_t), ErrorCode::InvalidArgument,
          "macro step must be positive");
  require(settings_.tolerance > 0.0 && settings_.max_iterations > 0, ErrorCode::InvalidArgument,
          "invalid predictor solver settings");
}

namespace {

constexpr int kMaxHalvings = 10;

class MomentumSolve {
 public:
  MomentumSolve(const PredictorModel& model, const Eigen::Ref<const Vector>& x0)
      : model_(model), n_(model.dof()), q0_(x0.head(n_)), p0_(x0.tail(n_)), xi_(x0) {}

  Vector grad_at(const Vector& p) {
    xi_.tail(n_) = p;
    return model_.surrogate().grad(xi_);
  }

  // Fixed-point image p0 - dT grad_q s(q0, P).
  Vector image(const Vector& p) { return p0_ - model_.delta_t() * grad_at(p).head(n_); }

  Vector residual(const Vector& p) { return p - image(p); }

  Matrix residual_jacobian(const Vector& p) {
    Matrix jac(n_, n_);
    for (Eigen::Index k = 0; k < n_; ++k) {
      const double h = 1e-7 * (1.0 + std::abs(p(k)));
      Vector plus = p, minus = p;
      plus(k) += h;
      minus(k) -= h;
      jac.col(k) = (residual(plus) - residual(minus)) / (2.0 * h);
    }
    return jac;
  }

  const Vector& q0() const { return q0_; }
  const Vector& p0() const { return p0_; }

 private:
  const PredictorModel& model_;
  Eigen::Index n_;
  Vector q0_, p0_;
  Vector xi_;
};

struct Attempt {
  Vector p;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

Attempt solve_momentum(MomentumSolve& solve, const PredictorSettings& st, Vector p, double tol) {
  Attempt out;
  Vector r = solve.residual(p);
  double rnorm = r.lpNorm<Eigen::Infinity>();
  bool newton = st.mode == SolverMode::Newton;
  int polish = 0;
  int it = 0;
  while (it < st.max_iterations) {
    if (rnorm == 0.0) break;
    if (rnorm <= tol) {
      if (polish >= st.polish_iterations) break;
      ++polish;
    }
    ++it;
    Vector trial;
    Vector trial_r;
    double trial_norm = 0.0;
    if (newton) {
      // Step halving until the residual decreases.
      const Vector step = solve.residual_jacobian(p).partialPivLu().solve(r);
      double lambda = 1.0;
      for (int h = 0; h <= kMaxHalvings; ++h, lambda *= 0.5) {
        trial = p - lambda * step;
        trial_r = solve.residual(trial);
        trial_norm = trial_r.lpNorm<Eigen::Infinity>();
        if (trial_norm < rnorm) break;
      }
      if (!(trial_norm < rnorm)) break;  // no descent: roundoff floor or a bad root
    } else {
      trial = p - r;  // p - (p - image(p)) = image(p)
      trial_r = solve.residual(trial);
      trial_norm = trial_r.lpNorm<Eigen::Infinity>();
    }
    if (!std::isfinite(trial_norm)) break;
    if (rnorm <= tol && !(trial_norm < rnorm)) break;  // roundoff floor
    if (!newton && st.mode == SolverMode::FixedPointThenNewton && trial_norm > 0.9 * rnorm) {
      newton = true;
      if (!(trial_norm < rnorm)) continue;  // retry from p with Newton
    }
    p = trial;
    r = trial_r;
    rnorm = trial_norm;
  }
  out.p = std::move(p);
  out.residual = rnorm;
  out.iterations = it;
  out.converged = rnorm <= tol;
  return out;
}

}  // namespace

std::pair<Vector, SolveReport> predict_step(const PredictorModel& model,
                                            const Eigen::Ref<const Vector>& x0) {
  require(x0.size() == model.surrogate().dim(), ErrorCode::DimensionMismatch,
          "predict_step: state has dimension " + std::to_string(x0.size()) + ", model expects " +
              std::to_string(model.surrogate().dim()));
  require(x0.allFinite(), ErrorCode::NonFinite, "predict_step: state is not finite");
  const Eigen::Index n = model.dof();
  const double dt = model.delta_t();
  const auto& st = model.settings();

  MomentumSolve solve(model, x0);
  const double tol = st.tolerance * (1.0 + solve.p0().lpNorm<Eigen::Infinity>());

  Attempt att = solve_momentum(solve, st, solve.p0(), tol);
  int total = att.iterations;
  if (!att.converged) {
    const Vector guess = solve.image(solve.p0());
    Attempt second = solve_momentum(solve, st, guess, tol);
    total += second.iterations;
    if (second.converged || second.residual < att.residual) att = std::move(second);
  }
  SolveReport report{total, att.residual, att.converged};
  require(report.converged, ErrorCode::NoConvergence,
          "predictor momentum solve stopped at residual " + format_double(att.residual) +
              "; consider a smaller macro step");

  const Vector g = solve.grad_at(att.p);
  Vector out(2 * n);
  out.head(n) = solve.q0() + dt * g.tail(n);
  out.tail(n) = att.p;
  return {out, report};
}

Trajectory rollout(const PredictorModel& model, const Vector& x0, long num_macro_steps) {
  require(num_macro_steps >= 0, ErrorCode::InvalidArgument, "rollout: negative step count");
  require(x0.size() == model.surrogate().dim(), ErrorCode::DimensionMismatch,
          "rollout: state dimension mismatch");
  Trajectory traj;
  traj.step = model.delta_t();
  traj.times.push_back(0.0);
  traj.states.push_back(x0);
  traj.solver_iterations.push_back(0);
  for (long k = 1; k <= num_macro_steps; ++k) {
    try {
      auto [next, report] = predict_step(model, traj.states.back());
      traj.states.push_back(std::move(next));
      traj.solver_iterations.push_back(report.iterations);
    } catch (const Error& e) {
      fail(e.code(), "macro step " + std::to_string(k) + ": " + e.what());
    }
    traj.times.push_back(double(k) * model.delta_t());
  }
  return traj;
}

double symplecticity_defect(const PredictorModel& model, const Vector& x0, double fd_step) {
  require(fd_step > 0.0, ErrorCode::InvalidArgument, "finite-difference step must be positive");
  const Eigen::Index d = x0.size();
  require(d == model.surrogate().dim(), ErrorCode::DimensionMismatch,
          "symplecticity_defect: state dimension mismatch");
  Matrix jac(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    Vector plus = x0, minus = x0;
    plus(k) += fd_step;
    minus(k) -= fd_step;
    // Divide by the representable stencil width so the identity map differentiates exactly.
    jac.col(k) = (predict_step(model, plus).first - predict_step(model, minus).first) / (plus(k) - minus(k));
  }
  return symplectic_defect(jac);
}

double contraction_margin(const PredictorModel& model, std::span<const Vector> region_sample,
                          double fd_step) {
  require(!region_sample.empty(), ErrorCode::EmptySample, "contraction_margin: empty sample");
  require(fd_step > 0.0, ErrorCode::InvalidArgument, "finite-difference step must be positive");
  const Eigen::Index n = model.dof();
  double lipschitz = 0.0;
  for (const auto& x : region_sample) {
    require(x.size() == 2 * n, ErrorCode::DimensionMismatch, "contraction_margin: state dimension mismatch");
    Matrix jac(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      Vector plus = x, minus = x;
      plus(n + k) += fd_step;
      minus(n + k) -= fd_step;
      jac.col(k) = (model.surrogate().grad(plus).head(n) - model.surrogate().grad(minus).head(n)) /
                   (plus(n + k) - minus(n + k));
    }
    lipschitz = std::max(lipschitz, spectral_norm(jac));
  }
  return model.delta_t() * lipschitz;
}

}  // namespace symk
