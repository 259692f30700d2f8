#pragma once

#include "symk/hb_surrogate.hpp"

#include <optional>
#include <ostream>
#include <vector>

namespace symk {

struct GreedyConfig {
  Eigen::Index max_centers = 100;
  /// Selection stops once the largest residual drops strictly below this.
  double residual_tolerance = 0.0;
  bool record_power_values = true;
  /// Selection stops when the chosen functional's power value is below this;
  /// the Newton-basis update divides by it.
  double power_cutoff = 1e-7;
};

enum class GreedyStop { Running, MaxCenters, ResidualTolerance, DegeneratePower, PoolExhausted };

const char* to_string(GreedyStop stop);

/// One selection step. Record m describes the state with m selected
/// functionals: a_m = max residual of e_m, b_m = P_m at the functional chosen
/// next, and |e_m| when the target is a known RKHS element.
struct GreedyRecord {
  Eigen::Index iter = 0;
  Eigen::Index selected_index = 0;
  Eigen::Index coord = 0;
  double max_residual = 0.0;
  double power_value = 0.0;
  std::optional<double> rkhs_error;
  std::optional<double> monitor_max_residual;
};

struct GreedyTrace {
  std::vector<GreedyRecord> records;
  GreedyStop stop = GreedyStop::Running;
  /// Max residual over the pool (and over the monitor set, when present)
  /// after the last selection.
  double final_max_residual = 0.0;
  std::optional<double> final_monitor_max_residual;
  std::optional<double> final_rkhs_error;

  /// E_X(m) for m = 0 .. number of selections, on the training pool.
  std::vector<double> train_curve() const;
  /// Same on the monitor set; empty when no monitor was attached.
  std::vector<double> monitor_curve() const;
};

/// CSV with columns iter,selected_index,coord,max_residual,power_value,rkhs_error.
void write_trace_csv(const GreedyTrace& trace, std::ostream& out);

/// Incremental f-greedy over a pool of derivative functionals.
///
/// The trainer keeps the values lambda_i(v_k) of every pool functional on the
/// orthonormal Newton basis v_1..v_m of the selected representers. The rows
/// of that table at the selected functionals form the Cholesky factor of
/// their Gram matrix, grown by one bordered row per step. Residuals and power
/// values of the whole pool are updated in O(pool * m) per step.
class FGreedyTrainer {
 public:
  FGreedyTrainer(KernelSpec kernel, std::vector<DerivFunctional> pool, Vector targets,
                 GreedyConfig config);

  /// Synthetic mode: the target is an RKHS element, so |e_m| is tracked.
  /// Targets are computed as lambda_i(u).
  FGreedyTrainer(KernelSpec kernel, std::vector<DerivFunctional> pool, const Surrogate& target,
                 GreedyConfig config);

  /// Functionals whose residuals are tracked but never selected (validation).
  void set_monitor(std::vector<DerivFunctional> functionals, Vector targets);

  /// Performs one selection. Returns false once a stopping rule fires.
  bool step();
  void run();

  Eigen::Index num_selected() const noexcept { return Eigen::Index(selected_.size()); }
  const std::vector<Eigen::Index>& selected() const noexcept { return selected_; }
  const GreedyTrace& trace() const noexcept { return trace_; }
  const Vector& residuals() const noexcept { return residual_; }
  const Vector& monitor_residuals() const noexcept { return monitor_residual_; }

  /// Current interpolant s_m in the representer basis.
  Surrogate surrogate() const;

 private:
  void init();
  Eigen::Index argmax_unselected() const;
  double current_rkhs_error() const;
  void finish(GreedyStop reason);

  KernelSpec kernel_;
  Eigen::Index dim_ = 0;
  std::vector<DerivFunctional> pool_;
  Vector targets_;
  GreedyConfig config_;
  std::optional<Surrogate> synthetic_;
  double target_norm2_ = 0.0;

  Vector residual_;
  Vector power2_;
  Matrix newton_;  // pool x max_centers, lambda_i(v_k)
  std::vector<char> is_selected_;
  std::vector<Eigen::Index> selected_;
  Vector newton_coeffs_;

  std::vector<DerivFunctional> monitor_;
  Vector monitor_residual_;
  Matrix monitor_newton_;

  GreedyTrace trace_;
};

std::pair<Surrogate, GreedyTrace> train_f_greedy(const KernelSpec& kernel, const HBDataset& data,
                                                 const GreedyConfig& config,
                                                 const HBDataset* validation = nullptr);

/// Residual table y_{j,a} - d_a s(xi_j), samples x coordinates.
Matrix residual_vector(const Surrogate& s, const HBDataset& data);

/// max |residual| over the table, i.e. E_X(m) for the surrogate's m.
double max_residual(const Surrogate& s, const HBDataset& data);

struct BlockBound {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// Block bound on the residual decay between m+1 and 2m, using the pool max
/// as the sup-norm: lhs = sqrt(d) min_{m<i<=2m} a_i and
/// rhs = sqrt(d) m^{-1/2} |e_{m+1}| (prod_{i=m+1}^{2m} b_i)^{1/m}.
BlockBound verify_block_bound(const GreedyTrace& trace, Eigen::Index m, Eigen::Index dim);

}  // namespace symk
