#include "symk/greedy.hpp"

#include "symk/error.hpp"
#include "symk/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace symk {

const char* to_string(GreedyStop stop) {
  switch (stop) {
    case GreedyStop::Running: return "running";
    case GreedyStop::MaxCenters: return "max_centers";
    case GreedyStop::ResidualTolerance: return "residual_tolerance";
    case GreedyStop::DegeneratePower: return "degenerate_power";
    case GreedyStop::PoolExhausted: return "pool_exhausted";
  }
  return "unknown";
}

std::vector<double> GreedyTrace::train_curve() const {
  std::vector<double> out;
  out.reserve(records.size() + 1);
  for (const auto& r : records) out.push_back(r.max_residual);
  out.push_back(final_max_residual);
  return out;
}

std::vector<double> GreedyTrace::monitor_curve() const {
  std::vector<double> out;
  if (!final_monitor_max_residual) return out;
  out.reserve(records.size() + 1);
  for (const auto& r : records) out.push_back(r.monitor_max_residual.value_or(0.0));
  out.push_back(*final_monitor_max_residual);
  return out;
}

void write_trace_csv(const GreedyTrace& trace, std::ostream& out) {
  out << "iter,selected_index,coord,max_residual,power_value,rkhs_error\n";
  for (const auto& r : trace.records) {
    out << csv_line({std::to_string(r.iter), std::to_string(r.selected_index), std::to_string(r.coord),
                     format_double(r.max_residual), format_double(r.power_value),
                     r.rkhs_error ? format_double(*r.rkhs_error) : ""});
  }
}

FGreedyTrainer::FGreedyTrainer(KernelSpec kernel, std::vector<DerivFunctional> pool, Vector targets,
                               GreedyConfig config)
    : kernel_(kernel), pool_(std::move(pool)), targets_(std::move(targets)), config_(config) {
  init();
}

FGreedyTrainer::FGreedyTrainer(KernelSpec kernel, std::vector<DerivFunctional> pool,
                               const Surrogate& target, GreedyConfig config)
    : kernel_(kernel), pool_(std::move(pool)), config_(config), synthetic_(target) {
  require(target.kernel() == kernel, ErrorCode::InvalidArgument,
          "synthetic target uses a different kernel");
  targets_.resize(Eigen::Index(pool_.size()));
  for (std::size_t i = 0; i < pool_.size(); ++i) {
    require(pool_[i].center.size() == target.dim(), ErrorCode::DimensionMismatch,
            "pool and synthetic target dimensions differ");
    targets_(Eigen::Index(i)) = target.grad(pool_[i].center)(pool_[i].coord);
  }
  target_norm2_ = rkhs_inner(target, target);
  init();
}

void FGreedyTrainer::init() {
  require(!pool_.empty(), ErrorCode::EmptyDataset, "f-greedy: empty candidate pool");
  require(config_.max_centers >= 1, ErrorCode::InvalidArgument, "max_centers must be >= 1");
  require(Eigen::Index(pool_.size()) == targets_.size(), ErrorCode::DimensionMismatch,
          "f-greedy: target count does not match pool size");
  require(targets_.allFinite(), ErrorCode::NonFinite, "f-greedy: non-finite targets");
  dim_ = pool_.front().center.size();
  for (const auto& f : pool_) {
    require(f.center.size() == dim_, ErrorCode::DimensionMismatch, "f-greedy: mixed dimensions");
    require(f.coord >= 0 && f.coord < dim_, ErrorCode::InvalidCoordinate,
            "f-greedy: coordinate out of range");
  }

  const auto n = Eigen::Index(pool_.size());
  const Eigen::Index cap = std::min(config_.max_centers, n);
  residual_ = targets_;
  power2_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = pool_[std::size_t(i)];
    power2_(i) = kernel_mixed2(kernel_, f.center, f.center, f.coord, f.coord);
  }
  newton_ = Matrix::Zero(n, cap);
  newton_coeffs_ = Vector::Zero(cap);
  is_selected_.assign(std::size_t(n), 0);
  selected_.clear();
  trace_ = GreedyTrace{};
}

void FGreedyTrainer::set_monitor(std::vector<DerivFunctional> functionals, Vector targets) {
  require(selected_.empty(), ErrorCode::InvalidArgument,
          "monitor set must be attached before the first step");
  require(Eigen::Index(functionals.size()) == targets.size(), ErrorCode::DimensionMismatch,
          "monitor target count mismatch");
  for (const auto& f : functionals) {
    require(f.center.size() == dim_, ErrorCode::DimensionMismatch, "monitor dimension mismatch");
  }
  monitor_ = std::move(functionals);
  monitor_residual_ = std::move(targets);
  monitor_newton_ = Matrix::Zero(Eigen::Index(monitor_.size()), newton_.cols());
}

Eigen::Index FGreedyTrainer::argmax_unselected() const {
  Eigen::Index best = -1;
  double best_value = -1.0;
  for (Eigen::Index i = 0; i < residual_.size(); ++i) {
    if (is_selected_[std::size_t(i)]) continue;
    const double v = std::abs(residual_(i));
    // strict comparison keeps the lowest index on ties
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

Surrogate FGreedyTrainer::surrogate() const {
  const Eigen::Index m = num_selected();
  if (m == 0) return Surrogate(kernel_, dim_);
  Matrix lower(m, m);
  std::vector<DerivFunctional> functionals;
  functionals.reserve(std::size_t(m));
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index row = selected_[std::size_t(k)];
    lower.row(k) = newton_.row(row).head(m);
    functionals.push_back(pool_[std::size_t(row)]);
  }
  // s = sum_k beta_k v_k and K_sel = L v, hence c = L^{-T} beta.
  Vector c = lower.triangularView<Eigen::Lower>().transpose().solve(newton_coeffs_.head(m));
  return Surrogate(kernel_, dim_, std::move(functionals), std::move(c));
}

double FGreedyTrainer::current_rkhs_error() const {
  const Surrogate s = surrogate();
  const double cross = rkhs_inner(*synthetic_, s);
  const double self = rkhs_inner(s, s);
  return std::sqrt(std::max(0.0, target_norm2_ - 2.0 * cross + self));
}

void FGreedyTrainer::finish(GreedyStop reason) {
  trace_.stop = reason;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < residual_.size(); ++i) {
    if (!is_selected_[std::size_t(i)]) worst = std::max(worst, std::abs(residual_(i)));
  }
  trace_.final_max_residual = worst;
  if (!monitor_.empty()) trace_.final_monitor_max_residual = monitor_residual_.cwiseAbs().maxCoeff();
  if (synthetic_) trace_.final_rkhs_error = current_rkhs_error();
}

bool FGreedyTrainer::step() {
  if (trace_.stop != GreedyStop::Running) return false;
  const Eigen::Index m = num_selected();
  if (m >= newton_.cols()) {
    finish(m >= config_.max_centers ? GreedyStop::MaxCenters : GreedyStop::PoolExhausted);
    return false;
  }
  const Eigen::Index pick = argmax_unselected();
  if (pick < 0) {
    finish(GreedyStop::PoolExhausted);
    return false;
  }
  const double a = std::abs(residual_(pick));
  if (a < config_.residual_tolerance) {
    finish(GreedyStop::ResidualTolerance);
    return false;
  }
  const double b = std::sqrt(std::max(0.0, power2_(pick)));
  if (b < config_.power_cutoff) {
    finish(GreedyStop::DegeneratePower);
    return false;
  }

  GreedyRecord rec;
  rec.iter = m;
  rec.selected_index = pick;
  rec.coord = pool_[std::size_t(pick)].coord;
  rec.max_residual = a;
  rec.power_value = config_.record_power_values ? b : 0.0;
  if (synthetic_) rec.rkhs_error = current_rkhs_error();
  if (!monitor_.empty()) rec.monitor_max_residual = monitor_residual_.cwiseAbs().maxCoeff();
  trace_.records.push_back(rec);

  const DerivFunctional& chosen = pool_[std::size_t(pick)];
  const auto n = Eigen::Index(pool_.size());

  // New Newton basis function v_{m+1} = (K_pick - sum_k L(pick,k) v_k) / b.
  Vector column(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = pool_[std::size_t(i)];
    column(i) = kernel_mixed2(kernel_, f.center, chosen.center, f.coord, chosen.coord);
  }
  const Vector pick_row = newton_.row(pick).head(m).transpose();
  if (m > 0) column.noalias() -= newton_.leftCols(m) * pick_row;
  column /= b;
  newton_.col(m) = column;

  const double beta = residual_(pick) / b;
  newton_coeffs_(m) = beta;
  residual_.noalias() -= beta * column;
  power2_.array() -= column.array().square();

  if (!monitor_.empty()) {
    Vector mcol(Eigen::Index(monitor_.size()));
    for (std::size_t i = 0; i < monitor_.size(); ++i) {
      const auto& f = monitor_[i];
      mcol(Eigen::Index(i)) = kernel_mixed2(kernel_, f.center, chosen.center, f.coord, chosen.coord);
    }
    if (m > 0) mcol.noalias() -= monitor_newton_.leftCols(m) * pick_row;
    mcol /= b;
    monitor_newton_.col(m) = mcol;
    monitor_residual_.noalias() -= beta * mcol;
  }

  is_selected_[std::size_t(pick)] = 1;
  selected_.push_back(pick);
  return true;
}

void FGreedyTrainer::run() {
  while (step()) {
  }
}

std::pair<Surrogate, GreedyTrace> train_f_greedy(const KernelSpec& kernel, const HBDataset& data,
                                                 const GreedyConfig& config,
                                                 const HBDataset* validation) {
  validate(data);
  require(data.size() > 0, ErrorCode::EmptyDataset, "train_f_greedy: empty dataset");
  FGreedyTrainer trainer(kernel, flatten_functionals(data), flatten_targets(data), config);
  if (validation != nullptr && validation->size() > 0) {
    validate(*validation);
    require(validation->dim() == data.dim(), ErrorCode::DimensionMismatch,
            "validation dimension differs from training");
    trainer.set_monitor(flatten_functionals(*validation), flatten_targets(*validation));
  }
  trainer.run();
  return {trainer.surrogate(), trainer.trace()};
}

Matrix residual_vector(const Surrogate& s, const HBDataset& data) {
  require(s.dim() == data.dim(), ErrorCode::DimensionMismatch,
          "residual_vector: surrogate and dataset dimensions differ");
  Matrix r(data.size(), data.dim());
  for (Eigen::Index j = 0; j < data.size(); ++j) {
    const Vector xi = data.inputs.row(j).transpose();
    r.row(j) = data.targets.row(j) - s.grad(xi).transpose();
  }
  return r;
}

double max_residual(const Surrogate& s, const HBDataset& data) {
  if (data.size() == 0) return 0.0;
  return residual_vector(s, data).cwiseAbs().maxCoeff();
}

BlockBound verify_block_bound(const GreedyTrace& trace, Eigen::Index m, Eigen::Index dim) {
  require(m >= 1, ErrorCode::InvalidArgument, "verify_block_bound: m must be >= 1");
  require(Eigen::Index(trace.records.size()) >= 2 * m + 1, ErrorCode::InsufficientTrace,
          "trace needs records through iteration 2m");
  const auto& e_next = trace.records[std::size_t(m + 1)].rkhs_error;
  require(e_next.has_value(), ErrorCode::InsufficientTrace,
          "trace carries no RKHS errors (data-mode run)");

  const double scale = std::sqrt(double(dim));
  double min_residual = std::numeric_limits<double>::infinity();
  double log_power_sum = 0.0;
  bool zero_power = false;
  for (Eigen::Index i = m + 1; i <= 2 * m; ++i) {
    const auto& rec = trace.records[std::size_t(i)];
    min_residual = std::min(min_residual, rec.max_residual);
    if (rec.power_value <= 0.0) {
      zero_power = true;
    } else {
      log_power_sum += std::log(rec.power_value);
    }
  }
  BlockBound out;
  out.lhs = scale * min_residual;
  const double geo_mean = zero_power ? 0.0 : std::exp(log_power_sum / double(m));
  out.rhs = scale * *e_next / std::sqrt(double(m)) * geo_mean;
  out.holds = out.lhs <= out.rhs + 1e-10;
  return out;
}

}  // namespace symk
