#pragma once

#include "symk/kernels.hpp"
#include "symk/linalg.hpp"

#include <string>
#include <vector>

namespace symk {

/// Point evaluation of a first partial derivative: f -> d/dx_coord f(center).
struct DerivFunctional {
  Vector center;
  Eigen::Index coord = 0;
};

/// s(x) = sum_j c_j * d/dy_{coord_j} k(x, y)|_{y = center_j}.
///
/// Immutable once built. The coefficient vector is expressed in the basis of
/// derivative representers, so the gradient is a plain sum of mixed kernel
/// derivatives.
class Surrogate {
 public:
  /// The zero function on R^dim.
  Surrogate(KernelSpec kernel, Eigen::Index dim);
  Surrogate(KernelSpec kernel, Eigen::Index dim, std::vector<DerivFunctional> functionals,
            Vector coeffs);

  const KernelSpec& kernel() const noexcept { return kernel_; }
  Eigen::Index dim() const noexcept { return dim_; }
  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(functionals_.size()); }
  const std::vector<DerivFunctional>& functionals() const noexcept { return functionals_; }
  const Vector& coeffs() const noexcept { return coeffs_; }

  double eval(const Eigen::Ref<const Vector>& x) const;
  Vector grad(const Eigen::Ref<const Vector>& x) const;

 private:
  KernelSpec kernel_;
  Eigen::Index dim_;
  std::vector<DerivFunctional> functionals_;
  Vector coeffs_;
};

/// Hermite-Birkhoff training data: mixed inputs xi_j = (q0, p_dT) and
/// targets y_j = J^T (x_dT - x0) / dT, one row per sample.
struct HBDataset {
  Matrix inputs;
  Matrix targets;
  double delta_t = 0.0;
  std::string system;
  std::string scenario;

  Eigen::Index size() const noexcept { return inputs.rows(); }
  Eigen::Index dim() const noexcept { return inputs.cols(); }
};

/// Checks shape, finiteness and dT > 0.
void validate(const HBDataset& data);

/// One functional per (sample, coordinate), flattened sample-major:
/// index = j * dim + coord.
std::vector<DerivFunctional> flatten_functionals(const HBDataset& data);
Vector flatten_targets(const HBDataset& data);

/// Generalized Gram matrix G_ij = d/dx_{a_i} d/dy_{a_j} k(x_i, x_j).
Matrix gram_matrix(const KernelSpec& kernel, const std::vector<DerivFunctional>& functionals);

/// Cross Gram between two functional sets (rows from `a`, columns from `b`).
Matrix cross_gram(const KernelSpec& kernel, const std::vector<DerivFunctional>& a,
                  const std::vector<DerivFunctional>& b);

/// Minimum-norm interpolant of lambda_j(s) = targets_j. Rejects duplicate
/// (center, coord) pairs because they make the Gram matrix singular.
Surrogate fit(const KernelSpec& kernel, const std::vector<DerivFunctional>& functionals,
              const Vector& targets);

/// Norm of the part of the representer of `query` orthogonal to the span of
/// the representers of `selected`.
double power_function(const KernelSpec& kernel, const std::vector<DerivFunctional>& selected,
                      const DerivFunctional& query);

/// RKHS inner product of two surrogates built on the same kernel.
double rkhs_inner(const Surrogate& a, const Surrogate& b);

/// Throws DuplicateFunctional if any (center, coord) pair repeats.
void require_distinct(const std::vector<DerivFunctional>& functionals);

}  // namespace symk
