#pragma once

#include "symk/hamiltonians.hpp"

namespace symk {

/// Symplectic reduced basis: V^T J_2N V = J_2n, V+ = J_2n^T V^T J_2N.
struct ReducedBasis {
  Matrix v;       // 2N x 2n
  Matrix v_plus;  // 2n x 2N

  Eigen::Index full_dim() const noexcept { return v.rows() / 2; }
  Eigen::Index reduced_dim() const noexcept { return v.cols() / 2; }
};

/// Largest snapshot count accepted by csvd_basis.
inline constexpr Eigen::Index kMaxSnapshots = 64;

/// Complex-SVD basis from position/momentum snapshots (columns). The left
/// singular vectors of Y = Q + iP come from the eigendecomposition of Y^* Y,
/// U = Y W Sigma^{-1}, followed by one Gram-Schmidt pass.
ReducedBasis csvd_basis(const Matrix& q_snapshots, const Matrix& p_snapshots, Eigen::Index reduced_n);

/// Builds V+ from V and checks shapes.
ReducedBasis make_reduced_basis(Matrix v);

/// Quadratic system with matrix V^T H V (symmetrized).
HamiltonianSystem reduce_quadratic(const ReducedBasis& basis, const HamiltonianSystem& sys);

Vector restrict_state(const ReducedBasis& basis, const Eigen::Ref<const Vector>& x_full);
Vector lift_state(const ReducedBasis& basis, const Eigen::Ref<const Vector>& x_red);

}  // namespace symk
