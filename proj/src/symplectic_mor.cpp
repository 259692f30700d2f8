#include "symk/symplectic_mor.hpp"

#include "symk/error.hpp"
#include "symk/io.hpp"

#include <cmath>

namespace symk {

ReducedBasis make_reduced_basis(Matrix v) {
  require(v.rows() % 2 == 0 && v.cols() % 2 == 0 && v.cols() > 0 && v.cols() <= v.rows(),
          ErrorCode::DimensionMismatch, "reduced basis must be 2N x 2n with n <= N");
  require_finite(v, "reduced basis");
  ReducedBasis out;
  const Eigen::Index n = v.cols() / 2;
  const Eigen::Index big_n = v.rows() / 2;
  out.v_plus = poisson_matrix(n).transpose() * v.transpose() * poisson_matrix(big_n);
  out.v = std::move(v);
  return out;
}

ReducedBasis csvd_basis(const Matrix& q_snapshots, const Matrix& p_snapshots, Eigen::Index reduced_n) {
  require(q_snapshots.rows() == p_snapshots.rows() && q_snapshots.cols() == p_snapshots.cols(),
          ErrorCode::DimensionMismatch, "position and momentum snapshots differ in shape");
  const Eigen::Index big_n = q_snapshots.rows();
  const Eigen::Index m = q_snapshots.cols();
  require(m <= kMaxSnapshots, ErrorCode::TooManySnapshots,
          std::to_string(m) + " snapshots exceed the limit of " + std::to_string(kMaxSnapshots));
  require(reduced_n >= 1 && reduced_n <= std::min(m, big_n), ErrorCode::InvalidArgument,
          "reduced dimension must lie in [1, min(snapshots, N)]");
  require_finite(q_snapshots, "position snapshots");
  require_finite(p_snapshots, "momentum snapshots");

  ComplexMatrix y(big_n, m);
  y.real() = q_snapshots;
  y.imag() = p_snapshots;
  const HermEigen eig = herm_eigen_small(y.adjoint() * y);

  // Singular values from |Y w_i| stay accurate near zero, unlike sqrt(lambda_i).
  ComplexMatrix u(big_n, reduced_n);
  double sigma_max = 0.0;
  for (Eigen::Index i = 0; i < reduced_n; ++i) {
    const ComplexVector col = y * eig.vectors.col(i);
    const double sigma = col.norm();
    if (i == 0) sigma_max = sigma;
    require(sigma_max > 0.0 && sigma >= 1e-12 * sigma_max, ErrorCode::RankDeficient,
            "singular value " + std::to_string(i + 1) + " is " + format_double(sigma) +
                " against a largest value of " + format_double(sigma_max));
    u.col(i) = col / sigma;
  }
  for (Eigen::Index i = 0; i < reduced_n; ++i) {
    for (Eigen::Index k = 0; k < i; ++k) u.col(i) -= u.col(k).dot(u.col(i)) * u.col(k);
    u.col(i).normalize();
  }

  Matrix v(2 * big_n, 2 * reduced_n);
  v.topLeftCorner(big_n, reduced_n) = u.real();
  v.topRightCorner(big_n, reduced_n) = -u.imag();
  v.bottomLeftCorner(big_n, reduced_n) = u.imag();
  v.bottomRightCorner(big_n, reduced_n) = u.real();
  return make_reduced_basis(std::move(v));
}

HamiltonianSystem reduce_quadratic(const ReducedBasis& basis, const HamiltonianSystem& sys) {
  const Matrix& h = sys.quadratic_matrix();
  require(h.rows() == basis.v.rows(), ErrorCode::DimensionMismatch,
          "system dimension does not match the basis");
  const Matrix reduced = basis.v.transpose() * h * basis.v;
  return HamiltonianSystem::quadratic(0.5 * (reduced + reduced.transpose()));
}

Vector restrict_state(const ReducedBasis& basis, const Eigen::Ref<const Vector>& x_full) {
  require(x_full.size() == basis.v.rows(), ErrorCode::DimensionMismatch,
          "restrict: full state has the wrong dimension");
  return basis.v_plus * x_full;
}

Vector lift_state(const ReducedBasis& basis, const Eigen::Ref<const Vector>& x_red) {
  require(x_red.size() == basis.v.cols(), ErrorCode::DimensionMismatch,
          "lift: reduced state has the wrong dimension");
  return basis.v * x_red;
}

}  // namespace symk
