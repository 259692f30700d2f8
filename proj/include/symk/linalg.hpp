#pragma once

#include <Eigen/Dense>

#include <complex>

namespace symk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Throws NonFinite if any entry is NaN or Inf.
void require_finite(const Eigen::Ref<const Matrix>& a, const char* what);
void require_finite(const Eigen::Ref<const ComplexMatrix>& a, const char* what);

/// Canonical Poisson matrix J_{2n} = [[0, I], [-I, 0]].
Matrix poisson_matrix(Eigen::Index n);

/// Cholesky factor of a symmetric matrix, with the diagonal shift that was
/// needed to make it succeed (0 when the plain factorization worked).
struct JitteredCholesky {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;

  Vector solve(const Vector& b) const { return llt.solve(b); }
  Matrix lower() const { return llt.matrixL(); }
};

/// Factorizes A, retrying with A + tau*I for tau = 1e-14*mean(diag(A)),
/// growing by 10x up to 1e-8*mean(diag(A)). Throws NotPositiveDefinite when
/// the ladder is exhausted.
JitteredCholesky cholesky_factor(const Matrix& a);

Vector cholesky_solve(const Matrix& a, const Vector& b);

struct SymEigen {
  Vector values;   // descending
  Matrix vectors;  // column i pairs with values(i)
};

SymEigen sym_eigen(const Matrix& a);

struct HermEigen {
  Vector values;          // descending, real
  ComplexMatrix vectors;  // unitary
};

/// Hermitian eigendecomposition for the small Gram matrices of the complex
/// SVD (at most 64x64).
HermEigen herm_eigen_small(const ComplexMatrix& a);

/// Matrix exponential by scaling and squaring around a diagonal Pade(6,6)
/// approximant; the scaling count comes from the 1-norm.
Matrix expm(const Matrix& a);

/// Largest singular value.
double spectral_norm(const Matrix& a);

/// Induced infinity norm (largest absolute row sum).
double inf_norm(const Eigen::Ref<const Matrix>& a);

/// |A^T J A - J| in the induced infinity norm, for square A of even size.
double symplectic_defect(const Matrix& a);

}  // namespace symk
