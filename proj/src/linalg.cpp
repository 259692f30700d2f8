#include "symk/linalg.hpp"

#include "symk/error.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <string>

namespace symk {

namespace {

constexpr double kSymmetryTolerance = 1e-12;
constexpr Eigen::Index kMaxHermitianSize = 64;

void require_square(Eigen::Index rows, Eigen::Index cols, const char* what) {
  require(rows == cols, ErrorCode::DimensionMismatch,
          std::string(what) + ": expected a square matrix, got " + std::to_string(rows) + "x" +
              std::to_string(cols));
}

template <typename M>
void require_hermitian(const M& a, const char* what) {
  require_square(a.rows(), a.cols(), what);
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double skew = (a - a.adjoint()).cwiseAbs().maxCoeff();
  require(skew <= kSymmetryTolerance * scale, ErrorCode::InvalidArgument,
          std::string(what) + ": matrix is not symmetric/Hermitian");
}

// Pade(6,6) numerator coefficients; the denominator uses the same values with
// alternating sign.
std::array<double, 7> pade6_coefficients() {
  std::array<double, 7> c{};
  c[0] = 1.0;
  constexpr int q = 6;
  for (int k = 1; k <= q; ++k) {
    c[k] = c[k - 1] * double(q - k + 1) / double(k * (2 * q - k + 1));
  }
  return c;
}

}  // namespace

void require_finite(const Eigen::Ref<const Matrix>& a, const char* what) {
  require(a.allFinite(), ErrorCode::NonFinite, std::string(what) + ": non-finite entry");
}

void require_finite(const Eigen::Ref<const ComplexMatrix>& a, const char* what) {
  require(a.real().allFinite() && a.imag().allFinite(), ErrorCode::NonFinite,
          std::string(what) + ": non-finite entry");
}

Matrix poisson_matrix(Eigen::Index n) {
  Matrix j = Matrix::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n).setIdentity();
  j.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);
  return j;
}

JitteredCholesky cholesky_factor(const Matrix& a) {
  require_finite(a, "cholesky_factor");
  require_hermitian(a, "cholesky_factor");

  JitteredCholesky out;
  out.llt.compute(a);
  if (out.llt.info() == Eigen::Success) return out;

  const double mean_diag = a.diagonal().mean();
  require(mean_diag > 0.0, ErrorCode::NotPositiveDefinite, "non-positive mean diagonal");
  for (double rel = 1e-14; rel <= 1e-8 * (1.0 + 1e-9); rel *= 10.0) {
    const double tau = rel * mean_diag;
    Matrix shifted = a;
    shifted.diagonal().array() += tau;
    out.llt.compute(shifted);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = tau;
      return out;
    }
  }
  fail(ErrorCode::NotPositiveDefinite, "Cholesky failed after jitter up to 1e-8*mean(diag)");
}

Vector cholesky_solve(const Matrix& a, const Vector& b) {
  require(a.rows() == b.size(), ErrorCode::DimensionMismatch,
          "cholesky_solve: rhs length " + std::to_string(b.size()) + " vs matrix " +
              std::to_string(a.rows()));
  require_finite(b, "cholesky_solve rhs");
  return cholesky_factor(a).solve(b);
}

SymEigen sym_eigen(const Matrix& a) {
  require_finite(a, "sym_eigen");
  require_hermitian(a, "sym_eigen");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  require(solver.info() == Eigen::Success, ErrorCode::NoConvergence, "sym_eigen did not converge");
  // Eigen returns ascending order.
  SymEigen out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

HermEigen herm_eigen_small(const ComplexMatrix& a) {
  require(a.rows() <= kMaxHermitianSize, ErrorCode::InvalidArgument,
          "herm_eigen_small: size exceeds 64");
  require_finite(a, "herm_eigen_small");
  require_hermitian(a, "herm_eigen_small");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(a);
  require(solver.info() == Eigen::Success, ErrorCode::NoConvergence,
          "herm_eigen_small did not converge");
  HermEigen out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

Matrix expm(const Matrix& a) {
  require_square(a.rows(), a.cols(), "expm");
  require_finite(a, "expm");
  const Eigen::Index n = a.rows();
  if (n == 0) return a;

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));

  const Matrix scaled = a / std::ldexp(1.0, squarings);
  const auto c = pade6_coefficients();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = scaled * scaled;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix even = c[0] * id + c[2] * a2 + c[4] * a4 + c[6] * a6;
  const Matrix odd = scaled * (c[1] * id + c[3] * a2 + c[5] * a4);

  Matrix result = (even - odd).partialPivLu().solve(even + odd);
  for (int i = 0; i < squarings; ++i) {
    result = result * result;
    require(result.allFinite(), ErrorCode::Overflow, "expm: result overflowed");
  }
  require(result.allFinite(), ErrorCode::Overflow, "expm: result overflowed");
  return result;
}

double spectral_norm(const Matrix& a) {
  require_finite(a, "spectral_norm");
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double inf_norm(const Eigen::Ref<const Matrix>& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

double symplectic_defect(const Matrix& a) {
  require(a.rows() == a.cols() && a.rows() % 2 == 0, ErrorCode::DimensionMismatch,
          "symplectic_defect needs an even square matrix");
  const Matrix j = poisson_matrix(a.rows() / 2);
  return inf_norm(a.transpose() * j * a - j);
}

}  // namespace symk
