#include "symk/hb_surrogate.hpp"

#include "symk/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace symk {

namespace {

void require_functional(const DerivFunctional& f, Eigen::Index dim) {
  require(f.center.size() == dim, ErrorCode::DimensionMismatch,
          "functional center has dimension " + std::to_string(f.center.size()) + ", expected " +
              std::to_string(dim));
  require(f.coord >= 0 && f.coord < dim, ErrorCode::InvalidCoordinate,
          "functional coordinate " + std::to_string(f.coord) + " out of range");
  require(f.center.allFinite(), ErrorCode::NonFinite, "functional center is not finite");
}

bool lexicographic_less(const DerivFunctional& a, const DerivFunctional& b) {
  if (a.coord != b.coord) return a.coord < b.coord;
  return std::lexicographical_compare(a.center.data(), a.center.data() + a.center.size(),
                                      b.center.data(), b.center.data() + b.center.size());
}

bool same_functional(const DerivFunctional& a, const DerivFunctional& b) {
  return a.coord == b.coord && a.center == b.center;
}

}  // namespace

void require_distinct(const std::vector<DerivFunctional>& functionals) {
  std::vector<std::size_t> order(functionals.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return lexicographic_less(functionals[i], functionals[j]);
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (same_functional(functionals[order[k - 1]], functionals[order[k]])) {
      fail(ErrorCode::DuplicateFunctional,
           "functionals " + std::to_string(order[k - 1]) + " and " + std::to_string(order[k]) +
               " share center and coordinate");
    }
  }
}

Surrogate::Surrogate(KernelSpec kernel, Eigen::Index dim)
    : kernel_(kernel), dim_(dim), coeffs_(Vector::Zero(0)) {
  require(dim >= 1, ErrorCode::InvalidArgument, "surrogate dimension must be positive");
}

Surrogate::Surrogate(KernelSpec kernel, Eigen::Index dim, std::vector<DerivFunctional> functionals,
                     Vector coeffs)
    : kernel_(kernel), dim_(dim), functionals_(std::move(functionals)), coeffs_(std::move(coeffs)) {
  require(dim >= 1, ErrorCode::InvalidArgument, "surrogate dimension must be positive");
  require(coeffs_.size() == size(), ErrorCode::DimensionMismatch,
          "coefficient count does not match functional count");
  require(coeffs_.allFinite(), ErrorCode::NonFinite, "surrogate coefficients are not finite");
  for (const auto& f : functionals_) require_functional(f, dim_);
}

double Surrogate::eval(const Eigen::Ref<const Vector>& x) const {
  require(x.size() == dim_, ErrorCode::DimensionMismatch, "surrogate eval: wrong dimension");
  double sum = 0.0;
  for (std::size_t j = 0; j < functionals_.size(); ++j) {
    const auto& f = functionals_[j];
    const double s = (x - f.center).squaredNorm();
    const double dh = kernel_.profile(s, false).dh;
    // d/dy_c k(x, y) at y = center equals -2 h'(s) (x_c - center_c).
    sum += coeffs_(Eigen::Index(j)) * (-2.0 * dh * (x(f.coord) - f.center(f.coord)));
  }
  return sum;
}

Vector Surrogate::grad(const Eigen::Ref<const Vector>& x) const {
  require(x.size() == dim_, ErrorCode::DimensionMismatch, "surrogate grad: wrong dimension");
  // Extended precision: the sum cancels heavily when coefficients are large,
  // and the predictor solves against this gradient to near machine precision.
  using Wide = long double;
  using WideVector = Eigen::Matrix<Wide, Eigen::Dynamic, 1>;
  WideVector g = WideVector::Zero(dim_);
  WideVector d(dim_);
  const Wide dh0 = kernel_.dh_at_zero();
  const Wide eps = kernel_.epsilon();
  for (std::size_t j = 0; j < functionals_.size(); ++j) {
    const auto& f = functionals_[j];
    const Wide c = coeffs_(Eigen::Index(j));
    d = x.cast<Wide>() - f.center.cast<Wide>();
    const Wide s = d.squaredNorm();
    if (s < Wide(kCoincidentThreshold)) {
      g(f.coord) += c * (-2 * dh0);
      continue;
    }
    const auto p = radial_profile(kernel_.family(), eps, s);
    g.noalias() += (c * (-4 * p.d2h * d(f.coord))) * d;
    g(f.coord) += c * (-2 * p.dh);
  }
  return g.cast<double>();
}

void validate(const HBDataset& data) {
  require(data.inputs.rows() == data.targets.rows() && data.inputs.cols() == data.targets.cols(),
          ErrorCode::DimensionMismatch, "dataset inputs and targets differ in shape");
  require(data.delta_t > 0.0 && std::isfinite(data.delta_t), ErrorCode::InvalidArgument,
          "dataset macro step must be positive");
  require_finite(data.inputs, "dataset inputs");
  require_finite(data.targets, "dataset targets");
}

std::vector<DerivFunctional> flatten_functionals(const HBDataset& data) {
  std::vector<DerivFunctional> out;
  out.reserve(std::size_t(data.size() * data.dim()));
  for (Eigen::Index j = 0; j < data.size(); ++j) {
    const Vector center = data.inputs.row(j).transpose();
    for (Eigen::Index a = 0; a < data.dim(); ++a) out.push_back({center, a});
  }
  return out;
}

Vector flatten_targets(const HBDataset& data) {
  Vector y(data.size() * data.dim());
  for (Eigen::Index j = 0; j < data.size(); ++j) {
    y.segment(j * data.dim(), data.dim()) = data.targets.row(j).transpose();
  }
  return y;
}

Matrix cross_gram(const KernelSpec& kernel, const std::vector<DerivFunctional>& a,
                  const std::vector<DerivFunctional>& b) {
  Matrix g(Eigen::Index(a.size()), Eigen::Index(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      g(Eigen::Index(i), Eigen::Index(j)) =
          kernel_mixed2(kernel, a[i].center, b[j].center, a[i].coord, b[j].coord);
    }
  }
  return g;
}

Matrix gram_matrix(const KernelSpec& kernel, const std::vector<DerivFunctional>& functionals) {
  require(!functionals.empty(), ErrorCode::InvalidArgument, "gram_matrix: no functionals");
  const Eigen::Index dim = functionals.front().center.size();
  for (const auto& f : functionals) require_functional(f, dim);

  const auto m = Eigen::Index(functionals.size());
  Matrix g(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& fi = functionals[std::size_t(i)];
    for (Eigen::Index j = 0; j <= i; ++j) {
      const auto& fj = functionals[std::size_t(j)];
      g(i, j) = kernel_mixed2(kernel, fi.center, fj.center, fi.coord, fj.coord);
      g(j, i) = g(i, j);
    }
  }
  return g;
}

Surrogate fit(const KernelSpec& kernel, const std::vector<DerivFunctional>& functionals,
              const Vector& targets) {
  require(Eigen::Index(functionals.size()) == targets.size(), ErrorCode::DimensionMismatch,
          "fit: target count does not match functional count");
  require(!functionals.empty(), ErrorCode::InvalidArgument, "fit: no functionals");
  require_distinct(functionals);
  const Matrix g = gram_matrix(kernel, functionals);
  Vector c = cholesky_solve(g, targets);
  const Eigen::Index dim = functionals.front().center.size();
  return Surrogate(kernel, dim, functionals, std::move(c));
}

double power_function(const KernelSpec& kernel, const std::vector<DerivFunctional>& selected,
                      const DerivFunctional& query) {
  const double diag = kernel_mixed2(kernel, query.center, query.center, query.coord, query.coord);
  if (selected.empty()) return std::sqrt(std::max(0.0, diag));
  require_distinct(selected);

  const Matrix g = gram_matrix(kernel, selected);
  Vector v(Eigen::Index(selected.size()));
  for (std::size_t i = 0; i < selected.size(); ++i) {
    v(Eigen::Index(i)) =
        kernel_mixed2(kernel, query.center, selected[i].center, query.coord, selected[i].coord);
  }
  const auto chol = cholesky_factor(g);
  // v^T G^{-1} v = |L^{-1} v|^2, which avoids forming G^{-1} v.
  const Vector w = chol.llt.matrixL().solve(v);
  return std::sqrt(std::max(0.0, diag - w.squaredNorm()));
}

double rkhs_inner(const Surrogate& a, const Surrogate& b) {
  require(a.dim() == b.dim(), ErrorCode::DimensionMismatch, "rkhs_inner: dimension mismatch");
  require(a.kernel() == b.kernel(), ErrorCode::InvalidArgument, "rkhs_inner: kernel mismatch");
  if (a.size() == 0 || b.size() == 0) return 0.0;
  const Matrix g = cross_gram(a.kernel(), a.functionals(), b.functionals());
  return a.coeffs().dot(g * b.coeffs());
}

}  // namespace symk
