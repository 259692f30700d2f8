#include "symk/kernels.hpp"

#include "symk/error.hpp"

#include <cmath>
#include <string>

namespace symk {

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::IMQ: return "imq";
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::Matern32: return "matern32";
    case KernelFamily::Matern52: return "matern52";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name) {
  for (KernelFamily f : kAllKernelFamilies) {
    if (to_string(f) == name) return f;
  }
  fail(ErrorCode::InvalidArgument, "unknown kernel family '" + std::string(name) + "'");
}

KernelSpec::KernelSpec(KernelFamily family, double epsilon) : family_(family), epsilon_(epsilon) {
  require(std::isfinite(epsilon) && epsilon > 0.0, ErrorCode::InvalidArgument,
          "kernel shape parameter must be positive and finite");
}

RadialProfile KernelSpec::profile(double s, bool with_second) const {
  return radial_profile(family_, epsilon_, s, with_second);
}

double KernelSpec::dh_at_zero() const {
  const double e2 = epsilon_ * epsilon_;
  switch (family_) {
    case KernelFamily::Gaussian: return -e2;
    case KernelFamily::IMQ: return -0.5 * e2;
    case KernelFamily::Matern32: return -0.5 * e2;
    case KernelFamily::Matern52: return -e2 / 6.0;
  }
  return 0.0;
}

namespace {

void require_same_dim(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  require(x.size() == y.size(), ErrorCode::DimensionMismatch,
          "kernel arguments have dimensions " + std::to_string(x.size()) + " and " +
              std::to_string(y.size()));
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                   const Eigen::Ref<const Vector>& y) {
  require_same_dim(x, y);
  return spec.profile((x - y).squaredNorm(), false).h;
}

Vector kernel_grad2(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                    const Eigen::Ref<const Vector>& y) {
  require_same_dim(x, y);
  const Vector d = x - y;
  const double s = d.squaredNorm();
  return (-2.0 * spec.profile(s, false).dh) * d;
}

double kernel_mixed2(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                     const Eigen::Ref<const Vector>& y, Eigen::Index alpha, Eigen::Index beta) {
  require_same_dim(x, y);
  const Eigen::Index dim = x.size();
  require(alpha >= 0 && alpha < dim && beta >= 0 && beta < dim, ErrorCode::InvalidCoordinate,
          "coordinate index out of range for dimension " + std::to_string(dim));

  const double s = (x - y).squaredNorm();
  const double delta = (alpha == beta) ? 1.0 : 0.0;
  if (s < kCoincidentThreshold) return -2.0 * spec.dh_at_zero() * delta;

  const RadialProfile p = spec.profile(s);
  const double da = x(alpha) - y(alpha);
  const double db = x(beta) - y(beta);
  return -4.0 * p.d2h * da * db - 2.0 * p.dh * delta;
}

}  // namespace symk
