#pragma once

#include "symk/linalg.hpp"

#include <array>
#include <cmath>
#include <string>
#include <string_view>

namespace symk {

/// Radial kernel families, listed in model-selection tie-break order.
enum class KernelFamily { IMQ, Gaussian, Matern32, Matern52 };

inline constexpr std::array<KernelFamily, 4> kAllKernelFamilies = {
    KernelFamily::IMQ, KernelFamily::Gaussian, KernelFamily::Matern32, KernelFamily::Matern52};

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

/// Values of the even profile h(s), s = r^2, and its first two s-derivatives.
/// k(x, y) = h(|x - y|^2).
template <class T>
struct BasicRadialProfile {
  T h = 0;
  T dh = 0;
  T d2h = 0;
};

using RadialProfile = BasicRadialProfile<double>;

/// Profile in any floating type. d2h is left 0 when `with_second` is false.
template <class T>
BasicRadialProfile<T> radial_profile(KernelFamily family, T epsilon, T s, bool with_second = true) {
  using std::exp;
  using std::sqrt;
  const T e2 = epsilon * epsilon;
  BasicRadialProfile<T> p;
  switch (family) {
    case KernelFamily::Gaussian: {
      p.h = exp(-e2 * s);
      p.dh = -e2 * p.h;
      if (with_second) p.d2h = e2 * e2 * p.h;
      break;
    }
    case KernelFamily::IMQ: {
      const T base = 1 + e2 * s;
      const T inv_sqrt = 1 / sqrt(base);
      p.h = inv_sqrt;
      p.dh = T(-0.5) * e2 * inv_sqrt / base;
      if (with_second) p.d2h = T(0.75) * e2 * e2 * inv_sqrt / (base * base);
      break;
    }
    case KernelFamily::Matern32: {
      const T r = sqrt(s);
      const T rho = epsilon * r;
      const T decay = exp(-rho);
      p.h = (1 + rho) * decay;
      p.dh = T(-0.5) * e2 * decay;
      // Diverges like 1/r; callers never evaluate it at coincident points.
      if (with_second) p.d2h = (r > 0) ? e2 * epsilon * decay / (4 * r) : T(0);
      break;
    }
    case KernelFamily::Matern52: {
      const T rho = epsilon * sqrt(s);
      const T decay = exp(-rho);
      p.h = (1 + rho + rho * rho / 3) * decay;
      p.dh = -e2 * (1 + rho) * decay / 6;
      if (with_second) p.d2h = e2 * e2 * decay / 12;
      break;
    }
  }
  return p;
}

class KernelSpec {
 public:
  KernelSpec(KernelFamily family, double epsilon);

  KernelFamily family() const noexcept { return family_; }
  double epsilon() const noexcept { return epsilon_; }

  /// h, h', h'' at squared distance s. h'' is not evaluated (left 0) when
  /// `with_second` is false; callers at coincident points never need it.
  RadialProfile profile(double s, bool with_second = true) const;

  /// Coincident-point value of h'(0), finite for every family.
  double dh_at_zero() const;

  bool operator==(const KernelSpec&) const = default;

 private:
  KernelFamily family_;
  double epsilon_;
};

/// Squared distances below this use the analytic coincident-point limit in
/// kernel_mixed2.
inline constexpr double kCoincidentThreshold = 1e-14;

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                   const Eigen::Ref<const Vector>& y);

/// Gradient of k(x, y) with respect to its second argument.
Vector kernel_grad2(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                    const Eigen::Ref<const Vector>& y);

/// d/dx_alpha d/dy_beta k(x, y) = -4 h''(s) d_alpha d_beta - 2 h'(s) delta_{alpha beta},
/// d = x - y. Coordinates are 0-based.
double kernel_mixed2(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                     const Eigen::Ref<const Vector>& y, Eigen::Index alpha, Eigen::Index beta);

}  // namespace symk
