#pragma once

#include "symk/greedy.hpp"
#include "symk/random.hpp"

#include <vector>

namespace symk::test {

/// RKHS target built from `terms` random derivative representers on
/// [-1, 1]^dim, and a candidate pool of `pool_size` functionals that starts
/// with those representers.
struct SyntheticProblem {
  Surrogate target;
  std::vector<DerivFunctional> pool;
};

inline SyntheticProblem make_synthetic_problem(const KernelSpec& kernel, Eigen::Index dim, int terms,
                                               int pool_size, std::uint64_t seed) {
  Rng rng(seed);
  auto draw = [&]() {
    Vector c(dim);
    for (Eigen::Index i = 0; i < dim; ++i) c(i) = rng.uniform(-1.0, 1.0);
    return DerivFunctional{c, Eigen::Index(rng.below(std::uint64_t(dim)))};
  };
  std::vector<DerivFunctional> reps;
  Vector coeffs(terms);
  for (int i = 0; i < terms; ++i) {
    reps.push_back(draw());
    coeffs(i) = rng.uniform(-1.0, 1.0);
  }
  std::vector<DerivFunctional> pool = reps;
  while (int(pool.size()) < pool_size) pool.push_back(draw());
  return {Surrogate(kernel, dim, reps, coeffs), std::move(pool)};
}

}  // namespace symk::test
