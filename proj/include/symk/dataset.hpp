#pragma once

#include "symk/hamiltonians.hpp"
#include "symk/hb_surrogate.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace symk {

/// Tensor-product grid with inclusive end points.
struct GridSampler {
  std::vector<Eigen::Index> counts;
  Vector lower;
  Vector upper;
};

struct UniformBoxSampler {
  Vector lower;
  Vector upper;
  Eigen::Index target_count = 1;
  std::uint64_t seed = 0;
};

/// Uniform draws from [-z_max, z_max]^dim of a (reduced) system.
struct ReducedBoxSampler {
  double z_max = 1.0;
  Eigen::Index target_count = 1;
  std::uint64_t seed = 0;
};

/// Wave states (q, p) = (Phi_a, Phi_b) for a, b in 1..modes, a major.
struct SineModesSampler {
  Eigen::Index modes = 2;
};

struct EnergyCap {
  double value = 0.0;
  bool strict = false;  // strict: H < value; otherwise H <= value
};

/// Keeps states with sign * x(coordinate) >= 0; coordinate indexes the
/// stacked (q, p) vector from 0.
struct HalfSpace {
  Eigen::Index coordinate = 0;
  int sign = 1;
};

struct SamplerSpec {
  std::variant<GridSampler, UniformBoxSampler, ReducedBoxSampler, SineModesSampler> mode;
  std::optional<EnergyCap> energy_cap;
  std::optional<HalfSpace> halfspace;
};

/// Deterministic in (spec, seed). Box modes draw until target_count states
/// pass both filters; FilterTooTight when fewer than 0.1% of 1e7 draws pass.
std::vector<Vector> sample_states(const HamiltonianSystem& sys, const SamplerSpec& spec);

/// Discrete sine vector (sin(k pi xi_i / L))_i on the Dirichlet grid.
Vector sine_mode(Eigen::Index nodes, double length, Eigen::Index k);

/// Propagates each state by dT with implicit-midpoint micro steps and stores
/// xi = (q0, p_dT), y = J^T (x_dT - x0) / dT.
HBDataset build_hb_dataset(const HamiltonianSystem& sys, const std::vector<Vector>& states,
                           double delta_t, double micro_dt);

/// Seeded shuffle, then the first round(fraction * size) samples train.
std::pair<HBDataset, HBDataset> split_train_validation(const HBDataset& data, double fraction,
                                                       std::uint64_t seed);

HBDataset subset(const HBDataset& data, const std::vector<Eigen::Index>& rows);

/// Scatter data showing how outputs depend on the mixed input, for a
/// one-degree-of-freedom dataset.
/// Table A (columns input, output, family): family 0 rows are
/// (p_dT, (q_dT - q0)/dT), family 1 rows are (q0, -(p_dT - p0)/dT).
/// Table B (columns xi_1, xi_2, y_1, y_2) keys outputs by the full mixed input.
struct SeparabilityTables {
  Matrix table_a;
  Matrix table_b;
};

SeparabilityTables separability_diagnostic(const HBDataset& data);

/// Largest spread (max - min, over every output column) among rows that share
/// a bin of the given width in all `key_cols` columns. Table A is scanned per
/// family by passing the family column as an extra key.
double max_bin_spread(const Matrix& table, const std::vector<Eigen::Index>& key_cols,
                      const std::vector<Eigen::Index>& value_cols, double width);

void write_separability_csv(const SeparabilityTables& tables, std::ostream& table_a,
                            std::ostream& table_b);

/// Columns xi_1..xi_2n, y_1..y_2n.
void write_dataset_csv(const HBDataset& data, std::ostream& out);
HBDataset read_dataset_csv(const std::string& path, double delta_t);

}  // namespace symk
