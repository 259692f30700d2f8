#include "symk/dataset.hpp"

#include "symk/error.hpp"
#include "symk/integrators.hpp"
#include "symk/io.hpp"
#include "symk/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

namespace symk {

namespace {

constexpr long long kDrawCheck = 10'000'000;

bool passes(const HamiltonianSystem& sys, const SamplerSpec& spec, const Vector& x) {
  if (spec.energy_cap) {
    const double h = sys.energy(x);
    if (spec.energy_cap->strict ? !(h < spec.energy_cap->value) : !(h <= spec.energy_cap->value)) {
      return false;
    }
  }
  if (spec.halfspace && double(spec.halfspace->sign) * x(spec.halfspace->coordinate) < 0.0) {
    return false;
  }
  return true;
}

void require_box(const Vector& lower, const Vector& upper, Eigen::Index dim) {
  require(lower.size() == dim && upper.size() == dim, ErrorCode::DimensionMismatch,
          "sampler bounds must have the phase-space dimension " + std::to_string(dim));
  require((upper.array() >= lower.array()).all() && lower.allFinite() && upper.allFinite(),
          ErrorCode::InvalidArgument, "sampler bounds must be finite and ordered");
}

std::vector<Vector> draw_box(const HamiltonianSystem& sys, const SamplerSpec& spec, const Vector& lower,
                             const Vector& upper, Eigen::Index target, std::uint64_t seed) {
  require(target >= 1, ErrorCode::InvalidArgument, "target_count must be at least 1");
  Rng rng(seed);
  std::vector<Vector> out;
  out.reserve(std::size_t(target));
  long long draws = 0;
  Vector x(lower.size());
  while (Eigen::Index(out.size()) < target) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(lower(i), upper(i));
    ++draws;
    if (passes(sys, spec, x)) out.push_back(x);
    if (draws >= kDrawCheck && double(out.size()) < 1e-3 * double(draws)) {
      fail(ErrorCode::FilterTooTight, "accepted " + std::to_string(out.size()) + " of " +
                                          std::to_string(draws) + " draws");
    }
  }
  return out;
}

}  // namespace

Vector sine_mode(Eigen::Index nodes, double length, Eigen::Index k) {
  require(nodes >= 1 && length > 0.0 && k >= 1, ErrorCode::InvalidArgument, "invalid sine mode");
  const double h = length / double(nodes + 1);
  Vector phi(nodes);
  for (Eigen::Index i = 0; i < nodes; ++i) {
    phi(i) = std::sin(double(k) * std::numbers::pi * double(i + 1) * h / length);
  }
  return phi;
}

std::vector<Vector> sample_states(const HamiltonianSystem& sys, const SamplerSpec& spec) {
  const Eigen::Index dim = sys.dim();
  if (spec.energy_cap) {
    require(std::isfinite(spec.energy_cap->value), ErrorCode::InvalidArgument, "energy cap must be finite");
  }
  if (spec.halfspace) {
    require(spec.halfspace->coordinate >= 0 && spec.halfspace->coordinate < dim,
            ErrorCode::InvalidCoordinate, "half-space coordinate out of range");
    require(spec.halfspace->sign == 1 || spec.halfspace->sign == -1, ErrorCode::InvalidArgument,
            "half-space sign must be +1 or -1");
  }

  if (const auto* grid = std::get_if<GridSampler>(&spec.mode)) {
    require(Eigen::Index(grid->counts.size()) == dim, ErrorCode::DimensionMismatch,
            "grid needs one count per phase-space axis");
    require_box(grid->lower, grid->upper, dim);
    for (auto c : grid->counts) require(c >= 1, ErrorCode::InvalidArgument, "grid counts must be >= 1");
    std::vector<Vector> axes;
    for (Eigen::Index a = 0; a < dim; ++a) {
      const Eigen::Index c = grid->counts[std::size_t(a)];
      Vector axis(c);
      for (Eigen::Index i = 0; i < c; ++i) {
        axis(i) = c == 1 ? 0.5 * (grid->lower(a) + grid->upper(a))
                         : grid->lower(a) + (grid->upper(a) - grid->lower(a)) * double(i) / double(c - 1);
      }
      axes.push_back(std::move(axis));
    }
    // Odometer over the axes, last axis fastest.
    std::vector<Eigen::Index> idx(std::size_t(dim), 0);
    std::vector<Vector> out;
    Vector x(dim);
    while (true) {
      for (Eigen::Index a = 0; a < dim; ++a) x(a) = axes[std::size_t(a)](idx[std::size_t(a)]);
      if (passes(sys, spec, x)) out.push_back(x);
      Eigen::Index a = dim - 1;
      while (a >= 0 && ++idx[std::size_t(a)] == grid->counts[std::size_t(a)]) {
        idx[std::size_t(a)] = 0;
        --a;
      }
      if (a < 0) break;
    }
    return out;
  }
  if (const auto* box = std::get_if<UniformBoxSampler>(&spec.mode)) {
    require_box(box->lower, box->upper, dim);
    return draw_box(sys, spec, box->lower, box->upper, box->target_count, box->seed);
  }
  if (const auto* red = std::get_if<ReducedBoxSampler>(&spec.mode)) {
    require(red->z_max > 0.0 && std::isfinite(red->z_max), ErrorCode::InvalidArgument,
            "z_max must be positive");
    return draw_box(sys, spec, Vector::Constant(dim, -red->z_max), Vector::Constant(dim, red->z_max),
                    red->target_count, red->seed);
  }
  const auto& sine = std::get<SineModesSampler>(spec.mode);
  const auto* wave = std::get_if<WaveParams>(&sys.params());
  require(wave != nullptr, ErrorCode::InvalidArgument, "sine-mode sampling needs the wave system");
  require(sine.modes >= 1, ErrorCode::InvalidArgument, "sine-mode count must be >= 1");
  std::vector<Vector> out;
  const Eigen::Index n = sys.dof();
  for (Eigen::Index a = 1; a <= sine.modes; ++a) {
    for (Eigen::Index b = 1; b <= sine.modes; ++b) {
      Vector x(2 * n);
      x << sine_mode(n, wave->length, a), sine_mode(n, wave->length, b);
      if (passes(sys, spec, x)) out.push_back(std::move(x));
    }
  }
  return out;
}

HBDataset build_hb_dataset(const HamiltonianSystem& sys, const std::vector<Vector>& states,
                           double delta_t, double micro_dt) {
  const long k = exact_step_ratio(delta_t, micro_dt);
  require(!states.empty(), ErrorCode::EmptyDataset, "no states to build a dataset from");
  const Eigen::Index n = sys.dof();
  HBDataset data;
  data.delta_t = delta_t;
  data.system = sys.name();
  data.inputs.resize(Eigen::Index(states.size()), 2 * n);
  data.targets.resize(Eigen::Index(states.size()), 2 * n);
  for (std::size_t j = 0; j < states.size(); ++j) {
    const Vector& x0 = states[j];
    require(x0.size() == 2 * n, ErrorCode::DimensionMismatch,
            "sample " + std::to_string(j) + " has the wrong dimension");
    Vector x1;
    try {
      x1 = midpoint_flow(sys, x0, micro_dt, k);
    } catch (const Error& e) {
      fail(e.code(), "sample " + std::to_string(j) + ": " + e.what());
    }
    const auto row = Eigen::Index(j);
    data.inputs.row(row).head(n) = x0.head(n).transpose();
    data.inputs.row(row).tail(n) = x1.tail(n).transpose();
    // J^T (a, b) = (-b, a)
    data.targets.row(row).head(n) = (-(x1.tail(n) - x0.tail(n)) / delta_t).transpose();
    data.targets.row(row).tail(n) = ((x1.head(n) - x0.head(n)) / delta_t).transpose();
  }
  return data;
}

HBDataset subset(const HBDataset& data, const std::vector<Eigen::Index>& rows) {
  HBDataset out;
  out.delta_t = data.delta_t;
  out.system = data.system;
  out.scenario = data.scenario;
  out.inputs.resize(Eigen::Index(rows.size()), data.dim());
  out.targets.resize(Eigen::Index(rows.size()), data.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < data.size(), ErrorCode::InvalidArgument, "subset row out of range");
    out.inputs.row(Eigen::Index(i)) = data.inputs.row(rows[i]);
    out.targets.row(Eigen::Index(i)) = data.targets.row(rows[i]);
  }
  return out;
}

std::pair<HBDataset, HBDataset> split_train_validation(const HBDataset& data, double fraction,
                                                       std::uint64_t seed) {
  require(fraction > 0.0 && fraction < 1.0, ErrorCode::InvalidArgument,
          "training fraction must lie strictly between 0 and 1");
  require(data.size() >= 2, ErrorCode::TooFewSamples, "need at least 2 samples to split");
  std::vector<Eigen::Index> order(std::size_t(data.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(order);
  auto n_train = Eigen::Index(std::llround(fraction * double(data.size())));
  n_train = std::clamp<Eigen::Index>(n_train, 1, data.size() - 1);
  const std::vector<Eigen::Index> train(order.begin(), order.begin() + n_train);
  const std::vector<Eigen::Index> val(order.begin() + n_train, order.end());
  return {subset(data, train), subset(data, val)};
}

SeparabilityTables separability_diagnostic(const HBDataset& data) {
  require(data.dim() == 2, ErrorCode::NotOneDOF,
          "separability diagnostic needs a one-degree-of-freedom dataset, got dimension " +
              std::to_string(data.dim()));
  const Eigen::Index m = data.size();
  SeparabilityTables out;
  out.table_a.resize(2 * m, 3);
  out.table_b.resize(m, 4);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double q0 = data.inputs(j, 0), p_dt = data.inputs(j, 1);
    // y = (-(p_dT - p0)/dT, (q_dT - q0)/dT)
    out.table_a.row(j) << p_dt, data.targets(j, 1), 0.0;
    out.table_a.row(m + j) << q0, data.targets(j, 0), 1.0;
    out.table_b.row(j) << q0, p_dt, data.targets(j, 0), data.targets(j, 1);
  }
  return out;
}

double max_bin_spread(const Matrix& table, const std::vector<Eigen::Index>& key_cols,
                      const std::vector<Eigen::Index>& value_cols, double width) {
  require(width > 0.0, ErrorCode::InvalidArgument, "bin width must be positive");
  struct Range {
    Vector lo, hi;
  };
  std::map<std::vector<long long>, Range> bins;
  const auto nv = Eigen::Index(value_cols.size());
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    std::vector<long long> key;
    for (auto c : key_cols) key.push_back((long long)std::floor(table(r, c) / width));
    Vector v(nv);
    for (Eigen::Index i = 0; i < nv; ++i) v(i) = table(r, value_cols[std::size_t(i)]);
    auto [it, inserted] = bins.try_emplace(key, Range{v, v});
    if (!inserted) {
      it->second.lo = it->second.lo.cwiseMin(v);
      it->second.hi = it->second.hi.cwiseMax(v);
    }
  }
  double spread = 0.0;
  for (const auto& [key, range] : bins) {
    if (nv > 0) spread = std::max(spread, (range.hi - range.lo).maxCoeff());
  }
  return spread;
}

void write_separability_csv(const SeparabilityTables& tables, std::ostream& table_a,
                            std::ostream& table_b) {
  table_a << "input,output,family\n";
  for (Eigen::Index r = 0; r < tables.table_a.rows(); ++r) {
    table_a << csv_line({format_double(tables.table_a(r, 0)), format_double(tables.table_a(r, 1)),
                         tables.table_a(r, 2) == 0.0 ? "p" : "q"});
  }
  table_b << "xi_1,xi_2,y_1,y_2\n";
  for (Eigen::Index r = 0; r < tables.table_b.rows(); ++r) {
    std::vector<std::string> cells;
    for (Eigen::Index c = 0; c < 4; ++c) cells.push_back(format_double(tables.table_b(r, c)));
    table_b << csv_line(cells);
  }
}

void write_dataset_csv(const HBDataset& data, std::ostream& out) {
  std::vector<std::string> header;
  for (Eigen::Index i = 1; i <= data.dim(); ++i) header.push_back("xi_" + std::to_string(i));
  for (Eigen::Index i = 1; i <= data.dim(); ++i) header.push_back("y_" + std::to_string(i));
  out << csv_line(header);
  for (Eigen::Index r = 0; r < data.size(); ++r) {
    std::vector<std::string> cells;
    for (Eigen::Index c = 0; c < data.dim(); ++c) cells.push_back(format_double(data.inputs(r, c)));
    for (Eigen::Index c = 0; c < data.dim(); ++c) cells.push_back(format_double(data.targets(r, c)));
    out << csv_line(cells);
  }
}

HBDataset read_dataset_csv(const std::string& path, double delta_t) {
  const CsvTable table = read_csv(path);
  const auto cols = Eigen::Index(table.header.size());
  require(cols >= 2 && cols % 2 == 0, ErrorCode::IoError, path + ": expected xi_*/y_* column pairs");
  const Eigen::Index d = cols / 2;
  for (Eigen::Index i = 0; i < d; ++i) {
    require(table.header[std::size_t(i)] == "xi_" + std::to_string(i + 1) &&
                table.header[std::size_t(d + i)] == "y_" + std::to_string(i + 1),
            ErrorCode::IoError, path + ": unexpected header");
  }
  require(!table.rows.empty(), ErrorCode::EmptyDataset, path + " has no samples");
  HBDataset data;
  data.delta_t = delta_t;
  data.inputs.resize(Eigen::Index(table.rows.size()), d);
  data.targets.resize(Eigen::Index(table.rows.size()), d);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      data.inputs(Eigen::Index(r), c) = table.rows[r][std::size_t(c)];
      data.targets(Eigen::Index(r), c) = table.rows[r][std::size_t(d + c)];
    }
  }
  validate(data);
  return data;
}

}  // namespace symk
