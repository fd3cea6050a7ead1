#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wspd/geometry.hpp"
#include "wspd/grid.hpp"
#include "wspd/mode_solver.hpp"

namespace wspd {

enum class SweepParameter { gaas_thickness, ridge_width, etch_depth, wire_count, array_offset, wavelength };

std::string_view to_string(SweepParameter p) noexcept;
/// Throws ConfigError on an unknown name.
SweepParameter parse_sweep_parameter(std::string_view name);

/// start, start + step, ... up to stop (inclusive within 1e-9 step). SI units;
/// wire count is a plain number.
struct ParameterRange {
  SweepParameter parameter = SweepParameter::gaas_thickness;
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;

  std::vector<double> values() const;
};

struct SweepSpec {
  std::vector<ParameterRange> ranges;
  ModeSelector selector = ModeSelector::fundamental_te;
  double min_margin_m = 0.5e-6;
  std::size_t max_points = 10000;
  unsigned workers = 0;  ///< 0: hardware concurrency

  /// Throws ConfigError for empty or malformed ranges, or a negative margin.
  void validate() const;
  std::size_t point_count() const;
};

/// Outcome of one evaluation. `ok == false` carries the failure in `status`.
struct Evaluation {
  bool ok = false;
  std::complex<double> n_eff;
  double alpha_per_cm = 0.0;
  double te_fraction = 0.0;
  double margin_m = 0.0;
  std::string status;
};

using Objective = std::function<Evaluation(const std::vector<double>&)>;

struct SweepRow {
  std::vector<double> values;
  Evaluation eval;
  bool feasible = false;
};

struct SweepResult {
  std::vector<SweepParameter> parameters;
  std::vector<SweepRow> rows;     ///< Cartesian order, last parameter fastest
  std::optional<std::size_t> best;  ///< index of the best feasible row

  /// CSV with one row per point; parameter columns carry their unit suffix.
  void write_csv(std::ostream& out) const;
};

/// Copy of `base` with the named parameters set.
CrossSection apply_parameters(const CrossSection& base, const std::vector<SweepParameter>& params,
                              const std::vector<double>& values);

/// Rasterize, solve and pick the selected mode at each parameter point.
Objective mode_objective(const CrossSection& base, std::vector<SweepParameter> params,
                         ModeSelector selector, ResolutionPolicy policy, SolverConfig config = {});

/// Evaluate every grid point with a worker pool; rows are returned in grid order.
SweepResult run_sweep(const SweepSpec& spec, const Objective& objective);
SweepResult run_sweep(const CrossSection& base, const SweepSpec& spec, const ResolutionPolicy& policy,
                      const SolverConfig& config = {});

struct TraceEntry {
  std::string phase;  ///< "coarse" or "refine"
  double step = 0.0;  ///< refinement half-width (coarse step for the grid pass)
  SweepRow row;
};

struct OptimizationResult {
  bool feasible = false;
  std::vector<SweepParameter> parameters;
  std::vector<double> best_values;
  Evaluation best;
  std::vector<TraceEntry> trace;
  std::string message;
};

/// Coarse grid over the spec, then compass refinement around the best
/// feasible point, halving the step until it drops below `tolerance`
/// (integer parameters stop at a step of 1). Never leaves the ranges.
OptimizationResult maximize_alpha(const SweepSpec& spec, const Objective& objective,
                                  double tolerance = 5e-9);
OptimizationResult maximize_alpha(const CrossSection& base, const SweepSpec& spec,
                                  const ResolutionPolicy& policy, const SolverConfig& config = {},
                                  double tolerance = 5e-9);

}  // namespace wspd
