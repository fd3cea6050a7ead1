#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wspd/detector.hpp"
#include "wspd/fp_coupling.hpp"
#include "wspd/geometry.hpp"
#include "wspd/grid.hpp"
#include "wspd/mode_solver.hpp"
#include "wspd/optimizer.hpp"

namespace wspd {

inline constexpr int config_schema_version = 1;

struct ExperimentSpec {
  std::vector<double> powers_w;
  double wavelength_m = 1.3e-6;
  double duration_s = 1.0;
  double jitter_sigma_s = 0.0;
  std::optional<double> dead_time_s;
  std::optional<double> dark_rate_per_s;
};

struct NamedSweep {
  std::string name;
  SweepSpec spec;
  double tolerance_m = 5e-9;  ///< refinement tolerance when used by `optimize`
};

/// Paper reference values and pass/fail bands used by reproduce-paper.
struct ReproduceSpec {
  double alpha_reference_per_cm = 451.0;
  double alpha_rel_tol = 0.15;
  double max_solve_seconds = 60.0;
  std::vector<double> absorptance_lengths_m{51e-6, 102e-6};
  std::vector<double> absorptance_targets{0.90, 0.99};
  std::vector<double> absorptance_tols{0.005, 0.002};
  FringeData fringes{0.061, 0.018, 1.0};
  double coupling_target = 0.174;
  double coupling_tol = 0.001;
  double dqe_measured = 0.197;
  double chain_absorptance = 0.90;
  double sqe_target = 0.034;
  double sqe_tol = 0.001;
  double tau_target_s = 3.6e-9;
  double max_rate_target_hz = 92.6e6;
  double max_rate_tol_hz = 0.05e6;
  double recovery_target = 0.95;
  double recovery_tol = 0.001;
  double decay_rel_tol = 0.01;
  double pulse_fwhm_s = 3.2e-9;
  double jitter_total_s = 73e-12;
  double jitter_source_s = 40e-12;
  double jitter_target_s = 61.1e-12;
  double jitter_tol_s = 0.1e-12;
  double count_slope_rel_tol = 0.03;
  double tm_thickness_increase_m = 50e-9;
  double tm_alpha_min_per_cm = 500.0;
};

struct ProjectConfig {
  explicit ProjectConfig(CrossSection cs) : cross_section(std::move(cs)) {}

  std::uint64_t seed = 0;
  std::string output_dir = "out";
  CrossSection cross_section;
  ResolutionPolicy resolution;
  SolverConfig solver;
  DetectorModel detector;
  double pulse_rise_s = 200e-12;
  ExperimentSpec experiment;
  std::vector<NamedSweep> sweeps;
  ReproduceSpec reproduce;
  nlohmann::json source;  ///< the document as parsed
  std::string digest;     ///< hex FNV-1a of the canonical serialization

  const NamedSweep& sweep(const std::string& name) const;
};

/// Validate and convert. Unknown keys, missing required keys and
/// out-of-range values throw ConfigError naming the offending path.
ProjectConfig parse_config(const nlohmann::json& doc);
ProjectConfig load_config(const std::filesystem::path& path);

/// Hex FNV-1a 64 of the compact, key-sorted serialization.
std::string config_digest(const nlohmann::json& doc);
std::uint64_t fnv1a64(std::string_view bytes) noexcept;
/// Per-stage seed: splitmix64 of the global seed mixed with FNV-1a(stage).
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage) noexcept;

}  // namespace wspd
