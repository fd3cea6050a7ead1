#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "wspd/grid.hpp"

namespace wspd {

using SparseMatrix = Eigen::SparseMatrix<Complex>;

/// Sampled field component on its staggered (Yee) sub-grid, x-fastest.
struct FieldComponent {
  std::vector<double> x;  ///< sample x coordinates [m]
  std::vector<double> y;  ///< sample y coordinates [m]
  std::vector<Complex> values;

  std::size_t nx() const noexcept { return x.size(); }
  std::size_t ny() const noexcept { return y.size(); }
  Complex at(std::size_t ix, std::size_t iy) const { return values[ix + nx() * iy]; }
  double max_abs() const;
};

enum class Polarization { te_like, tm_like };

/// One guided mode. `n_eff` is reported as n' + i kappa, where kappa >= 0
/// is the modal extinction of an absorbing structure.
struct ModeSolution {
  Complex n_eff;
  double wavelength_m = 0.0;
  FieldComponent ex, ey, ez;  ///< [V/m] at unit power
  FieldComponent hx, hy, hz;  ///< [A/m]
  double te_fraction = 0.0;
  double power_w = 0.0;       ///< 1 after normalization
  bool normalized = false;
  double residual = 0.0;      ///< relative eigen-residual of the shift-inverted problem

  Complex beta() const;            ///< k0 n_eff [1/m]
  double alpha_per_m() const;      ///< 2 k0 kappa
  Polarization polarization() const;
};

struct PolarizationClass {
  Polarization kind;
  double te_fraction;
};

/// Energy-based polarization classification; ties go to TE-like.
PolarizationClass classify_polarization(const ModeSolution& mode);

/// Power absorption coefficient 4 pi kappa / lambda in 1/cm.
double modal_absorption_per_cm(Complex n_eff, double wavelength_m);
double modal_absorption_per_cm(const ModeSolution& mode);

struct GuidedBracket {
  double lower;  ///< largest cladding index
  double upper;  ///< largest index present
  bool contains(double n) const { return n > lower && n < upper; }
};

struct SolverConfig {
  int modes = 6;
  std::optional<double> target_index;  ///< defaults to 0.98 x core index
  double tolerance = 1e-10;
  int max_restarts = 200;
  int krylov_dim = 0;                  ///< 0: chosen from `modes`
  std::optional<GuidedBracket> bracket;
};

/// Discretized transverse-field eigenproblem on a Yee-staggered grid with
/// zero tangential field on the window walls. Lengths are scaled by k0 so
/// the eigenvalues of `system()` are n_eff^2 = (beta / k0)^2.
class ModeOperator {
 public:
  const PermittivityGrid& grid() const noexcept { return grid_; }
  double wavenumber() const noexcept { return k0_; }
  double wavelength() const noexcept { return grid_.wavelength(); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(system_.rows()); }
  std::size_t ex_count() const noexcept { return n_ex_; }

  /// n_eff^2 E_t = system() E_t,  E_t = [Ex; Ey].
  const SparseMatrix& system() const noexcept { return system_; }
  /// n_eff H_t = e_to_h() E_t,  H_t = [Hx; Hy] scaled by the vacuum impedance.
  const SparseMatrix& e_to_h() const noexcept { return e_to_h_; }
  /// n_eff E_t = h_to_e() H_t.
  const SparseMatrix& h_to_e() const noexcept { return h_to_e_; }
  /// True when every permittivity in the grid is real.
  bool lossless() const noexcept { return lossless_; }

  /// Reconstruct all six components from a transverse eigenvector.
  ModeSolution make_mode(const Eigen::VectorXcd& e_t, Complex n_eff_squared) const;

 private:
  friend ModeOperator assemble_operator(const PermittivityGrid& grid, double wavelength_m);
  explicit ModeOperator(PermittivityGrid grid) : grid_(std::move(grid)) {}

  PermittivityGrid grid_;
  double k0_ = 0.0;
  std::size_t n_ex_ = 0;
  SparseMatrix system_, e_to_h_, h_to_e_;
  SparseMatrix div_x_, div_y_;     // divergence pieces mapping eps E onto Ez nodes
  SparseMatrix curl_z_;            // [-Dy, Dx] on E_t -> Hz cells
  Eigen::VectorXcd eps_x_, eps_y_, eps_z_;
  bool lossless_ = true;
};

ModeOperator assemble_operator(const PermittivityGrid& grid, double wavelength_m);

/// Shift-invert Krylov-Schur iteration for the eigenvalues nearest the
/// target. Returns guided modes (if a bracket is configured) sorted by
/// descending Re(n_eff). An empty result is not an error.
std::vector<ModeSolution> solve_modes(const ModeOperator& op, const SolverConfig& config);

/// Core-material index x 0.98 and the cladding/maximum index bracket.
SolverConfig default_solver_config(const CrossSection& cs, SolverConfig base = {});

enum class ModeSelector { fundamental_te, first_tm };

/// First mode (in descending Re n_eff order) of the requested polarization.
std::optional<ModeSolution> select_mode(const std::vector<ModeSolution>& modes, ModeSelector which);

/// Rasterize, assemble and solve.
std::vector<ModeSolution> solve_cross_section(const CrossSection& cs, const ResolutionPolicy& policy,
                                              const SolverConfig& config = {});

struct ConvergenceRow {
  double cell_scale = 0.0;      ///< multiplier applied to the base policy
  std::size_t cells = 0;
  Complex n_eff;
  double alpha_per_cm = 0.0;
  double delta_n_eff = 0.0;     ///< |n_eff - previous level|
  double delta_alpha_rel = 0.0; ///< |alpha - previous| / alpha
  bool ok = false;
  std::string error;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  std::optional<double> order;  ///< Richardson estimate from the last three levels (geometric scales only)
  bool complete = false;
};

/// Solve the same cross-section on successively refined policies.
ConvergenceTable convergence_study(const CrossSection& cs, const std::vector<double>& cell_scales,
                                   const ResolutionPolicy& base, ModeSelector which,
                                   const SolverConfig& config = {});

}  // namespace wspd
