#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <vector>

namespace wspd {

/// Transmission extrema of a cleaved-waveguide Fabry-Perot scan.
struct FringeData {
  double t_max = 0.0;
  double t_min = 0.0;
  double single_pass = 1.0;  ///< propagation transmission a in (0, 1]

  /// Throws ConfigError unless 0 < t_min < t_max <= 1 and a in (0, 1].
  void validate() const;
};

struct CouplingResult {
  double facet_reflectivity = 0.0;  ///< R_f
  double mode_match = 0.0;          ///< per-facet eta_m
  double coupling = 0.0;            ///< eta_m (1 - R_f), fiber input to guided mode
  double contrast = 0.0;            ///< sqrt(t_max / t_min)
};

/// Symmetric-facet Fabry-Perot transmission at round-trip phase `phase`.
double fp_transmission(double facet_reflectivity, double mode_match, double single_pass, double phase);

/// Invert the extrema for R_f and eta_m. Throws InconsistencyError when the
/// inputs imply R_f >= 1 or eta_m > 1.
CouplingResult extract_coupling(const FringeData& fringes);

/// Normal-incidence ((n - 1) / (n + 1))^2 from Re(n_eff).
double fresnel_reflectivity(std::complex<double> n_eff);

struct ScanPoint {
  double wavelength_nm;
  double transmission;
};

/// Robust extrema from a wavelength scan: 95th and 5th percentiles of the
/// transmission samples (linear interpolation between order statistics).
FringeData fringe_extrema(std::span<const ScanPoint> scan, double single_pass = 1.0);

/// Two-column CSV `wavelength_nm,transmission` with a header row; lines
/// starting with '#' are skipped.
std::vector<ScanPoint> read_scan_csv(std::istream& in);

}  // namespace wspd
