#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace wspd {

/// Internal detection efficiency vs normalized bias i = Ib/Ic, modeled as a
/// logistic eta_max / (1 + exp(-(i - midpoint) / width)).
struct InternalEfficiencyCurve {
  double eta_max = 0.25;
  double midpoint = 0.51;
  double width = 0.04;

  double at(double normalized_bias) const;
};

/// Dark-count law R = r0 exp(slope * i).
struct DarkCountLaw {
  double r0_per_s = 1e-2;
  double slope = 15.0;

  double rate(double normalized_bias) const;
};

/// Film characterization. Recorded only; no computation reads it.
struct FilmMetadata {
  double tc_k = 10.0;
  double delta_tc_k = 0.65;
};

struct DetectorModel {
  int wire_count = 4;
  double wire_length_m = 50e-6;
  double wire_width_m = 100e-9;
  double sheet_inductance_h = 90e-12;  ///< per square
  double load_resistance_ohm = 50.0;
  double critical_current_a = 16.9e-6;
  double bias_current_a = 9.9e-6;
  InternalEfficiencyCurve internal;
  DarkCountLaw dark;
  FilmMetadata film;

  double normalized_bias() const { return bias_current_a / critical_current_a; }
  /// Throws ConfigError when an operating-point invariant is violated.
  void validate() const;
};

// --- optics -> absorption --------------------------------------------------

/// Beer-Lambert absorptance 1 - exp(-alpha L).
double absorptance(double alpha_per_cm, double length_cm);

// --- electrical chain -------------------------------------------------------

/// L_sq x number of squares of the series meander.
double kinetic_inductance(const DetectorModel& model);
double recovery_time_constant(double kinetic_inductance_h, double load_resistance_ohm);
double recovery_time_constant(const DetectorModel& model);
/// Fraction of the bias current restored a time t after a detection.
double recovery_fraction(double t_s, double tau_s);
/// Dead time used throughout: three recovery time constants (95% recovery).
inline double dead_time(double tau_s) { return 3.0 * tau_s; }
double max_count_rate(double tau_s);
double max_count_rate(const DetectorModel& model);

struct PulseMetrics {
  double peak_time_s = 0.0;
  double fwhm_s = 0.0;
  double decay_1e_s = 0.0;  ///< from a log-linear fit to the falling tail
};

/// Peak-normalized two-exponential pulse exp(-t/fall) - exp(-t/rise).
struct PulseTrace {
  std::vector<double> t_s;
  std::vector<double> v;
  PulseMetrics metrics;
};

PulseTrace pulse_shape(double fall_s, double rise_s, double horizon_s, std::size_t samples = 20001);
PulseTrace pulse_shape(const DetectorModel& model, double rise_s, double horizon_s,
                       std::size_t samples = 20001);
/// FWHM of the continuous model.
double pulse_fwhm(double fall_s, double rise_s);
/// Rise constant whose model FWHM equals `fwhm_s` for the given fall time.
double fit_rise_for_fwhm(double fall_s, double fwhm_s);

// --- efficiency chain --------------------------------------------------------

struct EfficiencyBudget {
  double coupling = 0.0;     ///< fiber input -> guided mode
  double absorptance = 0.0;  ///< guided mode -> absorbed in the wires
  double internal = 0.0;     ///< absorbed -> counted

  double dqe() const { return absorptance * internal; }
  double sqe() const { return coupling * dqe(); }
};

EfficiencyBudget efficiency_chain(double coupling, double absorptance, double internal);
/// DQE / A. Throws InconsistencyError if the result exceeds 1.
double invert_internal(double dqe, double absorptance);

// --- dark counts --------------------------------------------------------------

double dark_count_rate(const DetectorModel& model);

struct DarkSample {
  double normalized_bias;
  double rate_per_s;
};

struct DarkFit {
  double r0_per_s;
  double slope;
  double rms_log_residual;
};

/// Least squares on ln(rate) vs bias.
DarkFit fit_dark_law(std::span<const DarkSample> samples);

// --- counting -------------------------------------------------------------

double photon_flux(double power_w, double wavelength_m);
/// Non-paralyzable dead-time corrected rate of (sqe * flux + dark).
double expected_count_rate(double power_w, double wavelength_m, double sqe, double dead_time_s,
                           double dark_rate_per_s);

struct SourceSpec {
  double power_w = 0.0;
  double wavelength_m = 1.3e-6;
  double jitter_sigma_s = 0.0;
  std::optional<double> dead_time_s;  ///< overrides 3 tau
  std::optional<double> dark_rate_per_s;  ///< overrides the model's dark law
};

enum class EventKind : std::uint8_t { photon, dark };

struct CountEvent {
  double detected_s;  ///< instant the detector fired
  double recorded_s;  ///< detected_s plus timing jitter
  EventKind kind;
};

struct CountRecord {
  std::vector<CountEvent> events;  ///< sorted by recorded_s
  double power_w = 0.0;
  double wavelength_m = 0.0;
  double normalized_bias = 0.0;
  double duration_s = 0.0;
  double dead_time_s = 0.0;
  double sqe = 0.0;
  std::uint64_t seed = 0;

  double rate() const { return duration_s > 0.0 ? static_cast<double>(events.size()) / duration_s : 0.0; }
};

/// Poisson photon and dark arrivals, non-paralyzable dead time on the merged
/// stream, then Gaussian timing jitter. Deterministic for a given seed.
CountRecord simulate_counting(const DetectorModel& model, const EfficiencyBudget& budget,
                              const SourceSpec& source, double duration_s, std::uint64_t seed);

struct SlopeFit {
  double slope;      ///< counts/s per W
  double intercept;  ///< counts/s
};

/// Ordinary least squares of rate against power.
SlopeFit fit_rate_vs_power(std::span<const double> powers_w, std::span<const double> rates);

// --- jitter ----------------------------------------------------------------------

/// sqrt(total^2 - source^2).
double jitter_deconvolve(double total_s, double source_s);
/// FWHM of a Gaussian fitted to the histogram of `samples`.
double histogram_fwhm(std::span<const double> samples, int bins = 0);

inline constexpr double gaussian_fwhm_per_sigma = 2.354820045030949;  // 2 sqrt(2 ln 2)

}  // namespace wspd
