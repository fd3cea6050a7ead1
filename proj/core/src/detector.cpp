#include "wspd/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "wspd/constants.hpp"
#include "wspd/error.hpp"

namespace wspd {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Bisection for a sign change of f on [lo, hi].
template <class F>
double bisect(F f, double lo, double hi, double xtol) {
  double flo = f(lo);
  for (int it = 0; it < 200 && hi - lo > xtol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct TwoExp {
  double fall, rise, peak_t, norm;

  TwoExp(double f, double r) : fall(f), rise(r) {
    peak_t = std::log(f / r) * f * r / (f - r);
    norm = std::exp(-peak_t / f) - std::exp(-peak_t / r);
  }
  double operator()(double t) const { return (std::exp(-t / fall) - std::exp(-t / rise)) / norm; }
};

void check_pulse_args(double fall_s, double rise_s) {
  if (!(fall_s > 0.0)) throw ConfigError("pulse: fall time must be positive");
  if (!(rise_s > 0.0)) throw ConfigError("pulse: rise time must be positive");
  if (rise_s >= fall_s) throw ConfigError("pulse: rise time must be shorter than the fall time");
}

// Least-squares line y = a + b x.
std::pair<double, double> line_fit(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double b = sxy / sxx;
  return {my - b * mx, b};
}

}  // namespace

double InternalEfficiencyCurve::at(double i) const {
  return eta_max / (1.0 + std::exp(-(i - midpoint) / width));
}

double DarkCountLaw::rate(double i) const { return r0_per_s * std::exp(slope * i); }

void DetectorModel::validate() const {
  if (wire_count < 1) throw ConfigError("detector: wire count must be >= 1");
  if (!(wire_length_m > 0.0)) throw ConfigError("detector: wire length must be positive");
  if (!(wire_width_m > 0.0)) throw ConfigError("detector: wire width must be positive");
  if (!(sheet_inductance_h > 0.0)) throw ConfigError("detector: sheet inductance must be positive");
  if (!(load_resistance_ohm > 0.0)) throw ConfigError("detector: load resistance must be positive");
  if (!(critical_current_a > 0.0)) throw ConfigError("detector: critical current must be positive");
  if (!(bias_current_a > 0.0) || bias_current_a >= critical_current_a)
    throw ConfigError("detector: bias current must satisfy 0 < Ib < Ic");
  if (!(internal.eta_max > 0.0) || internal.eta_max > 1.0)
    throw ConfigError("detector: eta_max must lie in (0, 1]");
  if (!(internal.width > 0.0)) throw ConfigError("detector: internal-efficiency width must be positive");
  if (!(dark.r0_per_s >= 0.0)) throw ConfigError("detector: dark-count prefactor must be >= 0");
}

double absorptance(double alpha_per_cm, double length_cm) {
  require(alpha_per_cm >= 0.0, "absorptance: alpha must be >= 0");
  require(length_cm >= 0.0, "absorptance: length must be >= 0");
  return -std::expm1(-alpha_per_cm * length_cm);
}

double kinetic_inductance(const DetectorModel& m) {
  require(m.wire_width_m > 0.0, "kinetic inductance: wire width must be positive");
  const double squares = m.wire_count * m.wire_length_m / m.wire_width_m;
  return m.sheet_inductance_h * squares;
}

double recovery_time_constant(double l_kin, double r) {
  require(r > 0.0, "recovery time: load resistance must be positive");
  return l_kin / r;
}

double recovery_time_constant(const DetectorModel& m) {
  return recovery_time_constant(kinetic_inductance(m), m.load_resistance_ohm);
}

double recovery_fraction(double t_s, double tau_s) {
  require(t_s >= 0.0, "recovery fraction: time must be >= 0");
  return -std::expm1(-t_s / tau_s);
}

double max_count_rate(double tau_s) { return 1.0 / dead_time(tau_s); }
double max_count_rate(const DetectorModel& m) { return max_count_rate(recovery_time_constant(m)); }

double pulse_fwhm(double fall_s, double rise_s) {
  check_pulse_args(fall_s, rise_s);
  const TwoExp v(fall_s, rise_s);
  auto half = [&](double t) { return v(t) - 0.5; };
  const double t1 = bisect(half, 0.0, v.peak_t, 1e-9 * fall_s);
  double hi = v.peak_t + fall_s;
  while (v(hi) > 0.5) hi += fall_s;
  const double t2 = bisect(half, v.peak_t, hi, 1e-9 * fall_s);
  return t2 - t1;
}

double fit_rise_for_fwhm(double fall_s, double fwhm_s) {
  if (!(fall_s > 0.0)) throw ConfigError("pulse: fall time must be positive");
  const double lo = fall_s * 1e-6;
  const double hi = fall_s * (1.0 - 1e-6);
  const double f_lo = pulse_fwhm(fall_s, lo) - fwhm_s;
  const double f_hi = pulse_fwhm(fall_s, hi) - fwhm_s;
  if (f_lo > 0.0 || f_hi < 0.0)
    throw DomainError("pulse: requested FWHM is not reachable with rise < fall");
  return bisect([&](double r) { return pulse_fwhm(fall_s, r) - fwhm_s; }, lo, hi, 1e-12 * fall_s);
}

PulseTrace pulse_shape(double fall_s, double rise_s, double horizon_s, std::size_t samples) {
  check_pulse_args(fall_s, rise_s);
  if (!(horizon_s > 0.0)) throw ConfigError("pulse: horizon must be positive");
  if (samples < 16) throw ConfigError("pulse: need at least 16 samples");
  const TwoExp v(fall_s, rise_s);

  PulseTrace tr;
  tr.t_s.resize(samples);
  tr.v.resize(samples);
  const double dt = horizon_s / static_cast<double>(samples - 1);
  for (std::size_t k = 0; k < samples; ++k) {
    tr.t_s[k] = dt * static_cast<double>(k);
    tr.v[k] = k == 0 ? 0.0 : v(tr.t_s[k]);
  }

  tr.metrics.peak_time_s = v.peak_t;
  tr.metrics.fwhm_s = pulse_fwhm(fall_s, rise_s);

  // Tail fit over the falling edge between 25% and 1% of peak.
  std::vector<double> ts, logs;
  for (std::size_t k = 0; k < samples; ++k) {
    if (tr.t_s[k] <= v.peak_t) continue;
    if (tr.v[k] <= 0.25 && tr.v[k] >= 0.01) {
      ts.push_back(tr.t_s[k]);
      logs.push_back(std::log(tr.v[k]));
    }
  }
  if (ts.size() < 3) throw ConfigError("pulse: horizon too short to fit the decay tail");
  tr.metrics.decay_1e_s = -1.0 / line_fit(ts, logs).second;
  return tr;
}

PulseTrace pulse_shape(const DetectorModel& model, double rise_s, double horizon_s,
                       std::size_t samples) {
  return pulse_shape(recovery_time_constant(model), rise_s, horizon_s, samples);
}

EfficiencyBudget efficiency_chain(double coupling, double a, double internal) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  require(unit(coupling), "efficiency: coupling must lie in [0, 1]");
  require(unit(a), "efficiency: absorptance must lie in [0, 1]");
  require(unit(internal), "efficiency: internal efficiency must lie in [0, 1]");
  return {coupling, a, internal};
}

double invert_internal(double dqe, double a) {
  require(a > 0.0 && a <= 1.0, "efficiency: absorptance must lie in (0, 1]");
  require(dqe >= 0.0, "efficiency: DQE must be >= 0");
  const double eta = dqe / a;
  if (eta > 1.0) throw InconsistencyError("efficiency: measured DQE exceeds the absorptance");
  return eta;
}

double dark_count_rate(const DetectorModel& m) { return m.dark.rate(m.normalized_bias()); }

DarkFit fit_dark_law(std::span<const DarkSample> samples) {
  if (samples.size() < 3) throw ConfigError("dark-count fit needs at least 3 samples");
  std::vector<double> x, y;
  for (const auto& s : samples) {
    if (!(s.rate_per_s > 0.0)) throw DomainError("dark-count fit: rates must be positive");
    x.push_back(s.normalized_bias);
    y.push_back(std::log(s.rate_per_s));
  }
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ConfigError("dark-count fit: bias values must be distinct");
  const auto [a, b] = line_fit(x, y);
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += std::pow(y[i] - a - b * x[i], 2);
  return {std::exp(a), b, std::sqrt(ss / static_cast<double>(x.size()))};
}

double photon_flux(double power_w, double wavelength_m) {
  require(power_w >= 0.0, "photon flux: power must be >= 0");
  require(wavelength_m > 0.0, "photon flux: wavelength must be positive");
  return power_w / constants::photon_energy(wavelength_m);
}

double expected_count_rate(double power_w, double wavelength_m, double sqe, double dead_time_s,
                           double dark_rate_per_s) {
  const double raw = sqe * photon_flux(power_w, wavelength_m) + dark_rate_per_s;
  return raw / (1.0 + raw * dead_time_s);
}

CountRecord simulate_counting(const DetectorModel& model, const EfficiencyBudget& budget,
                              const SourceSpec& source, double duration_s, std::uint64_t seed) {
  model.validate();
  require(duration_s >= 0.0, "counting: duration must be >= 0");
  require(source.jitter_sigma_s >= 0.0, "counting: jitter must be >= 0");

  CountRecord rec;
  rec.power_w = source.power_w;
  rec.wavelength_m = source.wavelength_m;
  rec.normalized_bias = model.normalized_bias();
  rec.duration_s = duration_s;
  rec.dead_time_s = source.dead_time_s.value_or(dead_time(recovery_time_constant(model)));
  rec.sqe = budget.sqe();
  rec.seed = seed;

  const double photon_rate = rec.sqe * photon_flux(source.power_w, source.wavelength_m);
  const double dark_rate = source.dark_rate_per_s.value_or(dark_count_rate(model));
  require(dark_rate >= 0.0, "counting: dark rate must be >= 0");

  auto arrivals = [duration_s](double rate, std::uint64_t s) {
    std::vector<double> t;
    if (!(rate > 0.0)) return t;
    std::mt19937_64 rng(s);
    std::exponential_distribution<double> gap(rate);
    t.reserve(static_cast<std::size_t>(rate * duration_s * 1.1) + 16);
    for (double now = gap(rng); now < duration_s; now += gap(rng)) t.push_back(now);
    return t;
  };
  const auto photons = arrivals(photon_rate, splitmix64(seed ^ 0x01));
  const auto darks = arrivals(dark_rate, splitmix64(seed ^ 0x02));

  // Merge and apply the dead time; the detector is blind after each click.
  std::vector<CountEvent> merged;
  merged.reserve(photons.size() + darks.size());
  std::size_t ip = 0, id = 0;
  double last = -std::numeric_limits<double>::infinity();
  while (ip < photons.size() || id < darks.size()) {
    const bool take_photon = id >= darks.size() || (ip < photons.size() && photons[ip] <= darks[id]);
    const double t = take_photon ? photons[ip++] : darks[id++];
    if (t - last < rec.dead_time_s) continue;
    last = t;
    merged.push_back({t, t, take_photon ? EventKind::photon : EventKind::dark});
  }

  if (source.jitter_sigma_s > 0.0) {
    std::mt19937_64 rng(splitmix64(seed ^ 0x03));
    std::normal_distribution<double> jitter(0.0, source.jitter_sigma_s);
    for (auto& e : merged) e.recorded_s = e.detected_s + jitter(rng);
    std::stable_sort(merged.begin(), merged.end(),
                     [](const CountEvent& a, const CountEvent& b) { return a.recorded_s < b.recorded_s; });
  }
  rec.events = std::move(merged);
  return rec;
}

SlopeFit fit_rate_vs_power(std::span<const double> powers_w, std::span<const double> rates) {
  if (powers_w.size() != rates.size() || powers_w.size() < 2)
    throw ConfigError("rate fit: need at least two (power, rate) pairs");
  const auto [a, b] = line_fit(powers_w, rates);
  return {b, a};
}

double jitter_deconvolve(double total_s, double source_s) {
  require(source_s >= 0.0, "jitter: source jitter must be >= 0");
  if (source_s > total_s) throw DomainError("jitter: source jitter exceeds the total");
  return std::sqrt((total_s - source_s) * (total_s + source_s));
}

double histogram_fwhm(std::span<const double> samples, int bins) {
  if (samples.size() < 10) throw ConfigError("histogram FWHM needs at least 10 samples");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / (n - 1.0));
  if (!(sd > 0.0)) throw DomainError("histogram FWHM: samples have no spread");
  if (bins <= 0) bins = std::clamp(static_cast<int>(std::sqrt(n)), 8, 200);

  const double lo = mean - 4.0 * sd, width = 8.0 * sd / bins;
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double s : samples) {
    const auto b = static_cast<long>(std::floor((s - lo) / width));
    if (b >= 0 && b < bins) counts[static_cast<std::size_t>(b)] += 1.0;
  }

  // Weighted least squares of ln(count) against a parabola; weights = counts.
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (int b = 0; b < bins; ++b) {
    const double c = counts[static_cast<std::size_t>(b)];
    if (c < 1.0) continue;
    const double x = (lo + (b + 0.5) * width - mean) / sd;
    const Eigen::Vector3d phi(1.0, x, x * x);
    normal += c * phi * phi.transpose();
    rhs += c * std::log(c) * phi;
  }
  const Eigen::Vector3d coef = normal.colPivHouseholderQr().solve(rhs);
  const double c2 = coef(2);
  if (!(c2 < 0.0)) throw DomainError("histogram FWHM: histogram is not peaked");
  const double sigma = sd * std::sqrt(-0.5 / c2);
  return gaussian_fwhm_per_sigma * sigma;
}

}  // namespace wspd
