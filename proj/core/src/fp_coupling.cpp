#include "wspd/fp_coupling.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>
#include <string>

#include "wspd/error.hpp"

namespace wspd {

void FringeData::validate() const {
  if (!(t_min > 0.0)) throw ConfigError("fringes: t_min must be positive");
  if (!(t_max > t_min)) throw ConfigError("fringes: t_max must exceed t_min");
  if (t_max > 1.0) throw ConfigError("fringes: t_max must be <= 1");
  if (!(single_pass > 0.0) || single_pass > 1.0)
    throw ConfigError("fringes: single-pass transmission must lie in (0, 1]");
}

double fp_transmission(double r, double eta, double a, double phase) {
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("fp_transmission: R_f must lie in [0, 1)");
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("fp_transmission: eta_m must lie in (0, 1]");
  if (!(a > 0.0 && a <= 1.0)) throw DomainError("fp_transmission: a must lie in (0, 1]");
  const double s = std::sin(0.5 * phase);
  const double ra = r * a;
  return eta * eta * (1.0 - r) * (1.0 - r) * a / ((1.0 - ra) * (1.0 - ra) + 4.0 * ra * s * s);
}

CouplingResult extract_coupling(const FringeData& f) {
  f.validate();
  CouplingResult out;
  out.contrast = std::sqrt(f.t_max / f.t_min);
  const double k = out.contrast;
  const double ra = (k - 1.0) / (k + 1.0);
  out.facet_reflectivity = ra / f.single_pass;
  if (out.facet_reflectivity >= 1.0)
    throw InconsistencyError("fringe contrast too high for the given single-pass transmission");
  out.mode_match = std::sqrt(f.t_max) * (1.0 - ra) /
                   ((1.0 - out.facet_reflectivity) * std::sqrt(f.single_pass));
  if (out.mode_match > 1.0) throw InconsistencyError("extracted mode-match efficiency exceeds 1");
  out.coupling = out.mode_match * (1.0 - out.facet_reflectivity);
  return out;
}

double fresnel_reflectivity(std::complex<double> n_eff) {
  const double n = n_eff.real();
  const double r = (n - 1.0) / (n + 1.0);
  return r * r;
}

namespace {

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

FringeData fringe_extrema(std::span<const ScanPoint> scan, double single_pass) {
  if (scan.size() < 3) throw ConfigError("fringe scan needs at least 3 samples");
  std::vector<double> t;
  t.reserve(scan.size());
  for (const auto& s : scan) t.push_back(s.transmission);
  FringeData f{percentile(t, 0.95), percentile(t, 0.05), single_pass};
  f.validate();
  return f;
}

std::vector<ScanPoint> read_scan_csv(std::istream& in) {
  std::vector<ScanPoint> out;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != "wavelength_nm,transmission")
        throw ConfigError("fringe scan: expected header 'wavelength_nm,transmission'");
      header = true;
      continue;
    }
    std::istringstream row(line);
    ScanPoint p{};
    char comma = 0;
    if (!(row >> p.wavelength_nm >> comma >> p.transmission) || comma != ',')
      throw ConfigError("fringe scan: malformed row at line " + std::to_string(lineno));
    out.push_back(p);
  }
  return out;
}

}  // namespace wspd
