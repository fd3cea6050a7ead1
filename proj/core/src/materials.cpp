#include "wspd/materials.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "wspd/constants.hpp"
#include "wspd/error.hpp"

namespace wspd {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::domain: return "domain";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::inconsistency: return "inconsistency";
  }
  return "unknown";
}

Material::Material(std::string name, std::vector<IndexSample> table)
    : name_(std::move(name)), table_(std::move(table)) {
  if (table_.empty()) throw ConfigError("material '" + name_ + "': empty index table");
  for (std::size_t i = 0; i < table_.size(); ++i) {
    const auto& s = table_[i];
    if (!(s.wavelength_m > 0.0))
      throw ConfigError("material '" + name_ + "': non-positive wavelength");
    if (i > 0 && !(s.wavelength_m > table_[i - 1].wavelength_m))
      throw ConfigError("material '" + name_ + "': wavelengths not strictly increasing");
    if (!(s.index.real() > 0.0))
      throw ConfigError("material '" + name_ + "': real index must be positive");
    if (s.index.imag() > 0.0)
      throw ConfigError("material '" + name_ + "': extinction must be >= 0 (store n - ik)");
  }
}

Complex Material::index_at(double wavelength_m) const {
  if (!(wavelength_m >= min_wavelength() && wavelength_m <= max_wavelength())) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "material '%s': wavelength %.6g nm outside table [%.6g, %.6g] nm",
                  name_.c_str(), wavelength_m * 1e9, min_wavelength() * 1e9,
                  max_wavelength() * 1e9);
    throw DomainError(buf);
  }
  auto hi = std::lower_bound(table_.begin(), table_.end(), wavelength_m,
                             [](const IndexSample& s, double w) { return s.wavelength_m < w; });
  if (hi->wavelength_m == wavelength_m) return hi->index;
  auto lo = hi - 1;
  const double t = (wavelength_m - lo->wavelength_m) / (hi->wavelength_m - lo->wavelength_m);
  return {lo->index.real() + t * (hi->index.real() - lo->index.real()),
          lo->index.imag() + t * (hi->index.imag() - lo->index.imag())};
}

bool Material::lossless() const noexcept {
  return std::all_of(table_.begin(), table_.end(),
                     [](const IndexSample& s) { return s.index.imag() == 0.0; });
}

Complex lookup_index(const Material& material, double wavelength_m) {
  return material.index_at(wavelength_m);
}

void MaterialLibrary::add(Material material) {
  const std::string key = material.name();
  materials_.insert_or_assign(key, std::move(material));
}

const Material& MaterialLibrary::at(const std::string& name) const {
  auto it = materials_.find(name);
  if (it == materials_.end()) throw ConfigError("unknown material '" + name + "'");
  return it->second;
}

namespace dispersion {

double afromowitz_algaas(double x, double wavelength_m) {
  if (x < 0.0 || x > 1.0) throw DomainError("Al fraction must lie in [0, 1]");
  const double photon_ev = constants::hc / wavelength_m / 1.602'176'634e-19;
  const double e0 = 3.65 + 0.871 * x + 0.179 * x * x;
  const double ed = 36.1 - 2.45 * x;
  const double eg = 1.424 + 1.266 * x + 0.26 * x * x;
  if (photon_ev >= eg) throw DomainError("Afromowitz model is valid below the direct gap only");

  const double e2 = photon_ev * photon_ev;
  const double eta = constants::pi * ed / (2.0 * e0 * e0 * e0 * (e0 * e0 - eg * eg));
  const double ef2 = 2.0 * e0 * e0 - eg * eg;
  const double eps = 1.0 + ed / e0 + ed * e2 / (e0 * e0 * e0) +
                     eta / constants::pi * e2 * e2 * std::log((ef2 - e2) / (eg * eg - e2));
  return std::sqrt(eps);
}

double malitson_silica(double wavelength_m) {
  const double l2 = std::pow(wavelength_m * 1e6, 2);
  const double eps = 1.0 + 0.6961663 * l2 / (l2 - 0.0684043 * 0.0684043) +
                     0.4079426 * l2 / (l2 - 0.1162414 * 0.1162414) +
                     0.8974794 * l2 / (l2 - 9.896161 * 9.896161);
  return std::sqrt(eps);
}

}  // namespace dispersion

std::string algaas_name(double al_fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "AlGaAs_%.2f", al_fraction);
  return buf;
}

namespace {

template <class F>
std::vector<IndexSample> sampled(F&& index_of) {
  std::vector<IndexSample> table;
  for (int nm = 1260; nm <= 1360; nm += 10) {
    const double w = nm / 1e9;
    table.push_back({w, index_of(w)});
  }
  return table;
}

}  // namespace

MaterialLibrary builtin_library(const std::vector<double>& al_fractions) {
  MaterialLibrary lib;
  lib.add(Material("GaAs", sampled([](double w) {
                     return Complex(dispersion::afromowitz_algaas(0.0, w), 0.0);
                   })));
  for (double x : al_fractions) {
    lib.add(Material(algaas_name(x), sampled([x](double w) {
                       return Complex(dispersion::afromowitz_algaas(x, w), 0.0);
                     })));
  }
  // Only the 1300 nm NbN value is known; held flat across the band.
  lib.add(Material("NbN", sampled([](double) { return Complex(nbn_n_1300, -nbn_k_1300); })));
  lib.add(Material("SiOx", sampled([](double w) {
                     return Complex(dispersion::malitson_silica(w), 0.0);
                   })));
  lib.add(Material("air", sampled([](double) { return Complex(1.0, 0.0); })));
  return lib;
}

}  // namespace wspd
