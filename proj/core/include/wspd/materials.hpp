#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

namespace wspd {

using Complex = std::complex<double>;

/// One row of a dispersion table. `index` is stored as n - i k with k >= 0,
/// so an absorbing entry has a non-positive imaginary part.
struct IndexSample {
  double wavelength_m;
  Complex index;
};

/// Tabulated complex refractive index, linearly interpolated in both parts.
class Material {
 public:
  Material(std::string name, std::vector<IndexSample> table);

  const std::string& name() const noexcept { return name_; }
  const std::vector<IndexSample>& table() const noexcept { return table_; }

  double min_wavelength() const noexcept { return table_.front().wavelength_m; }
  double max_wavelength() const noexcept { return table_.back().wavelength_m; }

  /// Throws DomainError naming the material when outside the table.
  Complex index_at(double wavelength_m) const;

  bool lossless() const noexcept;

 private:
  std::string name_;
  std::vector<IndexSample> table_;
};

Complex lookup_index(const Material& material, double wavelength_m);

/// Relative permittivity of a complex index, eps = (n - i k)^2.
inline Complex permittivity(Complex index) { return index * index; }

/// Name-keyed set of materials. Iteration order is by name.
class MaterialLibrary {
 public:
  void add(Material material);
  bool contains(const std::string& name) const { return materials_.count(name) != 0; }
  const Material& at(const std::string& name) const;
  const std::map<std::string, Material>& all() const noexcept { return materials_; }

 private:
  std::map<std::string, Material> materials_;
};

namespace dispersion {

/// Afromowitz modified single-effective-oscillator model for Al(x)Ga(1-x)As
/// below the direct gap (Solid State Commun. 15, 59 (1974)). Real index.
double afromowitz_algaas(double al_fraction, double wavelength_m);

/// Malitson three-term Sellmeier for fused silica (JOSA 55, 1205 (1965)).
double malitson_silica(double wavelength_m);

}  // namespace dispersion

/// NbN extinction used by the shipped library (1300 nm value from Anant et
/// al., Opt. Express 16, 10750 (2008)).
inline constexpr double nbn_n_1300 = 5.23;
inline constexpr double nbn_k_1300 = 5.82;

/// Name used for Al(x)Ga(1-x)As entries, e.g. "AlGaAs_0.75".
std::string algaas_name(double al_fraction);

/// Shipped table: GaAs, AlGaAs at the requested Al fractions, NbN, SiOx and
/// air, sampled every 10 nm over 1260-1360 nm.
MaterialLibrary builtin_library(const std::vector<double>& al_fractions = {0.75, 0.70});

}  // namespace wspd
