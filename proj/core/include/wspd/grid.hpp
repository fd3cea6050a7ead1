#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "wspd/geometry.hpp"

namespace wspd {

/// Meshing controls. Sizes are upper bounds on local cell size.
struct ResolutionPolicy {
  double base_m = 20e-9;          ///< cell size in and around the guiding core
  double fine_m = 2e-9;           ///< vertical cell size across the wire layer
  double band_m = 10e-9;          ///< refinement band around the wire layer and sidewalls
  double lateral_fine_m = 5e-9;   ///< lateral cell size at wire sidewalls
  double grading = 0.25;          ///< max growth of cell size per unit distance
  double far_m = 60e-9;           ///< cell size far from the core (>= base)
  double core_band_m = 0.5e-6;    ///< distance from the ridge over which base applies

  /// Every length multiplied by `factor` (grading unchanged).
  ResolutionPolicy scaled(double factor) const;
};

/// Cell-wise complex relative permittivity on a nonuniform tensor grid.
/// Cells are stored x-fastest: index = ix + nx * iy.
class PermittivityGrid {
 public:
  PermittivityGrid(std::vector<double> x_edges, std::vector<double> y_edges,
                   std::vector<std::string> material_names, std::vector<Complex> material_eps,
                   std::vector<std::uint8_t> cell_material, double wavelength_m);

  std::size_t nx() const noexcept { return x_.size() - 1; }
  std::size_t ny() const noexcept { return y_.size() - 1; }
  std::size_t cell_count() const noexcept { return nx() * ny(); }

  const std::vector<double>& x_edges() const noexcept { return x_; }
  const std::vector<double>& y_edges() const noexcept { return y_; }
  double dx(std::size_t ix) const { return x_[ix + 1] - x_[ix]; }
  double dy(std::size_t iy) const { return y_[iy + 1] - y_[iy]; }
  double x_center(std::size_t ix) const { return 0.5 * (x_[ix] + x_[ix + 1]); }
  double y_center(std::size_t iy) const { return 0.5 * (y_[iy] + y_[iy + 1]); }

  Complex eps(std::size_t ix, std::size_t iy) const { return eps_[cell_[ix + nx() * iy]]; }
  std::uint8_t material_id(std::size_t ix, std::size_t iy) const { return cell_[ix + nx() * iy]; }
  const std::vector<std::string>& material_names() const noexcept { return names_; }
  const std::vector<Complex>& material_eps() const noexcept { return eps_; }
  double wavelength() const noexcept { return wavelength_; }

  /// Total area of cells made of `material` [m^2].
  double material_area(const std::string& material) const;
  double max_abs_imag_eps() const;

  /// Whitespace-free CSV of eps (real and imaginary matrices, rows = y).
  void write_eps_csv(std::ostream& real_out, std::ostream& imag_out) const;

 private:
  std::vector<double> x_, y_;
  std::vector<std::string> names_;
  std::vector<Complex> eps_;
  std::vector<std::uint8_t> cell_;
  double wavelength_;
};

/// Mesh a 1-D interval. Every breakpoint becomes an edge; each segment gets
/// at least `min_cells(segment)` cells and locally no cell exceeds size(x)
/// by more than rounding.
std::vector<double> mesh_axis(const std::vector<double>& breakpoints,
                              const std::vector<int>& min_cells_per_segment,
                              const std::function<double(double)>& size);

PermittivityGrid rasterize(const CrossSection& cs, const ResolutionPolicy& policy);

}  // namespace wspd
