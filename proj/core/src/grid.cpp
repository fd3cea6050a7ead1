#include "wspd/grid.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "wspd/error.hpp"

namespace wspd {

ResolutionPolicy ResolutionPolicy::scaled(double factor) const {
  ResolutionPolicy p = *this;
  p.base_m *= factor;
  p.fine_m *= factor;
  p.lateral_fine_m *= factor;
  p.far_m *= factor;
  return p;
}

PermittivityGrid::PermittivityGrid(std::vector<double> x_edges, std::vector<double> y_edges,
                                   std::vector<std::string> material_names,
                                   std::vector<Complex> material_eps,
                                   std::vector<std::uint8_t> cell_material, double wavelength_m)
    : x_(std::move(x_edges)),
      y_(std::move(y_edges)),
      names_(std::move(material_names)),
      eps_(std::move(material_eps)),
      cell_(std::move(cell_material)),
      wavelength_(wavelength_m) {
  if (x_.size() < 2 || y_.size() < 2) throw ConfigError("grid needs at least one cell per axis");
  auto increasing = [](const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
  };
  if (!increasing(x_) || !increasing(y_)) throw ConfigError("grid edges must be strictly increasing");
  if (cell_.size() != cell_count()) throw ConfigError("cell material array has wrong size");
  if (names_.size() != eps_.size()) throw ConfigError("material name/permittivity size mismatch");
}

double PermittivityGrid::material_area(const std::string& material) const {
  auto it = std::find(names_.begin(), names_.end(), material);
  if (it == names_.end()) return 0.0;
  const auto id = static_cast<std::uint8_t>(it - names_.begin());
  double area = 0.0;
  for (std::size_t iy = 0; iy < ny(); ++iy)
    for (std::size_t ix = 0; ix < nx(); ++ix)
      if (material_id(ix, iy) == id) area += dx(ix) * dy(iy);
  return area;
}

double PermittivityGrid::max_abs_imag_eps() const {
  double m = 0.0;
  for (std::size_t id = 0; id < eps_.size(); ++id) {
    if (std::find(cell_.begin(), cell_.end(), id) == cell_.end()) continue;
    m = std::max(m, std::abs(eps_[id].imag()));
  }
  return m;
}

void PermittivityGrid::write_eps_csv(std::ostream& real_out, std::ostream& imag_out) const {
  for (std::size_t iy = 0; iy < ny(); ++iy) {
    for (std::size_t ix = 0; ix < nx(); ++ix) {
      const char* sep = ix + 1 < nx() ? "," : "\n";
      real_out << eps(ix, iy).real() << sep;
      imag_out << eps(ix, iy).imag() << sep;
    }
  }
}

std::vector<double> mesh_axis(const std::vector<double>& breakpoints,
                              const std::vector<int>& min_cells_per_segment,
                              const std::function<double(double)>& size) {
  constexpr int samples = 512;
  std::vector<double> edges{breakpoints.front()};
  std::vector<double> cumulative(samples + 1);
  for (std::size_t s = 0; s + 1 < breakpoints.size(); ++s) {
    const double a = breakpoints[s];
    const double b = breakpoints[s + 1];
    const double h = (b - a) / samples;
    cumulative[0] = 0.0;
    for (int k = 0; k < samples; ++k)
      cumulative[k + 1] = cumulative[k] + h / size(a + (k + 0.5) * h);
    const double total = cumulative.back();
    const int n = std::max(min_cells_per_segment[s],
                           static_cast<int>(std::ceil(total * (1.0 - 1e-9))));
    int k = 0;
    for (int c = 1; c < n; ++c) {
      const double target = total * c / n;
      while (cumulative[k + 1] < target) ++k;
      const double t = (target - cumulative[k]) / (cumulative[k + 1] - cumulative[k]);
      edges.push_back(a + (k + t) * h);
    }
    edges.push_back(b);
  }
  return edges;
}

namespace {

// Distance from v to [lo, hi]; zero inside.
double distance_to(double v, double lo, double hi) {
  return v < lo ? lo - v : (v > hi ? v - hi : 0.0);
}

std::vector<double> unique_sorted(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  return out;
}

}  // namespace

PermittivityGrid rasterize(const CrossSection& cs, const ResolutionPolicy& policy) {
  const auto& p = policy;
  if (!(p.base_m > 0.0) || !(p.fine_m > 0.0) || !(p.lateral_fine_m > 0.0) || !(p.far_m > 0.0) ||
      p.band_m < 0.0 || !(p.grading > 0.0))
    throw ConfigError("resolution policy: sizes must be positive");
  if (p.far_m < p.base_m) throw ConfigError("resolution policy: far cell size must be >= base");

  const auto& stack = cs.stack();
  const auto& ridge = cs.ridge();
  const auto& wires = cs.wires();
  const double top = cs.top_surface();
  const double etch_level = top - ridge.etch_depth_m;
  const double half_w = 0.5 * cs.window().width_m;
  const double ridge_l = ridge.center_m - 0.5 * ridge.width_m;
  const double ridge_r = ridge.center_m + 0.5 * ridge.width_m;
  const double length_tol = 1e-13;

  // Breakpoints.
  std::vector<double> xb{-half_w, half_w, ridge_l, ridge_r};
  std::vector<double> yb{0.0, cs.window().height_m, etch_level};
  {
    double y = 0.0;
    for (const auto& l : stack.layers) {
      y += l.thickness_m;
      yb.push_back(y);
    }
  }
  double wire_top = top;
  if (wires) {
    if (p.fine_m > 0.5 * wires->thickness_m * (1.0 + 1e-12))
      throw ConfigError("resolution policy cannot place 2 cells across the wire thickness");
    for (int i = 0; i < wires->count; ++i) {
      const double l = wires->wire_left(i, ridge);
      xb.push_back(l);
      xb.push_back(l + wires->width_m);
    }
    wire_top = top + wires->thickness_m;
    yb.push_back(wire_top);
    if (wires->cap_thickness_m > 0.0) yb.push_back(wire_top + wires->cap_thickness_m);
  }
  xb = unique_sorted(std::move(xb), length_tol);
  yb = unique_sorted(std::move(yb), length_tol);

  const double core_lo = top - stack.core().thickness_m;
  const double core_hi = cs.solid_top();
  auto base_size = [&](double d) { return std::min(p.far_m, p.base_m + p.grading * std::max(0.0, d - p.core_band_m)); };

  // Lateral refinement concentrates on the wire sidewalls, where the
  // field normal to the metal is singular.
  std::vector<double> sidewalls;
  if (wires)
    for (int i = 0; i < wires->count; ++i) {
      const double l = wires->wire_left(i, ridge);
      sidewalls.push_back(l);
      sidewalls.push_back(l + wires->width_m);
    }
  auto size_x = [&](double x) {
    double h = base_size(distance_to(x, ridge_l, ridge_r));
    for (double e : sidewalls)
      h = std::min(h, p.lateral_fine_m + p.grading * distance_to(x, e - p.band_m, e + p.band_m));
    return h;
  };
  auto size_y = [&](double y) {
    double h = base_size(distance_to(y, core_lo, core_hi));
    if (wires) h = std::min(h, p.fine_m + p.grading * distance_to(y, top - p.band_m, wire_top + p.band_m));
    return h;
  };

  auto inside_wire_x = [&](double a, double b) {
    if (!wires) return false;
    const double mid = 0.5 * (a + b);
    for (int i = 0; i < wires->count; ++i) {
      const double l = wires->wire_left(i, ridge);
      if (mid > l && mid < l + wires->width_m) return true;
    }
    return false;
  };
  std::vector<int> min_x(xb.size() - 1, 1), min_y(yb.size() - 1, 1);
  for (std::size_t s = 0; s + 1 < xb.size(); ++s)
    if (inside_wire_x(xb[s], xb[s + 1])) min_x[s] = 4;
  for (std::size_t s = 0; s + 1 < yb.size(); ++s)
    if (wires && yb[s] >= top - length_tol && yb[s + 1] <= wire_top + length_tol) min_y[s] = 2;

  auto x = mesh_axis(xb, min_x, size_x);
  auto y = mesh_axis(yb, min_y, size_y);

  // Material table.
  const auto names = cs.material_names();
  std::vector<Complex> eps;
  for (const auto& n : names) eps.push_back(permittivity(cs.materials().at(n).index_at(cs.wavelength())));
  auto id_of = [&](const std::string& n) {
    return static_cast<std::uint8_t>(std::find(names.begin(), names.end(), n) - names.begin());
  };
  const auto ambient = id_of(stack.ambient);
  std::vector<std::uint8_t> layer_ids;
  std::vector<double> layer_tops;
  {
    double yy = 0.0;
    for (const auto& l : stack.layers) {
      yy += l.thickness_m;
      layer_ids.push_back(id_of(l.material));
      layer_tops.push_back(yy);
    }
  }

  auto material_at = [&](double xc, double yc) -> std::uint8_t {
    if (wires && yc > top) {
      const double cap_top = wire_top + wires->cap_thickness_m;
      if (yc < cap_top) {
        for (int i = 0; i < wires->count; ++i) {
          const double l = wires->wire_left(i, ridge);
          if (xc > l && xc < l + wires->width_m)
            return yc < wire_top ? id_of(wires->material) : id_of(wires->cap_material);
        }
      }
      return ambient;
    }
    if (yc > top) return ambient;
    const bool on_ridge = xc > ridge_l && xc < ridge_r;
    if (!on_ridge && yc > etch_level) return ambient;
    for (std::size_t i = 0; i < layer_tops.size(); ++i)
      if (yc < layer_tops[i]) return layer_ids[i];
    return ambient;
  };

  const std::size_t nx = x.size() - 1, ny = y.size() - 1;
  std::vector<std::uint8_t> cells(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const double yc = 0.5 * (y[iy] + y[iy + 1]);
    for (std::size_t ix = 0; ix < nx; ++ix)
      cells[ix + nx * iy] = material_at(0.5 * (x[ix] + x[ix + 1]), yc);
  }
  return PermittivityGrid(std::move(x), std::move(y), names, std::move(eps), std::move(cells),
                          cs.wavelength());
}

}  // namespace wspd
