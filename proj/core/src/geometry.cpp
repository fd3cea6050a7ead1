#include "wspd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "wspd/error.hpp"

namespace wspd {

double LayerStack::total_thickness() const {
  double t = 0.0;
  for (const auto& l : layers) t += l.thickness_m;
  return t;
}

double NanowireArray::wire_left(int i, const RidgeSpec& ridge) const {
  return ridge.center_m + offset_m - 0.5 * extent() + i * pitch_m;
}

double alignment_margin(const RidgeSpec& ridge, const NanowireArray& array) {
  return 0.5 * (ridge.width_m - array.extent()) - std::abs(array.offset_m);
}

CrossSection::CrossSection(MaterialLibrary materials, LayerStack stack, RidgeSpec ridge,
                           std::optional<NanowireArray> wires, Window window,
                           double wavelength_m)
    : materials_(std::move(materials)),
      stack_(std::move(stack)),
      ridge_(ridge),
      wires_(std::move(wires)),
      window_(window),
      wavelength_(wavelength_m) {
  validate();
}

double CrossSection::solid_top() const {
  double top = top_surface();
  if (wires_) top += wires_->thickness_m + wires_->cap_thickness_m;
  return top;
}

void CrossSection::validate() const {
  if (!(wavelength_ > 0.0)) throw ConfigError("wavelength must be positive");
  if (stack_.layers.empty()) throw ConfigError("layer stack needs at least one layer above the substrate");
  for (const auto& l : stack_.layers)
    if (!(l.thickness_m > 0.0)) throw ConfigError("layer '" + l.material + "': thickness must be > 0");
  if (!(ridge_.width_m > 0.0)) throw ConfigError("ridge width must be > 0");
  if (ridge_.etch_depth_m < 0.0 || ridge_.etch_depth_m > stack_.core().thickness_m)
    throw ConfigError("ridge etch depth must lie in [0, core thickness]");

  if (wires_) {
    const auto& w = *wires_;
    if (w.count < 1) throw ConfigError("wire count must be >= 1");
    if (!(w.width_m > 0.0) || !(w.thickness_m > 0.0))
      throw ConfigError("wire width and thickness must be > 0");
    if (w.count > 1 && w.pitch_m < w.width_m) throw ConfigError("wire pitch must be >= wire width");
    if (w.cap_thickness_m < 0.0) throw ConfigError("cap thickness must be >= 0");
    // Wires may only sit on the ridge top.
    const double left = w.wire_left(0, ridge_);
    const double right = left + w.extent();
    if (left < ridge_.center_m - 0.5 * ridge_.width_m - 1e-15 ||
        right > ridge_.center_m + 0.5 * ridge_.width_m + 1e-15)
      throw ConfigError("nanowire array extends beyond the ridge top");
  }

  const double half = 0.5 * window_.width_m;
  const double lateral = std::min(half - (ridge_.center_m + 0.5 * ridge_.width_m),
                                  (ridge_.center_m - 0.5 * ridge_.width_m) + half);
  const double below = top_surface() - stack_.core().thickness_m;
  const double above = window_.height_m - solid_top();
  const double tol = 1e-12;
  if (lateral < required_cladding_margin_m - tol)
    throw ConfigError("window leaves less than 1.5 um lateral margin around the ridge");
  if (below < required_cladding_margin_m - tol)
    throw ConfigError("less than 1.5 um of cladding below the core");
  if (above < required_cladding_margin_m - tol)
    throw ConfigError("window leaves less than 1.5 um of ambient above the structure");

  for (const auto& name : material_names()) {
    const auto& m = materials_.at(name);
    (void)m.index_at(wavelength_);
  }
}

double CrossSection::cladding_index() const {
  double n = materials_.at(stack_.ambient).index_at(wavelength_).real();
  for (std::size_t i = 0; i + 1 < stack_.layers.size(); ++i)
    n = std::max(n, materials_.at(stack_.layers[i].material).index_at(wavelength_).real());
  if (wires_ && wires_->cap_thickness_m > 0.0)
    n = std::max(n, materials_.at(wires_->cap_material).index_at(wavelength_).real());
  return n;
}

double CrossSection::max_index() const {
  double n = 0.0;
  for (const auto& name : material_names())
    n = std::max(n, materials_.at(name).index_at(wavelength_).real());
  return n;
}

std::vector<std::string> CrossSection::material_names() const {
  std::set<std::string> names{stack_.ambient};
  for (const auto& l : stack_.layers) names.insert(l.material);
  if (wires_) {
    names.insert(wires_->material);
    if (wires_->cap_thickness_m > 0.0) names.insert(wires_->cap_material);
  }
  return {names.begin(), names.end()};
}

CrossSection CrossSection::with_wires(std::optional<NanowireArray> wires) const {
  return {materials_, stack_, ridge_, std::move(wires), window_, wavelength_};
}
CrossSection CrossSection::with_window(Window window) const {
  return {materials_, stack_, ridge_, wires_, window, wavelength_};
}
CrossSection CrossSection::with_stack(LayerStack stack) const {
  return {materials_, std::move(stack), ridge_, wires_, window_, wavelength_};
}
CrossSection CrossSection::with_ridge(RidgeSpec ridge) const {
  return {materials_, stack_, ridge, wires_, window_, wavelength_};
}
CrossSection CrossSection::with_wavelength(double wavelength_m) const {
  return {materials_, stack_, ridge_, wires_, window_, wavelength_m};
}

}  // namespace wspd
