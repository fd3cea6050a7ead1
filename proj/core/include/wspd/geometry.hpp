#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wspd/materials.hpp"

namespace wspd {

struct Layer {
  std::string material;
  double thickness_m = 0.0;
};

/// Epitaxial stack. `layers` run bottom-to-top above the semi-infinite
/// substrate; the topmost layer is the guiding core into which the ridge is
/// etched.
struct LayerStack {
  std::string substrate;
  std::vector<Layer> layers;
  std::string ambient = "air";

  double total_thickness() const;
  const Layer& core() const { return layers.back(); }
};

struct RidgeSpec {
  double width_m = 0.0;
  double etch_depth_m = 0.0;
  double center_m = 0.0;
};

struct NanowireArray {
  int count = 1;
  double width_m = 0.0;
  double pitch_m = 0.0;
  double thickness_m = 0.0;
  std::string material = "NbN";
  std::string cap_material = "SiOx";
  double cap_thickness_m = 0.0;
  double offset_m = 0.0;

  /// (count - 1) * pitch + width.
  double extent() const { return (count - 1) * pitch_m + width_m; }
  /// Left edge of wire `i` relative to the ridge center.
  double wire_left(int i, const RidgeSpec& ridge) const;
};

/// Lateral clearance between array edge and ridge edge. Negative means the
/// array hangs off the ridge.
double alignment_margin(const RidgeSpec& ridge, const NanowireArray& array);

/// Computational window. Centered laterally on x = 0; its bottom edge is the
/// substrate interface (y = 0), so the substrate itself is never meshed.
struct Window {
  double width_m = 0.0;
  double height_m = 0.0;
};

inline constexpr double required_cladding_margin_m = 1.5e-6;

class CrossSection {
 public:
  CrossSection(MaterialLibrary materials, LayerStack stack, RidgeSpec ridge,
               std::optional<NanowireArray> wires, Window window, double wavelength_m);

  const MaterialLibrary& materials() const noexcept { return materials_; }
  const LayerStack& stack() const noexcept { return stack_; }
  const RidgeSpec& ridge() const noexcept { return ridge_; }
  const std::optional<NanowireArray>& wires() const noexcept { return wires_; }
  const Window& window() const noexcept { return window_; }
  double wavelength() const noexcept { return wavelength_; }

  /// y of the ridge top surface.
  double top_surface() const { return stack_.total_thickness(); }
  /// Highest solid point (ridge top, or cap top when wires are present).
  double solid_top() const;

  /// Largest real index among cladding materials (every layer except the
  /// core, the ambient and the cap), evaluated at the wavelength.
  double cladding_index() const;
  /// Largest real index of any material present.
  double max_index() const;

  /// Material names appearing in the cross-section, sorted.
  std::vector<std::string> material_names() const;

  /// Copies with a single field changed (validation re-runs).
  CrossSection with_wires(std::optional<NanowireArray> wires) const;
  CrossSection with_window(Window window) const;
  CrossSection with_stack(LayerStack stack) const;
  CrossSection with_ridge(RidgeSpec ridge) const;
  CrossSection with_wavelength(double wavelength_m) const;

 private:
  void validate() const;

  MaterialLibrary materials_;
  LayerStack stack_;
  RidgeSpec ridge_;
  std::optional<NanowireArray> wires_;
  Window window_;
  double wavelength_;
};

}  // namespace wspd
