#pragma once

#include <numbers>
#include <optional>
#include <string_view>

#include "bellclick/field_model.hpp"

namespace bellclick::presets {

using std::numbers::pi;

/// s_x = (1,1)/sqrt2, s_y = (0,1), p_u at pi/3, p_v = (1,-1)/sqrt2.
inline MeasurementSettings fig2_settings() {
  return MeasurementSettings::from_angles(pi / 4, pi / 2, pi / 3, -pi / 4);
}

/// s_x = (1,0), s_y = (0,1), p_u = (1,1)/sqrt2, p_v = (1,-1)/sqrt2.
inline MeasurementSettings fig4_settings() {
  return MeasurementSettings::from_angles(0.0, pi / 2, pi / 4, -pi / 4);
}

/// Settings at which the maximally entangled state breaks the nonlinear
/// criterion.
inline MeasurementSettings nl_entangled_settings() {
  return MeasurementSettings::from_angles(1.7, 1.5, 0.0, 6.1);
}

inline SeparableState fig3_separable() { return {1.0, pi / 2, pi / 3}; }
inline SeparableState fig4_separable() { return {1.0, pi / 3, pi / 8}; }

inline std::optional<MeasurementSettings> settings_by_name(
    std::string_view name) {
  if (name == "fig2-settings") return fig2_settings();
  if (name == "fig4-settings") return fig4_settings();
  if (name == "nl-entangled") return nl_entangled_settings();
  return std::nullopt;
}

}  // namespace bellclick::presets
