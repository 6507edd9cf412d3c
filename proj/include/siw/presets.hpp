#pragma once

// Named S-band designs: a 43.25 mm post-wall guide on h = 1.5 mm, eps_r = 4.3
// laminate and the devices built from it.

#include <string>

#include "siw/geometry.hpp"
#include "siw/units.hpp"
#include "siw/waveguide.hpp"

namespace siw::presets {

inline constexpr FrequencyBand kSBand{2.1e9, 3.0e9};

inline Substrate sband_substrate() { return {1.5e-3, 4.3, 0.0}; }

inline SiwSpec sband_siw() { return {sband_substrate(), 1e-3, 2e-3, 43.25e-3}; }

/// Hollow WR-340 guide the post-wall guide replaces.
inline RectGuideSpec wr340() { return {86.36e-3, {43.18e-3, 1.0, 0.0}}; }

inline constexpr double kRsiwLength = 39.8e-3;

inline DeviceLayout rsiw() {
  auto layout = generate_rsiw(sband_siw(), kRsiwLength);
  layout.metadata["preset"] = "paper-sband-rsiw";
  return layout;
}

inline TaperDims taper() { return {3.6e-3, 27.1e-3, 61.5e-3, kRsiwLength}; }

inline constexpr double kDividerArm = 21.3e-3;
inline constexpr double kDividerPostRadius = 1.2e-3;
inline constexpr double kDividerPostOffset = 20.57e-3;

inline DeviceLayout divider(double post_radius = kDividerPostRadius, double post_offset = kDividerPostOffset) {
  auto layout = generate_tee_divider(sband_siw(), kDividerArm, post_radius, post_offset);
  layout.metadata["preset"] = "paper-sband-divider";
  return layout;
}

inline CouplerDims coupler_dims() { return {112e-3, 50e-3, 3e-3, 30e-3, 8e-3}; }

inline DeviceLayout coupler() {
  auto layout = generate_aperture_coupler(sband_siw(), coupler_dims());
  layout.metadata["preset"] = "paper-sband-coupler";
  return layout;
}

inline constexpr double kCirculatorArm = 20e-3;
inline constexpr double kFerriteRadius = 6e-3;
inline constexpr double kFerriteEps = 13.7;
inline constexpr double kFerriteHeight = 1.5e-3;
inline constexpr double kFerrite4PiMsGauss = 5000.0;

inline DeviceLayout circulator() {
  auto layout = generate_circulator_skeleton(sband_siw(), kCirculatorArm, kFerriteRadius, kFerriteEps);
  layout.metadata["preset"] = "paper-sband-circulator";
  layout.metadata["ferrite_height"] = detail::fmt(kFerriteHeight);
  layout.metadata["ferrite_4pi_ms_gauss"] = detail::fmt(kFerrite4PiMsGauss);
  return layout;
}

}  // namespace siw::presets
