#pragma once

// Closed-form rectangular-waveguide and SIW design mathematics.
// All lengths are meters, frequencies hertz.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "siw/error.hpp"
#include "siw/units.hpp"

namespace siw {

struct Substrate {
  double height = 0.0;
  double eps_r = 1.0;
  double loss_tangent = 0.0;

  /// Complex relative permittivity eps_r (1 - j tan d).
  std::complex<double> permittivity() const { return {eps_r, -eps_r * loss_tangent}; }

  void validate() const {
    if (!(height > 0.0)) throw ValidationError("substrate height must be positive");
    if (!(eps_r >= 1.0)) throw ValidationError("substrate eps_r must be >= 1");
    if (!(loss_tangent >= 0.0)) throw ValidationError("substrate loss tangent must be >= 0");
  }
};

/// Post-wall guide: two rows of vias of diameter `via_diameter` at `pitch`,
/// rows `row_spacing` apart center to center.
struct SiwSpec {
  Substrate substrate;
  double via_diameter = 0.0;
  double pitch = 0.0;
  double row_spacing = 0.0;

  void validate() const {
    substrate.validate();
    if (!(via_diameter > 0.0 && via_diameter < pitch)) throw ValidationError("SIW needs 0 < d < p");
    if (!(row_spacing > via_diameter)) throw ValidationError("SIW needs W_SIW > d");
  }
};

/// Dielectric-filled rectangular guide of broad-wall width `width`.
struct RectGuideSpec {
  double width = 0.0;
  Substrate substrate;

  void validate() const {
    if (!(width > 0.0)) throw ValidationError("guide width must be positive");
    substrate.validate();
  }
};

inline double te_cutoff_frequency(const RectGuideSpec& guide, int n) {
  if (n < 1) throw ValidationError("mode index must be >= 1");
  guide.validate();
  return n * kSpeedOfLight / (2.0 * guide.width * std::sqrt(guide.substrate.eps_r));
}

/// gamma = alpha + j beta of TE_n0. Above cutoff gamma = j beta, below it is
/// pure attenuation; both vanish at cutoff.
inline std::complex<double> propagation_constant(const RectGuideSpec& guide, double f, int n) {
  if (!(f > 0.0)) throw ValidationError("frequency must be positive");
  const double fc = te_cutoff_frequency(guide, n);
  const double k = 2.0 * kPi * f * std::sqrt(guide.substrate.eps_r) / kSpeedOfLight;
  const double ratio = fc / f;
  if (ratio <= 1.0) return {0.0, k * std::sqrt(1.0 - ratio * ratio)};
  return {k * std::sqrt(ratio * ratio - 1.0), 0.0};
}

struct DispersionEntry {
  double frequency = 0.0;
  int mode = 1;
  std::optional<double> beta;   // rad/m, propagating (or exactly at cutoff)
  std::optional<double> alpha;  // Np/m, evanescent
};

struct DispersionTable {
  std::vector<double> frequencies;
  std::vector<int> modes;
  std::vector<DispersionEntry> entries;  // frequency-major

  const DispersionEntry& at(std::size_t freq_index, std::size_t mode_index) const {
    return entries.at(freq_index * modes.size() + mode_index);
  }

  /// CSV: freq_hz,mode,beta_rad_per_m,alpha_np_per_m with the inapplicable column empty.
  std::string to_csv() const {
    std::ostringstream out;
    out.precision(12);
    out << "freq_hz,mode,beta_rad_per_m,alpha_np_per_m\n";
    for (const auto& e : entries) {
      out << e.frequency << ',' << e.mode << ',';
      if (e.beta) out << *e.beta;
      out << ',';
      if (e.alpha) out << *e.alpha;
      out << '\n';
    }
    return out.str();
  }
};

inline DispersionEntry dispersion_entry(const RectGuideSpec& guide, double f, int n) {
  const auto gamma = propagation_constant(guide, f, n);
  DispersionEntry e{f, n, std::nullopt, std::nullopt};
  if (gamma.real() > 0.0) {
    e.alpha = gamma.real();
  } else {
    e.beta = gamma.imag();
  }
  return e;
}

inline DispersionTable dispersion_curve(const RectGuideSpec& guide, const FrequencyBand& band,
                                        const std::vector<int>& modes, int npoints) {
  if (modes.empty()) throw ValidationError("dispersion_curve needs at least one mode");
  DispersionTable table;
  table.frequencies = uniform_frequencies(band, npoints);
  table.modes = modes;
  table.entries.reserve(table.frequencies.size() * modes.size());
  for (double f : table.frequencies) {
    for (int n : modes) table.entries.push_back(dispersion_entry(guide, f, n));
  }
  return table;
}

/// W_eq = W_SIW - d^2 / (0.95 p).
inline double equivalent_width(const SiwSpec& spec) {
  spec.validate();
  const double w = spec.row_spacing - spec.via_diameter * spec.via_diameter / (0.95 * spec.pitch);
  if (!(w > 0.0)) throw ValidationError("equivalent width is not positive; geometry is meaningless");
  return w;
}

/// Inverse of equivalent_width for a given post lattice.
inline double siw_width_for_equivalent(double w_eq, double via_diameter, double pitch) {
  if (!(w_eq > 0.0)) throw ValidationError("equivalent width must be positive");
  if (via_diameter == 0.0) return w_eq;
  if (!(pitch > 0.0)) throw ValidationError("pitch must be positive");
  return w_eq + via_diameter * via_diameter / (0.95 * pitch);
}

inline RectGuideSpec equivalent_guide(const SiwSpec& spec) { return {equivalent_width(spec), spec.substrate}; }

struct DesignRule {
  std::string id;
  std::string description;
  bool pass = false;
  double measured = 0.0;
  double limit = 0.0;
};

struct DesignRuleReport {
  std::vector<DesignRule> rules;
  bool pass = true;
  std::string note;

  std::string to_text() const {
    std::ostringstream out;
    out.precision(6);
    for (const auto& r : rules) {
      out << (r.pass ? "PASS " : "FAIL ") << r.id << ": " << r.description << " (measured " << r.measured * 1e3
          << " mm, limit " << r.limit * 1e3 << " mm)\n";
    }
    if (!note.empty()) out << "note: " << note << '\n';
    return out.str();
  }
};

/// Rule A: p < lambda0 / (2 sqrt(eps_r)) at the top of the band.
/// Rule B: p < 4 d.
inline DesignRuleReport validate_design_rules(const SiwSpec& spec, const FrequencyBand& band) {
  validate_band(band);
  DesignRuleReport report;
  const double lambda0 = kSpeedOfLight / band.hi_hz;
  const double limit_a = lambda0 / (2.0 * std::sqrt(spec.substrate.eps_r));
  report.rules.push_back({"A", "pitch below half the in-dielectric wavelength at f_max", spec.pitch < limit_a,
                          spec.pitch, limit_a});
  const double limit_b = 4.0 * spec.via_diameter;
  report.rules.push_back({"B", "pitch below four via diameters", spec.pitch < limit_b, spec.pitch, limit_b});
  for (const auto& r : report.rules) report.pass = report.pass && r.pass;
  report.note =
      "rule A limit is lambda0 / (2 sqrt(eps_r)), half the wavelength in the dielectric at f_max";
  return report;
}

/// Ferrite disk radius R_f = 1.84 c / (omega0 sqrt(eps_f)).
inline double ferrite_radius(double f0, double eps_f) {
  if (!(f0 > 0.0)) throw ValidationError("operating frequency must be positive");
  if (!(eps_f >= 1.0)) throw ValidationError("ferrite permittivity must be >= 1");
  return 1.84 * kSpeedOfLight / (2.0 * kPi * f0 * std::sqrt(eps_f));
}

namespace microstrip {

inline constexpr double kFreeSpaceImpedance = 376.730313668;

/// Hammerstad-Jensen quasi-static effective permittivity for u = W/h.
inline double effective_permittivity(double u, double eps_r) {
  const double u4 = u * u * u * u;
  const double a = 1.0 + std::log((u4 + (u / 52.0) * (u / 52.0)) / (u4 + 0.432)) / 49.0 +
                   std::log(1.0 + std::pow(u / 18.1, 3.0)) / 18.7;
  const double b = 0.564 * std::pow((eps_r - 0.9) / (eps_r + 3.0), 0.053);
  return 0.5 * (eps_r + 1.0) + 0.5 * (eps_r - 1.0) * std::pow(1.0 + 10.0 / u, -a * b);
}

/// Hammerstad-Jensen quasi-static characteristic impedance for u = W/h.
inline double characteristic_impedance(double u, double eps_r) {
  const double f = 6.0 + (2.0 * kPi - 6.0) * std::exp(-std::pow(30.666 / u, 0.7528));
  const double z_air = kFreeSpaceImpedance / (2.0 * kPi) * std::log(f / u + std::sqrt(1.0 + 4.0 / (u * u)));
  return z_air / std::sqrt(effective_permittivity(u, eps_r));
}

/// Strip width for a target impedance by bisection on log(W/h).
inline double synthesize_width(double z0, const Substrate& substrate) {
  if (!(z0 > 0.0)) throw ValidationError("target impedance must be positive");
  substrate.validate();
  double lo = std::log(1e-3), hi = std::log(1e3);
  const double z_narrow = characteristic_impedance(std::exp(lo), substrate.eps_r);
  const double z_wide = characteristic_impedance(std::exp(hi), substrate.eps_r);
  if (!(z0 <= z_narrow && z0 >= z_wide)) {
    throw ValidationError("impedance " + std::to_string(z0) + " ohm is unreachable on this substrate");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (characteristic_impedance(std::exp(mid), substrate.eps_r) > z0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi)) * substrate.height;
}

}  // namespace microstrip

struct TaperDims {
  double strip_width = 0.0;   // W_mst
  double taper_width = 0.0;   // W_T
  double taper_length = 0.0;  // L_T
  std::optional<double> guide_length;  // L, only known for presets
};

struct TaperOptions {
  double center_frequency = 2.55e9;
  double quarter_wave_multiplier = 1.0;
};

/// Initial microstrip-to-SIW taper sizing. W_T follows the exponential
/// W_eq / W_T rule of tapered SIW transitions; L_T is a multiple of the quarter
/// guided wavelength of the equivalent guide at the band center.
inline TaperDims taper_initial_dims(double z0, const Substrate& substrate, const SiwSpec& rsiw,
                                    const TaperOptions& options = {}) {
  TaperDims dims;
  dims.strip_width = microstrip::synthesize_width(z0, substrate);
  const double w_eq = equivalent_width(rsiw);
  const double er = substrate.eps_r;
  double w_t = 0.5 * w_eq;
  for (int it = 0; it < 100; ++it) {
    const double eps_eff = 0.5 * (er + 1.0) + 0.5 * (er - 1.0) / std::sqrt(1.0 + 12.0 * substrate.height / w_t);
    const double next = w_eq / (4.38 * std::exp(-0.627 * er / eps_eff));
    if (std::abs(next - w_t) < 1e-15) break;
    w_t = next;
  }
  dims.taper_width = std::clamp(w_t, dims.strip_width, w_eq);
  const auto gamma = propagation_constant({w_eq, substrate}, options.center_frequency, 1);
  if (!(gamma.imag() > 0.0)) throw ValidationError("band center is below the guide cutoff");
  const double lambda_g = 2.0 * kPi / gamma.imag();
  dims.taper_length = options.quarter_wave_multiplier * lambda_g / 4.0;
  return dims;
}

}  // namespace siw
