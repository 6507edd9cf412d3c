#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "siw/error.hpp"

namespace siw {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s, exact
inline constexpr double kPi = std::numbers::pi;

/// Closed frequency interval in hertz.
struct FrequencyBand {
  double lo_hz = 0.0;
  double hi_hz = 0.0;

  double width() const { return hi_hz - lo_hz; }
  double center() const { return 0.5 * (lo_hz + hi_hz); }
  bool contains(double f) const { return f >= lo_hz && f <= hi_hz; }
};

inline void validate_band(const FrequencyBand& band) {
  if (!(band.lo_hz > 0.0) || !(band.hi_hz >= band.lo_hz) || !std::isfinite(band.hi_hz)) {
    throw ValidationError("frequency band must satisfy 0 < lo <= hi");
  }
}

/// Uniform samples over a band; a degenerate band yields a single sample.
inline std::vector<double> uniform_frequencies(const FrequencyBand& band, int npoints) {
  validate_band(band);
  if (npoints < 2) throw ValidationError("need at least 2 frequency points");
  if (band.hi_hz == band.lo_hz) return {band.lo_hz};
  std::vector<double> f(static_cast<std::size_t>(npoints));
  const double step = band.width() / (npoints - 1);
  for (int i = 0; i < npoints; ++i) f[static_cast<std::size_t>(i)] = band.lo_hz + step * i;
  f.back() = band.hi_hz;
  return f;
}

namespace units {

inline double parse_number(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty() || !std::isfinite(value)) {
    throw ValidationError("malformed number '" + std::string(text) + "'");
  }
  return value;
}

namespace detail {

struct Suffix {
  std::string_view name;
  double scale;
};

template <std::size_t N>
double parse_with_suffix(std::string_view text, const Suffix (&suffixes)[N], std::string_view what) {
  for (const auto& s : suffixes) {
    if (text.size() > s.name.size() && text.ends_with(s.name)) {
      return parse_number(text.substr(0, text.size() - s.name.size())) * s.scale;
    }
  }
  throw ValidationError(std::string(what) + " '" + std::string(text) + "' needs a unit suffix");
}

inline constexpr Suffix kLengthSuffixes[] = {{"mm", 1e-3}, {"um", 1e-6}, {"m", 1.0}};
inline constexpr Suffix kFrequencySuffixes[] = {{"GHz", 1e9}, {"MHz", 1e6}, {"kHz", 1e3}, {"Hz", 1.0}};

}  // namespace detail

/// "1.5mm" -> 1.5e-3. Bare numbers are rejected.
inline double parse_length(std::string_view text) {
  return detail::parse_with_suffix(text, detail::kLengthSuffixes, "length");
}

/// "2.5GHz" -> 2.5e9. Bare numbers are rejected.
inline double parse_frequency(std::string_view text) {
  return detail::parse_with_suffix(text, detail::kFrequencySuffixes, "frequency");
}

/// "lo:hi<unit>" where the trailing unit applies to both ends, or "lo<unit>:hi<unit>".
template <typename Parse>
std::pair<double, double> parse_range(std::string_view text, Parse parse) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ValidationError("range '" + std::string(text) + "' needs lo:hi");
  std::string lo(text.substr(0, colon));
  const std::string_view hi = text.substr(colon + 1);
  std::size_t unit_start = hi.size();
  while (unit_start > 0 && std::isalpha(static_cast<unsigned char>(hi[unit_start - 1]))) --unit_start;
  const bool lo_has_unit = !lo.empty() && std::isalpha(static_cast<unsigned char>(lo.back()));
  if (!lo_has_unit) lo += std::string(hi.substr(unit_start));
  return {parse(lo), parse(hi)};
}

inline FrequencyBand parse_band(std::string_view text) {
  const auto [lo, hi] = parse_range(text, parse_frequency);
  FrequencyBand band{lo, hi};
  validate_band(band);
  return band;
}

}  // namespace units
}  // namespace siw
