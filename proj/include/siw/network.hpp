#pragma once

// N-port scattering data, ideal device matrices and band metrics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "siw/error.hpp"
#include "siw/units.hpp"

namespace siw {

using Complex = std::complex<double>;
using SMatrix = Eigen::MatrixXcd;

/// Frequency-indexed N x N scattering matrices. Port indices in the accessors
/// are 1-based, matching S_ij notation.
struct ScatteringData {
  std::vector<double> frequencies;
  std::vector<SMatrix> matrices;
  double reference_impedance = 50.0;

  int ports() const { return matrices.empty() ? 0 : static_cast<int>(matrices.front().rows()); }
  std::size_t size() const { return frequencies.size(); }

  Complex s(std::size_t k, int i, int j) const { return matrices.at(k)(i - 1, j - 1); }

  void validate() const {
    if (frequencies.size() != matrices.size()) throw ValidationError("frequency and matrix counts differ");
    const int n = ports();
    for (std::size_t k = 0; k < matrices.size(); ++k) {
      if (matrices[k].rows() != n || matrices[k].cols() != n) throw ValidationError("matrices must all be N x N");
      if (!matrices[k].allFinite()) throw ValidationError("scattering matrix has non-finite entries");
      if (!std::isfinite(frequencies[k])) throw ValidationError("non-finite frequency");
      if (k > 0 && !(frequencies[k] > frequencies[k - 1])) {
        throw ValidationError("frequencies must be strictly increasing");
      }
    }
  }
};

inline double to_db(Complex s) { return 20.0 * std::log10(std::abs(s)); }
inline double to_db(double magnitude) { return 20.0 * std::log10(magnitude); }
inline double degrees(double radians) { return radians * 180.0 / kPi; }
inline double radians(double deg) { return deg * kPi / 180.0; }

/// S13 = S21 = S32 = e^{j phi}.
inline SMatrix ideal_circulator(double phi) {
  SMatrix s = SMatrix::Zero(3, 3);
  const Complex e = std::polar(1.0, phi);
  s(0, 2) = e;
  s(1, 0) = e;
  s(2, 1) = e;
  return s;
}

/// Matched-input lossless T: S21 = S31 = 1/sqrt2, S22 = S33 = 1/2, S23 = S32 = -1/2.
inline SMatrix ideal_equal_divider() {
  const double a = 1.0 / std::sqrt(2.0);
  SMatrix s(3, 3);
  s << 0.0, a, a,  //
      a, 0.5, -0.5,  //
      a, -0.5, 0.5;
  return s;
}

inline SMatrix ideal_hybrid_coupler() {
  const Complex j(0.0, 1.0);
  SMatrix s(4, 4);
  s << 0.0, 1.0, j, 0.0,  //
      1.0, 0.0, 0.0, j,   //
      j, 0.0, 0.0, 1.0,   //
      0.0, j, 1.0, 0.0;
  return s / std::sqrt(2.0);
}

inline bool is_unitary(const SMatrix& s, double tol) {
  if (s.rows() != s.cols()) throw ValidationError("is_unitary needs a square matrix");
  const SMatrix defect = s * s.adjoint() - SMatrix::Identity(s.rows(), s.cols());
  return defect.cwiseAbs().maxCoeff() <= tol;
}

inline bool is_reciprocal(const SMatrix& s, double tol) {
  if (s.rows() != s.cols()) throw ValidationError("is_reciprocal needs a square matrix");
  if (s.rows() == 0) return true;
  return (s - s.transpose()).cwiseAbs().maxCoeff() <= tol;
}

namespace detail {

inline void check_port(const ScatteringData& data, int port) {
  if (port < 1 || port > data.ports()) {
    throw ValidationError("port " + std::to_string(port) + " out of range 1.." + std::to_string(data.ports()));
  }
}

inline double lerp(double x0, double y0, double x1, double y1, double x) {
  return x1 == x0 ? y0 : y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

}  // namespace detail

struct BandMetrics {
  double threshold_db = -15.0;
  std::vector<std::pair<double, double>> sub_bands;  // Hz
  double fractional_bandwidth_pct = 0.0;
  double worst_db = 0.0;  // highest |S_pp| in band
  double best_db = 0.0;   // lowest |S_pp| in band
};

/// Share of `band` over which |S_pp| stays below `threshold_db`, with |S_pp| in
/// dB interpolated linearly between samples.
inline BandMetrics return_loss_bandwidth(const ScatteringData& data, int port, const FrequencyBand& band,
                                         double threshold_db = -15.0) {
  detail::check_port(data, port);
  if (data.size() < 2) throw ValidationError("need at least two samples");
  if (!(band.hi_hz > band.lo_hz)) throw ValidationError("band must have positive width");
  if (band.lo_hz < data.frequencies.front() || band.hi_hz > data.frequencies.back()) {
    throw ValidationError("band exceeds the data's frequency range");
  }
  std::vector<double> f, db;
  f.push_back(band.lo_hz);
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (data.frequencies[k] > band.lo_hz && data.frequencies[k] < band.hi_hz) f.push_back(data.frequencies[k]);
  }
  f.push_back(band.hi_hz);
  auto sample_db = [&](double x) {
    const auto it = std::lower_bound(data.frequencies.begin(), data.frequencies.end(), x);
    const auto k = static_cast<std::size_t>(it - data.frequencies.begin());
    if (k < data.size() && data.frequencies[k] == x) return to_db(data.s(k, port, port));
    return detail::lerp(data.frequencies[k - 1], to_db(data.s(k - 1, port, port)), data.frequencies[k],
                        to_db(data.s(k, port, port)), x);
  };
  for (double x : f) db.push_back(sample_db(x));

  BandMetrics m;
  m.threshold_db = threshold_db;
  m.worst_db = *std::max_element(db.begin(), db.end());
  m.best_db = *std::min_element(db.begin(), db.end());
  auto add = [&m](double a, double b) {
    if (b <= a) return;
    if (!m.sub_bands.empty() && m.sub_bands.back().second == a) {
      m.sub_bands.back().second = b;
    } else {
      m.sub_bands.emplace_back(a, b);
    }
  };
  for (std::size_t k = 0; k + 1 < f.size(); ++k) {
    const double ga = db[k] - threshold_db, gb = db[k + 1] - threshold_db;
    if (ga < 0.0 && gb < 0.0) {
      add(f[k], f[k + 1]);
    } else if (ga < 0.0 && gb >= 0.0) {
      add(f[k], f[k] + (f[k + 1] - f[k]) * ga / (ga - gb));
    } else if (ga >= 0.0 && gb < 0.0) {
      add(f[k] + (f[k + 1] - f[k]) * ga / (ga - gb), f[k + 1]);
    }
  }
  double measure = 0.0;
  for (const auto& [a, b] : m.sub_bands) measure += b - a;
  m.fractional_bandwidth_pct = std::clamp(100.0 * measure / band.width(), 0.0, 100.0);
  return m;
}

struct InsertionLossStats {
  double min_db = 0.0;
  double max_db = 0.0;
  double mean_db = 0.0;  // mean of the dB samples
};

inline InsertionLossStats insertion_loss_stats(const ScatteringData& data, int from, int to, const FrequencyBand& band) {
  detail::check_port(data, from);
  detail::check_port(data, to);
  std::vector<double> db;
  const double slack = 1e-9 * std::max(1.0, band.hi_hz);
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double f = data.frequencies[k];
    if (f >= band.lo_hz - slack && f <= band.hi_hz + slack) db.push_back(to_db(data.s(k, to, from)));
  }
  if (db.empty()) throw ValidationError("no samples inside the band");
  InsertionLossStats st;
  st.min_db = *std::min_element(db.begin(), db.end());
  st.max_db = *std::max_element(db.begin(), db.end());
  double sum = 0.0;
  for (double v : db) sum += v;
  st.mean_db = sum / static_cast<double>(db.size());
  return st;
}

struct PhaseCurve {
  std::vector<double> frequencies;
  std::vector<std::optional<double>> degrees;  // empty where a magnitude vanished

  std::vector<double> undefined_frequencies() const {
    std::vector<double> out;
    for (std::size_t k = 0; k < degrees.size(); ++k) {
      if (!degrees[k]) out.push_back(frequencies[k]);
    }
    return out;
  }
};

/// Unwrapped angle(S_a,ref) - angle(S_b,ref) in degrees, seeded at the lowest
/// frequency, then shifted by whole turns so the mean falls in [-180, 180].
inline PhaseCurve phase_difference_curve(const ScatteringData& data, int a, int b, int ref) {
  detail::check_port(data, a);
  detail::check_port(data, b);
  detail::check_port(data, ref);
  PhaseCurve curve;
  curve.frequencies = data.frequencies;
  std::optional<double> previous;
  double sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Complex sa = data.s(k, a, ref), sb = data.s(k, b, ref);
    if (std::abs(sa) == 0.0 || std::abs(sb) == 0.0) {
      curve.degrees.emplace_back();
      continue;
    }
    double d = degrees(std::arg(sa) - std::arg(sb));
    if (previous) {
      d -= 360.0 * std::round((d - *previous) / 360.0);
    } else {
      d -= 360.0 * std::round(d / 360.0);
    }
    previous = d;
    curve.degrees.emplace_back(d);
    sum += d;
    ++count;
  }
  if (count > 0) {
    const double shift = 360.0 * std::round(sum / count / 360.0);
    for (auto& d : curve.degrees) {
      if (d) *d -= shift;
    }
  }
  return curve;
}

/// Differential phase (beta1 - beta2) * length of two modes over a common length.
inline double phase_diff_from_betas(double beta1, double beta2, double length) {
  if (!(length >= 0.0)) throw ValidationError("length must be >= 0");
  return (beta1 - beta2) * length;
}

/// Flat "key = value unit" report.
struct MetricsReport {
  struct Entry {
    std::string key;
    std::string value;
    std::string unit;
  };
  std::vector<Entry> entries;

  void add(std::string key, double value, std::string unit) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", value + 0.0);
    entries.push_back({std::move(key), buf, std::move(unit)});
  }
  void add_text(std::string key, std::string value, std::string unit) {
    entries.push_back({std::move(key), std::move(value), std::move(unit)});
  }

  std::string to_text() const {
    std::string out;
    for (const auto& e : entries) {
      out += e.key + " = " + e.value;
      if (!e.unit.empty()) out += " " + e.unit;
      out += '\n';
    }
    return out;
  }
};

}  // namespace siw
