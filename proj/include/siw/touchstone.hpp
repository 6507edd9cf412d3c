#pragma once

// Touchstone v1 (.s1p - .s4p) reader and writer, plus a flat CSV export.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "siw/error.hpp"
#include "siw/network.hpp"
#include "siw/text.hpp"

namespace siw {

enum class FrequencyUnit { Hz, kHz, MHz, GHz };
enum class TouchstoneFormat { MA, DB, RI };

struct TouchstoneOptions {
  FrequencyUnit unit = FrequencyUnit::GHz;
  TouchstoneFormat format = TouchstoneFormat::MA;
  double reference_resistance = 50.0;
};

inline double unit_scale(FrequencyUnit u) {
  switch (u) {
    case FrequencyUnit::Hz: return 1.0;
    case FrequencyUnit::kHz: return 1e3;
    case FrequencyUnit::MHz: return 1e6;
    case FrequencyUnit::GHz: return 1e9;
  }
  return 1.0;
}

inline const char* unit_name(FrequencyUnit u) {
  switch (u) {
    case FrequencyUnit::Hz: return "Hz";
    case FrequencyUnit::kHz: return "kHz";
    case FrequencyUnit::MHz: return "MHz";
    case FrequencyUnit::GHz: return "GHz";
  }
  return "GHz";
}

inline const char* format_name(TouchstoneFormat f) {
  switch (f) {
    case TouchstoneFormat::MA: return "MA";
    case TouchstoneFormat::DB: return "DB";
    case TouchstoneFormat::RI: return "RI";
  }
  return "MA";
}

namespace detail {

// Magnitudes below this are written as this floor in DB format.
inline constexpr double kDbFloor = -400.0;

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v + 0.0);
  return buf;
}

inline std::pair<double, double> encode(Complex s, TouchstoneFormat fmt) {
  switch (fmt) {
    case TouchstoneFormat::RI: return {s.real(), s.imag()};
    case TouchstoneFormat::MA: return {std::abs(s), degrees(std::arg(s))};
    case TouchstoneFormat::DB: {
      const double mag = std::abs(s);
      return {mag > 0.0 ? std::max(to_db(mag), kDbFloor) : kDbFloor, degrees(std::arg(s))};
    }
  }
  return {0.0, 0.0};
}

inline Complex decode(double a, double b, TouchstoneFormat fmt) {
  switch (fmt) {
    case TouchstoneFormat::RI: return {a, b};
    case TouchstoneFormat::MA: return std::polar(a, radians(b));
    case TouchstoneFormat::DB: return std::polar(std::pow(10.0, a / 20.0), radians(b));
  }
  return {};
}

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

/// Touchstone v1 text. 1- and 2-port data take one line per frequency (2-port
/// order S11 S21 S12 S22); 3- and 4-port data take one row per line.
inline std::string write_touchstone(const ScatteringData& data, const TouchstoneOptions& opts = {},
                                    const std::vector<std::string>& comments = {}) {
  data.validate();
  const int n = data.ports();
  if (n < 1 || n > 4) throw ValidationError("Touchstone v1 writer supports 1 to 4 ports");
  std::string out;
  for (const auto& c : comments) out += "! " + c + '\n';
  out += std::string("# ") + unit_name(opts.unit) + " S " + format_name(opts.format) + " R " +
         detail::num(opts.reference_resistance) + '\n';
  const double scale = unit_scale(opts.unit);
  auto pair = [&](Complex s) {
    const auto [a, b] = detail::encode(s, opts.format);
    return ' ' + detail::num(a) + ' ' + detail::num(b);
  };
  for (std::size_t k = 0; k < data.size(); ++k) {
    const SMatrix& s = data.matrices[k];
    out += detail::num(data.frequencies[k] / scale);
    if (n == 1) {
      out += pair(s(0, 0)) + '\n';
    } else if (n == 2) {
      out += pair(s(0, 0)) + pair(s(1, 0)) + pair(s(0, 1)) + pair(s(1, 1)) + '\n';
    } else {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) out += pair(s(i, j));
        out += '\n';
      }
    }
  }
  return out;
}

struct TouchstoneFile {
  ScatteringData data;
  TouchstoneOptions options;
};

namespace detail {

struct NumberToken {
  double value;
  std::size_t line;
  std::size_t column;
  bool line_start;
};

inline void parse_option_line(std::string_view line, std::size_t line_no, std::size_t offset,
                              TouchstoneOptions& opts) {
  const auto t = split_tokens(line);
  for (std::size_t k = 0; k < t.tokens.size(); ++k) {
    const std::string tok = upper(t.tokens[k]);
    const std::size_t col = offset + t.columns[k];
    if (tok == "HZ") {
      opts.unit = FrequencyUnit::Hz;
    } else if (tok == "KHZ") {
      opts.unit = FrequencyUnit::kHz;
    } else if (tok == "MHZ") {
      opts.unit = FrequencyUnit::MHz;
    } else if (tok == "GHZ") {
      opts.unit = FrequencyUnit::GHz;
    } else if (tok == "MA") {
      opts.format = TouchstoneFormat::MA;
    } else if (tok == "DB") {
      opts.format = TouchstoneFormat::DB;
    } else if (tok == "RI") {
      opts.format = TouchstoneFormat::RI;
    } else if (tok == "S") {
    } else if (tok == "Y" || tok == "Z" || tok == "G" || tok == "H") {
      throw ParseError("only S parameters are supported", line_no, col);
    } else if (tok == "R") {
      if (k + 1 >= t.tokens.size()) throw ParseError("R needs a value", line_no, col);
      double r = 0.0;
      const auto& v = t.tokens[k + 1];
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), r);
      if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(r) || !(r > 0.0)) {
        throw ParseError("malformed reference resistance", line_no, offset + t.columns[k + 1]);
      }
      opts.reference_resistance = r;
      ++k;
    } else {
      throw ParseError("unknown option '" + t.tokens[k] + "'", line_no, col);
    }
  }
}

inline int infer_ports(const std::vector<NumberToken>& tokens) {
  std::vector<std::size_t> per_line;
  for (const auto& t : tokens) {
    if (t.line_start) per_line.push_back(0);
    ++per_line.back();
    if (per_line.size() > 2) break;
  }
  if (per_line.empty()) return 0;
  switch (per_line[0]) {
    case 3: return 1;
    case 7: return 3;
    case 9: return per_line.size() > 1 && per_line[1] == 8 ? 4 : 2;
    default: return -1;
  }
}

}  // namespace detail

/// Parses Touchstone v1 text. `ports` comes from the file extension when known;
/// otherwise it is inferred from the line structure of the first block.
inline TouchstoneFile parse_touchstone(std::string_view text, std::optional<int> ports = std::nullopt) {
  if (ports && (*ports < 1 || *ports > 4)) throw ValidationError("Touchstone v1 reader supports 1 to 4 ports");
  TouchstoneFile file;
  bool have_options = false;
  std::vector<detail::NumberToken> tokens;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    const std::size_t line_offset = 0;
    pos = eol + 1;
    ++line_no;
    if (const auto bang = line.find('!'); bang != std::string_view::npos) line = line.substr(0, bang);
    const auto first = line.find_first_not_of(" \t\r\f\v");
    if (first == std::string_view::npos) continue;
    if (line[first] == '#') {
      if (!have_options) {
        detail::parse_option_line(line.substr(first + 1), line_no, line_offset + first + 1, file.options);
        have_options = true;
      }
      continue;
    }
    if (line[first] == '[') throw ParseError("Touchstone v2 keywords are not supported", line_no, first + 1);
    const auto t = detail::split_tokens(line);
    for (std::size_t k = 0; k < t.tokens.size(); ++k) {
      const auto& s = t.tokens[k];
      double v = 0.0;
      const char* b = s.data();
      const char* e = s.data() + s.size();
      if (b != e && *b == '+') ++b;
      auto [ptr, ec] = std::from_chars(b, e, v);
      if (ec != std::errc{} || ptr != e || b == e || !std::isfinite(v)) {
        throw ParseError("malformed numeric token '" + s + "'", line_no, t.columns[k]);
      }
      tokens.push_back({v, line_no, t.columns[k], k == 0});
    }
  }
  if (tokens.empty()) throw ParseError("no network data", line_no == 0 ? 1 : line_no, 1);
  const int n = ports ? *ports : detail::infer_ports(tokens);
  if (n < 1) throw ParseError("cannot infer the port count from the data layout", tokens[0].line, tokens[0].column);
  const std::size_t block = 1 + 2 * static_cast<std::size_t>(n * n);
  const double scale = unit_scale(file.options.unit);
  auto& data = file.data;
  data.reference_impedance = file.options.reference_resistance;
  for (std::size_t start = 0; start < tokens.size(); start += block) {
    const auto& ft = tokens[start];
    if (!ft.line_start) {
      throw ParseError("wrong pair count for a " + std::to_string(n) + "-port block", ft.line, ft.column);
    }
    if (start + block > tokens.size()) {
      throw ParseError("incomplete block: wrong pair count for a " + std::to_string(n) + "-port block", ft.line,
                       ft.column);
    }
    const double f = ft.value * scale;
    if (f < 0.0) throw ParseError("negative frequency", ft.line, ft.column);
    if (!data.frequencies.empty() && !(f > data.frequencies.back())) {
      throw ParseError("frequencies must be strictly increasing", ft.line, ft.column);
    }
    SMatrix s(n, n);
    for (int e = 0; e < n * n; ++e) {
      const auto& a = tokens[start + 1 + 2 * static_cast<std::size_t>(e)];
      const auto& b = tokens[start + 2 + 2 * static_cast<std::size_t>(e)];
      const Complex v = detail::decode(a.value, b.value, file.options.format);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw ParseError("entry overflows", a.line, a.column);
      }
      int row = e / n, col = e % n;
      if (n == 2) std::swap(row, col);  // v1 order S11 S21 S12 S22
      s(row, col) = v;
    }
    data.frequencies.push_back(f);
    data.matrices.push_back(std::move(s));
  }
  return file;
}

/// CSV with header freq_hz,s11_db,s11_deg,... (row-major), fixed notation.
inline std::string export_csv(const ScatteringData& data) {
  data.validate();
  const int n = data.ports();
  std::string out = "freq_hz";
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      const std::string ij = std::to_string(i) + std::to_string(j);
      out += ",s" + ij + "_db,s" + ij + "_deg";
    }
  }
  out += '\n';
  char buf[64];
  auto fixed = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.9f", v + 0.0);
    return std::string(buf);
  };
  for (std::size_t k = 0; k < data.size(); ++k) {
    out += fixed(data.frequencies[k]);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const Complex s = data.matrices[k](i, j);
        const double mag = std::abs(s);
        out += ',' + fixed(mag > 0.0 ? std::max(to_db(mag), detail::kDbFloor) : detail::kDbFloor);
        out += ',' + fixed(degrees(std::arg(s)));
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace siw
