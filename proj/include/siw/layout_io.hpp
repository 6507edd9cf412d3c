#pragma once

// SIWLAYOUT text format:
//
//   SIWLAYOUT 1
//   SUBSTRATE h_eps_tand <h_m> <eps_r> <tand>
//   OUTLINE <x0> <y0> <x1> <y1>
//   CYL <x> <y> <r> <PEC|DIEL:<eps>>
//   PORT <id> <x0> <y0> <x1> <y1> <nx> <ny> <modes>
//
// Lines starting with '#' are comments; "# name = <v>" and "# meta <k> = <v>"
// carry the layout name and metadata.

#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "siw/error.hpp"
#include "siw/geometry.hpp"
#include "siw/text.hpp"
#include "siw/units.hpp"

namespace siw {

inline std::string write_layout(const DeviceLayout& layout) {
  using detail::fmt;
  std::ostringstream out;
  out << "SIWLAYOUT 1\n";
  if (!layout.name.empty()) out << "# name = " << layout.name << '\n';
  for (const auto& [k, v] : layout.metadata) out << "# meta " << k << " = " << v << '\n';
  const auto& s = layout.substrate;
  out << "SUBSTRATE h_eps_tand " << fmt(s.height) << ' ' << fmt(s.eps_r) << ' ' << fmt(s.loss_tangent) << '\n';
  const auto& o = layout.outline;
  out << "OUTLINE " << fmt(o.x0) << ' ' << fmt(o.y0) << ' ' << fmt(o.x1) << ' ' << fmt(o.y1) << '\n';
  for (const auto& c : layout.cylinders) {
    out << "CYL " << fmt(c.center.x) << ' ' << fmt(c.center.y) << ' ' << fmt(c.radius) << ' ';
    if (c.material.is_conductor()) {
      out << "PEC";
    } else {
      out << "DIEL:" << fmt(c.material.eps_r);
    }
    out << '\n';
  }
  for (const auto& p : layout.ports) {
    out << "PORT " << p.id << ' ' << fmt(p.a.x) << ' ' << fmt(p.a.y) << ' ' << fmt(p.b.x) << ' ' << fmt(p.b.y)
        << ' ' << fmt(p.normal.x) << ' ' << fmt(p.normal.y) << ' ' << p.modes << '\n';
  }
  return out.str();
}


inline DeviceLayout parse_layout(std::string_view text) {
  DeviceLayout layout;
  bool header = false, have_substrate = false, have_outline = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
      if (eol == text.size()) break;
      continue;
    }
    if (line[first] == '#') {
      const std::string body = detail::trim(line.substr(first + 1));
      const auto eq = body.find('=');
      if (eq != std::string::npos) {
        const std::string key = detail::trim(std::string_view(body).substr(0, eq));
        const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
        if (key == "name") {
          layout.name = value;
        } else if (key.rfind("meta ", 0) == 0) {
          layout.metadata[detail::trim(std::string_view(key).substr(5))] = value;
        }
      }
      if (eol == text.size()) break;
      continue;
    }
    const auto t = detail::split_tokens(line);
    auto number = [&](std::size_t k) {
      try {
        return units::parse_number(t.tokens[k]);
      } catch (const ValidationError&) {
        throw ParseError("malformed number '" + t.tokens[k] + "'", line_no, t.columns[k]);
      }
    };
    auto expect = [&](std::size_t n) {
      if (t.tokens.size() != n) {
        throw ParseError(t.tokens[0] + " record needs " + std::to_string(n - 1) + " fields", line_no, t.columns[0]);
      }
    };
    const std::string& tag = t.tokens[0];
    if (!header) {
      if (tag != "SIWLAYOUT" || t.tokens.size() != 2 || t.tokens[1] != "1") {
        throw ParseError("expected 'SIWLAYOUT 1' header", line_no, t.columns[0]);
      }
      header = true;
    } else if (tag == "SUBSTRATE") {
      expect(5);
      if (t.tokens[1] != "h_eps_tand") throw ParseError("expected h_eps_tand", line_no, t.columns[1]);
      layout.substrate = {number(2), number(3), number(4)};
      have_substrate = true;
    } else if (tag == "OUTLINE") {
      expect(5);
      layout.outline = {number(1), number(2), number(3), number(4)};
      have_outline = true;
    } else if (tag == "CYL") {
      expect(5);
      Cylinder c{{number(1), number(2)}, number(3), Material::conductor()};
      const std::string& mat = t.tokens[4];
      if (mat.rfind("DIEL:", 0) == 0) {
        try {
          c.material = Material::dielectric(units::parse_number(std::string_view(mat).substr(5)));
        } catch (const ValidationError&) {
          throw ParseError("malformed dielectric constant", line_no, t.columns[4]);
        }
      } else if (mat != "PEC") {
        throw ParseError("unknown material '" + mat + "'", line_no, t.columns[4]);
      }
      layout.cylinders.push_back(c);
    } else if (tag == "PORT") {
      expect(9);
      const double id = number(1), modes = number(8);
      if (id != std::floor(id) || modes != std::floor(modes) || std::abs(id) > 1e6 || std::abs(modes) > 1e6) {
        throw ParseError("port id and mode count must be integers", line_no, t.columns[1]);
      }
      layout.ports.push_back({static_cast<int>(id), {number(2), number(3)}, {number(4), number(5)},
                              {number(6), number(7)}, static_cast<int>(modes)});
    } else {
      throw ParseError("unknown record tag '" + tag + "'", line_no, t.columns[0]);
    }
    if (eol == text.size()) break;
  }
  if (!header) throw ParseError("missing 'SIWLAYOUT 1' header", 1, 1);
  if (!have_substrate) throw ParseError("missing SUBSTRATE record", line_no, 1);
  if (!have_outline) throw ParseError("missing OUTLINE record", line_no, 1);
  return layout;
}

}  // namespace siw
