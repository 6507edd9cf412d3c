#pragma once

// Parametric plan-view layouts of post-wall devices.
//
// Every generator centers its device on the origin and builds mirrored
// coordinates by exact negation, so the stated symmetries hold bit-for-bit.
// Ports are placed on interior reference planes; the region beyond a port
// plane is outside the device.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "siw/error.hpp"
#include "siw/waveguide.hpp"

namespace siw {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

inline double distance_to_segment(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

struct Material {
  enum class Kind { Conductor, Dielectric };
  Kind kind = Kind::Conductor;
  double eps_r = 1.0;  // dielectric only

  static Material conductor() { return {Kind::Conductor, 1.0}; }
  static Material dielectric(double eps) { return {Kind::Dielectric, eps}; }
  bool is_conductor() const { return kind == Kind::Conductor; }
};

struct Cylinder {
  Point center;
  double radius = 0.0;
  Material material = Material::conductor();
};

/// Waveguide port on a straight segment; `normal` points into the device.
struct ModalPort {
  int id = 0;
  Point a;
  Point b;
  Point normal;
  int modes = 1;

  double length() const { return norm(b - a); }
  Point midpoint() const { return 0.5 * (a + b); }
};

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  Point center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
};

struct DeviceLayout {
  std::string name;
  Rect outline;
  Substrate substrate;
  std::vector<Cylinder> cylinders;
  std::vector<ModalPort> ports;
  std::map<std::string, std::string> metadata;

  std::size_t conductor_count() const {
    return static_cast<std::size_t>(
        std::count_if(cylinders.begin(), cylinders.end(), [](const Cylinder& c) { return c.material.is_conductor(); }));
  }
};

struct LayoutViolation {
  enum class Kind { Overlap, PortObstruction, OutsideOutline, BadPort };
  Kind kind;
  std::string message;
};

inline std::vector<LayoutViolation> validate_layout(const DeviceLayout& layout) {
  constexpr double tol = 1e-12;
  std::vector<LayoutViolation> out;
  const auto& cyl = layout.cylinders;
  const Rect& box = layout.outline;
  for (std::size_t i = 0; i < cyl.size(); ++i) {
    const auto& c = cyl[i];
    if (!(c.radius > 0.0)) {
      out.push_back({LayoutViolation::Kind::Overlap, "cylinder " + std::to_string(i) + " has non-positive radius"});
      continue;
    }
    if (!(c.center.x - c.radius > box.x0 && c.center.x + c.radius < box.x1 && c.center.y - c.radius > box.y0 &&
          c.center.y + c.radius < box.y1)) {
      out.push_back({LayoutViolation::Kind::OutsideOutline, "cylinder " + std::to_string(i) + " leaves the outline"});
    }
    for (std::size_t j = i + 1; j < cyl.size(); ++j) {
      if (norm(c.center - cyl[j].center) < c.radius + cyl[j].radius - tol) {
        out.push_back({LayoutViolation::Kind::Overlap,
                       "cylinders " + std::to_string(i) + " and " + std::to_string(j) + " overlap"});
      }
    }
    for (const auto& port : layout.ports) {
      if (distance_to_segment(c.center, port.a, port.b) < c.radius - tol) {
        out.push_back({LayoutViolation::Kind::PortObstruction,
                       "cylinder " + std::to_string(i) + " obstructs port " + std::to_string(port.id)});
      }
    }
  }
  std::vector<int> ids;
  for (const auto& port : layout.ports) {
    ids.push_back(port.id);
    const std::string name = "port " + std::to_string(port.id);
    const Point t = port.b - port.a;
    if (!(port.length() > 0.0)) out.push_back({LayoutViolation::Kind::BadPort, name + " has zero length"});
    if (std::abs(norm(port.normal) - 1.0) > 1e-9 || std::abs(dot(port.normal, t)) > 1e-9 * port.length()) {
      out.push_back({LayoutViolation::Kind::BadPort, name + " normal is not a unit vector perpendicular to the port"});
    }
    if (port.modes < 1) out.push_back({LayoutViolation::Kind::BadPort, name + " needs at least one mode"});
    for (Point p : {port.a, port.b}) {
      if (p.x < box.x0 || p.x > box.x1 || p.y < box.y0 || p.y > box.y1) {
        out.push_back({LayoutViolation::Kind::BadPort, name + " lies outside the outline"});
        break;
      }
    }
  }
  std::sort(ids.begin(), ids.end());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] != static_cast<int>(k) + 1) {
      out.push_back({LayoutViolation::Kind::BadPort, "port ids must be unique and contiguous from 1"});
      break;
    }
  }
  return out;
}

namespace detail {

inline constexpr double kDedupTolerance = 1e-9;

inline void add_post(std::vector<Cylinder>& posts, Point c, double radius) {
  for (const auto& existing : posts) {
    if (norm(existing.center - c) < kDedupTolerance) return;
  }
  posts.push_back({c, radius, Material::conductor()});
}

/// Offsets k*p for |k*p| <= half, symmetric about zero.
inline std::vector<double> centered_lattice(double half, double pitch) {
  const int n = static_cast<int>(std::floor(half / pitch + 1e-9));
  std::vector<double> out;
  for (int k = -n; k <= n; ++k) out.push_back(k * pitch);
  return out;
}

/// start, start+p, ... not exceeding `stop` (start <= stop).
inline std::vector<double> ray_lattice(double start, double stop, double pitch) {
  const int n = static_cast<int>(std::floor((stop - start) / pitch + 1e-9));
  std::vector<double> out;
  for (int k = 0; k <= n; ++k) out.push_back(start + k * pitch);
  return out;
}

inline Rect bounding_box(const std::vector<Cylinder>& cyl, const std::vector<ModalPort>& ports, double clearance) {
  Rect r{1e300, 1e300, -1e300, -1e300};
  auto grow = [&r](double x0, double y0, double x1, double y1) {
    r.x0 = std::min(r.x0, x0);
    r.y0 = std::min(r.y0, y0);
    r.x1 = std::max(r.x1, x1);
    r.y1 = std::max(r.y1, y1);
  };
  for (const auto& c : cyl) grow(c.center.x - c.radius, c.center.y - c.radius, c.center.x + c.radius, c.center.y + c.radius);
  for (const auto& p : ports) grow(std::min(p.a.x, p.b.x), std::min(p.a.y, p.b.y), std::max(p.a.x, p.b.x), std::max(p.a.y, p.b.y));
  return {r.x0 - clearance, r.y0 - clearance, r.x1 + clearance, r.y1 + clearance};
}

inline double clearance(const SiwSpec& spec) { return 2.0 * spec.pitch; }

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Straight guide along x between ports 1 (x = -length/2) and 2 (x = +length/2).
inline DeviceLayout generate_rsiw(const SiwSpec& spec, double length) {
  spec.validate();
  if (!(length >= 2.0 * spec.pitch - 1e-12)) throw ValidationError("RSIW length must hold at least two pitches");
  const double w = spec.row_spacing, d = spec.via_diameter, r = 0.5 * d;
  DeviceLayout layout;
  layout.name = "rsiw";
  layout.substrate = spec.substrate;
  const int n = static_cast<int>(std::floor(length / spec.pitch + 1e-9));
  for (double y : {-0.5 * w, 0.5 * w}) {
    for (int k = 0; k <= n; ++k) {
      const double x = (k - 0.5 * n) * spec.pitch;
      layout.cylinders.push_back({{x, y}, r, Material::conductor()});
    }
  }
  const double xa = 0.5 * length, ya = 0.5 * (w - d);
  layout.ports.push_back({1, {-xa, -ya}, {-xa, ya}, {1.0, 0.0}, 1});
  layout.ports.push_back({2, {xa, -ya}, {xa, ya}, {-1.0, 0.0}, 1});
  layout.outline = detail::bounding_box(layout.cylinders, layout.ports, detail::clearance(spec));
  layout.metadata["length"] = detail::fmt(length);
  layout.metadata["row_spacing"] = detail::fmt(w);
  layout.metadata["via_diameter"] = detail::fmt(d);
  layout.metadata["pitch"] = detail::fmt(spec.pitch);
  return layout;
}

/// H-plane T junction. Port 1 feeds the stem from below (y < 0); ports 2 and 3
/// are the left and right ends of the bar. The bar walls sit at y = +-W/2, the
/// stem walls at x = +-W/2, with one shared post at each inner corner. The
/// optional inductive post (radius `post_radius`, 0 disables it) sits on the
/// stem axis at `post_offset` from the port-1 reference plane.
inline DeviceLayout generate_tee_divider(const SiwSpec& spec, double arm_length, double post_radius,
                                         double post_offset) {
  spec.validate();
  const double w = spec.row_spacing, d = spec.via_diameter, r = 0.5 * d, p = spec.pitch;
  if (!(arm_length >= 2.0 * p)) throw ValidationError("divider arms must hold at least two pitches");
  if (!(post_radius >= 0.0)) throw ValidationError("tuning post radius must be >= 0");
  if (post_radius > 0.0 && !(post_offset >= 0.0 && post_offset <= arm_length + w)) {
    throw ValidationError("tuning post offset must lie between the port-1 plane and the far wall");
  }
  DeviceLayout layout;
  layout.name = "tee-divider";
  layout.substrate = spec.substrate;
  auto& posts = layout.cylinders;
  const double half_span = 0.5 * w + arm_length;
  for (double x : detail::centered_lattice(half_span, p)) detail::add_post(posts, {x, 0.5 * w}, r);
  for (double x : detail::ray_lattice(0.5 * w, half_span, p)) {
    detail::add_post(posts, {x, -0.5 * w}, r);
    detail::add_post(posts, {-x, -0.5 * w}, r);
  }
  for (double s : detail::ray_lattice(0.0, arm_length, p)) {
    detail::add_post(posts, {0.5 * w, -0.5 * w - s}, r);
    detail::add_post(posts, {-0.5 * w, -0.5 * w - s}, r);
  }
  const double port1_y = -0.5 * w - arm_length;
  if (post_radius > 0.0) {
    const Point c{0.0, port1_y + post_offset};
    for (const auto& wall : posts) {
      if (norm(wall.center - c) < wall.radius + post_radius) {
        throw ValidationError("tuning post overlaps a wall post");
      }
    }
    posts.push_back({c, post_radius, Material::conductor()});
  }
  const double ya = 0.5 * (w - d);
  layout.ports.push_back({1, {-ya, port1_y}, {ya, port1_y}, {0.0, 1.0}, 1});
  layout.ports.push_back({2, {-half_span, -ya}, {-half_span, ya}, {1.0, 0.0}, 1});
  layout.ports.push_back({3, {half_span, -ya}, {half_span, ya}, {-1.0, 0.0}, 1});
  layout.outline = detail::bounding_box(posts, layout.ports, detail::clearance(spec));
  layout.metadata["arm_length"] = detail::fmt(arm_length);
  layout.metadata["post_radius"] = detail::fmt(post_radius);
  layout.metadata["post_offset"] = detail::fmt(post_offset);
  return layout;
}

struct CouplerDims {
  double total_length = 0.0;            // L
  double aperture_width = 0.0;          // W_ap, opening of the common wall along x
  double matching_post_diameter = 0.0;  // L_ap, post at the aperture center (0 disables)
  double stub_width = 0.0;              // W_s, x-extent of the outer-wall insets
  double stub_length = 0.0;             // L_s, depth of the insets toward the common wall
};

/// Two guides along x sharing the common wall y = 0, opened over |x| < W_ap/2.
/// Upper guide: ports 1 (left, input) and 2 (right, through); lower guide:
/// ports 4 (left, isolated) and 3 (right, coupled). Over |x| <= W_s/2 both
/// outer walls step inward by L_s, narrowing the coupled region.
inline DeviceLayout generate_aperture_coupler(const SiwSpec& spec, const CouplerDims& dims) {
  spec.validate();
  const double w = spec.row_spacing, d = spec.via_diameter, r = 0.5 * d, p = spec.pitch;
  const double half_len = 0.5 * dims.total_length;
  if (!(dims.total_length >= 2.0 * p)) throw ValidationError("coupler length must hold at least two pitches");
  if (!(dims.aperture_width >= 0.0)) throw ValidationError("aperture width must be >= 0");
  if (!(dims.aperture_width < dims.total_length)) throw ValidationError("aperture is longer than the guide");
  if (!(dims.stub_width >= 0.0 && dims.stub_width <= dims.total_length)) {
    throw ValidationError("stub width must lie within the guide length");
  }
  if (!(dims.stub_length >= 0.0 && dims.stub_length < w - 2.0 * d)) {
    throw ValidationError("stub depth must leave the guide open");
  }
  if (!(dims.matching_post_diameter >= 0.0)) throw ValidationError("matching post diameter must be >= 0");

  DeviceLayout layout;
  layout.name = "aperture-coupler";
  layout.substrate = spec.substrate;
  auto& posts = layout.cylinders;
  const bool open = dims.aperture_width >= p;
  if (open) {
    for (double x : detail::ray_lattice(0.5 * dims.aperture_width, half_len, p)) {
      detail::add_post(posts, {x, 0.0}, r);
      detail::add_post(posts, {-x, 0.0}, r);
    }
  } else {
    for (double x : detail::centered_lattice(half_len, p)) detail::add_post(posts, {x, 0.0}, r);
  }
  const bool stubbed = dims.stub_width > 0.0 && dims.stub_length > 0.0;
  for (double sy : {1.0, -1.0}) {
    if (!stubbed) {
      for (double x : detail::centered_lattice(half_len, p)) detail::add_post(posts, {x, sy * w}, r);
      continue;
    }
    const double hs = 0.5 * dims.stub_width;
    const double inner = w - dims.stub_length;
    for (double x : detail::ray_lattice(hs, half_len, p)) {
      detail::add_post(posts, {x, sy * w}, r);
      detail::add_post(posts, {-x, sy * w}, r);
    }
    for (double y : detail::ray_lattice(inner, w, p)) {
      detail::add_post(posts, {hs, sy * y}, r);
      detail::add_post(posts, {-hs, sy * y}, r);
    }
    std::vector<double> xs = detail::ray_lattice(0.0, hs, p);
    for (double& x : xs) x = hs - x;  // from the corner inward
    for (double x : xs) {
      if (x < 0.5 * d) {
        detail::add_post(posts, {0.0, sy * inner}, r);
      } else {
        detail::add_post(posts, {x, sy * inner}, r);
        detail::add_post(posts, {-x, sy * inner}, r);
      }
    }
  }
  if (open && dims.matching_post_diameter > 0.0) {
    posts.push_back({{0.0, 0.0}, 0.5 * dims.matching_post_diameter, Material::conductor()});
  }
  const double lo = 0.5 * d, hi = w - 0.5 * d;
  layout.ports.push_back({1, {-half_len, lo}, {-half_len, hi}, {1.0, 0.0}, 1});
  layout.ports.push_back({2, {half_len, lo}, {half_len, hi}, {-1.0, 0.0}, 1});
  layout.ports.push_back({3, {half_len, -hi}, {half_len, -lo}, {-1.0, 0.0}, 1});
  layout.ports.push_back({4, {-half_len, -hi}, {-half_len, -lo}, {1.0, 0.0}, 1});
  layout.outline = detail::bounding_box(posts, layout.ports, detail::clearance(spec));
  layout.metadata["total_length"] = detail::fmt(dims.total_length);
  layout.metadata["aperture_width"] = detail::fmt(dims.aperture_width);
  layout.metadata["matching_post_diameter"] = detail::fmt(dims.matching_post_diameter);
  layout.metadata["stub_width"] = detail::fmt(dims.stub_width);
  layout.metadata["stub_length"] = detail::fmt(dims.stub_length);
  const auto violations = validate_layout(layout);
  if (!violations.empty()) throw ValidationError("coupler geometry invalid: " + violations.front().message);
  return layout;
}

/// Three arms at 120 degrees around a central dielectric disk. Arm k points
/// along -90 + 120 k degrees; port k+1 terminates it. The disk only carries a
/// permittivity: its gyromagnetic response is not represented.
inline DeviceLayout generate_circulator_skeleton(const SiwSpec& spec, double arm_length, double ferrite_radius,
                                                 double ferrite_eps = 13.7) {
  spec.validate();
  const double w = spec.row_spacing, d = spec.via_diameter, r = 0.5 * d, p = spec.pitch;
  if (!(ferrite_radius > 0.0)) throw ValidationError("ferrite radius must be positive");
  if (!(arm_length >= 2.0 * p)) throw ValidationError("circulator arms must hold at least two pitches");
  if (ferrite_radius >= 0.5 * w - r) throw ValidationError("ferrite disk intersects the arm walls");

  // Walls of adjacent arms meet on the bisector at axial distance W / (2 sqrt 3).
  const double s0 = w / (2.0 * std::sqrt(3.0));
  std::vector<Point> arm;  // arm 0 along -y
  for (double s : detail::ray_lattice(s0, s0 + arm_length, p)) {
    arm.push_back({0.5 * w, -s});
    arm.push_back({-0.5 * w, -s});
  }
  const double c120 = -0.5, s120 = std::sqrt(3.0) / 2.0;
  auto rotate = [&](Point q, int times) {
    for (int t = 0; t < times; ++t) q = {c120 * q.x - s120 * q.y, s120 * q.x + c120 * q.y};
    return q;
  };
  DeviceLayout layout;
  layout.name = "circulator-skeleton";
  layout.substrate = spec.substrate;
  for (int k = 0; k < 3; ++k) {
    for (Point q : arm) detail::add_post(layout.cylinders, rotate(q, k), r);
  }
  layout.cylinders.push_back({{0.0, 0.0}, ferrite_radius, Material::dielectric(ferrite_eps)});
  const double s_port = s0 + arm_length, ya = 0.5 * (w - d);
  for (int k = 0; k < 3; ++k) {
    ModalPort port{k + 1, rotate({-ya, -s_port}, k), rotate({ya, -s_port}, k), rotate({0.0, 1.0}, k), 1};
    layout.ports.push_back(port);
  }
  layout.outline = detail::bounding_box(layout.cylinders, layout.ports, detail::clearance(spec));
  layout.metadata["arm_length"] = detail::fmt(arm_length);
  layout.metadata["ferrite_radius"] = detail::fmt(ferrite_radius);
  layout.metadata["ferrite_eps"] = detail::fmt(ferrite_eps);
  layout.metadata["gyrotropy_modeled"] = "false";
  return layout;
}

}  // namespace siw
