#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>

#include "siw/geometry.hpp"
#include "siw/presets.hpp"

using namespace siw;

namespace {

bool has_cylinder(const DeviceLayout& layout, Point c, double r, double tol = 0.0) {
  return std::any_of(layout.cylinders.begin(), layout.cylinders.end(), [&](const Cylinder& cyl) {
    return std::abs(cyl.center.x - c.x) <= tol && std::abs(cyl.center.y - c.y) <= tol && cyl.radius == r;
  });
}

bool mirror_closed(const DeviceLayout& layout, bool flip_x, bool flip_y) {
  for (const auto& c : layout.cylinders) {
    const Point m{flip_x ? -c.center.x : c.center.x, flip_y ? -c.center.y : c.center.y};
    if (!has_cylinder(layout, m, c.radius)) return false;
  }
  return true;
}

const ModalPort& port(const DeviceLayout& layout, int id) {
  return *std::find_if(layout.ports.begin(), layout.ports.end(), [id](const ModalPort& p) { return p.id == id; });
}

}  // namespace

TEST_CASE("straight guide layout", "[geometry]") {
  const auto spec = presets::sband_siw();
  for (double length : {20e-3, 39.8e-3, 60e-3}) {
    const auto layout = generate_rsiw(spec, length);
    CHECK(validate_layout(layout).empty());
    const std::size_t per_row = static_cast<std::size_t>(std::floor(length / spec.pitch)) + 1;
    CHECK(layout.cylinders.size() == 2 * per_row);
    for (const auto& c : layout.cylinders) {
      CHECK(std::abs(c.center.y) == 0.5 * spec.row_spacing);
      CHECK(c.radius == 0.5 * spec.via_diameter);
    }
    REQUIRE(layout.ports.size() == 2);
    CHECK(port(layout, 1).a.x == -0.5 * length);
    CHECK(port(layout, 2).a.x == 0.5 * length);
    CHECK_THAT(port(layout, 1).length(), Catch::Matchers::WithinRel(spec.row_spacing - spec.via_diameter, 1e-14));
    CHECK(port(layout, 1).normal.x == 1.0);
    CHECK(port(layout, 2).normal.x == -1.0);
    CHECK(mirror_closed(layout, true, false));
    CHECK(mirror_closed(layout, false, true));
  }
  CHECK_THROWS_AS(generate_rsiw(spec, 1e-3), ValidationError);
}

TEST_CASE("tee divider layout", "[geometry]") {
  const auto spec = presets::sband_siw();
  const auto layout = presets::divider();
  CHECK(validate_layout(layout).empty());
  CHECK(mirror_closed(layout, true, false));
  const double port1_y = port(layout, 1).a.y;
  CHECK_THAT(port1_y, Catch::Matchers::WithinRel(-0.5 * spec.row_spacing - presets::kDividerArm, 1e-14));
  CHECK(has_cylinder(layout, {0.0, port1_y + presets::kDividerPostOffset}, presets::kDividerPostRadius, 1e-15));
  const auto& p2 = port(layout, 2);
  const auto& p3 = port(layout, 3);
  CHECK(p2.a.x == -p3.a.x);
  CHECK(p2.a.y == p3.a.y);
  CHECK(p2.normal.x == -p3.normal.x);
  // One post at each inner corner.
  CHECK(has_cylinder(layout, {0.5 * spec.row_spacing, -0.5 * spec.row_spacing}, 0.5 * spec.via_diameter));
  CHECK(has_cylinder(layout, {-0.5 * spec.row_spacing, -0.5 * spec.row_spacing}, 0.5 * spec.via_diameter));

  const auto bare = generate_tee_divider(spec, presets::kDividerArm, 0.0, 0.0);
  CHECK(bare.cylinders.size() + 1 == layout.cylinders.size());
  CHECK(mirror_closed(bare, true, false));

  CHECK_THROWS_AS(generate_tee_divider(spec, presets::kDividerArm, 1.2e-3, presets::kDividerArm + spec.row_spacing), ValidationError);
  CHECK_THROWS_AS(generate_tee_divider(spec, presets::kDividerArm, -1e-3, 10e-3), ValidationError);
  CHECK_THROWS_AS(generate_tee_divider(spec, presets::kDividerArm, 1.2e-3, 100e-3), ValidationError);
}

TEST_CASE("aperture coupler layout", "[geometry]") {
  const auto spec = presets::sband_siw();
  const auto layout = presets::coupler();
  const auto dims = presets::coupler_dims();
  CHECK(validate_layout(layout).empty());
  CHECK(mirror_closed(layout, true, false));
  CHECK(mirror_closed(layout, false, true));
  REQUIRE(layout.ports.size() == 4);
  CHECK(port(layout, 1).a.x < 0.0);
  CHECK(port(layout, 1).a.y > 0.0);
  CHECK(port(layout, 2).a.x > 0.0);
  CHECK(port(layout, 2).a.y > 0.0);
  CHECK(port(layout, 3).a.x > 0.0);
  CHECK(port(layout, 3).a.y < 0.0);
  CHECK(port(layout, 4).a.x < 0.0);
  CHECK(port(layout, 4).a.y < 0.0);
  // No common-wall post inside the aperture except the matching post.
  for (const auto& c : layout.cylinders) {
    if (c.center.y == 0.0 && std::abs(c.center.x) < 0.5 * dims.aperture_width) {
      CHECK(c.center.x == 0.0);
      CHECK(c.radius == 0.5 * dims.matching_post_diameter);
    }
  }

  CouplerDims closed = dims;
  closed.aperture_width = 0.0;
  const auto shut = generate_aperture_coupler(spec, closed);
  const double r = 0.5 * spec.via_diameter;
  for (double x = -0.5 * dims.total_length + spec.pitch; x < 0.5 * dims.total_length - spec.pitch; x += spec.pitch) {
    const double k = std::round(x / spec.pitch);
    CHECK(has_cylinder(shut, {k * spec.pitch, 0.0}, r, 1e-12));
  }

  CouplerDims plain = dims;
  plain.stub_width = 0.0;
  CHECK(mirror_closed(generate_aperture_coupler(spec, plain), true, true));

  CouplerDims bad = dims;
  bad.aperture_width = 120e-3;
  CHECK_THROWS_AS(generate_aperture_coupler(spec, bad), ValidationError);
}

TEST_CASE("circulator skeleton has threefold symmetry", "[geometry]") {
  const auto layout = presets::circulator();
  CHECK(validate_layout(layout).empty());
  CHECK(layout.metadata.at("gyrotropy_modeled") == "false");
  const auto ferrite = std::find_if(layout.cylinders.begin(), layout.cylinders.end(),
                                    [](const Cylinder& c) { return !c.material.is_conductor(); });
  REQUIRE(ferrite != layout.cylinders.end());
  CHECK(ferrite->radius == presets::kFerriteRadius);
  CHECK(ferrite->material.eps_r == presets::kFerriteEps);
  const double c120 = -0.5, s120 = std::sqrt(3.0) / 2.0;
  for (const auto& c : layout.cylinders) {
    const Point q{c120 * c.center.x - s120 * c.center.y, s120 * c.center.x + c120 * c.center.y};
    CHECK(has_cylinder(layout, q, c.radius, 1e-12));
  }
  REQUIRE(layout.ports.size() == 3);
  for (int k = 0; k < 3; ++k) {
    const auto& p = port(layout, k + 1);
    const auto& n = port(layout, (k + 1) % 3 + 1);
    const Point m = p.midpoint();
    const Point rotated{c120 * m.x - s120 * m.y, s120 * m.x + c120 * m.y};
    CHECK(norm(rotated - n.midpoint()) < 1e-12);
  }
  CHECK_THROWS_AS(generate_circulator_skeleton(presets::sband_siw(), 20e-3, 30e-3), ValidationError);
}

TEST_CASE("layout validation reports each violation kind", "[geometry]") {
  auto layout = generate_rsiw(presets::sband_siw(), 20e-3);
  CHECK(validate_layout(layout).empty());

  auto overlap = layout;
  overlap.cylinders.push_back({layout.cylinders[0].center + Point{0.5e-3, 0.0}, 0.5e-3, Material::conductor()});
  auto v = validate_layout(overlap);
  REQUIRE_FALSE(v.empty());
  CHECK(v[0].kind == LayoutViolation::Kind::Overlap);

  auto blocked = layout;
  blocked.cylinders.push_back({port(layout, 1).midpoint(), 1e-3, Material::conductor()});
  v = validate_layout(blocked);
  CHECK(std::any_of(v.begin(), v.end(), [](const auto& e) { return e.kind == LayoutViolation::Kind::PortObstruction; }));

  auto outside = layout;
  outside.cylinders.push_back({{layout.outline.x1, 0.0}, 1e-3, Material::conductor()});
  v = validate_layout(outside);
  CHECK(std::any_of(v.begin(), v.end(), [](const auto& e) { return e.kind == LayoutViolation::Kind::OutsideOutline; }));

  auto ids = layout;
  ids.ports[1].id = 3;
  v = validate_layout(ids);
  CHECK(std::any_of(v.begin(), v.end(), [](const auto& e) { return e.kind == LayoutViolation::Kind::BadPort; }));

  auto skew = layout;
  skew.ports[0].normal = {0.6, 0.8};
  v = validate_layout(skew);
  CHECK(std::any_of(v.begin(), v.end(), [](const auto& e) { return e.kind == LayoutViolation::Kind::BadPort; }));

  // Touching posts are legal.
  auto touching = layout;
  touching.cylinders = {{{0.0, 0.0}, 1e-3, Material::conductor()}, {{2e-3, 0.0}, 1e-3, Material::conductor()}};
  CHECK(validate_layout(touching).empty());
}
