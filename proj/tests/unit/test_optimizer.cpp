#include "catch_amalgamated.hpp"

#include <cmath>
#include <limits>

#include "siw/optimizer.hpp"
#include "siw/presets.hpp"

using namespace siw;

namespace {

constexpr double kTarget = 20.57e-3;

TuningProblem synthetic(double lo, double hi) {
  TuningProblem p;
  p.x_lo = lo;
  p.x_hi = hi;
  p.radii = {1.2e-3};
  p.band = presets::kSBand;
  p.evaluator = [](double, double x) { return -30.0 + 4e5 * std::abs(x - kTarget) + 1e8 * (x - kTarget) * (x - kTarget); };
  return p;
}

DeviceLayout channel(double length) {
  DeviceLayout d;
  d.name = "channel";
  d.substrate = presets::sband_substrate();
  d.outline = {-0.5 * length, -20e-3, 0.5 * length, 20e-3};
  d.ports.push_back({1, {-0.5 * length, -20e-3}, {-0.5 * length, 20e-3}, {1, 0}, 1});
  d.ports.push_back({2, {0.5 * length, -20e-3}, {0.5 * length, 20e-3}, {-1, 0}, 1});
  return d;
}

}  // namespace

TEST_CASE("golden-section search finds a synthetic minimum", "[optimizer]") {
  const auto result = optimize_post(synthetic(0.0, 40e-3));
  CHECK(std::abs(result.best_x_p - kTarget) <= 0.05e-3);
  CHECK(result.best_r == 1.2e-3);
  CHECK(result.converged);
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& e : result.history) {
    CHECK(e.x_p >= 0.0);
    CHECK(e.x_p <= 40e-3);
    lowest = std::min(lowest, e.objective_db);
  }
  CHECK(result.best_objective_db == lowest);

  // Minimum at a bound.
  const auto edge = optimize_post(synthetic(21e-3, 40e-3));
  CHECK(std::abs(edge.best_x_p - 21e-3) <= 0.05e-3);
}

TEST_CASE("collapsed bounds take one evaluation", "[optimizer]") {
  const auto result = optimize_post(synthetic(kTarget, kTarget));
  REQUIRE(result.history.size() == 1);
  CHECK(result.best_x_p == kTarget);
  CHECK(result.converged);
}

TEST_CASE("each radius gets its own search", "[optimizer]") {
  auto p = synthetic(0.0, 40e-3);
  p.radii = {1.0e-3, 1.2e-3};
  p.evaluator = [](double r, double x) { return -20.0 - 1e4 * r + 4e5 * std::abs(x - kTarget); };
  const auto result = optimize_post(p);
  CHECK(result.best_r == 1.2e-3);
  CHECK(std::abs(result.best_x_p - kTarget) <= 0.05e-3);
  CHECK(result.history.front().r == 1.0e-3);
  CHECK(result.history.back().r == 1.2e-3);
}

TEST_CASE("identical problems give identical histories", "[optimizer]") {
  const auto a = optimize_post(synthetic(0.0, 40e-3));
  const auto b = optimize_post(synthetic(0.0, 40e-3));
  CHECK(a.history_csv() == b.history_csv());
  CHECK(a.history_csv().rfind("eval_index,x_p_m,r_m,objective_db\n0,0,0.0012,", 0) == 0);
}

TEST_CASE("invalid layouts are penalized, never returned", "[optimizer]") {
  TuningProblem p;
  p.x_lo = 0.0;
  p.x_hi = 40e-3;
  p.radii = {1e-3};
  p.band = {2.4e9, 2.6e9};
  p.points = 2;
  p.coarse_points = 3;
  p.tolerance = 10e-3;
  p.generator = [](double, double x) {
    if (x > 25e-3) throw ValidationError("post overlaps a wall");
    auto d = channel(30e-3);
    if (x > 15e-3) d.cylinders.push_back({{0.0, 0.0}, 3e-3, Material::conductor()});
    if (x < 5e-3) d.cylinders.push_back({d.ports[0].midpoint(), 1e-3, Material::conductor()});
    return d;
  };
  const auto result = optimize_post(p);
  for (const auto& e : result.history) {
    if (e.x_p > 25e-3 || e.x_p < 5e-3) CHECK(std::isinf(e.objective_db));
  }
  CHECK(result.best_x_p >= 5e-3);
  CHECK(result.best_x_p <= 25e-3);
  CHECK(std::isfinite(result.best_objective_db));

  p.generator = [](double, double) -> DeviceLayout { throw ValidationError("never valid"); };
  CHECK_THROWS_AS(optimize_post(p), ValidationError);
}

TEST_CASE("tuning problems are validated", "[optimizer]") {
  auto p = synthetic(30e-3, 10e-3);
  CHECK_THROWS_AS(optimize_post(p), ValidationError);
  p = synthetic(0.0, 1e-3);
  p.radii.clear();
  CHECK_THROWS_AS(optimize_post(p), ValidationError);
  p = synthetic(0.0, 1e-3);
  p.evaluator = nullptr;
  CHECK_THROWS_AS(optimize_post(p), ValidationError);

  // A band below cutoff surfaces as a solver error.
  TuningProblem low;
  low.x_lo = low.x_hi = 0.0;
  low.radii = {1e-3};
  low.band = {1.0e9, 1.2e9};
  low.points = 2;
  low.generator = [](double, double) { return channel(30e-3); };
  CHECK_THROWS_AS(optimize_post(low), SolverError);
}
