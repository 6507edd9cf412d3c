#pragma once

// Coarse-grid plus golden-section tuning of a single post offset, repeated for
// each candidate post radius.

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "siw/error.hpp"
#include "siw/fdfd.hpp"
#include "siw/geometry.hpp"
#include "siw/network.hpp"
#include "siw/units.hpp"

namespace siw {

/// Builds the layout for post radius r and offset x_p (meters).
using PostLayoutGenerator = std::function<DeviceLayout(double r, double x_p)>;
/// Objective in dB for (r, x_p); replaces the solver when set.
using PostObjective = std::function<double(double r, double x_p)>;

struct TuningProblem {
  PostLayoutGenerator generator;
  double x_lo = 0.0;
  double x_hi = 0.0;
  std::vector<double> radii;
  FrequencyBand band;
  int points = 11;
  int coarse_points = 9;
  double tolerance = 0.05e-3;
  SolverConfig solver;
  PostObjective evaluator;

  void validate() const {
    if (!generator && !evaluator) throw ValidationError("tuning problem needs a layout generator or an evaluator");
    if (!(std::isfinite(x_lo) && std::isfinite(x_hi) && x_lo <= x_hi)) throw ValidationError("x_p bounds are empty");
    if (radii.empty()) throw ValidationError("tuning problem needs at least one post radius");
    validate_band(band);
    if (points < 2) throw ValidationError("objective sweep needs at least 2 points");
    if (coarse_points < 2) throw ValidationError("coarse grid needs at least 2 points");
    if (!(tolerance > 0.0)) throw ValidationError("tolerance must be positive");
  }
};

struct TuningEvaluation {
  double x_p = 0.0;
  double r = 0.0;
  double objective_db = 0.0;  // +inf for rejected layouts
};

struct TuningResult {
  double best_x_p = 0.0;
  double best_r = 0.0;
  double best_objective_db = 0.0;
  std::vector<TuningEvaluation> history;
  bool converged = false;

  /// eval_index,x_p_m,r_m,objective_db
  std::string history_csv() const {
    std::string out = "eval_index,x_p_m,r_m,objective_db\n";
    char buf[128];
    for (std::size_t k = 0; k < history.size(); ++k) {
      const auto& e = history[k];
      std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g,%.12g\n", k, e.x_p, e.r, e.objective_db);
      out += buf;
    }
    return out;
  }
};

/// Worst (largest) |S11| in dB over `points` uniform samples of `band`.
inline double worst_return_loss_db(const DeviceLayout& layout, const FrequencyBand& band, int points,
                                   const SolverConfig& config = {}) {
  const auto freqs = uniform_frequencies(band, points);
  const Grid grid = rasterize(layout, config, band.hi_hz);
  const auto columns = sweep_column(grid, freqs, 1, config);
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& c : columns) worst = std::max(worst, to_db(c[0]));
  return worst;
}

inline TuningResult optimize_post(const TuningProblem& problem) {
  problem.validate();
  constexpr double inf = std::numeric_limits<double>::infinity();
  TuningResult result;

  auto evaluate = [&](double r, double x) {
    double value = inf;
    if (problem.evaluator) {
      value = problem.evaluator(r, x);
    } else {
      DeviceLayout layout;
      bool valid = true;
      try {
        layout = problem.generator(r, x);
        valid = validate_layout(layout).empty();
      } catch (const ValidationError&) {
        valid = false;
      }
      if (valid) value = worst_return_loss_db(layout, problem.band, problem.points, problem.solver);
    }
    result.history.push_back({x, r, value});
    return value;
  };

  bool all_converged = true;
  for (double r : problem.radii) {
    const double lo = problem.x_lo, hi = problem.x_hi;
    if (hi - lo < problem.tolerance) {
      evaluate(r, lo == hi ? lo : 0.5 * (lo + hi));
      continue;
    }
    const int n = problem.coarse_points;
    std::vector<double> xs(n), fs(n);
    for (int k = 0; k < n; ++k) {
      xs[k] = k + 1 == n ? hi : lo + (hi - lo) * k / (n - 1);
      fs[k] = evaluate(r, xs[k]);
    }
    int kb = 0;
    for (int k = 1; k < n; ++k) {
      if (fs[k] < fs[kb]) kb = k;
    }
    if (!(fs[kb] < inf)) continue;
    double a = xs[std::max(kb - 1, 0)], b = xs[std::min(kb + 1, n - 1)];
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = evaluate(r, c), fd = evaluate(r, d);
    int guard = 0;
    while (b - a >= problem.tolerance && guard++ < 200) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - g * (b - a);
        fc = evaluate(r, c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + g * (b - a);
        fd = evaluate(r, d);
      }
    }
    all_converged = all_converged && b - a < problem.tolerance;
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < result.history.size(); ++k) {
    if (result.history[k].objective_db < result.history[best].objective_db) best = k;
  }
  if (!(result.history[best].objective_db < inf)) throw ValidationError("every candidate post layout is invalid");
  result.best_x_p = result.history[best].x_p;
  result.best_r = result.history[best].r;
  result.best_objective_db = result.history[best].objective_db;
  result.converged = all_converged;
  return result;
}

}  // namespace siw
