#pragma once

// 2-D frequency-domain finite differences for the TE_n0 family of a thin
// substrate: the unknown is E_z on a square node lattice. Posts are PEC or
// dielectric rods, the open surroundings end in a stretched-coordinate PML,
// and each port is an exact discrete transparent boundary expanded in the
// full set of lattice modes of its aperture.

#include <Eigen/Sparse>
#include <Eigen/UmfPackSupport>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "siw/error.hpp"
#include "siw/geometry.hpp"
#include "siw/network.hpp"
#include "siw/units.hpp"
#include "siw/waveguide.hpp"

namespace siw {

struct SolverConfig {
  double cells_per_wavelength = 20.0;  // in the densest dielectric at f_max
  int min_cells_per_diameter = 6;      // across the smallest cylinder
  int port_modes = 1;                  // modal amplitudes reported per port
  int pml_cells = 10;
  std::size_t cell_budget = 4'000'000;
  double pml_reflection = 1e-6;  // normal-incidence round trip
  unsigned threads = 1;

  void validate() const {
    if (!(cells_per_wavelength >= 4.0)) throw ValidationError("cells_per_wavelength must be >= 4");
    if (min_cells_per_diameter < 1) throw ValidationError("min_cells_per_diameter must be >= 1");
    if (port_modes < 1) throw ValidationError("port_modes must be >= 1");
    if (pml_cells < 1) throw ValidationError("pml_cells must be >= 1");
    if (cell_budget < 16) throw ValidationError("cell_budget is too small");
    if (!(pml_reflection > 0.0 && pml_reflection < 1.0)) throw ValidationError("pml_reflection must be in (0, 1)");
    if (threads < 1) throw ValidationError("threads must be >= 1");
  }
};

enum class NodeKind : std::uint8_t { Excluded, Conductor, Medium, Port };

/// A port on the lattice: a run of nodes on one grid row or column.
struct PortGrid {
  int id = 0;
  bool along_y = false;  // the port line is a grid column (normal along x)
  int line = 0;          // column index (along_y) or row index
  int first = 0;         // first lateral node index
  int count = 0;         // nodes in the aperture
  int inward = 1;        // +1 / -1 along the normal axis
  double offset = 0.0;   // node line distance inward of the reference plane
  double modal_width = 0.0;
  int reported_modes = 1;
};

struct Grid {
  double h = 0.0;
  double x0 = 0.0, y0 = 0.0;  // coordinates of node (0, 0)
  int nx = 0, ny = 0;
  Complex background_eps;
  double pml_eps = 1.0;  // real permittivity that sets the PML grading
  double pml_length = 0.0;
  std::vector<NodeKind> kind;
  std::vector<Complex> eps;
  // PML depth fraction in [0, 1] at nodes and at half steps i + 1/2.
  std::vector<double> depth_x, depth_x_half, depth_y, depth_y_half;
  std::vector<PortGrid> ports;  // ordered by id
  std::vector<int> unknown;     // node -> unknown index, -1 if inactive
  int unknowns = 0;

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  double x(int i) const { return x0 + i * h; }
  double y(int j) const { return y0 + j * h; }
  int port_node_i(const PortGrid& p, int k) const { return p.along_y ? p.line : p.first + k; }
  int port_node_j(const PortGrid& p, int k) const { return p.along_y ? p.first + k : p.line; }
};

namespace detail {

/// Aperture width of the guide feeding a port. When the segment ends next to
/// rows of PEC posts whose inner surfaces pass through its end points, the
/// rows' equivalent width is used; otherwise the segment length itself.
inline double port_modal_width(const DeviceLayout& layout, const ModalPort& port) {
  const double len = port.length();
  const Point t = (1.0 / len) * (port.b - port.a);
  const Point m = port.midpoint();
  const double tol = 1e-6 * len;
  double sum = 0.0;
  int found = 0;
  for (double side : {-1.0, 1.0}) {
    std::vector<std::pair<double, double>> row;  // (normal coordinate, radius)
    for (const auto& c : layout.cylinders) {
      if (!c.material.is_conductor()) continue;
      const Point rel = c.center - m;
      if (std::abs(side * dot(rel, t) - (0.5 * len + c.radius)) > tol) continue;
      const double nu = dot(rel, port.normal);
      if (nu < -c.radius - tol) continue;
      row.emplace_back(nu, c.radius);
    }
    std::sort(row.begin(), row.end());
    if (row.size() < 2 || std::abs(row[0].second - row[1].second) > tol) continue;
    const double d = 2.0 * row[0].second, p = row[1].first - row[0].first;
    if (!(p > d)) continue;
    sum += len + d - d * d / (0.95 * p);
    ++found;
  }
  return found > 0 ? sum / found : len;
}

inline Complex pml_stretch(double depth, double strength) {
  return {1.0, -strength * depth * depth * depth};
}

}  // namespace detail

/// Lattice spacing for a layout at the top frequency of a sweep.
inline double grid_spacing(const DeviceLayout& layout, const SolverConfig& config, double f_max) {
  config.validate();
  if (!(f_max > 0.0)) throw ValidationError("maximum frequency must be positive");
  double eps_max = layout.substrate.eps_r;
  double d_min = 1e300;
  for (const auto& c : layout.cylinders) {
    if (!c.material.is_conductor()) eps_max = std::max(eps_max, c.material.eps_r);
    d_min = std::min(d_min, 2.0 * c.radius);
  }
  double h = kSpeedOfLight / (f_max * std::sqrt(eps_max)) / config.cells_per_wavelength;
  if (d_min < 1e300) h = std::min(h, d_min / config.min_cells_per_diameter);
  return h;
}

inline Grid rasterize(const DeviceLayout& layout, const SolverConfig& config, double f_max) {
  config.validate();
  layout.substrate.validate();
  const auto violations = validate_layout(layout);
  if (!violations.empty()) throw ValidationError("invalid layout: " + violations.front().message);
  if (layout.ports.empty()) throw ValidationError("layout has no ports");
  for (const auto& p : layout.ports) {
    const bool axis = (std::abs(std::abs(p.normal.x) - 1.0) < 1e-12 && std::abs(p.normal.y) < 1e-12) ||
                      (std::abs(std::abs(p.normal.y) - 1.0) < 1e-12 && std::abs(p.normal.x) < 1e-12);
    if (!axis) {
      throw ValidationError("port " + std::to_string(p.id) +
                            " is not axis-aligned; the lattice solver only supports ports normal to x or y");
    }
  }

  Grid g;
  g.h = grid_spacing(layout, config, f_max);
  const double h = g.h;
  const Point c = layout.outline.center();
  const double hx = 0.5 * layout.outline.width(), hy = 0.5 * layout.outline.height();
  const int kx = static_cast<int>(std::ceil(hx / h - 1e-9)) + config.pml_cells;
  const int ky = static_cast<int>(std::ceil(hy / h - 1e-9)) + config.pml_cells;
  const double cells = (2.0 * kx + 1.0) * (2.0 * ky + 1.0);
  if (cells > static_cast<double>(config.cell_budget)) {
    throw ValidationError("grid of " + std::to_string(static_cast<long long>(cells)) + " cells exceeds the budget of " +
                          std::to_string(config.cell_budget));
  }
  g.nx = 2 * kx + 1;
  g.ny = 2 * ky + 1;
  g.x0 = c.x - kx * h;
  g.y0 = c.y - ky * h;
  g.background_eps = layout.substrate.permittivity();
  g.pml_eps = layout.substrate.eps_r;

  const double pml_len = config.pml_cells * h;
  g.pml_length = pml_len;
  auto depth = [&](double offset, double half) { return std::clamp((std::abs(offset) - half) / pml_len, 0.0, 1.0); };
  g.depth_x.resize(g.nx);
  g.depth_x_half.resize(g.nx);
  g.depth_y.resize(g.ny);
  g.depth_y_half.resize(g.ny);
  for (int i = 0; i < g.nx; ++i) {
    g.depth_x[i] = depth((i - kx) * h, hx);
    g.depth_x_half[i] = depth((i - kx + 0.5) * h, hx);
  }
  for (int j = 0; j < g.ny; ++j) {
    g.depth_y[j] = depth((j - ky) * h, hy);
    g.depth_y_half[j] = depth((j - ky + 0.5) * h, hy);
  }

  const std::size_t n = static_cast<std::size_t>(g.nx) * g.ny;
  g.kind.assign(n, NodeKind::Medium);
  g.eps.assign(n, g.background_eps);

  auto paint = [&](const Cylinder& cyl, bool conductors) {
    if (cyl.material.is_conductor() != conductors) return;
    const double r = cyl.radius;
    const double ox = cyl.center.x - c.x, oy = cyl.center.y - c.y;
    const int i0 = std::max(0, static_cast<int>(std::floor((ox - r) / h)) + kx - 1);
    const int i1 = std::min(g.nx - 1, static_cast<int>(std::ceil((ox + r) / h)) + kx + 1);
    const int j0 = std::max(0, static_cast<int>(std::floor((oy - r) / h)) + ky - 1);
    const int j1 = std::min(g.ny - 1, static_cast<int>(std::ceil((oy + r) / h)) + ky + 1);
    for (int j = j0; j <= j1; ++j) {
      const double dy = (j - ky) * h - oy;
      for (int i = i0; i <= i1; ++i) {
        const double dx = (i - kx) * h - ox;
        if (dx * dx + dy * dy >= r * r) continue;
        const std::size_t id = g.index(i, j);
        if (conductors) {
          g.kind[id] = NodeKind::Conductor;
        } else {
          g.eps[id] = Complex(cyl.material.eps_r, 0.0);
        }
      }
    }
  };
  for (const auto& cyl : layout.cylinders) paint(cyl, false);
  for (const auto& cyl : layout.cylinders) paint(cyl, true);

  std::vector<ModalPort> ports = layout.ports;
  std::sort(ports.begin(), ports.end(), [](const ModalPort& a, const ModalPort& b) { return a.id < b.id; });
  for (const auto& p : ports) {
    PortGrid pg;
    pg.id = p.id;
    pg.along_y = std::abs(p.normal.x) > 0.5;
    pg.inward = (pg.along_y ? p.normal.x : p.normal.y) > 0.0 ? 1 : -1;
    const double plane = pg.along_y ? p.a.x - c.x : p.a.y - c.y;
    const int kk = pg.along_y ? kx : ky;
    pg.line = static_cast<int>(std::lround(plane / h)) + kk;
    pg.offset = ((pg.line - kk) * h - plane) * pg.inward;
    pg.modal_width = detail::port_modal_width(layout, p);
    const double center = pg.along_y ? p.midpoint().y - c.y : p.midpoint().x - c.x;
    const int kl = pg.along_y ? ky : kx;
    const int nl = pg.along_y ? g.ny : g.nx;
    const double reach = 0.5 * (pg.modal_width - h) + 1e-9 * h;
    pg.first = -1;
    for (int k = 0; k < nl; ++k) {
      if (std::abs((k - kl) * h - center) < reach) {
        if (pg.first < 0) pg.first = k;
        ++pg.count;
      }
    }
    const int nn = pg.along_y ? g.nx : g.ny;
    if (pg.line < 1 || pg.line >= nn - 1 || pg.first < 1 || pg.first + pg.count >= nl) {
      throw ValidationError("port " + std::to_string(p.id) + " does not fit inside the grid");
    }
    if (pg.count < 3) throw ValidationError("port " + std::to_string(p.id) + " spans fewer than 3 lattice nodes");
    pg.reported_modes = std::min(pg.count, std::max(p.modes, config.port_modes));
    g.ports.push_back(pg);
  }
  // Everything on or beyond a port line is outside the device.
  for (const auto& pg : g.ports) {
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const int along = pg.along_y ? i : j;
        if ((along - pg.line) * pg.inward <= 0) g.kind[g.index(i, j)] = NodeKind::Excluded;
      }
    }
  }
  for (const auto& pg : g.ports) {
    for (int k = 0; k < pg.count; ++k) {
      const std::size_t id = g.index(g.port_node_i(pg, k), g.port_node_j(pg, k));
      if (g.kind[id] == NodeKind::Port) throw ValidationError("ports " + std::to_string(pg.id) + " overlap another port");
      g.kind[id] = NodeKind::Port;
      g.eps[id] = g.background_eps;
    }
  }
  g.unknown.assign(n, -1);
  for (std::size_t id = 0; id < n; ++id) {
    if (g.kind[id] == NodeKind::Medium || g.kind[id] == NodeKind::Port) g.unknown[id] = g.unknowns++;
  }
  return g;
}

struct FieldMap {
  double x0 = 0.0, y0 = 0.0, h = 0.0;
  int nx = 0, ny = 0;
  double frequency = 0.0;
  int excited_port = 0;
  std::vector<Complex> values;  // row-major, j * nx + i

  Complex at(int i, int j) const { return values.at(static_cast<std::size_t>(j) * nx + i); }

  /// x_m,y_m,re_ez,im_ez per node, rows of increasing y.
  std::string to_csv() const {
    std::string out = "x_m,y_m,re_ez,im_ez\n";
    char buf[128];
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const Complex v = at(i, j);
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g\n", x0 + i * h, y0 + j * h, v.real(), v.imag());
        out += buf;
      }
    }
    return out;
  }

  /// Plain PGM (P2) of |E_z| scaled to 0..255, top row = largest y.
  std::string to_pgm() const {
    double peak = 0.0;
    for (const auto& v : values) peak = std::max(peak, std::abs(v));
    std::string out = "P2\n" + std::to_string(nx) + " " + std::to_string(ny) + "\n255\n";
    for (int j = ny - 1; j >= 0; --j) {
      for (int i = 0; i < nx; ++i) {
        const int level = peak > 0.0 ? static_cast<int>(std::lround(255.0 * std::abs(at(i, j)) / peak)) : 0;
        out += std::to_string(level);
        out += (i + 1 == nx || (i + 1) % 16 == 0) ? '\n' : ' ';
      }
    }
    return out;
  }
};

struct ExcitationResult {
  Eigen::VectorXcd column;                    // S_{q,p} over ports q (id order)
  std::vector<std::vector<Complex>> modal;    // outgoing modal amplitudes per port
  std::optional<FieldMap> field;
};

/// Assembled and factored system of one grid at one frequency.
class FrequencySolver {
 public:
  using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>;

  FrequencySolver(const Grid& grid, double frequency, double pml_reflection = 1e-6)
      : grid_(grid), frequency_(frequency) {
    if (!(frequency > 0.0)) throw ValidationError("frequency must be positive");
    k0_ = 2.0 * kPi * frequency / kSpeedOfLight;
    build_ports();
    assemble(pml_reflection);
    lu_.compute(a_);
    if (lu_.info() != Eigen::Success) throw SolverError("sparse factorization failed", frequency);
  }

  FrequencySolver(Grid&&, double, double = 1e-6) = delete;  // keeps a reference to the grid
  FrequencySolver(const FrequencySolver&) = delete;
  FrequencySolver& operator=(const FrequencySolver&) = delete;

  double frequency() const { return frequency_; }
  int ports() const { return static_cast<int>(grid_.ports.size()); }

  /// Unit incident TE_10 wave at port `port_id`, all other ports matched.
  ExcitationResult solve(int port_id, bool keep_field = false) {
    const int p = port_index(port_id);
    const auto& src = modes_[p];
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(grid_.unknowns);
    const Complex drive = 1.0 / src.z[0] - src.z[0];
    for (int k = 0; k < src.n; ++k) rhs[src.unknowns[k]] = -src.phi(k, 0) * drive;
    Eigen::VectorXcd x = lu_.solve(rhs);
    const double bnorm = rhs.norm();
    double rel = (a_ * x - rhs).norm() / bnorm;
    for (int it = 0; it < 3 && !(rel <= kResidualTolerance); ++it) {
      const Eigen::VectorXcd r = rhs - a_ * x;
      x += lu_.solve(r);
      rel = (a_ * x - rhs).norm() / bnorm;
    }
    if (!(rel <= kResidualTolerance) || !x.allFinite()) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "linear solve residual %.3g exceeds %.1g", rel, kResidualTolerance);
      throw SolverError(buf, frequency_);
    }

    ExcitationResult out;
    out.column.resize(ports());
    out.modal.resize(ports());
    for (int q = 0; q < ports(); ++q) {
      const auto& pm = modes_[q];
      Eigen::VectorXcd e(pm.n);
      for (int k = 0; k < pm.n; ++k) e[k] = x[pm.unknowns[k]];
      Eigen::VectorXcd c = pm.phi.transpose() * e;
      if (q == p) c[0] -= 1.0;
      const int m_out = grid_.ports[q].reported_modes;
      out.modal[q].assign(c.data(), c.data() + m_out);
      const Complex shift = std::exp(Complex(0.0, -1.0) * (pm.beta * pm.offset + src.beta * src.offset));
      out.column[q] = c[0] * std::sqrt(pm.sin_beta_h / src.sin_beta_h) * shift;
    }
    if (keep_field) {
      FieldMap f;
      f.x0 = grid_.x0;
      f.y0 = grid_.y0;
      f.h = grid_.h;
      f.nx = grid_.nx;
      f.ny = grid_.ny;
      f.frequency = frequency_;
      f.excited_port = port_id;
      f.values.assign(grid_.kind.size(), Complex(0.0, 0.0));
      for (std::size_t id = 0; id < grid_.kind.size(); ++id) {
        if (grid_.unknown[id] >= 0) f.values[id] = x[grid_.unknown[id]];
      }
      out.field = std::move(f);
    }
    return out;
  }

  /// Guided TE_10 propagation constant of a port's discrete aperture.
  Complex port_beta(int port_id) const { return modes_[port_index(port_id)].beta; }

 private:
  static constexpr double kResidualTolerance = 1e-10;

  struct PortModes {
    int n = 0;
    Eigen::MatrixXd phi;            // n x n, column m is mode m+1
    std::vector<Complex> z;         // per-step modal factor toward the outside
    std::vector<int> unknowns;
    Complex beta;                   // mode 1
    Complex sin_beta_h;             // mode 1
    double offset = 0.0;
  };

  int port_index(int port_id) const {
    for (std::size_t q = 0; q < grid_.ports.size(); ++q) {
      if (grid_.ports[q].id == port_id) return static_cast<int>(q);
    }
    throw ValidationError("no port " + std::to_string(port_id));
  }

  void build_ports() {
    const double h = grid_.h;
    for (const auto& pg : grid_.ports) {
      PortModes pm;
      pm.n = pg.count;
      pm.offset = pg.offset;
      const int n = pm.n;
      pm.phi.resize(n, n);
      const double norm_factor = std::sqrt(2.0 / (n + 1));
      for (int m = 0; m < n; ++m) {
        for (int k = 0; k < n; ++k) pm.phi(k, m) = norm_factor * std::sin(kPi * (m + 1.0) * (k + 1.0) / (n + 1.0));
      }
      const Complex hk2 = h * h * k0_ * k0_ * grid_.background_eps;
      for (int m = 0; m < n; ++m) {
        const double lambda = 2.0 - 2.0 * std::cos(kPi * (m + 1.0) / (n + 1.0));
        const Complex q = 1.0 + 0.5 * (lambda - hk2);
        if (m == 0 && !(1.0 + 0.5 * (lambda - hk2.real()) < 1.0)) {
          throw SolverError("port " + std::to_string(pg.id) + " is below the cutoff of its fundamental mode",
                            frequency_);
        }
        const Complex root = std::sqrt(q * q - 1.0);
        const Complex z1 = q - root, z2 = q + root;
        const double a1 = std::abs(z1), a2 = std::abs(z2);
        Complex z;
        if (std::abs(a1 - 1.0) < 1e-12 && std::abs(a2 - 1.0) < 1e-12) {
          z = z1.imag() < 0.0 ? z1 : z2;
        } else {
          z = a1 < a2 ? z1 : z2;
        }
        pm.z.push_back(z);
      }
      pm.beta = Complex(0.0, 1.0) * std::log(pm.z[0]) / h;
      pm.sin_beta_h = (1.0 / pm.z[0] - pm.z[0]) / Complex(0.0, 2.0);
      for (int k = 0; k < n; ++k) {
        pm.unknowns.push_back(grid_.unknown[grid_.index(grid_.port_node_i(pg, k), grid_.port_node_j(pg, k))]);
      }
      modes_.push_back(std::move(pm));
    }
  }

  void assemble(double pml_reflection) {
    const Grid& g = grid_;
    const double h = g.h;
    const double k_pml = k0_ * std::sqrt(g.pml_eps);
    const double strength = 2.0 * std::log(1.0 / pml_reflection) / (k_pml * g.pml_length);
    auto sx = [&](int i) { return detail::pml_stretch(g.depth_x[i], strength); };
    auto sy = [&](int j) { return detail::pml_stretch(g.depth_y[j], strength); };
    auto sx_half = [&](int i) { return detail::pml_stretch(g.depth_x_half[i], strength); };  // i + 1/2
    auto sy_half = [&](int j) { return detail::pml_stretch(g.depth_y_half[j], strength); };

    // Port line nodes: which port and the outward neighbor direction.
    std::vector<std::int8_t> ghost_dir(g.kind.size(), 0);
    for (const auto& pg : g.ports) {
      for (int k = 0; k < pg.count; ++k) {
        ghost_dir[g.index(g.port_node_i(pg, k), g.port_node_j(pg, k))] =
            static_cast<std::int8_t>((pg.along_y ? 1 : 2) * -pg.inward);
      }
    }

    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(static_cast<std::size_t>(g.unknowns) * 5);
    const double hk2 = h * h * k0_ * k0_;
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t id = g.index(i, j);
        const int u = g.unknown[id];
        if (u < 0) continue;
        const Complex sxi = sx(i), syj = sy(j);
        Complex diag = hk2 * g.eps[id] * sxi * syj;
        auto couple = [&](int ni, int nj, Complex w, std::int8_t dir) {
          diag -= w;
          if (ni < 0 || nj < 0 || ni >= g.nx || nj >= g.ny) return;
          if (ghost_dir[id] != 0 && ghost_dir[id] == dir) return;  // closed by the port block
          const int v = g.unknown[g.index(ni, nj)];
          if (v >= 0) trip.emplace_back(u, v, w);
        };
        couple(i - 1, j, syj / sx_half(i - 1 >= 0 ? i - 1 : 0), -1);
        couple(i + 1, j, syj / sx_half(i), 1);
        couple(i, j - 1, sxi / sy_half(j - 1 >= 0 ? j - 1 : 0), -2);
        couple(i, j + 1, sxi / sy_half(j), 2);
        trip.emplace_back(u, u, diag);
      }
    }
    for (const auto& pm : modes_) {
      Eigen::MatrixXcd t = pm.phi.cast<Complex>() *
                           Eigen::Map<const Eigen::VectorXcd>(pm.z.data(), pm.n).asDiagonal() *
                           pm.phi.transpose().cast<Complex>();
      for (int a = 0; a < pm.n; ++a) {
        for (int b = 0; b < pm.n; ++b) trip.emplace_back(pm.unknowns[a], pm.unknowns[b], t(a, b));
      }
    }
    a_.resize(g.unknowns, g.unknowns);
    a_.setFromTriplets(trip.begin(), trip.end());
    a_.makeCompressed();
  }

  const Grid& grid_;
  double frequency_;
  double k0_ = 0.0;
  std::vector<PortModes> modes_;
  SparseMatrix a_;
  Eigen::UmfPackLU<SparseMatrix> lu_;
};

/// Thrown when a sweep stops early; carries the frequencies solved before it.
class SweepError : public SolverError {
 public:
  SweepError(const SolverError& cause, ScatteringData partial)
      : SolverError(cause), partial_(std::move(partial)) {}
  const ScatteringData& partial() const { return partial_; }

 private:
  ScatteringData partial_;
};

namespace detail {

/// Runs `work(k)` for k in [0, count) on up to `threads` workers. Results are
/// written by index, so the outcome does not depend on scheduling. Returns the
/// first failing index with its exception, if any.
template <class Work>
std::pair<std::size_t, std::exception_ptr> parallel_for(std::size_t count, unsigned threads, Work work) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto run = [&]() {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        work(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (n == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  for (std::size_t k = 0; k < count; ++k) {
    if (errors[k]) return {k, errors[k]};
  }
  return {count, nullptr};
}

}  // namespace detail

/// Full N x N scattering matrices of a layout over a uniform frequency grid.
inline ScatteringData sweep(const DeviceLayout& layout, const FrequencyBand& band, int npoints,
                            const SolverConfig& config = {}) {
  validate_band(band);
  const auto freqs = uniform_frequencies(band, npoints);
  const Grid grid = rasterize(layout, config, band.hi_hz);
  const int n = static_cast<int>(grid.ports.size());
  std::vector<SMatrix> results(freqs.size());
  const auto [failed, error] = detail::parallel_for(freqs.size(), config.threads, [&](std::size_t k) {
    FrequencySolver solver(grid, freqs[k], config.pml_reflection);
    SMatrix s(n, n);
    for (int p = 0; p < n; ++p) s.col(p) = solver.solve(grid.ports[p].id).column;
    results[k] = std::move(s);
  });
  ScatteringData data;
  for (std::size_t k = 0; k < failed; ++k) {
    data.frequencies.push_back(freqs[k]);
    data.matrices.push_back(std::move(results[k]));
  }
  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const SolverError& e) {
      throw SweepError(e, std::move(data));
    }
  }
  return data;
}

/// Single-excitation sweep: column `port_id` of S at each frequency.
inline std::vector<Eigen::VectorXcd> sweep_column(const Grid& grid, const std::vector<double>& freqs, int port_id,
                                                  const SolverConfig& config = {}) {
  std::vector<Eigen::VectorXcd> out(freqs.size());
  const auto [failed, error] = detail::parallel_for(freqs.size(), config.threads, [&](std::size_t k) {
    FrequencySolver solver(grid, freqs[k], config.pml_reflection);
    out[k] = solver.solve(port_id).column;
  });
  if (error) std::rethrow_exception(error);
  return out;
}

/// Field of one excitation at one frequency.
inline FieldMap solve_field(const DeviceLayout& layout, double frequency, int port_id, const SolverConfig& config = {}) {
  const Grid grid = rasterize(layout, config, frequency);
  FrequencySolver solver(grid, frequency, config.pml_reflection);
  return *solver.solve(port_id, true).field;
}

struct BetaExtraction {
  double length1 = 0.04;
  double length2 = 0.08;
};

/// Guided propagation constant of a post-wall guide from the S21 phase of two
/// straight sections whose lengths differ by a whole number of pitches.
inline DispersionTable extract_beta(const SiwSpec& spec, const FrequencyBand& band, int npoints,
                                    const SolverConfig& config = {}, const BetaExtraction& lengths = {}) {
  spec.validate();
  validate_band(band);
  const auto freqs = uniform_frequencies(band, npoints);
  const double fc = te_cutoff_frequency(equivalent_guide(spec), 1);
  if (!(band.lo_hz > fc)) throw ValidationError("band starts at or below the TE10 cutoff of the guide");
  const int n1 = static_cast<int>(std::lround(lengths.length1 / spec.pitch));
  const int n2 = static_cast<int>(std::lround(lengths.length2 / spec.pitch));
  if (n1 < 2 || n2 <= n1) throw ValidationError("need 2 <= L1/p < L2/p");
  const double l1 = n1 * spec.pitch, l2 = n2 * spec.pitch, dl = l2 - l1;
  const double kd_scale = 2.0 * kPi * std::sqrt(spec.substrate.eps_r) / kSpeedOfLight;
  if (kd_scale * freqs.front() * dl >= 2.0 * kPi) {
    throw ValidationError("length difference exceeds a guided wavelength at the lowest frequency; phase is ambiguous");
  }
  for (std::size_t k = 1; k < freqs.size(); ++k) {
    const double ka = kd_scale * freqs[k - 1], kb = kd_scale * freqs[k];
    if (dl * std::sqrt(kb * kb - ka * ka) >= kPi) {
      throw ValidationError("frequency step too coarse to unwrap the phase; raise the number of points");
    }
  }
  const DeviceLayout a = generate_rsiw(spec, l1), b = generate_rsiw(spec, l2);
  const Grid ga = rasterize(a, config, band.hi_hz), gb = rasterize(b, config, band.hi_hz);
  const auto ca = sweep_column(ga, freqs, 1, config), cb = sweep_column(gb, freqs, 1, config);
  DispersionTable table;
  table.frequencies = freqs;
  table.modes = {1};
  double previous = 0.0;
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    const double dphi = std::arg(cb[k][1] / ca[k][1]);  // phase of the extra section, in (-pi, pi]
    double beta_dl;
    if (k == 0) {
      beta_dl = std::fmod(-dphi + 2.0 * kPi, 2.0 * kPi);
    } else {
      beta_dl = -dphi + 2.0 * kPi * std::round((previous + dphi) / (2.0 * kPi));
    }
    previous = beta_dl;
    table.entries.push_back({freqs[k], 1, beta_dl / dl, std::nullopt});
  }
  return table;
}

}  // namespace siw
