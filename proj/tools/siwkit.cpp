// siwkit: design, simulate, tune and characterize post-wall waveguide circuits.
//
// Exit codes: 0 success, 1 invalid input or design-rule failure, 2 solver
// failure, 3 I/O failure.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "siw/siw.hpp"

namespace fs = std::filesystem;
using namespace siw;

namespace {

enum ExitCode { kOk = 0, kInvalid = 1, kSolverFailure = 2, kIoFailure = 3 };

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v + 0.0);
  return buf;
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return s.str();
}

// Flags whose config-file value is true/false rather than an argument.
const std::set<std::string> kBooleanKeys = {"allow-violations", "no-baseline"};

/// Expands `--config FILE` into `--key value` tokens placed ahead of the
/// explicit flags, so that flags given on the command line win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) {
      path = args[k + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k), args.begin() + static_cast<std::ptrdiff_t>(k) + 2);
      break;
    }
    if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k));
      break;
    }
  }
  if (path.empty()) return args;
  std::vector<std::string> injected;
  std::istringstream in(read_file(path));
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no, 1);
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no, 1);
    if (kBooleanKeys.count(key)) {
      if (value == "true") {
        injected.push_back("--" + key);
      } else if (value != "false") {
        throw ParseError("expected true or false", line_no, eq + 2);
      }
    } else {
      injected.push_back("--" + key);
      injected.push_back(value);
    }
  }
  std::size_t at = 1;
  while (at < args.size() && args[at].rfind("-", 0) != 0) ++at;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
  return args;
}

/// One leaf command: its string-valued options, kept verbatim for the manifest.
class Command {
  template <class F>
  auto wrap(const std::string& name, F parse) const -> decltype(parse(std::string())) {
    try {
      return parse(values_.at(name));
    } catch (const ValidationError& e) {
      throw ValidationError("--" + name + ": " + e.what());
    }
  }

 public:
  Command(CLI::App& parent, const std::string& name, const std::string& description, std::string path)
      : app(parent.add_subcommand(name, description)), path_(std::move(path)) {}

  void option(const std::string& name, const std::string& fallback, const std::string& description) {
    values_[name] = fallback;
    app->add_option("--" + name, values_[name], description)->capture_default_str();
  }
  void flag(const std::string& name, const std::string& description) {
    flags_[name] = false;
    app->add_flag("--" + name, flags_[name], description);
  }

  const std::string& str(const std::string& name) const { return values_.at(name); }
  bool given(const std::string& name) const { return app->count("--" + name) > 0; }
  bool on(const std::string& name) const { return flags_.at(name); }
  double length(const std::string& name) const { return wrap(name, [](auto s) { return units::parse_length(s); }); }
  double frequency(const std::string& name) const {
    return wrap(name, [](auto s) { return units::parse_frequency(s); });
  }
  FrequencyBand band(const std::string& name) const { return wrap(name, [](auto s) { return units::parse_band(s); }); }
  double number(const std::string& name) const { return wrap(name, [](auto s) { return units::parse_number(s); }); }
  int integer(const std::string& name) const {
    const double v = number(name);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ValidationError("--" + name + " must be an integer");
    return static_cast<int>(v);
  }

  const std::string& path() const { return path_; }

  /// Resolved settings as a config file for this command.
  std::string settings() const {
    std::string out;
    for (const auto& [k, v] : values_) {
      if (!v.empty()) out += k + " = " + v + '\n';
    }
    for (const auto& [k, v] : flags_) out += k + " = " + (v ? "true" : "false") + '\n';
    return out;
  }

  CLI::App* app;

 private:
  std::string path_;
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> flags_;
};

/// Writes named files under the output directory and records their hashes.
class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir_ / name).string());
    out << content;
    out.close();
    if (!out) throw IoError("cannot write " + (dir_ / name).string());
    written_.emplace_back(name, sha256_hex(content));
  }

  void input(const std::string& path, const std::string& content) { inputs_.emplace_back(path, sha256_hex(content)); }

  void manifest(const Command& cmd, bool complete, const std::string& note = "") {
    std::string out = "# siwkit run manifest\n# command: " + cmd.path() + "\n# complete: " +
                      (complete ? "true" : "false") + '\n';
    if (!note.empty()) out += "# note: " + note + '\n';
    out += cmd.settings();
    for (const auto& [p, h] : inputs_) out += "# input sha256 " + h + ' ' + p + '\n';
    for (const auto& [p, h] : written_) out += "# output sha256 " + h + ' ' + p + '\n';
    write("run-manifest.txt", out);
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> written_;
  std::vector<std::pair<std::string, std::string>> inputs_;
};

// ---- shared option groups -------------------------------------------------

void add_spec_options(Command& c) {
  c.option("wsiw", "43.25mm", "post row spacing W_SIW (center to center)");
  c.option("d", "1mm", "via diameter");
  c.option("p", "2mm", "via pitch");
  c.option("er", "4.3", "substrate relative permittivity");
  c.option("h", "1.5mm", "substrate height");
  c.option("tand", "0", "substrate loss tangent");
}

SiwSpec spec_from(const Command& c) {
  SiwSpec s{{c.length("h"), c.number("er"), c.number("tand")}, c.length("d"), c.length("p"), c.length("wsiw")};
  s.validate();
  return s;
}

void add_solver_options(Command& c) {
  c.option("cpw", "20", "cells per guided wavelength at the top frequency");
  c.option("min-cells-per-diameter", "6", "cells across the smallest cylinder");
  c.option("port-modes", "1", "modal amplitudes reported per port");
  c.option("pml-cells", "10", "absorbing layer thickness in cells");
  c.option("cell-budget", "4000000", "maximum grid nodes");
  c.option("threads", "1", "worker threads for frequency points");
}

SolverConfig solver_from(const Command& c) {
  SolverConfig s;
  s.cells_per_wavelength = c.number("cpw");
  s.min_cells_per_diameter = c.integer("min-cells-per-diameter");
  s.port_modes = c.integer("port-modes");
  s.pml_cells = c.integer("pml-cells");
  const int budget = c.integer("cell-budget");
  if (budget < 16) throw ValidationError("--cell-budget is too small");
  s.cell_budget = static_cast<std::size_t>(budget);
  const int threads = c.integer("threads");
  if (threads < 1) throw ValidationError("--threads must be >= 1");
  s.threads = static_cast<unsigned>(threads);
  s.validate();
  return s;
}

DeviceLayout preset_layout(const std::string& name) {
  if (name == "paper-sband-rsiw") return presets::rsiw();
  if (name == "paper-sband-divider") return presets::divider();
  if (name == "paper-sband-coupler") return presets::coupler();
  if (name == "paper-sband-circulator") return presets::circulator();
  throw ValidationError("unknown preset '" + name + "'");
}

void require_preset(const Command& c, const std::string& expected) {
  if (c.given("preset") && c.str("preset") != expected) {
    throw ValidationError("this design takes --preset " + expected);
  }
}

std::string violations_text(const std::vector<LayoutViolation>& v) {
  std::string out;
  for (const auto& e : v) out += "layout violation: " + e.message + '\n';
  return out;
}

std::string mm(double meters, const char* fmt = "%.2f") { return format(fmt, meters * 1e3) + " mm"; }
std::string ghz(double hz) { return format("%.4f", hz * 1e-9) + " GHz"; }

std::string guide_report(const SiwSpec& spec) {
  const auto guide = equivalent_guide(spec);
  std::string out;
  out += "W_SIW = " + mm(spec.row_spacing) + "\n";
  out += "d = " + mm(spec.via_diameter) + ", p = " + mm(spec.pitch) + ", eps_r = " + format("%g", spec.substrate.eps_r) +
         ", h = " + mm(spec.substrate.height) + "\n";
  out += "W_eq = " + mm(guide.width) + "\n";
  out += "fc_TE10 = " + ghz(te_cutoff_frequency(guide, 1)) + "\n";
  out += "fc_TE20 = " + ghz(te_cutoff_frequency(guide, 2)) + "\n";
  return out;
}

/// Common tail of every design command: rules, layout checks and outputs.
int finish_design(const Command& c, const SiwSpec& spec, const std::optional<DeviceLayout>& layout, std::string report) {
  const auto rules = validate_design_rules(spec, c.band("band"));
  report += "design rules (" + c.str("band") + "):\n" + rules.to_text();
  std::vector<LayoutViolation> violations;
  if (layout) {
    violations = validate_layout(*layout);
    report += violations_text(violations);
  }
  std::cout << report;
  const bool ok = rules.pass && violations.empty();
  if (!ok && !c.on("allow-violations")) {
    std::cerr << "design rejected; pass --allow-violations to write it anyway\n";
    return kInvalid;
  }
  Output out(c.str("out"));
  if (layout) out.write("layout.siw", write_layout(*layout));
  out.write("report.txt", report);
  out.manifest(c, true, ok ? "" : "written with design-rule or layout violations");
  return kOk;
}

// ---- design ---------------------------------------------------------------

int design_rsiw(const Command& c) {
  require_preset(c, "paper-sband-rsiw");
  const bool preset = c.given("preset");
  const SiwSpec spec = preset ? presets::sband_siw() : spec_from(c);
  std::optional<DeviceLayout> layout;
  layout = preset ? presets::rsiw() : generate_rsiw(spec, c.length("length"));
  const auto wr = presets::wr340();
  std::string report = "device = rsiw\n" + guide_report(spec);
  report += "length = " + mm(preset ? presets::kRsiwLength : c.length("length")) + "\n";
  report += "WR-340 reference: width " + mm(wr.width) + ", fc_TE10 = " + ghz(te_cutoff_frequency(wr, 1)) + "\n";
  return finish_design(c, spec, layout, report);
}

int design_divider(const Command& c) {
  require_preset(c, "paper-sband-divider");
  const bool preset = c.given("preset");
  const SiwSpec spec = preset ? presets::sband_siw() : spec_from(c);
  const double arm = preset ? presets::kDividerArm : c.length("arm");
  const double r = preset ? presets::kDividerPostRadius : c.length("r");
  const double xp = preset ? presets::kDividerPostOffset : c.length("xp");
  const DeviceLayout layout = preset ? presets::divider() : generate_tee_divider(spec, arm, r, xp);
  std::string report = "device = divider\n" + guide_report(spec);
  report += "arm = " + mm(arm) + ", r = " + mm(r) + ", x_p = " + mm(xp) + " (from the port 1 plane)\n";
  return finish_design(c, spec, layout, report);
}

int design_coupler(const Command& c) {
  require_preset(c, "paper-sband-coupler");
  const bool preset = c.given("preset");
  const SiwSpec spec = preset ? presets::sband_siw() : spec_from(c);
  const CouplerDims dims = preset ? presets::coupler_dims()
                                  : CouplerDims{c.length("length"), c.length("aperture"), c.length("post-d"),
                                                c.length("stub-w"), c.length("stub-l")};
  const DeviceLayout layout = preset ? presets::coupler() : generate_aperture_coupler(spec, dims);
  std::string report = "device = coupler\n" + guide_report(spec);
  report += "L = " + mm(dims.total_length) + ", W_ap = " + mm(dims.aperture_width) + ", matching post d = " +
            mm(dims.matching_post_diameter) + ", stub " + mm(dims.stub_width) + " x " + mm(dims.stub_length) + "\n";
  const double f0 = 0.5 * (presets::kSBand.lo_hz + presets::kSBand.hi_hz);
  const RectGuideSpec wide{2.0 * equivalent_width(spec), spec.substrate};
  const double b1 = propagation_constant(wide, f0, 1).imag(), b2 = propagation_constant(wide, f0, 2).imag();
  report += "coupled-region phase (TE10 - TE20 over W_ap at " + ghz(f0) + ") = " +
            format("%.2f", degrees(phase_diff_from_betas(b1, b2, dims.aperture_width))) + " deg\n";
  return finish_design(c, spec, layout, report);
}

int design_circulator(const Command& c) {
  require_preset(c, "paper-sband-circulator");
  const bool preset = c.given("preset");
  const SiwSpec spec = preset ? presets::sband_siw() : spec_from(c);
  const double f0 = c.frequency("f0");
  const double ef = c.number("ef");
  const double rf = ferrite_radius(f0, ef);
  const double used = preset ? presets::kFerriteRadius : (c.given("rf") ? c.length("rf") : rf);
  const DeviceLayout layout =
      preset ? presets::circulator() : generate_circulator_skeleton(spec, c.length("arm"), used, ef);
  std::string report = "device = circulator\n" + guide_report(spec);
  report += "R_f = " + mm(rf, "%.3f") + " (f0 = " + ghz(f0) + ", eps_f = " + format("%g", ef) + ")\n";
  report += "ferrite radius in layout = " + mm(used, "%.3f") + "\n";
  report += "note: the paper-sband-circulator preset uses R_f = " + mm(presets::kFerriteRadius, "%.0f") +
            ", not the " + mm(rf, "%.3f") + " disk-resonance value; the difference is kept as given.\n";
  report += "note: gyrotropy is not modeled; the layout is a geometry skeleton.\n";
  return finish_design(c, spec, layout, report);
}

int design_taper(const Command& c) {
  if (c.given("preset") && c.str("preset") != "paper-sband-taper") {
    throw ValidationError("this design takes --preset paper-sband-taper");
  }
  const SiwSpec spec = c.given("preset") ? presets::sband_siw() : spec_from(c);
  TaperOptions opt;
  opt.center_frequency = c.frequency("f0");
  const auto dims = taper_initial_dims(c.number("z0"), spec.substrate, spec, opt);
  std::string report = "device = taper\n" + guide_report(spec);
  report += "W_mst = " + mm(dims.strip_width) + " (" + c.str("z0") + " ohm)\n";
  report += "W_T = " + mm(dims.taper_width) + "\n";
  report += "L_T = " + mm(dims.taper_length) + " (quarter guided wavelength at " + ghz(opt.center_frequency) + ")\n";
  if (c.given("preset")) {
    const auto p = presets::taper();
    report += "preset: W_mst = " + mm(p.strip_width) + ", W_T = " + mm(p.taper_width) + ", L_T = " +
              mm(p.taper_length) + ", L = " + mm(*p.guide_length) + "\n";
  }
  return finish_design(c, spec, std::nullopt, report);
}

// ---- simulate -------------------------------------------------------------

std::optional<std::pair<double, double>> curve_range(const PhaseCurve& curve, const FrequencyBand& band) {
  std::optional<std::pair<double, double>> r;
  for (std::size_t k = 0; k < curve.frequencies.size(); ++k) {
    const double f = curve.frequencies[k];
    if (f < band.lo_hz || f > band.hi_hz || !curve.degrees[k]) continue;
    const double v = *curve.degrees[k];
    if (!r) r = std::make_pair(v, v);
    r->first = std::min(r->first, v);
    r->second = std::max(r->second, v);
  }
  return r;
}

MetricsReport sweep_metrics(const ScatteringData& data, const FrequencyBand& band, bool complete) {
  MetricsReport m;
  m.add_text("complete", complete ? "true" : "false", "");
  m.add("ports", data.ports(), "");
  m.add("points", static_cast<double>(data.size()), "");
  if (data.size() == 0) return m;
  const int n = data.ports();
  double s11 = -std::numeric_limits<double>::infinity(), recip = 0.0;
  for (const auto& s : data.matrices) {
    s11 = std::max(s11, to_db(s(0, 0)));
    recip = std::max(recip, (s - s.transpose()).cwiseAbs().maxCoeff());
  }
  m.add("s11_max_db", s11, "dB");
  m.add("reciprocity_max_abs", recip, "");
  const FrequencyBand covered{data.frequencies.front(), data.frequencies.back()};
  if (data.size() >= 2) {
    const auto rl = return_loss_bandwidth(data, 1, covered, -15.0);
    m.add("rl_bandwidth_pct", rl.fractional_bandwidth_pct, "%");
  }
  for (int to = 2; to <= n; ++to) {
    const auto il = insertion_loss_stats(data, 1, to, covered);
    const std::string key = "s" + std::to_string(to) + "1";
    m.add(key + "_min_db", il.min_db, "dB");
    m.add(key + "_max_db", il.max_db, "dB");
    m.add(key + "_mean_db", il.mean_db, "dB");
  }
  if (n == 3) {
    double worst = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
      worst = std::max(worst, std::abs(to_db(data.s(k, 2, 1)) - to_db(data.s(k, 3, 1))));
    }
    m.add("s21_minus_s31_max_db", worst, "dB");
  }
  if (n == 4) {
    const double q = 0.25 * (band.hi_hz - band.lo_hz);
    const FrequencyBand mid{band.lo_hz + q, band.hi_hz - q};
    const auto r = curve_range(phase_difference_curve(data, 2, 3, 1), mid);
    m.add_text("phase_diff_definition", "arg(S21)-arg(S31), central half of the band", "");
    if (r) {
      m.add_text("phase_diff_deg_range", format("%.3f", r->first) + " " + format("%.3f", r->second), "deg");
    } else {
      m.add_text("phase_diff_deg_range", "undefined", "");
    }
  }
  return m;
}

int simulate(const Command& c) {
  const bool has_layout = !c.str("layout").empty(), has_preset = !c.str("preset").empty();
  if (has_layout == has_preset) throw ValidationError("give exactly one of --layout or --preset");
  Output out(c.str("out"));
  DeviceLayout layout;
  if (has_layout) {
    const std::string text = read_file(c.str("layout"));
    out.input(c.str("layout"), text);
    layout = parse_layout(text);
  } else {
    layout = preset_layout(c.str("preset"));
  }
  const auto violations = validate_layout(layout);
  if (!violations.empty()) {
    std::cerr << violations_text(violations);
    return kInvalid;
  }
  const FrequencyBand band = c.band("band");
  const int points = c.integer("points");
  const SolverConfig cfg = solver_from(c);

  std::set<std::string> formats;
  {
    std::stringstream s(c.str("formats"));
    for (std::string f; std::getline(s, f, ',');) {
      f = detail::trim(f);
      if (f != "touchstone" && f != "csv" && f != "metrics" && f != "fieldmap") {
        throw ValidationError("unknown output format '" + f + "'");
      }
      formats.insert(f);
    }
  }
  std::optional<std::pair<double, int>> field;
  if (formats.count("fieldmap")) {
    const double ff = c.given("field-freq") ? c.frequency("field-freq") : 0.5 * (band.lo_hz + band.hi_hz);
    field = std::make_pair(ff, c.integer("field-port"));
  }

  ScatteringData data;
  std::optional<SweepError> failure;
  try {
    data = sweep(layout, band, points, cfg);
  } catch (const SweepError& e) {
    failure = e;
    data = e.partial();
  }
  const bool complete = !failure;

  out.write("layout.siw", write_layout(layout));
  if (data.size() > 0) {
    if (formats.count("touchstone")) {
      const int n = data.ports();
      std::vector<std::string> comments = {"siwkit sweep of " + layout.name};
      if (!complete) comments.push_back("incomplete: stopped at " + format("%.6g", failure->frequency_hz()) + " Hz");
      out.write("sweep.s" + std::to_string(n) + "p", write_touchstone(data, {}, comments));
    }
    if (formats.count("csv")) out.write("sweep.csv", export_csv(data));
  }
  if (formats.count("metrics")) {
    const auto m = sweep_metrics(data, band, complete);
    out.write("metrics.txt", m.to_text());
    std::cout << m.to_text();
  }
  if (complete && field) {
    const auto map = solve_field(layout, field->first, field->second, cfg);
    out.write("field.csv", map.to_csv());
    out.write("field.pgm", map.to_pgm());
  }
  out.manifest(c, complete, complete ? "" : failure->what());
  if (failure) {
    std::cerr << "solver failure: " << failure->what() << "\n";
    return kSolverFailure;
  }
  return kOk;
}

// ---- optimize ---------------------------------------------------------------

int optimize_divider(const Command& c) {
  const SiwSpec spec = spec_from(c);
  const double arm = c.length("arm");
  double lo = 0.0, hi = arm + spec.row_spacing;
  if (!c.str("xp-bounds").empty()) {
    std::tie(lo, hi) = units::parse_range(c.str("xp-bounds"), units::parse_length);
  }
  TuningProblem problem;
  problem.generator = [spec, arm](double r, double xp) { return generate_tee_divider(spec, arm, r, xp); };
  problem.x_lo = lo;
  problem.x_hi = hi;
  problem.radii = {c.length("r")};
  problem.band = c.band("band");
  problem.points = c.integer("points");
  problem.coarse_points = c.integer("coarse-points");
  problem.tolerance = c.length("tol");
  problem.solver = solver_from(c);
  const int verify = c.integer("verify-points");
  if (verify != 0 && verify < 2) throw ValidationError("--verify-points must be 0 or >= 2");

  const auto result = optimize_post(problem);
  Output out(c.str("out"));
  out.write("history.csv", result.history_csv());

  std::string best;
  best += "x_p_m = " + format("%.12g", result.best_x_p) + "\n";
  best += "r_m = " + format("%.12g", result.best_r) + "\n";
  best += "objective_db = " + format("%.12g", result.best_objective_db) + "\n";
  if (!c.on("no-baseline")) {
    const double base = worst_return_loss_db(generate_tee_divider(spec, arm, 0.0, 0.0), problem.band, problem.points,
                                             problem.solver);
    best += "baseline_objective_db = " + format("%.12g", base) + "\n";
    best += "improvement_db = " + format("%.12g", base - result.best_objective_db) + "\n";
  }
  best += "converged = " + std::string(result.converged ? "true" : "false") + "\n";
  best += "evaluations = " + std::to_string(result.history.size()) + "\n";
  out.write("best.txt", best);
  std::cout << best;

  const auto layout = generate_tee_divider(spec, arm, result.best_r, result.best_x_p);
  out.write("layout.siw", write_layout(layout));
  if (verify >= 2) {
    const auto data = sweep(layout, problem.band, verify, problem.solver);
    out.write("sweep.s3p", write_touchstone(data, {}, {"siwkit verification of the tuned divider"}));
    out.write("sweep.csv", export_csv(data));
    out.write("metrics.txt", sweep_metrics(data, problem.band, true).to_text());
  }
  out.manifest(c, true);
  return kOk;
}

// ---- dispersion ---------------------------------------------------------------

int dispersion(const Command& c) {
  const SiwSpec spec = spec_from(c);
  const FrequencyBand band = c.band("band");
  const auto table = extract_beta(spec, band, c.integer("points"), solver_from(c), {c.length("l1"), c.length("l2")});
  const auto guide = equivalent_guide(spec);
  std::string csv = "freq_hz,beta_analytic,beta_extracted,rel_err\n";
  double worst = 0.0;
  for (const auto& e : table.entries) {
    const double analytic = propagation_constant(guide, e.frequency, 1).imag();
    const double rel = (*e.beta - analytic) / analytic;
    worst = std::max(worst, std::abs(rel));
    csv += format("%.12g", e.frequency) + ',' + format("%.12g", analytic) + ',' + format("%.12g", *e.beta) + ',' +
           format("%.12g", rel) + '\n';
  }
  Output out(c.str("out"));
  out.write("dispersion.csv", csv);
  out.manifest(c, true);
  std::cout << "max_abs_rel_err = " << format("%.6g", worst) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"siwkit: post-wall waveguide design and simulation"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help");
  app.set_help_all_flag("--help-all");

  auto* design = app.add_subcommand("design", "compute dimensions, check design rules and write a layout");
  design->require_subcommand(1);
  std::vector<std::unique_ptr<Command>> commands;
  std::map<const CLI::App*, std::function<int(const Command&)>> handlers;
  auto add = [&](CLI::App& parent, const std::string& name, const std::string& desc, const std::string& path,
                 std::function<int(const Command&)> handler) -> Command& {
    commands.push_back(std::make_unique<Command>(parent, name, desc, path));
    Command& c = *commands.back();
    c.option("out", "siwkit-out", "output directory");
    handlers[c.app] = std::move(handler);
    return c;
  };
  auto design_common = [](Command& c) {
    add_spec_options(c);
    c.option("preset", "", "named design");
    c.option("band", "2.1:3GHz", "operating band for the design rules");
    c.flag("allow-violations", "write outputs even when rules fail");
  };

  {
    auto& c = add(*design, "rsiw", "straight post-wall guide", "design rsiw", design_rsiw);
    design_common(c);
    c.option("length", "39.8mm", "guide length");
  }
  {
    auto& c = add(*design, "divider", "T-junction power divider", "design divider", design_divider);
    design_common(c);
    c.option("arm", "21.3mm", "input arm length");
    c.option("r", "1.2mm", "inductive post radius (0 for none)");
    c.option("xp", "20.57mm", "post offset from the port 1 plane");
  }
  {
    auto& c = add(*design, "coupler", "aperture coupler", "design coupler", design_coupler);
    design_common(c);
    c.option("length", "112mm", "total length");
    c.option("aperture", "50mm", "aperture width");
    c.option("post-d", "3mm", "matching post diameter");
    c.option("stub-w", "30mm", "matching stub width");
    c.option("stub-l", "8mm", "matching stub length");
  }
  {
    auto& c = add(*design, "circulator", "Y-junction circulator skeleton", "design circulator", design_circulator);
    design_common(c);
    c.option("f0", "2.5GHz", "operating frequency");
    c.option("ef", "13.7", "ferrite relative permittivity");
    c.option("rf", "", "ferrite radius (default: computed)");
    c.option("arm", "20mm", "arm length");
  }
  {
    auto& c = add(*design, "taper", "microstrip-to-guide taper sizing", "design taper", design_taper);
    design_common(c);
    c.option("z0", "50", "microstrip impedance (ohm)");
    c.option("f0", "2.55GHz", "center frequency");
  }
  {
    auto& c = add(app, "simulate", "sweep a layout and export S-parameters", "simulate", simulate);
    c.option("layout", "", "SIWLAYOUT file");
    c.option("preset", "", "named layout instead of a file");
    c.option("band", "2.1:3GHz", "sweep band");
    c.option("points", "51", "sweep points");
    c.option("formats", "touchstone,csv,metrics", "comma list of touchstone, csv, metrics, fieldmap");
    c.option("field-freq", "", "field map frequency (default: band center)");
    c.option("field-port", "1", "field map excitation port");
    add_solver_options(c);
  }
  auto* optimize = app.add_subcommand("optimize", "tune a device parameter");
  optimize->require_subcommand(1);
  {
    auto& c = add(*optimize, "divider", "tune the divider post offset", "optimize divider", optimize_divider);
    add_spec_options(c);
    c.option("arm", "21.3mm", "input arm length");
    c.option("r", "1.2mm", "post radius");
    c.option("xp-bounds", "", "offset range lo:hi (default 0 to arm + W_SIW)");
    c.option("band", "2.1:3GHz", "objective band");
    c.option("points", "11", "objective sweep points");
    c.option("coarse-points", "9", "coarse grid points");
    c.option("tol", "0.05mm", "golden-section stopping width");
    c.option("verify-points", "51", "dense verification sweep points (0 to skip)");
    c.flag("no-baseline", "skip the post-free reference run");
    add_solver_options(c);
  }
  {
    auto& c = add(app, "dispersion", "extract beta from two guide lengths", "dispersion", dispersion);
    add_spec_options(c);
    c.option("band", "2.1:3GHz", "band");
    c.option("points", "19", "frequency points");
    c.option("l1", "40mm", "shorter guide length");
    c.option("l2", "80mm", "longer guide length");
    add_solver_options(c);
  }

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(args);
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? kOk : kInvalid;
    }
    for (const auto& [sub, handler] : handlers) {
      if (sub->parsed()) {
        for (const auto& c : commands) {
          if (c->app == sub) return handler(*c);
        }
      }
    }
    std::cerr << "no command given\n";
    return kInvalid;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const IoError& e) {
    std::cerr << "i/o failure: " << e.what() << "\n";
    return kIoFailure;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kInvalid;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
}
