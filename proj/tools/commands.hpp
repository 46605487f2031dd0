#pragma once

// Subcommand implementations behind the adatom CLI. Each command resolves its
// parameters, runs the library, writes CSV (and optionally SVG) output plus a
// JSON manifest next to it, and returns a summary for the caller.

#include <openssl/evp.h>

#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "adatom/angmom.hpp"
#include "adatom/anisotropy.hpp"
#include "adatom/cavity.hpp"
#include "adatom/csv.hpp"
#include "adatom/drivesim.hpp"
#include "adatom/floquet.hpp"
#include "adatom/svg.hpp"
#include "adatom/units.hpp"

namespace adatom::cli {

enum ExitCode : int { ok = 0, usage = 2, config = 3, numeric = 4 };

class UsageError : public Error {
 public:
  using Error::Error;
};

struct CommonOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<double> b0_tesla;  // overrides the config value
  bool plot = false;
};

/// Loaded config plus its SHA-256 digest.
struct LoadedConfig {
  AnisotropyModel model;
  std::string digest;
  std::string text;
};

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

inline LoadedConfig load_config(const CommonOptions& common) {
  std::ifstream in(common.config_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + common.config_path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  LoadedConfig c;
  c.text = buf.str();
  std::istringstream parse(c.text);
  c.model = load_model(parse, common.config_path);
  if (common.b0_tesla) {
    if (*common.b0_tesla < 0.0) throw UsageError("--b0 must be non-negative");
    c.model.b0_tesla = *common.b0_tesla;
  }
  c.digest = sha256_hex(c.text);
  return c;
}

inline nlohmann::json model_json(const AnisotropyModel& m) {
  auto fit = [](const GaussianFit& f) {
    return nlohmann::json{{"offset", f.offset}, {"amplitude", f.amplitude}, {"center", f.center}, {"width", f.width}};
  };
  return {{"delta", fit(m.delta_fit)},
          {"mu_spin", fit(m.mu_spin_fit)},
          {"mu_orbital", fit(m.mu_orbital_fit)},
          {"B0_tesla", m.b0_tesla},
          {"g_normalization", to_string(m.normalization)}};
}

/// Records what produced a set of output files.
class Manifest {
 public:
  Manifest(std::string subcommand, const CommonOptions& common, const LoadedConfig& cfg)
      : start_(std::chrono::steady_clock::now()) {
    doc_["subcommand"] = std::move(subcommand);
    doc_["config_path"] = common.config_path;
    doc_["config_sha256"] = cfg.digest;
    doc_["model"] = model_json(cfg.model);
    doc_["outputs"] = nlohmann::json::array();
  }

  nlohmann::json& parameters() { return doc_["parameters"]; }
  void output(const std::string& path) { doc_["outputs"].push_back(path); }
  void set(const std::string& key, nlohmann::json value) { doc_[key] = std::move(value); }

  void write(const std::string& path) {
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    doc_["wall_clock_s"] = elapsed;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write manifest '" + path + "'");
    out << doc_.dump(2) << '\n';
  }

 private:
  nlohmann::json doc_;
  std::chrono::steady_clock::time_point start_;
};

inline std::string prepare_out(const CommonOptions& common, const std::string& name) {
  std::filesystem::create_directories(common.out_dir);
  return (std::filesystem::path(common.out_dir) / name).string();
}

inline unsigned resolve_workers(std::optional<unsigned> flag) {
  if (const char* env = std::getenv("ADATOM_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("ADATOM_WORKERS must be a positive integer, got '") + env + "'");
  }
  if (flag) {
    if (*flag < 1) throw UsageError("--workers must be >= 1");
    return *flag;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------- spectrum

struct SpectrumOptions {
  double a0 = 4.0;
};

struct SpectrumRow {
  double energy;
  double jx;
  double coupling;
};

inline std::vector<SpectrumRow> cmd_spectrum(const CommonOptions& common, const SpectrumOptions& opt,
                                             std::ostream& table) {
  const LoadedConfig cfg = load_config(common);
  if (!(opt.a0 > 0.0)) throw UsageError("--a0 must be positive");
  const SpinOperatorSet ops = build_operators(SpinQuantum::from_value(cfg.model.spin_j));
  const SpinSpectrum spec = diagonalize(
      static_hamiltonian(ops, zeeman_strength(cfg.model, opt.a0), cfg.model.delta_fit.value(opt.a0)), ops);

  std::vector<SpectrumRow> rows;
  for (int n = 0; n < spec.dim(); ++n)
    rows.push_back({spec.energies[n], expectation(ops.jx, spec.states.col(n)), spec.couplings[n]});

  const std::string path = prepare_out(common, "spectrum.csv");
  {
    auto f = csv::open(path);
    csv::Writer w(f);
    w.header({"n", "E_meV", "Jx", "Jz2_coupling"});
    for (std::size_t n = 0; n < rows.size(); ++n) w.row({double(n), rows[n].energy, rows[n].jx, rows[n].coupling});
  }
  table << "a0 = " << csv::format(opt.a0) << " A, h = " << csv::format(zeeman_strength(cfg.model, opt.a0))
        << " meV, delta = " << csv::format(cfg.model.delta_fit.value(opt.a0)) << " meV\n";
  table << std::left << std::setw(4) << "n" << std::setw(20) << "E_n [meV]" << std::setw(20) << "<Jx>"
        << "|<n|Jz^2|0>|\n";
  for (std::size_t n = 0; n < rows.size(); ++n)
    table << std::left << std::setw(4) << n << std::setw(20) << csv::format(rows[n].energy) << std::setw(20)
          << csv::format(rows[n].jx) << (n == 0 ? std::string("(initial state)") : csv::format(rows[n].coupling))
          << '\n';

  Manifest m("spectrum", common, cfg);
  m.parameters() = {{"a0_A", opt.a0}};
  m.output(path);
  m.write(path + ".manifest.json");
  return rows;
}

// ------------------------------------------------------------------ evolve

struct EvolveOptions {
  double omega = 0.704;   // meV
  double t_max_ps = 500;  // ps
  std::optional<double> dt_ps;
  double a0 = 4.0;
  double b = 0.9;
  std::optional<long> stride;
};

inline Trajectory cmd_evolve(const CommonOptions& common, const EvolveOptions& opt) {
  const LoadedConfig cfg = load_config(common);
  DriveProtocol drive{opt.a0, opt.b, opt.omega};
  try {
    drive.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (!(opt.t_max_ps > 0.0)) throw UsageError("--t-max must be positive");
  PropagationSettings s = default_settings(drive, units::from_ps(opt.t_max_ps));
  if (opt.dt_ps) {
    if (!(*opt.dt_ps > 0.0)) throw UsageError("--dt must be positive");
    s.dt = units::from_ps(*opt.dt_ps);
    const long steps = step_count(s.t_max, s.dt);
    s.stride = std::max<long>(1, (steps + max_stored_rows - 2) / (max_stored_rows - 1));
  }
  if (opt.stride) {
    if (*opt.stride < 1) throw UsageError("--stride must be >= 1");
    s.stride = *opt.stride;
  }
  const CVector psi0 = static_spectrum(cfg.model, drive.a0).ground();
  Trajectory tr = propagate(cfg.model, drive, s, psi0);

  const std::string path = prepare_out(common, "trajectory.csv");
  {
    auto f = csv::open(path);
    csv::Writer w(f);
    w.header({"t_ps", "P0", "P1", "P2", "P3", "P4", "Jx"});
    for (std::size_t k = 0; k < tr.size(); ++k) {
      std::vector<double> row{units::to_ps(tr.times[k])};
      for (int n = 0; n < tr.populations.cols(); ++n) row.push_back(tr.populations(k, n));
      row.push_back(tr.jx[k]);
      w.row(row);
    }
  }
  Manifest m("evolve", common, cfg);
  m.parameters() = {{"omega_meV", opt.omega}, {"t_max_ps", opt.t_max_ps}, {"dt_ps", units::to_ps(s.dt)},
                    {"a0_A", opt.a0},         {"b_A", opt.b},             {"stride", s.stride},
                    {"integrator", to_string(s.integrator)}};
  m.set("steps", tr.steps);
  m.set("max_norm_drift", tr.max_norm_drift);
  m.output(path);
  if (common.plot) {
    const std::string svg_path = prepare_out(common, "trajectory.svg");
    std::ofstream f(svg_path);
    std::vector<svg::Series> series;
    for (int n = 0; n < tr.populations.cols(); ++n) {
      svg::Series s_n{"P" + std::to_string(n), {}, {}};
      for (std::size_t k = 0; k < tr.size(); ++k) {
        s_n.x.push_back(units::to_ps(tr.times[k]));
        s_n.y.push_back(tr.populations(k, n));
      }
      series.push_back(std::move(s_n));
    }
    svg::line_plot(f, series, "t [ps]", "population", "omega = " + csv::format(opt.omega) + " meV");
    m.output(svg_path);
  }
  m.write(path + ".manifest.json");
  return tr;
}

// ------------------------------------------------------------------- sweep

struct SweepOptions {
  double omega_min = 0.6;
  double omega_max = 2.4;
  int n_omega = 400;
  double t_max_ps = 500;
  int n_samples = 500;  // stored times per row
  std::optional<unsigned> workers;
  double a0 = 4.0;
  double b = 0.9;
  double steps_per_period = default_steps_per_period;
};

inline std::vector<double> linear_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

inline SurvivalMap cmd_sweep(const CommonOptions& common, const SweepOptions& opt) {
  if (opt.n_omega < 2) throw UsageError("--n-omega must be >= 2");
  if (!(opt.omega_min > 0.0 && opt.omega_max > opt.omega_min)) throw UsageError("need 0 < --omega-min < --omega-max");
  if (!(opt.t_max_ps > 0.0)) throw UsageError("--t-max must be positive");
  if (opt.n_samples < 2) throw UsageError("--samples must be >= 2");
  const LoadedConfig cfg = load_config(common);
  DriveProtocol drive{opt.a0, opt.b, opt.omega_min};
  try {
    drive.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  SweepSettings s;
  s.t_max = units::from_ps(opt.t_max_ps);
  s.sample_dt = s.t_max / (opt.n_samples - 1);
  s.steps_per_period = opt.steps_per_period;
  s.workers = resolve_workers(opt.workers);
  const std::vector<double> grid = linear_grid(opt.omega_min, opt.omega_max, opt.n_omega);
  SurvivalMap map = survival_map(cfg.model, drive, grid, s);

  const std::string path = prepare_out(common, "survival_map.csv");
  {
    auto f = csv::open(path);
    std::vector<std::string> head{"t_ps"};
    for (const double w : grid) head.push_back(csv::format(w));
    csv::Writer w(f);
    w.header(head);
    for (std::size_t j = 0; j < map.times.size(); ++j) {
      std::vector<double> row{units::to_ps(map.times[j])};
      for (std::size_t i = 0; i < grid.size(); ++i) row.push_back(map.p0(i, j));
      w.row(row);
    }
  }
  Manifest m("sweep", common, cfg);
  m.parameters() = {{"omega_min_meV", opt.omega_min}, {"omega_max_meV", opt.omega_max}, {"n_omega", opt.n_omega},
                    {"t_max_ps", opt.t_max_ps},       {"samples", opt.n_samples},        {"a0_A", opt.a0},
                    {"b_A", opt.b},                   {"steps_per_period", opt.steps_per_period}};
  m.set("workers", s.workers);
  m.output(path);
  if (common.plot) {
    const std::string svg_path = prepare_out(common, "survival_map.svg");
    std::ofstream f(svg_path);
    // rows along time, columns along omega
    std::vector<std::vector<double>> v(map.times.size(), std::vector<double>(grid.size()));
    for (std::size_t j = 0; j < map.times.size(); ++j)
      for (std::size_t i = 0; i < grid.size(); ++i) v[j][i] = map.p0(i, j);
    svg::heat_map(f, v, opt.omega_min, opt.omega_max, 0.0, opt.t_max_ps, "omega [meV]", "t [ps]");
    m.output(svg_path);
  }
  m.write(path + ".manifest.json");
  return map;
}

// ----------------------------------------------------------------- floquet

struct FloquetOptions {
  double omega_min = 0.6;
  double omega_max = 2.4;
  int n_omega = 1801;
  double a0 = 4.0;
  double b = 0.9;
  int steps_per_period = 800;
  double min_gap = 1e-3;  // meV
  std::optional<unsigned> workers;
};

inline BranchSweep cmd_floquet(const CommonOptions& common, const FloquetOptions& opt) {
  if (opt.n_omega < 3) throw UsageError("--n-omega must be >= 3");
  if (!(opt.omega_min > 0.0 && opt.omega_max > opt.omega_min)) throw UsageError("need 0 < --omega-min < --omega-max");
  const LoadedConfig cfg = load_config(common);
  DriveProtocol drive{opt.a0, opt.b, opt.omega_min};
  try {
    drive.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  TrackingSettings ts;
  ts.monodromy.steps_per_period = opt.steps_per_period;
  ts.workers = resolve_workers(opt.workers);
  if (!(opt.min_gap >= 0.0)) throw UsageError("--min-gap must be non-negative");
  ts.min_gap = opt.min_gap;
  const std::vector<double> grid = linear_grid(opt.omega_min, opt.omega_max, opt.n_omega);
  BranchSweep sweep = sweep_and_track(cfg.model, drive, grid, ts);

  const int nb = sweep.branches();
  const std::string qpath = prepare_out(common, "quasienergies.csv");
  {
    auto f = csv::open(qpath);
    std::vector<std::string> head{"omega_meV"};
    for (int b = 0; b < nb; ++b) head.push_back("eps" + std::to_string(b) + "_meV");
    for (int b = 0; b < nb; ++b) head.push_back("proj" + std::to_string(b));
    csv::Writer w(f);
    w.header(head);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      std::vector<double> row{grid[k]};
      for (int b = 0; b < nb; ++b) row.push_back(sweep.quasienergy(k, b));
      for (int b = 0; b < nb; ++b) row.push_back(sweep.projection(k, b));
      w.row(row);
    }
  }
  const std::string cpath = prepare_out(common, "crossings.csv");
  {
    auto f = csv::open(cpath);
    csv::Writer w(f);
    w.header({"omega_star", "gap_meV", "period_ps", "branch_i", "branch_j"});
    for (const auto& c : sweep.crossings)
      w.row({c.omega_star, c.gap, units::to_ps(c.slow_period()), double(c.branch_i), double(c.branch_j)});
  }
  Manifest m("floquet", common, cfg);
  m.parameters() = {{"omega_min_meV", opt.omega_min}, {"omega_max_meV", opt.omega_max}, {"n_omega", opt.n_omega},
                    {"a0_A", opt.a0},                 {"b_A", opt.b},                    {"steps_per_period", opt.steps_per_period},
                    {"min_gap_meV", opt.min_gap},              {"integrator", to_string(ts.monodromy.integrator)}};
  m.set("crossings", sweep.crossings.size());
  m.output(qpath);
  m.output(cpath);
  if (common.plot) {
    const std::string svg_path = prepare_out(common, "quasienergies.svg");
    std::ofstream f(svg_path);
    std::vector<svg::Series> series;
    for (int b = 0; b < nb; ++b) {
      svg::Series s{"branch " + std::to_string(b), grid, {}};
      for (std::size_t k = 0; k < grid.size(); ++k) s.y.push_back(sweep.quasienergy(k, b));
      series.push_back(std::move(s));
    }
    svg::line_plot(f, series, "omega [meV]", "quasienergy [meV]");
    m.output(svg_path);
  }
  m.write(qpath + ".manifest.json");
  return sweep;
}

// ------------------------------------------------------------------ cavity

struct CavityOptions {
  double a0 = 4.0;
  double lambda = 10.0;
  std::optional<double> lambda2;
  double delta_a = 0.1;
  std::optional<double> t_max_ps;  // default: three revival times
  int n_t = 2000;
};

struct CavityRun {
  CavityModel model;
  std::vector<double> times;  // hbar/meV
  std::vector<Populations> closed;
  EntropySeries entropy;
};

inline CavityRun cmd_cavity(const CommonOptions& common, const CavityOptions& opt) {
  if (!(opt.lambda > 0.0)) throw UsageError("--lambda must be positive");
  if (opt.lambda2 && !(*opt.lambda2 > 0.0)) throw UsageError("--lambda2 must be positive");
  if (!(opt.delta_a >= 0.0)) throw UsageError("--delta-a must be non-negative");
  if (opt.n_t < 2) throw UsageError("--n-t must be >= 2");
  const LoadedConfig cfg = load_config(common);
  CavityRun run;
  run.model = build_cavity_model(cfg.model, opt.a0, opt.delta_a, opt.lambda, opt.lambda2.value_or(opt.lambda));
  double t_max = 0.0;
  if (opt.t_max_ps) {
    if (!(*opt.t_max_ps > 0.0)) throw UsageError("--t-max must be positive");
    t_max = units::from_ps(*opt.t_max_ps);
  } else if (run.model.gamma != 0.0) {
    t_max = 3.0 * revival_time(run.model);
  } else {
    throw UsageError("--t-max is required when the coupling vanishes (delta_a = 0)");
  }
  run.times.resize(opt.n_t);
  for (int k = 0; k < opt.n_t; ++k) run.times[k] = t_max * k / (opt.n_t - 1);
  run.entropy = entropy(run.model, run.times);
  if (run.model.symmetric_modes()) run.closed = averaged_populations_closed(run.model, run.times);

  const std::string path = prepare_out(common, "cavity.csv");
  {
    auto f = csv::open(path);
    csv::Writer w(f);
    w.header({"t_ps", "I1_closed", "I2_closed", "I3_closed", "I1_oracle", "S_closed", "S_oracle"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < run.times.size(); ++k) {
      const bool cf = !run.closed.empty();
      w.row({units::to_ps(run.times[k]), cf ? run.closed[k][0] : nan, cf ? run.closed[k][1] : nan,
             cf ? run.closed[k][2] : nan, run.entropy.oracle[k].populations[0],
             run.entropy.closed_form ? (*run.entropy.closed_form)[k].entropy : nan, run.entropy.oracle[k].entropy});
    }
  }
  Manifest m("cavity", common, cfg);
  m.parameters() = {{"a0_A", opt.a0},       {"lambda1", run.model.lambda1}, {"lambda2", run.model.lambda2},
                    {"delta_a_A", opt.delta_a}, {"t_max_ps", units::to_ps(t_max)}, {"n_t", opt.n_t}};
  m.set("derived", {{"gamma_meV", run.model.gamma},
                    {"g0", run.model.g0},
                    {"coupling_mismatch", run.model.coupling_mismatch()},
                    {"omega1_meV", run.model.omega1},
                    {"omega2_meV", run.model.omega2},
                    {"fock_cutoff", fock_cutoff(run.model.lambda1)},
                    {"closed_form_entropy_consistent", run.entropy.closed_form_consistent},
                    {"closed_form_entropy_max_deviation", run.entropy.closed_form_deviation}});
  m.output(path);
  if (common.plot) {
    const std::string svg_path = prepare_out(common, "cavity.svg");
    std::ofstream f(svg_path);
    svg::Series i1{"I1 (oracle)", {}, {}}, s{"S (oracle)", {}, {}};
    for (std::size_t k = 0; k < run.times.size(); ++k) {
      i1.x.push_back(units::to_ps(run.times[k]));
      i1.y.push_back(run.entropy.oracle[k].populations[0]);
      s.x.push_back(units::to_ps(run.times[k]));
      s.y.push_back(run.entropy.oracle[k].entropy);
    }
    svg::line_plot(f, {i1, s}, "t [ps]", "population / entropy");
    m.output(svg_path);
  }
  m.write(path + ".manifest.json");
  return run;
}

}  // namespace adatom::cli
