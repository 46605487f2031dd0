#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"

using namespace adatom;

namespace {

void add_common(CLI::App* sub, cli::CommonOptions& common) {
  sub->add_option("--config", common.config_path, "fit-parameter file (INI)")->required();
  sub->add_option("--out", common.out_dir, "output directory")->capture_default_str();
  sub->add_option("--b0", common.b0_tesla, "override the static field [T]");
  sub->add_flag("--plot", common.plot, "also write SVG figures");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driven single-adatom spin dynamics: spectra, propagation, Floquet analysis, phonon cavity."};
  app.require_subcommand(1);

  cli::CommonOptions common;
  cli::SpectrumOptions sp;
  cli::EvolveOptions ev;
  cli::SweepOptions sw;
  cli::FloquetOptions fl;
  cli::CavityOptions cv;
  std::optional<unsigned> sw_workers, fl_workers;

  auto* spectrum = app.add_subcommand("spectrum", "static eigenstates and Jz^2 couplings at one tip distance");
  add_common(spectrum, common);
  spectrum->add_option("--a0", sp.a0, "tip distance [A]")->capture_default_str();

  auto* evolve = app.add_subcommand("evolve", "propagate the ground state under the oscillating tip");
  add_common(evolve, common);
  evolve->add_option("--omega", ev.omega, "drive frequency [meV]")->capture_default_str();
  evolve->add_option("--t-max", ev.t_max_ps, "duration [ps]")->capture_default_str();
  evolve->add_option("--dt", ev.dt_ps, "time step [ps] (default T/500)");
  evolve->add_option("--stride", ev.stride, "store every n-th step");
  evolve->add_option("--a0", ev.a0, "mean tip distance [A]")->capture_default_str();
  evolve->add_option("--b", ev.b, "oscillation amplitude [A]")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "ground-state survival over a frequency grid");
  add_common(sweep, common);
  sweep->add_option("--omega-min", sw.omega_min, "[meV]")->capture_default_str();
  sweep->add_option("--omega-max", sw.omega_max, "[meV]")->capture_default_str();
  sweep->add_option("--n-omega", sw.n_omega, "grid points (>= 2)")->capture_default_str();
  sweep->add_option("--t-max", sw.t_max_ps, "duration [ps]")->capture_default_str();
  sweep->add_option("--samples", sw.n_samples, "stored times per row")->capture_default_str();
  sweep->add_option("--steps-per-period", sw.steps_per_period, "integration steps per period")->capture_default_str();
  sweep->add_option("--workers", sw_workers, "worker threads (env ADATOM_WORKERS overrides)");
  sweep->add_option("--a0", sw.a0, "mean tip distance [A]")->capture_default_str();
  sweep->add_option("--b", sw.b, "oscillation amplitude [A]")->capture_default_str();

  auto* floquet = app.add_subcommand("floquet", "quasienergy branches and avoided crossings");
  add_common(floquet, common);
  floquet->add_option("--omega-min", fl.omega_min, "[meV]")->capture_default_str();
  floquet->add_option("--omega-max", fl.omega_max, "[meV]")->capture_default_str();
  floquet->add_option("--n-omega", fl.n_omega, "grid points")->capture_default_str();
  floquet->add_option("--steps-per-period", fl.steps_per_period, "monodromy steps")->capture_default_str();
  floquet->add_option("--min-gap", fl.min_gap, "drop crossings narrower than this [meV]")->capture_default_str();
  floquet->add_option("--workers", fl_workers, "worker threads (env ADATOM_WORKERS overrides)");
  floquet->add_option("--a0", fl.a0, "mean tip distance [A]")->capture_default_str();
  floquet->add_option("--b", fl.b, "oscillation amplitude [A]")->capture_default_str();

  auto* cavity = app.add_subcommand("cavity", "spin coupled to a quantized tip oscillation");
  add_common(cavity, common);
  cavity->add_option("--a0", cv.a0, "equilibrium tip distance [A]")->capture_default_str();
  cavity->add_option("--lambda", cv.lambda, "mean phonon number")->capture_default_str();
  cavity->add_option("--lambda2", cv.lambda2, "second mode (default: --lambda)");
  cavity->add_option("--delta-a", cv.delta_a, "zero-point amplitude [A]")->capture_default_str();
  cavity->add_option("--t-max", cv.t_max_ps, "duration [ps] (default: three revival times)");
  cavity->add_option("--n-t", cv.n_t, "time samples")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::ok : cli::usage;
  }

  try {
    if (*spectrum) {
      cli::cmd_spectrum(common, sp, std::cout);
    } else if (*evolve) {
      const auto tr = cli::cmd_evolve(common, ev);
      std::cout << "wrote " << tr.size() << " rows (" << tr.steps << " steps) to " << common.out_dir << "\n";
    } else if (*sweep) {
      sw.workers = sw_workers;
      const auto map = cli::cmd_sweep(common, sw);
      std::cout << "wrote " << map.omegas.size() << " x " << map.times.size() << " survival map to "
                << common.out_dir << "\n";
    } else if (*floquet) {
      fl.workers = fl_workers;
      const auto s = cli::cmd_floquet(common, fl);
      std::cout << s.crossings.size() << " crossing(s)\n";
      for (const auto& c : s.crossings)
        std::cout << "  omega* = " << csv::format(c.omega_star) << " meV, gap = " << csv::format(c.gap)
                  << " meV, period = " << csv::format(units::to_ps(c.slow_period())) << " ps"
                  << (c.degenerate ? " (unresolved gap)" : "") << "\n";
    } else if (*cavity) {
      const auto run = cli::cmd_cavity(common, cv);
      std::cout << "gamma = " << csv::format(run.model.gamma) << " meV";
      if (run.model.gamma != 0.0)
        std::cout << ", t_rev = " << csv::format(units::to_ps(revival_time(run.model))) << " ps";
      std::cout << "\n";
    }
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return cli::usage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::config;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return cli::usage;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return cli::numeric;
  }
  return cli::ok;
}
