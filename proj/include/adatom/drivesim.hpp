#pragma once

// Propagation of the adatom spin under the classically oscillating tip, and
// the ground-state survival map over a grid of drive frequencies.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "adatom/hamiltonian.hpp"
#include "adatom/parallel.hpp"

namespace adatom {

struct PropagationSettings {
  double t_max = 0.0;  // hbar/meV
  double dt = 0.0;     // hbar/meV
  long stride = 1;     // store every stride-th step
  Integrator integrator = Integrator::midpoint;
};

/// Resolution floor: at least this many steps per drive period.
inline constexpr double min_steps_per_period = 200.0;
inline constexpr double default_steps_per_period = 500.0;
inline constexpr long max_stored_rows = 20000;

/// dt = T/500 and a stride that keeps the stored rows at or below 20000.
inline PropagationSettings default_settings(const DriveProtocol& drive, double t_max) {
  PropagationSettings s;
  s.t_max = t_max;
  s.dt = drive.period() / default_steps_per_period;
  const long steps = static_cast<long>(std::ceil(t_max / s.dt - 1e-9));
  s.stride = std::max<long>(1, (steps + max_stored_rows - 2) / (max_stored_rows - 1));
  return s;
}

struct Trajectory {
  std::vector<double> times;          // hbar/meV
  std::vector<CVector> amplitudes;    // in the H(a0) eigenbasis
  RMatrix populations;                // rows: stored times; cols: eigenstates
  std::vector<double> jx, jy, jz;     // expectation values
  double max_norm_drift = 0.0;
  long steps = 0;

  std::size_t size() const { return times.size(); }
};

inline long step_count(double t_max, double dt) {
  const double r = t_max / dt;
  const double n = std::round(r);
  return static_cast<long>(std::abs(r - n) < 1e-9 * std::max(1.0, n) ? n : std::ceil(r));
}

/// Solves i d/dt psi = H(a(t)) psi from t = 0, psi0 given in the Jz basis.
inline Trajectory propagate(const AnisotropyModel& model, const DriveProtocol& drive,
                            const PropagationSettings& settings, const CVector& psi0) {
  drive.validate();
  const DrivenHamiltonian h(model, drive);
  if (psi0.size() != h.dim()) throw InvalidArgument("propagate: psi0 has wrong dimension");
  if (std::abs(psi0.norm() - 1.0) > 1e-10) throw InvalidArgument("propagate: psi0 is not normalized");
  if (!(settings.t_max >= 0.0)) throw InvalidArgument("propagate: t_max must be non-negative");
  if (!(settings.dt > 0.0)) throw InvalidArgument("propagate: dt must be positive");
  if (settings.stride < 1) throw InvalidArgument("propagate: stride must be >= 1");
  if (settings.dt > drive.period() / min_steps_per_period * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "step-size rejected: dt = " << settings.dt << " exceeds T/200 = " << drive.period() / min_steps_per_period
        << " (hbar/meV) at omega = " << drive.omega << " meV";
    throw StepSizeError(msg.str());
  }

  const SpinSpectrum basis = static_spectrum(model, drive.a0);
  const CMatrix to_eigen = basis.states.adjoint();
  const SpinOperatorSet& ops = h.ops();

  const long n_steps = settings.t_max > 0.0 ? step_count(settings.t_max, settings.dt) : 0;
  const long rows = n_steps / settings.stride + 1 + (n_steps % settings.stride != 0 ? 1 : 0);

  Trajectory tr;
  tr.steps = n_steps;
  tr.populations.resize(rows, h.dim());
  tr.times.reserve(rows);
  tr.amplitudes.reserve(rows);
  tr.jx.reserve(rows);
  tr.jy.reserve(rows);
  tr.jz.reserve(rows);

  auto record = [&](double t, const CVector& psi) {
    const CVector amp = to_eigen * psi;
    tr.populations.row(static_cast<Eigen::Index>(tr.times.size())) = amp.cwiseAbs2().transpose();
    tr.times.push_back(t);
    tr.amplitudes.push_back(amp);
    tr.jx.push_back(expectation(ops.jx, psi));
    tr.jy.push_back(expectation(ops.jy, psi));
    tr.jz.push_back(expectation(ops.jz, psi));
  };

  CVector psi = psi0;
  record(0.0, psi);
  Stepper stepper(h, 0.0, settings.dt, settings.integrator);

  // With periodic step propagators the product over one stride block depends
  // only on the block's phase; precompute those products when that is cheaper
  // than stepping. Fewer roundings also keep the norm drift down.
  const long stride = settings.stride;
  std::vector<CMatrix> blocks;
  long phases = 0;
  if (stepper.cached() && stride > 1) {
    const long cycle = stepper.cycle();
    phases = cycle / std::gcd(cycle, stride);
    if (phases * stride <= n_steps) {
      blocks.reserve(static_cast<std::size_t>(phases));
      for (long p = 0; p < phases; ++p) {
        CMatrix b = CMatrix::Identity(h.dim(), h.dim());
        for (long j = 0; j < stride; ++j) b = stepper.matrix(p * stride + j) * b;
        blocks.push_back(polish_unitary(b));
      }
    }
  }

  for (long k = 0; k < n_steps;) {
    if (!blocks.empty() && k % stride == 0 && k + stride <= n_steps) {
      psi = blocks[static_cast<std::size_t>((k / stride) % phases)] * psi;
      k += stride;
    } else {
      psi = stepper.matrix(k) * psi;
      ++k;
    }
    const long done = k;
    if (done % settings.stride == 0 || done == n_steps) {
      const double drift = std::abs(psi.norm() - 1.0);
      tr.max_norm_drift = std::max(tr.max_norm_drift, drift);
      if (drift > 1e-8) {
        std::ostringstream msg;
        msg << "step-size rejected: norm drift " << drift << " at t = " << done * settings.dt
            << " (hbar/meV); dt is too coarse";
        throw StepSizeError(msg.str());
      }
      record(done * settings.dt, psi);
    }
  }
  return tr;
}

struct SweepSettings {
  double t_max = 0.0;      // hbar/meV
  double sample_dt = 0.0;  // spacing of stored times, hbar/meV
  double steps_per_period = default_steps_per_period;
  unsigned workers = 1;
  Integrator integrator = Integrator::midpoint;

  long samples() const { return step_count(t_max, sample_dt) + 1; }
};

/// Per-row propagation settings: the step is the largest divisor of
/// sample_dt not exceeding T / steps_per_period, so every row stores the
/// same times.
inline PropagationSettings row_settings(const DriveProtocol& drive, const SweepSettings& sweep) {
  if (!(sweep.sample_dt > 0.0)) throw InvalidArgument("survival_map: sample_dt must be positive");
  if (sweep.steps_per_period < min_steps_per_period)
    throw StepSizeError("survival_map: steps_per_period must be >= 200");
  const long sub = std::max<long>(1, static_cast<long>(std::ceil(sweep.sample_dt / (drive.period() / sweep.steps_per_period) - 1e-12)));
  PropagationSettings s;
  s.dt = sweep.sample_dt / static_cast<double>(sub);
  s.stride = sub;
  s.t_max = static_cast<double>(sweep.samples() - 1) * sweep.sample_dt;
  s.integrator = sweep.integrator;
  return s;
}

/// P0(omega, t): rows per frequency, columns per stored time.
struct SurvivalMap {
  std::vector<double> omegas;
  std::vector<double> times;
  RMatrix p0;
};

inline SurvivalMap survival_map(const AnisotropyModel& model, const DriveProtocol& drive_template,
                                const std::vector<double>& omega_grid, const SweepSettings& sweep) {
  if (omega_grid.empty()) throw InvalidArgument("survival_map: empty frequency grid");
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    if (!(omega_grid[i] > omega_grid[i - 1])) throw InvalidArgument("survival_map: omega grid must be strictly increasing");

  const long samples = sweep.samples();
  SurvivalMap map;
  map.omegas = omega_grid;
  map.times.resize(samples);
  for (long j = 0; j < samples; ++j) map.times[j] = j * sweep.sample_dt;
  map.p0.resize(static_cast<Eigen::Index>(omega_grid.size()), samples);

  const CVector psi0 = static_spectrum(model, drive_template.a0).ground();
  const auto errors = parallel_for(omega_grid.size(), sweep.workers, [&](std::size_t i) {
    const DriveProtocol d = drive_template.with_omega(omega_grid[i]);
    const Trajectory tr = propagate(model, d, row_settings(d, sweep), psi0);
    for (long j = 0; j < samples; ++j) map.p0(static_cast<Eigen::Index>(i), j) = tr.populations(j, 0);
  });

  std::ostringstream failures;
  int failed = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    ++failed;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      failures << "\n  omega = " << omega_grid[i] << " meV: " << e.what();
    }
  }
  if (failed > 0)
    throw NumericError("survival_map: " + std::to_string(failed) + " row(s) failed:" + failures.str());
  return map;
}

}  // namespace adatom
