#pragma once

// Floquet analysis of the periodically driven adatom: one-period propagator,
// quasienergies and modes, branch tracking over a frequency sweep, avoided
// crossings, and the stroboscopic survival they imply.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "adatom/hamiltonian.hpp"
#include "adatom/parallel.hpp"

namespace adatom {

struct MonodromySettings {
  int steps_per_period = 800;
  Integrator integrator = Integrator::magnus4;
  /// Compare against a run with twice the steps.
  bool verify = true;
  double tolerance = 1e-9;
};

namespace detail {

inline CMatrix one_period(const DrivenHamiltonian& h, int steps, Integrator integrator) {
  const double dt = h.drive().period() / steps;
  CMatrix u = CMatrix::Identity(h.dim(), h.dim());
  for (int k = 0; k < steps; ++k) u = h.step(k * dt, dt, integrator) * u;
  return u;
}

}  // namespace detail

/// U(T, 0) for T = 2 pi / omega.
inline CMatrix monodromy(const AnisotropyModel& model, const DriveProtocol& drive,
                         const MonodromySettings& settings = {}) {
  if (settings.steps_per_period < 200) throw InvalidArgument("monodromy: steps_per_period must be >= 200");
  const DrivenHamiltonian h(model, drive);
  CMatrix u = detail::one_period(h, settings.steps_per_period, settings.integrator);
  if (settings.verify) {
    const CMatrix fine = detail::one_period(h, 2 * settings.steps_per_period, settings.integrator);
    const double dist = max_abs(u - fine);
    if (dist > settings.tolerance) {
      std::ostringstream msg;
      msg << "monodromy not converged at omega = " << drive.omega << " meV: max |U_N - U_2N| = " << dist
          << " with N = " << settings.steps_per_period;
      throw ConvergenceError(msg.str());
    }
  }
  return u;
}

/// Folds a quasienergy into (-omega/2, omega/2]. Idempotent.
inline double fold_quasienergy(double eps, double omega) {
  return eps - omega * std::ceil(eps / omega - 0.5);
}

/// Distance between two quasienergies on the circle of circumference omega.
inline double circular_gap(double e1, double e2, double omega) {
  return std::abs(fold_quasienergy(e1 - e2, omega));
}

/// Floquet decomposition at one frequency.
///
/// Convention: U(T,0)|f_n(0)> = exp(+i eps_n T)|f_n(0)>, so eps_n = theta_n / T
/// for eigenphase theta_n. Gaps, crossings and projections do not depend on
/// this choice of sign.
struct FloquetResult {
  double omega = 0.0;
  RVector quasienergies;     // folded, meV
  CMatrix modes;             // columns |f_n(0)>
  RVector projections;       // |<xi0|f_n(0)>|^2
  RVector eigen_moduli;      // |lambda_n|
  std::vector<int> ordering; // by descending projection
  std::vector<int> parities; // under exp(-i pi Jx); empty for half-integer spin

  int dim() const { return static_cast<int>(quasienergies.size()); }
  double period() const { return units::two_pi / omega; }
};

inline FloquetResult analyze(const CMatrix& u, double omega, const CVector& xi0) {
  if (!(omega > 0.0)) throw InvalidArgument("analyze: omega must be positive");
  if (unitarity_defect(u) > 1e-8) throw InvalidArgument("analyze: monodromy matrix is not unitary");
  // Schur vectors of a normal matrix are orthonormal eigenvectors, also
  // inside near-degenerate pairs.
  Eigen::ComplexSchur<CMatrix> schur(u);
  if (schur.info() != Eigen::Success) throw NumericError("analyze: Schur decomposition failed");

  const int n = static_cast<int>(u.rows());
  const double period = units::two_pi / omega;
  FloquetResult r;
  r.omega = omega;
  r.quasienergies.resize(n);
  r.eigen_moduli.resize(n);
  r.projections.resize(n);
  r.modes = schur.matrixU();
  for (int k = 0; k < n; ++k) {
    const cplx lambda = schur.matrixT()(k, k);
    r.eigen_moduli[k] = std::abs(lambda);
    r.quasienergies[k] = fold_quasienergy(std::arg(lambda) / period, omega);
    CVector col = r.modes.col(k);
    fix_phase(col);
    r.modes.col(k) = col;
    r.projections[k] = std::norm(xi0.dot(col));
  }
  if ((n - 1) % 2 == 0) {
    // H(t) commutes with the pi rotation about x, so every mode has a parity.
    const CMatrix rot = parity_operator(build_operators(SpinQuantum::from_twice(n - 1)));
    for (int k = 0; k < n; ++k) r.parities.push_back(parity_of(rot, r.modes.col(k)).parity);
  }
  r.ordering.resize(n);
  std::iota(r.ordering.begin(), r.ordering.end(), 0);
  std::stable_sort(r.ordering.begin(), r.ordering.end(),
                   [&](int a, int b) { return r.projections[a] > r.projections[b]; });
  return r;
}

inline FloquetResult floquet_at(const AnisotropyModel& model, const DriveProtocol& drive,
                                const MonodromySettings& settings = {}) {
  const CVector xi0 = static_spectrum(model, drive.a0).ground();
  return analyze(monodromy(model, drive, settings), drive.omega, xi0);
}

struct CrossingRecord {
  double omega_star = 0.0;  // meV
  double gap = 0.0;         // minimum quasienergy splitting, meV
  int branch_i = 0;
  int branch_j = 0;
  double exchange = 0.0;    // change of the upper state's projection across the crossing
  bool degenerate = false;  // gap below the search resolution (true crossing)

  /// Period of the slow population transfer, 2 pi / gap (hbar/meV). A two-state
  /// superposition returns to itself when the relative phase gap * t wraps.
  double slow_period() const { return units::two_pi / gap; }
};

struct TrackingSettings {
  MonodromySettings monodromy{};
  unsigned workers = 1;
  double refine_tolerance = 1e-6;   // meV
  double exchange_threshold = 0.3;
  int exchange_window = 25;         // grid points searched on each side
  double min_gap = 0.0;             // meV; narrower crossings are not reported
};

struct BranchSweep {
  std::vector<double> omegas;
  std::vector<FloquetResult> points;
  /// branch_mode[k][b]: mode index at grid point k carried by branch b.
  std::vector<std::vector<int>> branch_mode;
  std::vector<CrossingRecord> crossings;

  double quasienergy(std::size_t k, int b) const { return points[k].quasienergies[branch_mode[k][b]]; }
  double projection(std::size_t k, int b) const { return points[k].projections[branch_mode[k][b]]; }
  CVector mode(std::size_t k, int b) const { return points[k].modes.col(branch_mode[k][b]); }
  int branches() const { return points.empty() ? 0 : points.front().dim(); }
  int parity(std::size_t k, int b) const {
    return points[k].parities.empty() ? 0 : points[k].parities[branch_mode[k][b]];
  }
};

namespace detail {

/// Permutation maximizing the summed overlaps, found by enumeration.
/// Returns the permutation and the margin to the runner-up.
inline std::pair<std::vector<int>, double> best_matching(const RMatrix& overlap) {
  const int n = static_cast<int>(overlap.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1.0, second = -1.0;
  std::vector<int> best_perm = perm;
  do {
    double total = 0.0;
    for (int b = 0; b < n; ++b) total += overlap(b, perm[b]);
    if (total > best) {
      second = best;
      best = total;
      best_perm = perm;
    } else if (total > second) {
      second = total;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best_perm, second < 0.0 ? best : best - second};
}

struct PairProbe {
  double gap;
  int mode_a;
  int mode_b;
  FloquetResult result;
};

/// The two Floquet modes at omega with the largest weight in span{ref_a, ref_b}.
inline PairProbe probe_pair(const AnisotropyModel& model, const DriveProtocol& tmpl, double omega,
                            const CVector& ref_a, const CVector& ref_b, const CVector& xi0,
                            const MonodromySettings& settings) {
  const DriveProtocol d = tmpl.with_omega(omega);
  FloquetResult r = analyze(monodromy(model, d, settings), omega, xi0);
  std::vector<int> idx(r.dim());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> weight(r.dim());
  for (int m = 0; m < r.dim(); ++m)
    weight[m] = std::norm(ref_a.dot(r.modes.col(m))) + std::norm(ref_b.dot(r.modes.col(m)));
  std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) { return weight[x] > weight[y]; });
  const double gap = circular_gap(r.quasienergies[idx[0]], r.quasienergies[idx[1]], omega);
  return {gap, idx[0], idx[1], std::move(r)};
}

/// Projection of whichever of the two branches sits higher on the
/// quasienergy circle, relative to the other.
inline double upper_projection(const BranchSweep& s, std::size_t k, int bi, int bj) {
  const double d = fold_quasienergy(s.quasienergy(k, bi) - s.quasienergy(k, bj), s.omegas[k]);
  return d > 0.0 ? s.projection(k, bi) : s.projection(k, bj);
}

}  // namespace detail

/// Floquet decomposition over a frequency grid with branches continued by
/// maximal mode overlap, plus the avoided crossings between them.
inline BranchSweep sweep_and_track(const AnisotropyModel& model, const DriveProtocol& drive_template,
                                   const std::vector<double>& omega_grid, const TrackingSettings& settings = {}) {
  if (omega_grid.size() < 2) throw InvalidArgument("sweep_and_track: need at least two frequencies");
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    if (!(omega_grid[i] > omega_grid[i - 1])) throw InvalidArgument("sweep_and_track: omega grid must be strictly increasing");

  const CVector xi0 = static_spectrum(model, drive_template.a0).ground();
  BranchSweep s;
  s.omegas = omega_grid;
  s.points.resize(omega_grid.size());
  const auto errors = parallel_for(omega_grid.size(), settings.workers, [&](std::size_t k) {
    const DriveProtocol d = drive_template.with_omega(omega_grid[k]);
    s.points[k] = analyze(monodromy(model, d, settings.monodromy), omega_grid[k], xi0);
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const int n = s.points.front().dim();
  s.branch_mode.assign(omega_grid.size(), std::vector<int>(n));
  std::iota(s.branch_mode[0].begin(), s.branch_mode[0].end(), 0);

  for (std::size_t k = 0; k + 1 < omega_grid.size(); ++k) {
    RMatrix overlap(n, n);
    for (int b = 0; b < n; ++b) {
      const CVector prev = s.mode(k, b);
      for (int m = 0; m < n; ++m) overlap(b, m) = std::norm(prev.dot(s.points[k + 1].modes.col(m)));
    }
    for (int b = 0; b < n; ++b) {
      if (1.0 - overlap.row(b).maxCoeff() >= 0.5) {
        std::ostringstream msg;
        msg << "sweep_and_track: grid too coarse between omega = " << omega_grid[k] << " and " << omega_grid[k + 1]
            << " meV (consecutive modes overlap by less than 1/2); refine the frequency grid there";
        throw TrackingError(msg.str());
      }
    }
    auto [perm, margin] = detail::best_matching(overlap);
    if (margin < 1e-12) {
      std::ostringstream msg;
      msg << "sweep_and_track: ambiguous branch continuation at omega = " << omega_grid[k + 1] << " meV";
      throw TrackingError(msg.str());
    }
    s.branch_mode[k + 1] = perm;
  }

  // Local minima of each pairwise gap series, qualified by the exchange of
  // projection character and refined by golden-section search.
  const std::size_t npts = omega_grid.size();
  for (int bi = 0; bi < n; ++bi) {
    for (int bj = bi + 1; bj < n; ++bj) {
      std::vector<double> gap(npts);
      for (std::size_t k = 0; k < npts; ++k)
        gap[k] = circular_gap(s.quasienergy(k, bi), s.quasienergy(k, bj), omega_grid[k]);
      for (std::size_t k = 1; k + 1 < npts; ++k) {
        if (!(gap[k] <= gap[k - 1] && gap[k] < gap[k + 1])) continue;
        // Opposite parities do not couple: such branches cross exactly.
        if (s.parity(k, bi) != s.parity(k, bj)) continue;
        if (gap[k] < settings.min_gap) continue;

        std::size_t lo = k, hi = k;
        const double grow = 5.0 * gap[k];
        while (lo > 0 && k - lo < static_cast<std::size_t>(settings.exchange_window) && gap[lo - 1] >= gap[lo] &&
               gap[lo] < grow)
          --lo;
        while (hi + 1 < npts && hi - k < static_cast<std::size_t>(settings.exchange_window) && gap[hi + 1] >= gap[hi] &&
               gap[hi] < grow)
          ++hi;
        const double exchange =
            std::abs(detail::upper_projection(s, lo, bi, bj) - detail::upper_projection(s, hi, bi, bj));
        if (exchange <= settings.exchange_threshold) continue;

        const CVector ref_a = s.mode(k, bi);
        const CVector ref_b = s.mode(k, bj);
        auto g = [&](double w) {
          return detail::probe_pair(model, drive_template, w, ref_a, ref_b, xi0, settings.monodromy).gap;
        };
        double a = omega_grid[k - 1], b = omega_grid[k + 1];
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
        double f1 = g(x1), f2 = g(x2);
        while (b - a > settings.refine_tolerance) {
          if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = g(x1);
          } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = g(x2);
          }
        }
        CrossingRecord rec;
        rec.omega_star = f1 < f2 ? x1 : x2;
        rec.gap = std::min({f1, f2, gap[k]});
        if (gap[k] < std::min(f1, f2)) rec.omega_star = omega_grid[k];
        rec.branch_i = bi;
        rec.branch_j = bj;
        rec.exchange = exchange;
        const double slope = std::max(gap[k - 1], gap[k + 1]) / (omega_grid[k + 1] - omega_grid[k - 1]) * 2.0;
        rec.degenerate = rec.gap < 10.0 * settings.refine_tolerance * std::max(1.0, slope);
        if (rec.gap < settings.min_gap) continue;
        s.crossings.push_back(rec);
      }
    }
  }
  std::sort(s.crossings.begin(), s.crossings.end(),
            [](const CrossingRecord& x, const CrossingRecord& y) { return x.omega_star < y.omega_star; });
  return s;
}

enum class StroboscopicLaw {
  /// |p1 e^{i eps1 kT} + p2 e^{i eps2 kT}|^2 / (p1 + p2)^2, the two-state
  /// truncation of the exact stroboscopic overlap. For p1 = p2 it equals
  /// cos^2[(eps1 - eps2) kT / 2].
  two_state,
  /// cos^2[(eps1 - eps2) kT], the frequently quoted form without the factor 1/2.
  as_printed,
};

/// Predicted ground-state survival at t = kT, k = 0..k_max, from the two
/// dominant Floquet modes. Refuses when their projections sum to no more than
/// min_dominance.
inline std::vector<double> stroboscopic_check(const FloquetResult& r, int k_max,
                                              StroboscopicLaw law = StroboscopicLaw::two_state,
                                              double min_dominance = 0.98) {
  if (k_max < 0) throw InvalidArgument("stroboscopic_check: k_max must be non-negative");
  if (r.dim() < 2) throw InvalidArgument("stroboscopic_check: need at least two modes");
  const int n1 = r.ordering[0], n2 = r.ordering[1];
  const double p1 = r.projections[n1], p2 = r.projections[n2];
  if (!(p1 + p2 > min_dominance))
    throw InvalidArgument("stroboscopic_check: the two dominant projections sum to " + std::to_string(p1 + p2) +
                          " <= " + std::to_string(min_dominance) + "; the two-state law does not apply");
  const double de = r.quasienergies[n1] - r.quasienergies[n2];
  const double period = r.period();
  std::vector<double> out(static_cast<std::size_t>(k_max) + 1);
  for (int k = 0; k <= k_max; ++k) {
    const double phase = de * k * period;
    if (law == StroboscopicLaw::as_printed) {
      const double c = std::cos(phase);
      out[k] = c * c;
    } else {
      out[k] = (p1 * p1 + p2 * p2 + 2.0 * p1 * p2 * std::cos(phase)) / ((p1 + p2) * (p1 + p2));
    }
  }
  return out;
}

}  // namespace adatom
