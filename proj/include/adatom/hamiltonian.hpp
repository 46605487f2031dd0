#pragma once

// Time-dependent adatom Hamiltonian under the oscillating tip,
// H(t) = -h(a(t)) Jx - delta(a(t)) Jz^2, and one-step propagators for it.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "adatom/angmom.hpp"
#include "adatom/anisotropy.hpp"
#include "adatom/error.hpp"
#include "adatom/linalg.hpp"
#include "adatom/units.hpp"

namespace adatom {

/// Tip motion a(t) = a0 + b sin(omega t) for t > 0, a(t) = a0 for t <= 0.
struct DriveProtocol {
  double a0 = 4.0;     // Angstrom
  double b = 0.9;      // Angstrom
  double omega = 1.0;  // meV (angular frequency with hbar = 1)

  void validate() const {
    if (!(omega > 0.0)) throw InvalidArgument("drive: omega must be positive");
    if (!(b >= 0.0)) throw InvalidArgument("drive: amplitude b must be non-negative");
    if (!(a0 - b > 0.0)) throw InvalidArgument("drive: a0 - b must be positive (tip would touch the adatom)");
  }

  double period() const { return units::two_pi / omega; }

  double distance(double t) const { return t <= 0.0 ? a0 : a0 + b * std::sin(omega * t); }

  DriveProtocol with_omega(double w) const {
    DriveProtocol d = *this;
    d.omega = w;
    return d;
  }
};

enum class Integrator {
  /// exp(-i H(t + dt/2) dt); second order.
  midpoint,
  /// Two-exponential commutator-free Magnus scheme; fourth order.
  magnus4,
};

inline std::string to_string(Integrator i) { return i == Integrator::midpoint ? "midpoint" : "magnus4"; }

/// The adatom model bound to a drive. All Hamiltonians are real symmetric in
/// the Jz basis since Jx and Jz^2 are.
class DrivenHamiltonian {
 public:
  DrivenHamiltonian(AnisotropyModel model, DriveProtocol drive)
      : model_(std::move(model)),
        drive_(drive),
        ops_(build_operators(SpinQuantum::from_value(model_.spin_j))),
        jx_(ops_.jx.real()),
        jz2_(ops_.jz2().real()) {
    drive_.validate();
  }

  const AnisotropyModel& model() const { return model_; }
  const DriveProtocol& drive() const { return drive_; }
  const SpinOperatorSet& ops() const { return ops_; }
  int dim() const { return ops_.dim; }

  RMatrix at_distance(double a) const {
    return -zeeman_strength(model_, a) * jx_ - model_.delta_fit.value(a) * jz2_;
  }

  RMatrix at_time(double t) const { return at_distance(drive_.distance(t)); }

  /// Propagator over [t, t + dt] (dt may be negative).
  CMatrix step(double t, double dt, Integrator integrator) const {
    if (integrator == Integrator::midpoint) return unitary_exp(at_time(t + 0.5 * dt), dt);
    static const double s3 = std::sqrt(3.0);
    const double c1 = 0.5 - s3 / 6.0;
    const double c2 = 0.5 + s3 / 6.0;
    const double w1 = 0.25 + s3 / 6.0;
    const double w2 = 0.25 - s3 / 6.0;
    const RMatrix h1 = at_time(t + c1 * dt);
    const RMatrix h2 = at_time(t + c2 * dt);
    // The right factor acts first and leans on the earlier node.
    return unitary_exp(RMatrix(w2 * h1 + w1 * h2), dt) * unitary_exp(RMatrix(w1 * h1 + w2 * h2), dt);
  }

 private:
  AnisotropyModel model_;
  DriveProtocol drive_;
  SpinOperatorSet ops_;
  RMatrix jx_;
  RMatrix jz2_;
};

/// Eigenbasis of the undriven H(a0).
inline SpinSpectrum static_spectrum(const AnisotropyModel& model, double a0) {
  const SpinOperatorSet ops = build_operators(SpinQuantum::from_value(model.spin_j));
  return diagonalize(static_hamiltonian(ops, zeeman_strength(model, a0), model.delta_fit.value(a0)), ops);
}

/// Fixed-step evolution on the grid t_k = t0 + k dt.
///
/// When the step divides the drive period exactly (or the drive is off), the
/// per-step propagators repeat and are computed once per phase.
class Stepper {
 public:
  Stepper(const DrivenHamiltonian& h, double t0, double dt, Integrator integrator)
      : h_(h), t0_(t0), dt_(dt), integrator_(integrator) {
    if (!(std::abs(dt) > 0.0) || !std::isfinite(dt)) throw InvalidArgument("stepper: dt must be finite and non-zero");
    const DriveProtocol& d = h.drive();
    if (d.b == 0.0) {
      cache_.push_back(polish_unitary(h_.step(t0_, dt_, integrator_)));
      return;
    }
    // Steps starting at t0 >= 0 see only the oscillating branch of a(t).
    const double per = d.period() / std::abs(dt);
    const double n = std::round(per);
    if (t0 == 0.0 && dt > 0.0 && n >= 1.0 && std::abs(per - n) < 1e-9 * n && n <= 1e5) {
      cache_.reserve(static_cast<std::size_t>(n));
      for (long k = 0; k < static_cast<long>(n); ++k) cache_.push_back(polish_unitary(h_.step(k * dt_, dt_, integrator_)));
    }
  }

  /// Propagator for step k, covering [t0 + k dt, t0 + (k+1) dt].
  const CMatrix& matrix(long k) {
    if (!cache_.empty()) return cache_[static_cast<std::size_t>(k % static_cast<long>(cache_.size()))];
    scratch_ = h_.step(t0_ + k * dt_, dt_, integrator_);
    return scratch_;
  }

  double time(long k) const { return t0_ + k * dt_; }
  bool cached() const { return !cache_.empty(); }
  /// Steps after which the propagators repeat (0 if not cached).
  long cycle() const { return static_cast<long>(cache_.size()); }

 private:
  const DrivenHamiltonian& h_;
  double t0_;
  double dt_;
  Integrator integrator_;
  std::vector<CMatrix> cache_;
  CMatrix scratch_;
};

/// Evolves psi from t_from to t_to in n_steps equal steps (t_to < t_from runs
/// backwards in time).
inline CVector evolve(const DrivenHamiltonian& h, CVector psi, double t_from, double t_to, long n_steps,
                      Integrator integrator = Integrator::midpoint) {
  if (n_steps <= 0) throw InvalidArgument("evolve: n_steps must be positive");
  const double dt = (t_to - t_from) / static_cast<double>(n_steps);
  for (long k = 0; k < n_steps; ++k) psi = h.step(t_from + k * dt, dt, integrator) * psi;
  return psi;
}

}  // namespace adatom
