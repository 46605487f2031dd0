#pragma once

// Quantized two-mode cantilever coupled to the adatom through the anisotropy
// slope. The spin is reduced to the ground state |1>, the two Jz^2-coupled
// excited states |2>, |3> and two dark states |4>, |5> (1-based labels).
// At exact resonance Omega_1 = E2 - E1, Omega_2 = E3 - E1 the amplitudes of
// each phonon sector (n1, n2) are known in closed form; averages over
// coherent phonon states are taken either by the large-lambda closed form or
// by direct summation over a truncated Fock space.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "adatom/angmom.hpp"
#include "adatom/anisotropy.hpp"
#include "adatom/hamiltonian.hpp"
#include "adatom/linalg.hpp"

namespace adatom {

struct CavityModel {
  std::array<double, 5> levels{};  // E1..E5, meV; E1 ground, E2 < E3 coupled
  double omega1 = 0.0;             // meV, = E2 - E1
  double omega2 = 0.0;             // meV, = E3 - E1
  double g0 = 0.0;                 // |<2|Jz^2|1>|
  double g0_other = 0.0;           // |<3|Jz^2|1>|, taken equal to g0 by the model
  double delta_a = 0.0;            // Angstrom
  double delta_prime = 0.0;        // meV / Angstrom
  double gamma = 0.0;              // meV, = g0 delta_a delta'(a0)
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double a0 = 0.0;

  /// |g0 - <3|Jz^2|1>| / g0: how far the equal-coupling assumption is off.
  double coupling_mismatch() const { return std::abs(g0 - g0_other) / g0; }
  bool symmetric_modes() const { return std::abs(lambda1 - lambda2) <= 1e-12 * std::max(1.0, lambda1); }
};

inline CavityModel build_cavity_model(const AnisotropyModel& model, double a0, double delta_a, double lambda1,
                                      double lambda2) {
  if (!(a0 > 0.0)) throw InvalidArgument("cavity: a0 must be positive");
  if (!(delta_a >= 0.0)) throw InvalidArgument("cavity: delta_a must be non-negative");
  if (!(lambda1 >= 0.0 && lambda2 >= 0.0)) throw InvalidArgument("cavity: mean phonon numbers must be non-negative");
  const SpinSpectrum spec = static_spectrum(model, a0);
  if (spec.dim() != 5) throw InvalidArgument("cavity: the three-level reduction requires J = 2");
  const std::vector<int> coupled = spec.coupled_states();
  if (coupled.size() != 2) {
    throw NumericError("cavity: selection rule yields " + std::to_string(coupled.size()) +
                       " coupled excited states at a0 = " + std::to_string(a0) + " (expected 2)");
  }
  CavityModel c;
  c.a0 = a0;
  c.levels[0] = spec.energies[0];
  c.levels[1] = spec.energies[coupled[0]];
  c.levels[2] = spec.energies[coupled[1]];
  int slot = 3;
  for (int n = 1; n < 5; ++n)
    if (n != coupled[0] && n != coupled[1]) c.levels[slot++] = spec.energies[n];
  c.omega1 = c.levels[1] - c.levels[0];
  c.omega2 = c.levels[2] - c.levels[0];
  c.g0 = spec.couplings[coupled[0]];
  c.g0_other = spec.couplings[coupled[1]];
  c.delta_a = delta_a;
  c.delta_prime = model.delta_fit.derivative(a0);
  c.gamma = c.g0 * delta_a * c.delta_prime;
  c.lambda1 = lambda1;
  c.lambda2 = lambda2;
  return c;
}

using Amplitudes = std::array<cplx, 5>;

struct AmplitudeSet {
  Amplitudes c{};                 // C1..C5 at time t
  std::array<double, 5> delta{};  // Delta_m = E_m + n1 Omega_1 + n2 Omega_2

  double norm2() const {
    double s = 0.0;
    for (const cplx& x : c) s += std::norm(x);
    return s;
  }
};

/// Closed-form amplitudes of the resonant sector (n1, n2): components on
/// |n1,n2,1>, |n1-1,n2,2>, |n1,n2-1,3>, |n1,n2,4>, |n1,n2,5>.
inline AmplitudeSet amplitudes(const CavityModel& m, long n1, long n2, const Amplitudes& c0, double t) {
  if (n1 < 0 || n2 < 0) throw InvalidArgument("amplitudes: phonon numbers must be non-negative");
  AmplitudeSet out;
  const double shift = n1 * m.omega1 + n2 * m.omega2;
  for (int k = 0; k < 5; ++k) out.delta[k] = m.levels[k] + shift;

  auto phase = [&](double energy) { return std::exp(cplx(0.0, -energy * t)); };
  const cplx p1 = phase(out.delta[0]);
  const cplx p2 = phase(out.delta[1] - m.omega1);
  const cplx p3 = phase(out.delta[2] - m.omega2);
  out.c[3] = c0[3] * phase(out.delta[3]);
  out.c[4] = c0[4] * phase(out.delta[4]);

  const long total = n1 + n2;
  if (total == 0 || m.gamma == 0.0) {
    out.c[0] = c0[0] * p1;
    out.c[1] = c0[1] * p2;
    out.c[2] = c0[2] * p3;
    return out;
  }
  const double nn = static_cast<double>(total);
  const double root = std::sqrt(nn);
  const double s1 = std::sqrt(static_cast<double>(n1));
  const double s2 = std::sqrt(static_cast<double>(n2));
  const double cs = std::cos(m.gamma * root * t);
  const double sn = std::sin(m.gamma * root * t);
  const cplx mi(0.0, -1.0);

  out.c[0] = p1 * (c0[0] * cs + mi * c0[1] * s1 * sn / root + mi * c0[2] * s2 * sn / root);
  out.c[1] = p2 * (mi * c0[0] * s1 * sn / root + c0[1] * (n1 * cs + n2) / nn + c0[2] * (s1 * s2 / nn) * (cs - 1.0));
  out.c[2] = p3 * (mi * c0[0] * s2 * sn / root + c0[2] * (n2 * cs + n1) / nn + c0[1] * (s1 * s2 / nn) * (cs - 1.0));
  return out;
}

inline constexpr Amplitudes ground_amplitudes{cplx(1.0), cplx(0.0), cplx(0.0), cplx(0.0), cplx(0.0)};

/// Poisson probabilities w_n^2 = lambda^n e^{-lambda} / n! for n = 0..cutoff.
inline std::vector<double> poisson_weights(double lambda, long cutoff) {
  std::vector<double> p(static_cast<std::size_t>(cutoff) + 1);
  if (lambda == 0.0) {
    p[0] = 1.0;
    return p;
  }
  const double log_lambda = std::log(lambda);
  for (long n = 0; n <= cutoff; ++n) p[n] = std::exp(n * log_lambda - lambda - std::lgamma(n + 1.0));
  return p;
}

/// Poisson mass beyond n = cutoff, summed term by term (1 - sum would be
/// swamped by rounding for large lambda).
inline double poisson_tail(double lambda, long cutoff) {
  if (lambda == 0.0) return 0.0;
  const double log_lambda = std::log(lambda);
  double tail = 0.0;
  for (long n = cutoff + 1;; ++n) {
    const double p = std::exp(n * log_lambda - lambda - std::lgamma(n + 1.0));
    tail += p;
    if (n > lambda && (p == 0.0 || p < 1e-18 * tail)) break;
  }
  return tail;
}

/// Smallest cutoff >= ceil(lambda + 10 sqrt(lambda)) whose discarded Poisson
/// mass is at most 1e-14.
inline long fock_cutoff(double lambda) {
  long n = static_cast<long>(std::ceil(lambda + 10.0 * std::sqrt(lambda)));
  while (poisson_tail(lambda, n) > 1e-14) ++n;
  return n;
}

struct FockTruncation {
  long cutoff1;
  long cutoff2;
  std::vector<double> p1;
  std::vector<double> p2;
  double mass;
};

inline FockTruncation make_truncation(const CavityModel& m, std::optional<long> cutoff = std::nullopt) {
  FockTruncation f;
  f.cutoff1 = cutoff ? *cutoff : fock_cutoff(m.lambda1);
  f.cutoff2 = cutoff ? *cutoff : fock_cutoff(m.lambda2);
  f.p1 = poisson_weights(m.lambda1, f.cutoff1);
  f.p2 = poisson_weights(m.lambda2, f.cutoff2);
  f.mass = (1.0 - poisson_tail(m.lambda1, f.cutoff1)) * (1.0 - poisson_tail(m.lambda2, f.cutoff2));
  if (f.mass < 1.0 - 1e-12) {
    std::ostringstream msg;
    msg << "Fock cutoff insufficient: retained Poisson mass " << f.mass << " < 1 - 1e-12 (cutoffs " << f.cutoff1
        << ", " << f.cutoff2 << ")";
    throw NumericError(msg.str());
  }
  return f;
}

using Populations = std::array<double, 5>;

/// Large-lambda averages for lambda1 = lambda2 = lambda, starting in |1>.
struct ClosedForm {
  double lambda;
  double gamma;

  explicit ClosedForm(const CavityModel& m) : lambda(m.lambda1), gamma(m.gamma) {
    if (!m.symmetric_modes()) throw InvalidArgument("closed form requires lambda1 = lambda2");
    if (!(lambda > 0.0)) throw InvalidArgument("closed form requires a positive mean phonon number");
  }

  double alpha(double t) const { return gamma * t / std::sqrt(2.0 * lambda); }
  double beta(double t) const { return gamma * std::sqrt(2.0 * lambda) * t; }
  /// Collapse/revival envelope exp[2 lambda (cos alpha - 1)].
  double envelope(double t) const { return std::exp(2.0 * lambda * (std::cos(alpha(t)) - 1.0)); }
  double phase(double t) const { return beta(t) + 2.0 * lambda * std::sin(alpha(t)); }

  Populations populations(double t) const {
    const double x = envelope(t) * std::cos(phase(t));
    const double i1 = 0.5 * (1.0 + x);
    const double i2 = 0.25 * (1.0 - x);
    return {i1, i2, i2, 0.0, 0.0};
  }
};

inline std::vector<Populations> averaged_populations_closed(const CavityModel& m, std::span<const double> times) {
  const ClosedForm cf(m);
  std::vector<Populations> out;
  out.reserve(times.size());
  for (const double t : times) out.push_back(cf.populations(t));
  return out;
}

/// Direct Poisson-weighted sum of |C_n(t)|^2 over the truncated Fock space.
inline std::vector<Populations> averaged_populations_sum(const CavityModel& m, std::span<const double> times,
                                                         std::optional<long> cutoff = std::nullopt) {
  const FockTruncation f = make_truncation(m, cutoff);
  std::vector<Populations> out;
  out.reserve(times.size());
  for (const double t : times) {
    Populations acc{};
    for (long n1 = 0; n1 <= f.cutoff1; ++n1) {
      for (long n2 = 0; n2 <= f.cutoff2; ++n2) {
        const double w = f.p1[n1] * f.p2[n2];
        const AmplitudeSet a = amplitudes(m, n1, n2, ground_amplitudes, t);
        for (int k = 0; k < 5; ++k) acc[k] += w * std::norm(a.c[k]);
      }
    }
    out.push_back(acc);
  }
  return out;
}

struct AveragedPopulations {
  std::optional<std::vector<Populations>> closed_form;  // absent when lambda1 != lambda2
  std::vector<Populations> truncated_sum;
};

inline AveragedPopulations averaged_populations(const CavityModel& m, std::span<const double> times) {
  AveragedPopulations out;
  if (m.symmetric_modes() && m.lambda1 > 0.0) out.closed_form = averaged_populations_closed(m, times);
  out.truncated_sum = averaged_populations_sum(m, times);
  return out;
}

/// Entropy from the printed closed-form eigenvalues eta_1..eta_3, evaluated
/// verbatim. These do not sum to one (at t = 0 they give 1, d, 0), so
/// `consistent` flags whether they form a valid spectrum.
struct EntropyResult {
  double t = 0.0;
  Populations populations{};
  double alpha = 0.0, beta = 0.0;
  double a = 0.0, b = 0.0, d = 0.0;
  std::array<double, 3> eta{};
  double entropy = 0.0;  // nats; non-positive eta are skipped
  double trace = 0.0;    // eta_1 + eta_2 + eta_3
  bool consistent = true;
};

inline EntropyResult entropy_closed_form(const ClosedForm& cf, double t) {
  EntropyResult r;
  r.t = t;
  r.populations = cf.populations(t);
  r.alpha = cf.alpha(t);
  r.beta = cf.beta(t);
  const double lambda = cf.lambda;
  const double env = cf.envelope(t);
  const double x = env * std::cos(cf.phase(t));
  r.a = 0.5 * (1.0 + x);
  r.b = std::sqrt(2.0) / 4.0 * env * std::sin(cf.phase(t));
  r.d = 0.25 * (1.0 - 1.0 / (4.0 * lambda)) * (1.0 + x);
  const double q = 1.0 + 2.0 * r.d;
  const double root = std::sqrt(9.0 * r.a * r.a + 32.0 * r.b * r.b - 6.0 * r.a * q + q * q);
  r.eta[0] = (1.0 - x) / (16.0 * lambda);
  r.eta[1] = 0.25 * (q + r.a + root);
  r.eta[2] = 0.25 * (q + r.a - root);
  r.trace = r.eta[0] + r.eta[1] + r.eta[2];
  for (const double e : r.eta) {
    if (e < -1e-10) r.consistent = false;
    if (e > 0.0) r.entropy -= e * std::log(e);
  }
  if (std::abs(r.trace - 1.0) > 1e-10) r.consistent = false;
  return r;
}

/// Reduced spin density matrix from the full spin (x) two-mode state, with
/// both phonon modes traced out.
struct OracleEntropy {
  double t = 0.0;
  Populations populations{};  // diagonal of the reduced density matrix
  std::array<double, 3> eta{};  // descending
  double entropy = 0.0;       // nats
  double trace = 0.0;
};

class TraceOutOracle {
 public:
  explicit TraceOutOracle(const CavityModel& m, std::optional<long> cutoff = std::nullopt)
      : model_(m), fock_(make_truncation(m, cutoff)) {
    w1_.resize(fock_.p1.size());
    w2_.resize(fock_.p2.size());
    for (std::size_t i = 0; i < w1_.size(); ++i) w1_[i] = std::sqrt(fock_.p1[i]);
    for (std::size_t i = 0; i < w2_.size(); ++i) w2_[i] = std::sqrt(fock_.p2[i]);
  }

  const FockTruncation& truncation() const { return fock_; }

  Eigen::Matrix3cd reduced_density(double t) const {
    const long n1max = fock_.cutoff1, n2max = fock_.cutoff2;
    const long cols = n2max + 1;
    // Weighted sector amplitudes w_{n1} w_{n2} C_k^{(n1,n2)}(t), k = 1..3.
    std::vector<std::array<cplx, 3>> sector(static_cast<std::size_t>((n1max + 1) * cols));
    for (long n1 = 0; n1 <= n1max; ++n1) {
      for (long n2 = 0; n2 <= n2max; ++n2) {
        const double w = w1_[n1] * w2_[n2];
        const AmplitudeSet a = amplitudes(model_, n1, n2, ground_amplitudes, t);
        sector[n1 * cols + n2] = {w * a.c[0], w * a.c[1], w * a.c[2]};
      }
    }
    // The Fock state |m1, m2> carries level 1 from sector (m1, m2), level 2
    // from sector (m1 + 1, m2) and level 3 from sector (m1, m2 + 1).
    Eigen::Matrix3cd rho = Eigen::Matrix3cd::Zero();
    for (long m1 = 0; m1 <= n1max; ++m1) {
      for (long m2 = 0; m2 <= n2max; ++m2) {
        Eigen::Vector3cd psi;
        psi[0] = sector[m1 * cols + m2][0];
        psi[1] = m1 + 1 <= n1max ? sector[(m1 + 1) * cols + m2][1] : cplx(0.0);
        psi[2] = m2 + 1 <= n2max ? sector[m1 * cols + m2 + 1][2] : cplx(0.0);
        rho.noalias() += psi * psi.adjoint();
      }
    }
    return rho;
  }

  OracleEntropy evaluate(double t) const {
    const Eigen::Matrix3cd rho = reduced_density(t);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(rho);
    OracleEntropy r;
    r.t = t;
    for (int k = 0; k < 3; ++k) {
      r.populations[k] = rho(k, k).real();
      r.eta[k] = es.eigenvalues()[2 - k];
    }
    r.trace = rho.trace().real();
    for (const double e : r.eta)
      if (e > 0.0) r.entropy -= e * std::log(e);
    return r;
  }

 private:
  CavityModel model_;
  FockTruncation fock_;
  std::vector<double> w1_, w2_;
};

struct EntropySeries {
  std::vector<double> times;
  std::optional<std::vector<EntropyResult>> closed_form;  // absent when lambda1 != lambda2
  std::vector<OracleEntropy> oracle;
  /// max |S_closed - S_oracle| over the grid; the oracle is the reference.
  double closed_form_deviation = 0.0;
  bool closed_form_consistent = true;

  /// The reference entropy at grid index k.
  double entropy(std::size_t k) const { return oracle[k].entropy; }
};

inline EntropySeries entropy(const CavityModel& m, std::span<const double> times,
                             std::optional<long> cutoff = std::nullopt) {
  EntropySeries s;
  s.times.assign(times.begin(), times.end());
  const TraceOutOracle oracle(m, cutoff);
  s.oracle.reserve(times.size());
  for (const double t : times) s.oracle.push_back(oracle.evaluate(t));
  if (m.symmetric_modes() && m.lambda1 > 0.0) {
    const ClosedForm cf(m);
    std::vector<EntropyResult> closed;
    closed.reserve(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
      closed.push_back(entropy_closed_form(cf, times[k]));
      s.closed_form_consistent = s.closed_form_consistent && closed.back().consistent;
      s.closed_form_deviation = std::max(s.closed_form_deviation, std::abs(closed.back().entropy - s.oracle[k].entropy));
    }
    s.closed_form = std::move(closed);
  }
  return s;
}

/// t_rev = 2 pi sqrt(2 lambda) / gamma, where the closed-form envelope first
/// returns to one.
inline double revival_time(const CavityModel& m) {
  return units::two_pi * std::sqrt(2.0 * m.lambda1) / std::abs(m.gamma);
}

/// Collapse time sqrt(2) / gamma of the Gaussian envelope exp(-gamma^2 t^2 / 2).
inline double collapse_time(const CavityModel& m) { return std::sqrt(2.0) / std::abs(m.gamma); }

/// Locates the first revival numerically: scans the closed-form envelope for
/// its first local maximum after it has collapsed below 1/2, then refines by
/// golden-section search. Returns nullopt if none is found before t_limit.
inline std::optional<double> measure_revival_time(const CavityModel& m, double t_limit) {
  const ClosedForm cf(m);
  if (cf.gamma == 0.0) return std::nullopt;
  const double h = collapse_time(m) / 50.0;
  bool collapsed = false;
  double prev = cf.envelope(0.0), cur = cf.envelope(h);
  for (double t = h; t + h <= t_limit; t += h) {
    const double next = cf.envelope(t + h);
    if (cur < 0.5) collapsed = true;
    if (collapsed && cur >= prev && cur > next) {
      double a = t - h, b = t + h;
      const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
      double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
      double f1 = cf.envelope(x1), f2 = cf.envelope(x2);
      while (b - a > 1e-12 * t) {
        if (f1 > f2) {
          b = x2; x2 = x1; f2 = f1; x1 = b - inv_phi * (b - a); f1 = cf.envelope(x1);
        } else {
          a = x1; x1 = x2; f1 = f2; x2 = a + inv_phi * (b - a); f2 = cf.envelope(x2);
        }
      }
      return 0.5 * (a + b);
    }
    prev = cur;
    cur = next;
  }
  return std::nullopt;
}

}  // namespace adatom
