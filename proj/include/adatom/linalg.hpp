#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>

#include "adatom/error.hpp"

namespace adatom {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr cplx I{0.0, 1.0};

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_defect(const CMatrix& m) { return max_abs(m - m.adjoint()); }

inline double unitarity_defect(const CMatrix& u) {
  return max_abs(u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols()));
}

/// Multiplies v by a unit phase so that its largest-magnitude component is
/// real and positive. Ties resolve to the lowest index.
inline void fix_phase(Eigen::Ref<CVector> v) {
  Eigen::Index best = 0;
  double best_mag = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]);
    if (mag > best_mag + 1e-12) {
      best_mag = mag;
      best = i;
    }
  }
  if (best_mag <= 0.0) return;
  v *= std::conj(v[best]) / best_mag;
  v[best] = cplx(std::abs(v[best]), 0.0);
}

/// exp(-i H t) for Hermitian H.
inline CMatrix unitary_exp(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) throw NumericError("unitary_exp: eigensolver failed");
  const CVector phases = (-I * t * es.eigenvalues().cast<cplx>()).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

/// exp(-i H t) for real symmetric H.
inline CMatrix unitary_exp(const RMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(h);
  if (es.info() != Eigen::Success) throw NumericError("unitary_exp: eigensolver failed");
  const CVector phases = (-I * t * es.eigenvalues().cast<cplx>()).array().exp();
  const CMatrix v = es.eigenvectors().cast<cplx>();
  return v * phases.asDiagonal() * v.transpose();
}

/// Nearest unitary to an almost-unitary u (Newton-Schulz in extended
/// precision). Matrices that are applied many times in a row must be unitary
/// to rounding level, otherwise their defect accumulates coherently.
inline CMatrix polish_unitary(const CMatrix& u) {
  using LMatrix = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;
  LMatrix x = u.cast<std::complex<long double>>();
  const LMatrix id = LMatrix::Identity(u.rows(), u.cols());
  for (int it = 0; it < 3; ++it) x = x * (3.0L * id - x.adjoint() * x) / 2.0L;
  return x.cast<cplx>();
}

/// Von Neumann entropy (nats) of a spectrum; 0 ln 0 := 0.
inline double entropy_of(const RVector& eigenvalues) {
  double s = 0.0;
  for (const double p : eigenvalues)
    if (p > 0.0) s -= p * std::log(p);
  return s;
}

}  // namespace adatom
