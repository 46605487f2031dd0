#pragma once

// Angular-momentum matrices in the Jz eigenbasis and the static adatom
// Hamiltonian H = -h Jx - delta Jz^2.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "adatom/error.hpp"
#include "adatom/linalg.hpp"

namespace adatom {

/// Total angular momentum quantum number, stored as 2J so that only
/// half-integers are representable.
class SpinQuantum {
 public:
  static SpinQuantum from_twice(int twice_j) {
    if (twice_j < 0) throw InvalidArgument("spin quantum number must be non-negative");
    return SpinQuantum(twice_j);
  }

  static SpinQuantum from_value(double j) {
    const double twice = 2.0 * j;
    const double rounded = std::round(twice);
    if (!std::isfinite(j) || j < 0.0 || std::abs(twice - rounded) > 1e-12)
      throw InvalidArgument("spin quantum number must be a non-negative half-integer, got " +
                            std::to_string(j));
    return SpinQuantum(static_cast<int>(rounded));
  }

  int twice() const { return twice_j_; }
  double value() const { return 0.5 * twice_j_; }
  int dim() const { return twice_j_ + 1; }
  double casimir() const { return value() * (value() + 1.0); }

  friend bool operator==(SpinQuantum, SpinQuantum) = default;

 private:
  explicit SpinQuantum(int twice_j) : twice_j_(twice_j) {}
  int twice_j_;
};

/// Jx, Jy, Jz (hbar = 1) in the basis |m = j>, |j-1>, ..., |-j>.
struct SpinOperatorSet {
  SpinQuantum j;
  int dim;
  CMatrix jx;
  CMatrix jy;
  CMatrix jz;

  CMatrix jz2() const { return jz * jz; }
  /// m value of basis index i.
  double m(int i) const { return j.value() - i; }
};

inline SpinOperatorSet build_operators(SpinQuantum j) {
  const int n = j.dim();
  const double jj = j.casimir();
  CMatrix jplus = CMatrix::Zero(n, n);
  CMatrix jz = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double m = j.value() - i;
    jz(i, i) = m;
    // J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>, and |m+1> sits at index i-1.
    if (i > 0) jplus(i - 1, i) = std::sqrt(jj - m * (m + 1.0));
  }
  const CMatrix jminus = jplus.adjoint();
  CMatrix jx = 0.5 * (jplus + jminus);
  CMatrix jy = (jplus - jminus) / (2.0 * I);
  return SpinOperatorSet{j, n, std::move(jx), std::move(jy), std::move(jz)};
}

inline SpinOperatorSet build_operators(double j) { return build_operators(SpinQuantum::from_value(j)); }

/// H = -h Jx - delta Jz^2 with h = [g_S + g_L] muB B0 (meV).
inline CMatrix static_hamiltonian(const SpinOperatorSet& ops, double h, double delta) {
  return -h * ops.jx - delta * ops.jz2();
}

/// Rotation by pi about the field axis, R = exp(-i pi Jx). H commutes with R.
inline CMatrix parity_operator(const SpinOperatorSet& ops) {
  return unitary_exp(ops.jx, 3.14159265358979323846);
}

struct SpinSpectrum {
  RVector energies;  // ascending, meV
  CMatrix states;    // orthonormal columns, phase-fixed
  RVector couplings; // |<xi_n| Jz^2 |xi_0>|

  int dim() const { return static_cast<int>(energies.size()); }

  /// Excited-state indices reachable from the ground state through Jz^2.
  std::vector<int> coupled_states(double threshold = 1e-12) const {
    std::vector<int> out;
    for (int n = 1; n < dim(); ++n)
      if (couplings[n] > threshold) out.push_back(n);
    return out;
  }

  CVector ground() const { return states.col(0); }
};

inline double expectation(const CMatrix& op, const CVector& psi) {
  return psi.dot(op * psi).real();
}

/// Hermitian eigendecomposition with deterministic output.
///
/// Eigenvectors carry the phase fixed by linalg fix_phase. Within a degenerate
/// cluster (only possible at h = 0) the basis is rotated to diagonalize Jz^2
/// and then Jz inside the cluster; members are ordered by descending <Jz^2>,
/// then descending <Jz>. Physical runs (h > 0) are non-degenerate.
inline SpinSpectrum diagonalize(const CMatrix& h, const SpinOperatorSet& ops) {
  if (h.rows() != ops.dim || h.cols() != ops.dim)
    throw InvalidArgument("diagonalize: Hamiltonian dimension does not match operator set");
  if (hermiticity_defect(h) > 1e-10) throw InvalidArgument("diagonalize: matrix is not Hermitian");

  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) throw ConvergenceError("diagonalize: eigensolver did not converge");

  RVector energies = es.eigenvalues();
  CMatrix states = es.eigenvectors();
  const int n = ops.dim;
  const CMatrix jz2 = ops.jz2();
  const double scale = std::max(1.0, max_abs(h));

  for (int start = 0; start < n;) {
    int stop = start + 1;
    while (stop < n && energies[stop] - energies[start] < 1e-10 * scale) ++stop;
    const int size = stop - start;
    if (size > 1) {
      CMatrix block = states.middleCols(start, size);
      // Diagonalize Jz^2 then Jz within the degenerate subspace.
      const CMatrix p2 = block.adjoint() * jz2 * block;
      Eigen::SelfAdjointEigenSolver<CMatrix> s2(p2);
      block = block * s2.eigenvectors();
      const CMatrix p1 = block.adjoint() * ops.jz * block;
      // Jz connects only equal-Jz^2 vectors inside the cluster; re-diagonalize
      // sub-blocks of equal <Jz^2>.
      RVector q2 = s2.eigenvalues();
      for (int a = 0; a < size;) {
        int b = a + 1;
        while (b < size && std::abs(q2[b] - q2[a]) < 1e-9) ++b;
        if (b - a > 1) {
          Eigen::SelfAdjointEigenSolver<CMatrix> s1(p1.block(a, a, b - a, b - a));
          block.middleCols(a, b - a) = block.middleCols(a, b - a) * s1.eigenvectors();
        }
        a = b;
      }
      std::vector<int> order(size);
      std::iota(order.begin(), order.end(), 0);
      std::vector<double> e2(size), e1(size);
      for (int k = 0; k < size; ++k) {
        e2[k] = expectation(jz2, block.col(k));
        e1[k] = expectation(ops.jz, block.col(k));
      }
      std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        if (std::abs(e2[x] - e2[y]) > 1e-9) return e2[x] > e2[y];
        return e1[x] > e1[y] + 1e-9;
      });
      for (int k = 0; k < size; ++k) states.col(start + k) = block.col(order[k]);
    }
    start = stop;
  }

  for (int k = 0; k < n; ++k) {
    CVector col = states.col(k);
    fix_phase(col);
    states.col(k) = col;
  }

  RVector couplings(n);
  const CVector jz2_ground = jz2 * states.col(0);
  for (int k = 0; k < n; ++k) couplings[k] = std::abs(states.col(k).dot(jz2_ground));
  return SpinSpectrum{std::move(energies), std::move(states), std::move(couplings)};
}

/// R-parity (+1 or -1) of a state and the residual | R psi - parity psi |.
struct ParityResult {
  int parity;
  double residual;
};

inline ParityResult parity_of(const CMatrix& r, const CVector& psi) {
  const CVector rpsi = r * psi;
  const double plus = (rpsi - psi).norm();
  const double minus = (rpsi + psi).norm();
  return plus <= minus ? ParityResult{+1, plus} : ParityResult{-1, minus};
}

}  // namespace adatom
