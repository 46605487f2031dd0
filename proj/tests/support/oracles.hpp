#pragma once

// Reference computations used by the tests. They avoid the library's own
// solvers so a shared bug cannot hide behind a matching answer.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

/// Number of eigenvalues below x of the symmetric tridiagonal matrix
/// (diag d, off-diagonal e), by Sturm sequence.
inline int sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
  int count = 0;
  double q = d[0] - x;
  if (q < 0) ++count;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (q == 0.0) q = 1e-300;
    q = d[i] - x - e[i - 1] * e[i - 1] / q;
    if (q < 0) ++count;
  }
  return count;
}

/// All eigenvalues of a symmetric tridiagonal matrix by bisection, ascending.
inline std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& d, const std::vector<double>& e) {
  double lo = 0, hi = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i + 1 < d.size() ? std::abs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  std::vector<double> out;
  for (int k = 0; k < static_cast<int>(d.size()); ++k) {
    double a = lo - 1, b = hi + 1;
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
      const double m = 0.5 * (a + b);
      (sturm_count(d, e, m) > k ? b : a) = m;
    }
    out.push_back(0.5 * (a + b));
  }
  return out;
}

/// Adatom Hamiltonian -h Jx - delta Jz^2 for spin j in the Jz basis, written
/// out element by element as a tridiagonal matrix.
inline void adatom_tridiagonal(double j, double h, double delta, std::vector<double>& d, std::vector<double>& e) {
  const int n = static_cast<int>(std::lround(2 * j)) + 1;
  d.assign(n, 0.0);
  e.assign(n - 1, 0.0);
  for (int i = 0; i < n; ++i) {
    const double m = j - i;
    d[i] = -delta * m * m;
    if (i + 1 < n) {
      const double mm = m - 1;  // <m|Jx|m-1> = sqrt(j(j+1) - m(m-1)) / 2
      e[i] = -h * 0.5 * std::sqrt(j * (j + 1) - (mm + 1) * mm);
    }
  }
}

/// Classical RK4 for i dpsi/dt = H(t) psi.
inline Eigen::VectorXcd rk4(const std::function<Eigen::MatrixXcd(double)>& hamiltonian, Eigen::VectorXcd psi,
                            double t0, double t1, long steps) {
  const double dt = (t1 - t0) / steps;
  const cplx mi(0, -1);
  for (long k = 0; k < steps; ++k) {
    const double t = t0 + k * dt;
    const Eigen::MatrixXcd h0 = hamiltonian(t), hm = hamiltonian(t + dt / 2), h1 = hamiltonian(t + dt);
    const Eigen::VectorXcd k1 = mi * (h0 * psi);
    const Eigen::VectorXcd k2 = mi * (hm * (psi + 0.5 * dt * k1));
    const Eigen::VectorXcd k3 = mi * (hm * (psi + 0.5 * dt * k2));
    const Eigen::VectorXcd k4 = mi * (h1 * (psi + dt * k3));
    psi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return psi;
}

/// Matrix exponential exp(-i H t) by scaling and squaring of a Taylor series;
/// independent of any eigendecomposition.
inline Eigen::MatrixXcd expm_taylor(const Eigen::MatrixXcd& h, double t) {
  Eigen::MatrixXcd a = cplx(0, -t) * h;
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm + 1e-300))) + 4);
  a /= std::pow(2.0, squarings);
  Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(h.rows(), h.cols());
  Eigen::MatrixXcd sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * a / double(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

}  // namespace oracle
