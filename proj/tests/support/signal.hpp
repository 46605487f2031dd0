#pragma once

// Period estimation for sampled population curves.

#include <cmath>
#include <complex>
#include <vector>

namespace signal_tools {

/// |sum_k (x_k - mean) exp(-i w t_k)|^2
inline double spectral_power(const std::vector<double>& t, const std::vector<double>& x, double w) {
  double mean = 0;
  for (const double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  std::complex<double> acc = 0;
  for (std::size_t k = 0; k < x.size(); ++k) acc += (x[k] - mean) * std::exp(std::complex<double>(0, -w * t[k]));
  return std::norm(acc);
}

/// Angular frequency of the strongest component in [w_lo, w_hi], by a scan
/// followed by golden-section refinement.
inline double dominant_frequency(const std::vector<double>& t, const std::vector<double>& x, double w_lo, double w_hi,
                                 int scan = 600) {
  double best = w_lo, best_p = -1;
  const double step = (w_hi - w_lo) / scan;
  for (int i = 0; i <= scan; ++i) {
    const double w = w_lo + i * step;
    const double p = spectral_power(t, x, w);
    if (p > best_p) best_p = p, best = w;
  }
  double a = std::max(w_lo, best - step), b = std::min(w_hi, best + step);
  const double r = (std::sqrt(5.0) - 1) / 2;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = spectral_power(t, x, x1), f2 = spectral_power(t, x, x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 > f2) {
      b = x2, x2 = x1, f2 = f1, x1 = b - r * (b - a), f1 = spectral_power(t, x, x1);
    } else {
      a = x1, x1 = x2, f1 = f2, x2 = a + r * (b - a), f2 = spectral_power(t, x, x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace signal_tools
