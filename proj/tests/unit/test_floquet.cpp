#include <gtest/gtest.h>

#include "adatom/drivesim.hpp"
#include "adatom/floquet.hpp"
#include "oracles.hpp"
#include "signal.hpp"

using namespace adatom;

namespace {

AnisotropyModel model() { return load_model_file(ADATOM_TEST_CONFIG); }

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

}  // namespace

TEST(Fold, IdempotentAndInZone) {
  for (const double w : {0.3, 0.704, 2.4}) {
    for (double e = -7.3; e < 7.3; e += 0.0137) {
      const double f = fold_quasienergy(e, w);
      EXPECT_GT(f, -w / 2 - 1e-15);
      EXPECT_LE(f, w / 2 + 1e-15);
      EXPECT_NEAR(fold_quasienergy(f, w), f, 1e-15);
      const double turns = (e - f) / w;
      EXPECT_NEAR(turns, std::round(turns), 1e-9);
    }
  }
  EXPECT_DOUBLE_EQ(fold_quasienergy(0.5, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(fold_quasienergy(-0.5, 1.0), 0.5);
}

TEST(Monodromy, UndrivenLimit) {
  const auto m = model();
  const DriveProtocol d{4.0, 0.0, 0.9};
  const CMatrix u = monodromy(m, d);
  const auto ops = build_operators(2.0);
  const CMatrix h = static_hamiltonian(ops, zeeman_strength(m, 4.0), m.delta_fit.value(4.0));
  EXPECT_LT(max_abs(u - oracle::expm_taylor(h, d.period())), 1e-10);

  const auto spec = static_spectrum(m, 4.0);
  const auto r = analyze(u, d.omega, spec.ground());
  std::vector<double> want, got;
  for (int n = 0; n < 5; ++n) want.push_back(fold_quasienergy(-spec.energies[n], d.omega));
  for (int n = 0; n < 5; ++n) got.push_back(r.quasienergies[n]);
  std::sort(want.begin(), want.end());
  std::sort(got.begin(), got.end());
  for (int n = 0; n < 5; ++n) EXPECT_NEAR(got[n], want[n], 1e-9);
  EXPECT_NEAR(r.projections[r.ordering[0]], 1.0, 1e-12);
}

TEST(Monodromy, UnitaryWithUnitDeterminant) {
  const auto m = model();
  for (const double w : {0.6, 1.0, 1.7, 2.4}) {
    const CMatrix u = monodromy(m, DriveProtocol{4.0, 0.9, w});
    EXPECT_LT(unitarity_defect(u), 1e-10);
    EXPECT_NEAR(std::abs(u.determinant()), 1.0, 1e-10);
    const auto r = analyze(u, w, static_spectrum(m, 4.0).ground());
    for (int n = 0; n < 5; ++n) EXPECT_NEAR(r.eigen_moduli[n], 1.0, 1e-10);
    EXPECT_NEAR(r.projections.sum(), 1.0, 1e-12);
    for (const int p : r.parities) EXPECT_TRUE(p == 1 || p == -1);
  }
}

TEST(Monodromy, PeriodDoublingAgreement) {
  const auto m = model();
  for (const double w : {0.6, 0.704, 1.4, 2.25}) {
    const DriveProtocol d{4.0, 0.9, w};
    MonodromySettings s;
    const auto xi0 = static_spectrum(m, 4.0).ground();
    const auto r1 = analyze(monodromy(m, d, s), w, xi0);
    s.steps_per_period *= 2;
    const auto r2 = analyze(monodromy(m, d, s), w, xi0);
    std::vector<double> a(r1.quasienergies.data(), r1.quasienergies.data() + 5);
    std::vector<double> b(r2.quasienergies.data(), r2.quasienergies.data() + 5);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (int n = 0; n < 5; ++n) EXPECT_NEAR(a[n], b[n], 1e-8) << "omega = " << w;
  }
}

TEST(Monodromy, RejectsUnderResolvedPeriod) {
  const auto m = model();
  MonodromySettings s;
  s.steps_per_period = 100;
  EXPECT_THROW(monodromy(m, DriveProtocol{}, s), InvalidArgument);
  s.steps_per_period = 200;
  s.tolerance = 1e-15;
  EXPECT_THROW(monodromy(m, DriveProtocol{4.0, 0.9, 0.6}, s), ConvergenceError);
}

TEST(Stroboscopic, MatchesExactPowersNearCrossing) {
  const auto m = model();
  const double w = 0.703263631561;
  const DriveProtocol d{4.0, 0.9, w};
  const CMatrix u = monodromy(m, d);
  const CVector xi0 = static_spectrum(m, 4.0).ground();
  const auto r = analyze(u, w, xi0);
  const int n1 = r.ordering[0], n2 = r.ordering[1];
  ASSERT_GT(r.projections[n2], 0.45);
  const double de = std::abs(r.quasienergies[n1] - r.quasienergies[n2]);
  const int k_max = static_cast<int>(std::ceil(units::two_pi / de / r.period()));
  const auto pred = stroboscopic_check(r, k_max);
  EXPECT_DOUBLE_EQ(pred[0], 1.0);
  CVector psi = xi0;
  double worst = 0;
  for (int k = 0; k <= k_max; ++k) {
    worst = std::max(worst, std::abs(std::norm(xi0.dot(psi)) - pred[k]));
    psi = u * psi;
  }
  EXPECT_LT(worst, 0.02);
}

TEST(Stroboscopic, RefusesWhenTwoModesDoNotDominate) {
  FloquetResult r;
  r.omega = 1.0;
  r.quasienergies = RVector::Zero(3);
  r.projections = RVector::Constant(3, 1.0 / 3);
  r.ordering = {0, 1, 2};
  EXPECT_THROW(stroboscopic_check(r, 10), InvalidArgument);
  r.projections << 0.5, 0.5, 0.0;
  r.quasienergies << 0.1, 0.1, 0.0;
  for (const double p : stroboscopic_check(r, 50)) EXPECT_NEAR(p, 1.0, 1e-14);
}

TEST(Tracking, UndrivenCrossingsAreExact) {
  const auto m = model();
  const auto s = sweep_and_track(m, DriveProtocol{4.0, 0.0, 1.0}, grid(0.6, 2.4, 181));
  for (const auto& c : s.crossings) EXPECT_TRUE(c.degenerate) << c.omega_star << " gap " << c.gap;
  for (std::size_t k = 0; k < s.omegas.size(); ++k)
    for (int b = 0; b < s.branches(); ++b) EXPECT_NEAR(s.projection(k, b), s.projection(0, b), 1e-12);
}

TEST(Tracking, MatchingAndGridChecks) {
  RMatrix overlap(3, 3);
  overlap << 0.1, 0.9, 0.0, 0.9, 0.1, 0.0, 0.0, 0.0, 1.0;
  const auto [perm, margin] = detail::best_matching(overlap);
  EXPECT_EQ(perm, (std::vector<int>{1, 0, 2}));
  EXPECT_NEAR(margin, 1.6, 1e-12);
  overlap << 0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 1.0;
  EXPECT_EQ(detail::best_matching(overlap).second, 0.0);
  const auto m = model();
  EXPECT_THROW(sweep_and_track(m, DriveProtocol{}, {1.0}), InvalidArgument);
  EXPECT_THROW(sweep_and_track(m, DriveProtocol{}, {1.0, 0.9}), InvalidArgument);
}

TEST(Tracking, CrossingNearCalibrationTarget) {
  const auto m = model();
  TrackingSettings ts;
  ts.min_gap = 1e-3;
  const auto s = sweep_and_track(m, DriveProtocol{}, grid(0.65, 0.76, 111), ts);
  ASSERT_EQ(s.crossings.size(), 1u);
  const auto& c = s.crossings[0];
  EXPECT_NEAR(c.omega_star, 0.704, 0.005);
  EXPECT_FALSE(c.degenerate);
  EXPECT_GT(c.exchange, 0.3);
  EXPECT_EQ(s.parity(0, c.branch_i), s.parity(0, c.branch_j));
  // The refined gap is a minimum: probing either side gives larger values.
  for (const double dw : {-2e-3, 2e-3}) {
    const auto r = floquet_at(m, DriveProtocol{4.0, 0.9, c.omega_star + dw});
    const double g = circular_gap(r.quasienergies[r.ordering[0]], r.quasienergies[r.ordering[1]], r.omega);
    EXPECT_GT(g, c.gap);
  }
}

TEST(Tracking, GapSetsTransferPeriod) {
  // The slow envelope of P0 at the crossing has period 2 pi / gap.
  const auto m = model();
  TrackingSettings ts;
  ts.min_gap = 1e-3;
  const auto s = sweep_and_track(m, DriveProtocol{}, grid(0.65, 0.76, 111), ts);
  ASSERT_FALSE(s.crossings.empty());
  const auto& c = s.crossings[0];
  const DriveProtocol d{4.0, 0.9, c.omega_star};
  const double t_max = 4.0 * c.slow_period();
  PropagationSettings ps{t_max, d.period() / 500, 500, Integrator::midpoint};
  const auto tr = propagate(m, d, ps, static_spectrum(m, 4.0).ground());
  std::vector<double> t, p;
  for (std::size_t k = 0; k < tr.size(); ++k) t.push_back(tr.times[k]), p.push_back(tr.populations(k, 0));
  const double nu = signal_tools::dominant_frequency(t, p, 0.3 * c.gap, 3.0 * c.gap);
  EXPECT_NEAR(units::two_pi / nu / c.slow_period(), 1.0, 0.02);
}
