#include <gtest/gtest.h>

#include <random>

#include "adatom/drivesim.hpp"
#include "adatom/floquet.hpp"
#include "oracles.hpp"
#include "signal.hpp"

using namespace adatom;

namespace {

AnisotropyModel model() { return load_model_file(ADATOM_TEST_CONFIG); }

CVector ground(const AnisotropyModel& m, double a0 = 4.0) { return static_spectrum(m, a0).ground(); }

}  // namespace

TEST(Propagate, UndrivenEigenstateIsStationary) {
  const auto m = model();
  const DriveProtocol d{4.0, 0.0, 0.9};
  const auto tr = propagate(m, d, default_settings(d, 2000.0), ground(m));
  for (std::size_t k = 0; k < tr.size(); ++k) EXPECT_NEAR(tr.populations(k, 0), 1.0, 1e-10);
}

TEST(Propagate, MatchesRungeKuttaOracle) {
  const auto m = model();
  const DriveProtocol d{4.0, 0.9, 1.1};
  const double t_end = 3.0 * d.period();
  PropagationSettings s{t_end, d.period() / 2000, 1, Integrator::magnus4};
  const auto tr = propagate(m, d, s, ground(m));
  const auto ops = build_operators(2.0);
  auto hfun = [&](double t) -> Eigen::MatrixXcd {
    const double a = d.distance(t);
    return static_hamiltonian(ops, zeeman_strength(m, a), m.delta_fit.value(a));
  };
  const Eigen::VectorXcd ref = oracle::rk4(hfun, ground(m), 0.0, t_end, 60000);
  const CVector got = static_spectrum(m, 4.0).states * tr.amplitudes.back();
  EXPECT_LT((got - ref).norm(), 1e-9);
}

TEST(Propagate, LongitudinalAndNormPreserving) {
  const auto m = model();
  const DriveProtocol d{4.0, 0.9, 0.704};
  const auto tr = propagate(m, d, default_settings(d, 3000.0), ground(m));
  for (std::size_t k = 0; k < tr.size(); ++k) {
    EXPECT_LT(std::abs(tr.jy[k]), 1e-9);
    EXPECT_LT(std::abs(tr.jz[k]), 1e-9);
  }
  EXPECT_LT(tr.max_norm_drift, 1e-10);
}

TEST(Propagate, TimeReversalRecoversInitialState) {
  const auto m = model();
  const DriveProtocol d{4.0, 0.9, 0.93};
  const DrivenHamiltonian h(m, d);
  const double t1 = 40.0 * d.period();
  const long n = 40 * 500;
  for (const auto integ : {Integrator::midpoint, Integrator::magnus4}) {
    const CVector psi0 = ground(m);
    const CVector fwd = evolve(h, psi0, 0.0, t1, n, integ);
    const CVector back = evolve(h, fwd, t1, 0.0, n, integ);
    EXPECT_LT((back - psi0).norm(), 1e-8) << to_string(integ);
  }
}

TEST(Propagate, RejectsCoarseStep) {
  const auto m = model();
  const DriveProtocol d{4.0, 0.9, 1.0};
  PropagationSettings s{100.0, d.period() / 100, 1, Integrator::midpoint};
  try {
    propagate(m, d, s, ground(m));
    FAIL() << "expected StepSizeError";
  } catch (const StepSizeError& e) {
    EXPECT_NE(std::string(e.what()).find("step-size"), std::string::npos);
  }
}

TEST(Propagate, ValidatesArguments) {
  const auto m = model();
  EXPECT_THROW(propagate(m, DriveProtocol{4.0, 0.9, 0.0}, {1.0, 0.01}, ground(m)), InvalidArgument);
  EXPECT_THROW(propagate(m, DriveProtocol{0.5, 0.9, 1.0}, {1.0, 0.01}, ground(m)), InvalidArgument);
  CVector bad = ground(m) * 2.0;
  EXPECT_THROW(propagate(m, DriveProtocol{4.0, 0.9, 1.0}, {1.0, 0.01}, bad), InvalidArgument);
}

TEST(Propagate, IntegratorOrders) {
  const auto m = model();
  const DriveProtocol d{4.0, 0.9, 0.8};
  const DrivenHamiltonian h(m, d);
  const double t1 = 2.0 * d.period();
  const CVector psi0 = ground(m);
  for (const auto& [integ, order] : {std::pair{Integrator::midpoint, 2}, std::pair{Integrator::magnus4, 4}}) {
    const CVector ref = evolve(h, psi0, 0.0, t1, 32000, Integrator::magnus4);
    const double e1 = (evolve(h, psi0, 0.0, t1, 1000, integ) - ref).norm();
    const double e2 = (evolve(h, psi0, 0.0, t1, 2000, integ) - ref).norm();
    EXPECT_NEAR(std::log2(e1 / e2), order, 0.2) << to_string(integ);
  }
}

TEST(Propagate, FastRippleAtDriveFrequency) {
  // On resonance the residual of P0 after removing its one-period running
  // mean oscillates at the drive frequency, split into omega +- gap by the
  // beat between the two dominant Floquet modes.
  const auto m = model();
  const DriveProtocol d{4.0, 0.9, 0.704};
  const auto fr = floquet_at(m, d);
  const double gap =
      circular_gap(fr.quasienergies[fr.ordering[0]], fr.quasienergies[fr.ordering[1]], d.omega);
  const int per = 500;
  PropagationSettings s{60.0 * d.period(), d.period() / per, 1, Integrator::midpoint};
  const auto tr = propagate(m, d, s, ground(m));
  const int n = static_cast<int>(tr.size());
  std::vector<double> t, resid;
  for (int k = per / 2; k + per / 2 < n; ++k) {
    double mean = 0;
    for (int j = k - per / 2; j < k + per / 2; ++j) mean += tr.populations(j, 0);
    t.push_back(tr.times[k]);
    resid.push_back(tr.populations(k, 0) - mean / per);
  }
  const double w = signal_tools::dominant_frequency(t, resid, 0.2 * d.omega, 4.0 * d.omega, 1000);
  const double resolution = units::two_pi / (t.back() - t.front());
  EXPECT_LT(std::abs(w - d.omega), gap + resolution) << "peak at " << w / d.omega << " omega";
}

TEST(Propagate, DefaultSettingsBoundStoredRows) {
  const DriveProtocol d{4.0, 0.9, 2.0};
  const auto s = default_settings(d, 1e6);
  EXPECT_DOUBLE_EQ(s.dt, d.period() / 500);
  EXPECT_LE(step_count(s.t_max, s.dt) / s.stride + 2, max_stored_rows + 1);
}

TEST(SurvivalMap, RowsEqualIndividualPropagations) {
  const auto m = model();
  const DriveProtocol tmpl{4.0, 0.9, 1.0};
  SweepSettings sw;
  sw.t_max = 300.0;
  sw.sample_dt = 1.5;
  sw.workers = 3;
  const std::vector<double> grid{0.7, 1.1, 1.9};
  const auto map = survival_map(m, tmpl, grid, sw);
  ASSERT_EQ(map.p0.rows(), 3);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const DriveProtocol d = tmpl.with_omega(grid[i]);
    const auto tr = propagate(m, d, row_settings(d, sw), ground(m));
    for (Eigen::Index j = 0; j < map.p0.cols(); ++j) {
      EXPECT_EQ(map.p0(i, j), tr.populations(j, 0));
      EXPECT_NEAR(tr.times[j], map.times[j], 1e-9);
    }
  }
}

TEST(SurvivalMap, UndrivenRowIsOne) {
  const auto m = model();
  SweepSettings sw;
  sw.t_max = 100.0;
  sw.sample_dt = 1.0;
  const auto map = survival_map(m, DriveProtocol{4.0, 0.0, 1.0}, {1.0}, sw);
  for (Eigen::Index j = 0; j < map.p0.cols(); ++j) EXPECT_NEAR(map.p0(0, j), 1.0, 1e-12);
}

TEST(SurvivalMap, IndependentOfWorkerCount) {
  const auto m = model();
  SweepSettings sw;
  sw.t_max = 200.0;
  sw.sample_dt = 2.0;
  std::vector<double> grid;
  for (int i = 0; i < 12; ++i) grid.push_back(0.6 + 0.15 * i);
  sw.workers = 1;
  const auto a = survival_map(m, DriveProtocol{}, grid, sw);
  sw.workers = 5;
  const auto b = survival_map(m, DriveProtocol{}, grid, sw);
  EXPECT_EQ((a.p0 - b.p0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SurvivalMap, ErrorsAreCollected) {
  const auto m = model();
  SweepSettings sw;
  sw.t_max = 10.0;
  sw.sample_dt = 1.0;
  EXPECT_THROW(survival_map(m, DriveProtocol{}, {1.0, 0.9}, sw), InvalidArgument);
  sw.steps_per_period = 100;  // below the resolution floor
  try {
    survival_map(m, DriveProtocol{}, {0.8, 1.2}, sw);
    FAIL();
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2 row(s)"), std::string::npos);
    EXPECT_NE(msg.find("omega = 0.8"), std::string::npos);
  }
}
