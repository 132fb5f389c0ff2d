#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "floodda/common.hpp"
#include "floodda/enkf.hpp"
#include "floodda/grid.hpp"
#include "floodda/hydro.hpp"
#include "floodda/observation.hpp"
#include "floodda/rng.hpp"

using namespace floodda;

namespace {

double col_mean(const Eigen::MatrixXd& m, int row) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.cols(); ++i) s += m(row, i);
  return s / static_cast<double>(m.cols());
}

// Sample covariance of two rows, (n-1) normalisation; the test-side oracle
// for the filter's realized statistics.
double col_cov(const Eigen::MatrixXd& a, int ra, const Eigen::MatrixXd& b,
               int rb) {
  const double ma = col_mean(a, ra), mb = col_mean(b, rb);
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.cols(); ++i)
    s += (a(ra, i) - ma) * (b(rb, i) - mb);
  return s / static_cast<double>(a.cols() - 1);
}

// Scalar ensemble with identity observation operator and perturbed
// observations, the standard stochastic-EnKF test bed.
struct ScalarCase {
  Eigen::MatrixXd x;    // 1 x n_e forecast
  Eigen::MatrixXd y;    // 1 x n_e equivalents (equal to x)
  Eigen::MatrixXd yo;   // 1 x n_e perturbed observation
  Eigen::VectorXd r;    // 1 observation variance
};

ScalarCase make_scalar_case(int n_e, double mu0, double sigma0, double y_obs,
                            double r_var, std::uint64_t seed) {
  ScalarCase c;
  c.x.resize(1, n_e);
  c.y.resize(1, n_e);
  c.yo.resize(1, n_e);
  c.r.resize(1);
  c.r(0) = r_var;
  Rng rng(seed);
  for (int i = 0; i < n_e; ++i) {
    c.x(0, i) = rng.normal(mu0, sigma0);
    c.y(0, i) = c.x(0, i);
    c.yo(0, i) = y_obs + rng.normal(0.0, std::sqrt(r_var));
  }
  return c;
}

// Ensemble member controls as a flat matrix for bitwise comparison.
Eigen::MatrixXd controls_of(const Ensemble& ens) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(
                        ens.members.front().control.size()),
                    ens.size());
  for (int i = 0; i < ens.size(); ++i)
    m.col(i) = control_to_vector(ens.members[static_cast<std::size_t>(i)]
                                     .control);
  return m;
}

// Sloping 1x8 channel with constant inflow, for full-cycle tests.
struct CycleFixture {
  Grid grid;
  PhysicalParams params;
  std::vector<Subdomain> subdomains;
  ControlPrior prior;
  HydroState start;  // spun up to t = 1800 under the prior mean

  CycleFixture() {
    grid.n_rows = 1;
    grid.n_cols = 8;
    grid.cell_size = 50.0;
    for (int c = 0; c < 8; ++c)
      grid.bed_elevation.push_back(0.001 * 50.0 * (7 - c));
    grid.friction_zone.assign(8, 0);
    grid.inflow_cells = {0};
    grid.outlet_cells = {7};
    grid.validate();

    params.friction = {30.0};
    params.hydrograph.times_s = {0.0, 1e6};
    params.hydrograph.discharges_m3s = {5.0, 5.0};

    subdomains.resize(1);
    subdomains[0].id = "mid";
    subdomains[0].cells = {2, 3, 4};

    prior.mean.friction = {30.0};
    prior.mean.inflow_multiplier = 1.0;
    prior.mean.depth_corrections = {0.0};
    prior.friction_std = {5.0};
    prior.multiplier_std = 0.1;
    prior.correction_std = {0.05};
    prior.bounds.friction_lo = 5.0;
    prior.bounds.friction_hi = 80.0;
    prior.bounds.multiplier_lo = 0.3;
    prior.bounds.multiplier_hi = 3.0;
    prior.bounds.correction_lo = -0.3;
    prior.bounds.correction_hi = 0.3;

    start.time = 0.0;
    start.depth.assign(8, 0.0);
    start = run_window(std::move(start), grid, params, 1800.0, {});
  }

  CycleConfig cycle_config(ObservationSet obs) const {
    CycleConfig cc;
    cc.cycle_index = 1;
    cc.t_begin = 1800.0;
    cc.t_end = 3600.0;
    cc.observations = std::move(obs);
    cc.experiment_seed = 404;
    cc.prior = prior;
    cc.wet_threshold = 0.01;
    return cc;
  }

  ObservationSet gauge_obs() const {
    ObservationSet obs;
    GaugeObs g;
    g.id = "ga";
    g.cell = 2;
    g.time_s = 2700.0;
    g.value = 0.52;
    g.error_std = 0.03;
    obs.gauges.push_back(g);
    g.id = "gb";
    g.cell = 5;
    g.time_s = 3600.0;
    g.value = 0.38;
    g.error_std = 0.03;
    obs.gauges.push_back(g);
    return obs;
  }
};

}  // namespace

TEST_CASE("control vectors round trip through the flat layout") {
  ControlVector c;
  c.friction = {31.0, 12.5};
  c.inflow_multiplier = 0.9;
  c.depth_corrections = {0.01, -0.02, 0.0};
  const Eigen::VectorXd x = control_to_vector(c);
  REQUIRE(x.size() == 6);
  CHECK(x(0) == 31.0);
  CHECK(x(1) == 12.5);
  CHECK(x(2) == 0.9);
  CHECK(x(3) == 0.01);
  CHECK(x(5) == 0.0);
  const ControlVector r = vector_to_control(x, 2, 3);
  CHECK(r.friction == c.friction);
  CHECK(r.inflow_multiplier == c.inflow_multiplier);
  CHECK(r.depth_corrections == c.depth_corrections);
  CHECK_THROWS_AS(vector_to_control(x, 2, 2), ContractError);
}

TEST_CASE("clamp_control pins every block to its bounds") {
  ControlBounds b;
  b.friction_lo = 10.0;
  b.friction_hi = 40.0;
  b.multiplier_lo = 0.5;
  b.multiplier_hi = 2.0;
  b.correction_lo = -0.1;
  b.correction_hi = 0.1;
  ControlVector c;
  c.friction = {5.0, 50.0};
  c.inflow_multiplier = 3.0;
  c.depth_corrections = {-0.5, 0.05};
  clamp_control(c, b);
  CHECK(c.friction == std::vector<double>{10.0, 40.0});
  CHECK(c.inflow_multiplier == 2.0);
  CHECK(c.depth_corrections == std::vector<double>{-0.1, 0.05});
}

TEST_CASE("init_ensemble draws the prior and zeroes the corrections") {
  ControlPrior prior;
  prior.mean.friction = {30.0, 12.0};
  prior.mean.inflow_multiplier = 1.0;
  prior.mean.depth_corrections = {0.0};
  prior.friction_std = {6.0, 4.0};
  prior.multiplier_std = 0.12;
  prior.correction_std = {0.04};
  prior.bounds.friction_lo = 5.0;
  prior.bounds.friction_hi = 80.0;
  prior.bounds.multiplier_lo = 0.3;
  prior.bounds.multiplier_hi = 3.0;

  HydroState s;
  s.time = 42.0;
  s.depth = {0.1, 0.2};

  const Ensemble ens = init_ensemble(400, prior, s, 99);
  REQUIRE(ens.size() == 400);
  double f0 = 0.0, mult = 0.0;
  for (const Member& m : ens.members) {
    REQUIRE(m.control.friction.size() == 2);
    CHECK(m.control.friction[0] >= 5.0);
    CHECK(m.control.friction[0] <= 80.0);
    CHECK(m.control.inflow_multiplier >= 0.3);
    CHECK(m.control.inflow_multiplier <= 3.0);
    CHECK(m.control.depth_corrections == std::vector<double>{0.0});
    CHECK(m.state.time == 42.0);
    CHECK(m.state.depth == s.depth);
    f0 += m.control.friction[0];
    mult += m.control.inflow_multiplier;
  }
  // Loose moment checks; the draw is a truncated Gaussian around the prior.
  CHECK(f0 / 400.0 == doctest::Approx(30.0).epsilon(0.05));
  CHECK(mult / 400.0 == doctest::Approx(1.0).epsilon(0.05));

  SUBCASE("redrawing with the same seed is identical") {
    const Ensemble again = init_ensemble(400, prior, s, 99);
    for (int i = 0; i < 400; ++i)
      CHECK(again.members[static_cast<std::size_t>(i)].control.friction ==
            ens.members[static_cast<std::size_t>(i)].control.friction);
  }

  SUBCASE("contract violations") {
    CHECK_THROWS_AS(init_ensemble(1, prior, s, 99), ContractError);
    ControlPrior bad = prior;
    bad.friction_std = {6.0};
    CHECK_THROWS_AS(init_ensemble(4, bad, s, 99), ContractError);
  }
}

TEST_CASE("large-ensemble analysis matches the closed-form Kalman update") {
  // x ~ N(1, 4), y = x + eps, eps ~ N(0, 1), observed y0 = 3:
  //   posterior variance 1/(1/4 + 1/1) = 0.8
  //   posterior mean     0.8 * (1/4 + 3/1) = 2.6
  const ScalarCase c = make_scalar_case(10000, 1.0, 2.0, 3.0, 1.0, 2024);
  const AnalysisResult ar = analyze_matrices(c.x, c.y, c.yo, c.r);
  REQUIRE(ar.analysed.rows() == 1);
  REQUIRE(ar.analysed.cols() == 10000);

  const double mean = col_mean(ar.analysed, 0);
  const double var = col_cov(ar.analysed, 0, ar.analysed, 0);
  CHECK(mean == doctest::Approx(2.6).epsilon(0.05));
  CHECK(var == doctest::Approx(0.8).epsilon(0.05));
  CHECK_FALSE(ar.jitter_applied);
}

TEST_CASE("the realized gain equals P/(P+R) to 1e-12") {
  const ScalarCase c = make_scalar_case(100, 1.0, 2.0, 3.0, 1.0, 77);
  const AnalysisResult ar = analyze_matrices(c.x, c.y, c.yo, c.r);
  const double p_hat = col_cov(c.x, 0, c.x, 0);
  const double k_expected = p_hat / (p_hat + c.r(0));
  REQUIRE(ar.gain.rows() == 1);
  CHECK(std::abs(ar.gain(0, 0) - k_expected) <= 1e-12);

  SUBCASE("every member moves by the gain times its own innovation") {
    for (int i = 0; i < 100; ++i) {
      const double expected =
          c.x(0, i) + ar.gain(0, 0) * (c.yo(0, i) - c.y(0, i));
      CHECK(ar.analysed(0, i) == doctest::Approx(expected).epsilon(1e-14));
    }
  }
}

TEST_CASE("inflation scales the cross covariance, not the equivalents") {
  const ScalarCase c = make_scalar_case(100, 1.0, 2.0, 3.0, 1.0, 77);
  const double p_hat = col_cov(c.x, 0, c.x, 0);
  const AnalysisResult inflated = analyze_matrices(c.x, c.y, c.yo, c.r, 1.5);
  CHECK(std::abs(inflated.gain(0, 0) -
                 1.5 * p_hat / (p_hat + c.r(0))) <= 1e-12);

  SUBCASE("inflation of exactly one changes nothing") {
    const AnalysisResult plain = analyze_matrices(c.x, c.y, c.yo, c.r);
    const AnalysisResult one = analyze_matrices(c.x, c.y, c.yo, c.r, 1.0);
    CHECK((one.analysed.array() == plain.analysed.array()).all());
    CHECK(one.gain(0, 0) == plain.gain(0, 0));
  }
}

TEST_CASE("zero-spread ensembles pass through bit-exactly") {
  const int n_e = 30;
  Eigen::MatrixXd x(2, n_e), y(1, n_e), yo(1, n_e);
  for (int i = 0; i < n_e; ++i) {
    x(0, i) = 31.25;
    x(1, i) = 0.9 + 0.01 * i;  // one live row alongside the frozen one
    y(0, i) = 17.5;
    yo(0, i) = 18.0 + 0.1 * i;
  }
  Eigen::VectorXd r(1);
  r(0) = 0.25;

  SUBCASE("a frozen observation space zeroes the whole gain") {
    const AnalysisResult ar = analyze_matrices(x, y, yo, r);
    CHECK((ar.gain.array() == 0.0).all());
    CHECK((ar.analysed.array() == x.array()).all());
  }

  SUBCASE("a frozen control row passes through even when others move") {
    Eigen::MatrixXd y_live(1, n_e);  // spread-y, correlated with row 1
    for (int i = 0; i < n_e; ++i) y_live(0, i) = 17.0 + 0.2 * i;
    const AnalysisResult ar = analyze_matrices(x, y_live, yo, r);
    for (int i = 0; i < n_e; ++i) CHECK(ar.analysed(0, i) == 31.25);
    // The live row did update somewhere.
    bool moved = false;
    for (int i = 0; i < n_e; ++i)
      if (ar.analysed(1, i) != x(1, i)) moved = true;
    CHECK(moved);
  }
}

TEST_CASE("analysis contract violations are rejected") {
  const ScalarCase c = make_scalar_case(10, 1.0, 2.0, 3.0, 1.0, 5);
  Eigen::VectorXd r0(1);
  r0(0) = 0.0;
  CHECK_THROWS_AS(analyze_matrices(c.x, c.y, c.yo, r0), ContractError);
  CHECK_THROWS_AS(analyze_matrices(c.x, c.y, c.yo, c.r, 0.9), ContractError);
  CHECK_THROWS_AS(
      analyze_matrices(c.x.leftCols(1), c.y.leftCols(1), c.yo.leftCols(1),
                       c.r),
      ContractError);
  CHECK_THROWS_AS(analyze_matrices(c.x, c.y.leftCols(5), c.yo, c.r),
                  ContractError);
  Eigen::VectorXd r2(2);
  r2 << 1.0, 1.0;
  CHECK_THROWS_AS(analyze_matrices(c.x, c.y, c.yo, r2), ContractError);
}

TEST_CASE("observation perturbations are keyed by identity, not position") {
  ObservationSet gauges_only;
  GaugeObs g;
  g.id = "ga";
  g.cell = 2;
  g.time_s = 2700.0;
  g.value = 0.52;
  g.error_std = 0.03;
  gauges_only.gauges.push_back(g);
  g.id = "gb";
  g.time_s = 3600.0;
  gauges_only.gauges.push_back(g);

  ObservationSet with_wsr = gauges_only;
  WsrObs w;
  w.subdomain_id = "mid";
  w.subdomain = 0;
  w.time_s = 3600.0;
  w.value = 0.66;
  w.error_std = 0.25;
  with_wsr.wsr.push_back(w);

  Eigen::VectorXd obs2(2), r2(2);
  obs2 << 0.52, 0.38;
  r2 << 9e-4, 9e-4;
  Eigen::VectorXd obs3(3), r3(3);
  obs3 << 0.52, 0.38, 0.66;
  r3 << 9e-4, 9e-4, 0.0625;

  const Eigen::MatrixXd a = perturbed_observations(gauges_only, obs2, r2,
                                                   12, 404);
  const Eigen::MatrixXd b = perturbed_observations(with_wsr, obs3, r3,
                                                   12, 404);
  REQUIRE(a.rows() == 2);
  REQUIRE(b.rows() == 3);
  // Adding the ratio row must not shift the gauge draws by one stream.
  CHECK((a.array() == b.topRows(2).array()).all());

  SUBCASE("each member gets its own draw") {
    CHECK(a(0, 0) != a(0, 1));
  }

  SUBCASE("a zero variance makes the perturbation exactly zero") {
    Eigen::VectorXd rz = r2;
    rz(1) = 0.0;
    const Eigen::MatrixXd z = perturbed_observations(gauges_only, obs2, rz,
                                                     4, 404);
    for (int i = 0; i < 4; ++i) CHECK(z(1, i) == 0.38);
  }

  SUBCASE("gauge and ratio streams with the same id stay distinct") {
    CHECK(observation_perturbation_seed(404, 0, false, "x", 100.0) !=
          observation_perturbation_seed(404, 0, true, "x", 100.0));
    CHECK(observation_perturbation_seed(404, 0, false, "x", 100.0) !=
          observation_perturbation_seed(404, 1, false, "x", 100.0));
    CHECK(observation_perturbation_seed(404, 0, false, "x", 100.0) !=
          observation_perturbation_seed(404, 0, false, "x", 200.0));
    CHECK(observation_perturbation_seed(404, 0, false, "x", 100.0) !=
          observation_perturbation_seed(404, 0, false, "y", 100.0));
  }
}

TEST_CASE("transform_batch maps ratio rows and leaves gauges untouched") {
  ObservationSet set;
  GaugeObs g;
  g.id = "ga";
  g.cell = 0;
  g.time_s = 100.0;
  g.value = 1.25;
  g.error_std = 0.03;
  set.gauges.push_back(g);
  WsrObs w;
  w.subdomain_id = "s";
  w.subdomain = 0;
  w.time_s = 100.0;
  w.value = 0.4;
  w.error_std = 0.25;
  set.wsr.push_back(w);

  Eigen::MatrixXd eq(2, 5);
  eq.row(0) << 1.2, 1.3, 1.25, 1.28, 1.22;
  eq.row(1) << 0.25, 0.5, 0.75, 0.3, 0.6;

  const TransformedBatch tb = transform_batch(set, eq, true);
  CHECK(tb.used_anamorphosis);
  CHECK_FALSE(tb.fallback_identity);
  CHECK_FALSE(tb.phi.is_identity);
  // Gauge row and observed gauge value pass through bit-identical.
  CHECK((tb.member_equivalents.row(0).array() == eq.row(0).array()).all());
  CHECK(tb.observed(0) == 1.25);
  CHECK(tb.r_diag(0) == 0.03 * 0.03);
  // Ratio row goes through the fitted transform, test-applied for comparison.
  CHECK(tb.observed(1) == tb.phi.forward(0.4));
  for (int i = 0; i < 5; ++i)
    CHECK(tb.member_equivalents(1, i) == tb.phi.forward(eq(1, i)));

  SUBCASE("disabled anamorphosis is a pure pass-through") {
    const TransformedBatch plain = transform_batch(set, eq, false);
    CHECK_FALSE(plain.used_anamorphosis);
    CHECK(plain.phi.is_identity);
    CHECK((plain.member_equivalents.array() == eq.array()).all());
    CHECK(plain.observed(1) == 0.4);
  }

  SUBCASE("a degenerate ratio pool falls back to the identity") {
    Eigen::MatrixXd flat = eq;
    flat.row(1).setConstant(0.4);  // matches the observed value exactly
    const TransformedBatch fb = transform_batch(set, flat, true);
    CHECK(fb.used_anamorphosis);
    CHECK(fb.fallback_identity);
    CHECK(fb.phi.is_identity);
    CHECK(fb.observed(1) == 0.4);
  }

  SUBCASE("row count must match the observation count") {
    CHECK_THROWS_AS(transform_batch(set, eq.topRows(1), true), ContractError);
  }
}

TEST_CASE("an all-gauge cycle is identical with and without the transform") {
  const CycleFixture fx;
  Ensemble base = init_ensemble(8, fx.prior, fx.start, 404);
  Ensemble with_ga = base;

  CycleConfig plain = fx.cycle_config(fx.gauge_obs());
  plain.use_anamorphosis = false;
  CycleConfig ga = plain;
  ga.use_anamorphosis = true;

  const CycleReport rp = run_cycle(base, fx.grid, fx.params, fx.subdomains,
                                   plain);
  const CycleReport rg = run_cycle(with_ga, fx.grid, fx.params,
                                   fx.subdomains, ga);

  CHECK(rp.analysed);
  CHECK(rg.analysed);
  CHECK_FALSE(rg.anamorphosis_used);  // nothing bounded in the batch
  CHECK((controls_of(with_ga).array() == controls_of(base).array()).all());
  for (int i = 0; i < base.size(); ++i) {
    const auto& a = base.members[static_cast<std::size_t>(i)].state;
    const auto& b = with_ga.members[static_cast<std::size_t>(i)].state;
    CHECK(a.depth == b.depth);
    CHECK(a.flux_right == b.flux_right);
  }
}

TEST_CASE("a cycle without observations only advances the states") {
  const CycleFixture fx;
  Ensemble ens = init_ensemble(6, fx.prior, fx.start, 404);
  const Eigen::MatrixXd before = controls_of(ens);

  CycleConfig cc = fx.cycle_config(ObservationSet{});
  const CycleReport rep = run_cycle(ens, fx.grid, fx.params, fx.subdomains,
                                    cc);
  CHECK_FALSE(rep.analysed);
  CHECK(rep.n_gauge_obs == 0);
  CHECK((controls_of(ens).array() == before.array()).all());
  for (const Member& m : ens.members) {
    CHECK(m.state.time == 3600.0);
    CHECK(m.control.depth_corrections == std::vector<double>{0.0});
  }
}

TEST_CASE("an analysed cycle consumes its depth corrections") {
  const CycleFixture fx;
  Ensemble ens = init_ensemble(8, fx.prior, fx.start, 404);
  CycleConfig cc = fx.cycle_config(fx.gauge_obs());

  const CycleReport rep = run_cycle(ens, fx.grid, fx.params, fx.subdomains,
                                    cc);
  CHECK(rep.analysed);
  CHECK(rep.n_gauge_obs == 2);
  // The analysed corrections are reported, then zeroed on the members.
  REQUIRE(rep.analysis_mean.depth_corrections.size() == 1);
  for (const Member& m : ens.members) {
    CHECK(m.control.depth_corrections == std::vector<double>{0.0});
    CHECK(m.state.time == 3600.0);
    CHECK(m.control.friction[0] >= fx.prior.bounds.friction_lo);
    CHECK(m.control.friction[0] <= fx.prior.bounds.friction_hi);
    CHECK(m.control.inflow_multiplier >= fx.prior.bounds.multiplier_lo);
    CHECK(m.control.inflow_multiplier <= fx.prior.bounds.multiplier_hi);
  }

  SUBCASE("the full cycle is deterministic") {
    Ensemble again = init_ensemble(8, fx.prior, fx.start, 404);
    CycleConfig cc2 = fx.cycle_config(fx.gauge_obs());
    run_cycle(again, fx.grid, fx.params, fx.subdomains, cc2);
    CHECK((controls_of(again).array() == controls_of(ens).array()).all());
    for (int i = 0; i < ens.size(); ++i)
      CHECK(again.members[static_cast<std::size_t>(i)].state.depth ==
            ens.members[static_cast<std::size_t>(i)].state.depth);
  }

  SUBCASE("a mismatched member clock is a contract violation") {
    CycleConfig cc3 = fx.cycle_config(fx.gauge_obs());
    cc3.t_begin = 2000.0;  // members still sit at t = 1800
    cc3.cycle_index = 2;
    CHECK_THROWS_AS(run_cycle(ens, fx.grid, fx.params, fx.subdomains, cc3),
                    ContractError);
  }
}

TEST_CASE("diagnostics are collected only on request") {
  const CycleFixture fx;
  Ensemble ens = init_ensemble(6, fx.prior, fx.start, 404);
  CycleConfig cc = fx.cycle_config(fx.gauge_obs());
  cc.collect_diagnostics = true;
  const CycleReport rep = run_cycle(ens, fx.grid, fx.params, fx.subdomains,
                                    cc);
  REQUIRE(rep.diagnostics.has_value());
  const CycleDiagnostics& d = *rep.diagnostics;
  CHECK(d.forecast_mean.size() == 3);  // friction, multiplier, correction
  CHECK(d.analysis_mean.size() == 3);
  CHECK(d.innov_mean_phys.size() == 2);
  CHECK(d.gain.rows() == 3);
  CHECK(d.gain.cols() == 2);
  // The forecast had spread, so the analysis must have contracted it.
  CHECK(d.analysis_std(0) < d.forecast_std(0));

  Ensemble quiet = init_ensemble(6, fx.prior, fx.start, 404);
  CycleConfig cc2 = fx.cycle_config(fx.gauge_obs());
  const CycleReport rep2 = run_cycle(quiet, fx.grid, fx.params,
                                     fx.subdomains, cc2);
  CHECK_FALSE(rep2.diagnostics.has_value());
}
