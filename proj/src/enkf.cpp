#include "floodda/enkf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "floodda/common.hpp"
#include "floodda/rng.hpp"

namespace floodda {

namespace {

// Stream labels for seed derivation. Fixed for the life of the file formats:
// changing them changes every experiment's draws.
constexpr std::uint64_t kTagInit = 0xA11CE5EDull;
constexpr std::uint64_t kTagRedraw = 0x5EED0C0Dull;
constexpr std::uint64_t kTagObsPerturb = 0x0B5E27EDull;

// Row mean with order-stable accumulation.
double row_stable_mean(const Eigen::MatrixXd& m, int row,
                       std::vector<double>& buf) {
  buf.resize(static_cast<std::size_t>(m.cols()));
  for (int i = 0; i < m.cols(); ++i) buf[static_cast<std::size_t>(i)] = m(row, i);
  return stable_mean(buf);
}

// (1/(n_e-1)) * sum_i a(i) * b(i), order-stable.
double stable_cov(const Eigen::MatrixXd& a_rows, int row_a,
                  const Eigen::MatrixXd& b_rows, int row_b,
                  std::vector<double>& buf) {
  const int n_e = static_cast<int>(a_rows.cols());
  buf.resize(static_cast<std::size_t>(n_e));
  for (int i = 0; i < n_e; ++i)
    buf[static_cast<std::size_t>(i)] = a_rows(row_a, i) * b_rows(row_b, i);
  return stable_sum(buf) / static_cast<double>(n_e - 1);
}

// Sample std about a given mean, (n-1) normalisation, order-stable.
double stable_std(std::span<const double> values, double mean) {
  if (values.size() < 2) return 0.0;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    sq[i] = d * d;
  }
  return std::sqrt(stable_sum(sq) / static_cast<double>(values.size() - 1));
}

// Row-wise mean and sample std of a matrix, order-stable.
void row_stats(const Eigen::MatrixXd& m, Eigen::VectorXd& mean,
               Eigen::VectorXd& stddev) {
  mean.resize(m.rows());
  stddev.resize(m.rows());
  std::vector<double> buf(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index i = 0; i < m.cols(); ++i)
      buf[static_cast<std::size_t>(i)] = m(r, i);
    mean(r) = stable_mean(buf);
    stddev(r) = stable_std(buf, mean(r));
  }
}

ControlVector mean_control(const std::vector<Member>& members) {
  ControlVector mean;
  if (members.empty()) return mean;
  const std::size_t n_zones = members.front().control.friction.size();
  const std::size_t n_sub = members.front().control.depth_corrections.size();
  std::vector<double> buf(members.size());
  mean.friction.resize(n_zones);
  mean.depth_corrections.resize(n_sub);
  for (std::size_t z = 0; z < n_zones; ++z) {
    for (std::size_t i = 0; i < members.size(); ++i)
      buf[i] = members[i].control.friction[z];
    mean.friction[z] = stable_mean(buf);
  }
  for (std::size_t i = 0; i < members.size(); ++i)
    buf[i] = members[i].control.inflow_multiplier;
  mean.inflow_multiplier = stable_mean(buf);
  for (std::size_t s = 0; s < n_sub; ++s) {
    for (std::size_t i = 0; i < members.size(); ++i)
      buf[i] = members[i].control.depth_corrections[s];
    mean.depth_corrections[s] = stable_mean(buf);
  }
  return mean;
}

}  // namespace

Eigen::VectorXd control_to_vector(const ControlVector& control) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(control.size()));
  Eigen::Index k = 0;
  for (double f : control.friction) x(k++) = f;
  x(k++) = control.inflow_multiplier;
  for (double c : control.depth_corrections) x(k++) = c;
  return x;
}

ControlVector vector_to_control(const Eigen::VectorXd& x, int n_zones,
                                int n_subdomains) {
  if (x.size() != n_zones + 1 + n_subdomains)
    throw ContractError("control vector length mismatch");
  ControlVector c;
  c.friction.assign(x.data(), x.data() + n_zones);
  c.inflow_multiplier = x(n_zones);
  c.depth_corrections.assign(x.data() + n_zones + 1,
                             x.data() + n_zones + 1 + n_subdomains);
  return c;
}

void clamp_control(ControlVector& control, const ControlBounds& bounds) {
  for (double& f : control.friction)
    f = std::clamp(f, bounds.friction_lo, bounds.friction_hi);
  control.inflow_multiplier = std::clamp(
      control.inflow_multiplier, bounds.multiplier_lo, bounds.multiplier_hi);
  for (double& c : control.depth_corrections)
    c = std::clamp(c, bounds.correction_lo, bounds.correction_hi);
}

Ensemble init_ensemble(int n_members, const ControlPrior& prior,
                       const HydroState& initial_state,
                       std::uint64_t experiment_seed) {
  if (n_members < 2) throw ContractError("ensemble needs at least 2 members");
  if (prior.friction_std.size() != prior.mean.friction.size() ||
      prior.correction_std.size() != prior.mean.depth_corrections.size())
    throw ContractError("prior std sizes do not match prior mean");

  Ensemble ens;
  ens.members.resize(static_cast<std::size_t>(n_members));
  for (int i = 0; i < n_members; ++i) {
    Member& m = ens.members[static_cast<std::size_t>(i)];
    Rng rng(derive_seed(experiment_seed,
                        {kTagInit, static_cast<std::uint64_t>(i)}));
    m.control.friction.resize(prior.mean.friction.size());
    for (std::size_t z = 0; z < prior.mean.friction.size(); ++z)
      m.control.friction[z] = rng.truncated_normal(
          prior.mean.friction[z], prior.friction_std[z],
          prior.bounds.friction_lo, prior.bounds.friction_hi);
    m.control.inflow_multiplier = rng.truncated_normal(
        prior.mean.inflow_multiplier, prior.multiplier_std,
        prior.bounds.multiplier_lo, prior.bounds.multiplier_hi);
    // Corrections live one cycle: drawn when a window has observations,
    // consumed by the analysis, zeroed. Between cycles they are zero.
    m.control.depth_corrections.assign(prior.mean.depth_corrections.size(),
                                       0.0);
    m.state = initial_state;
  }
  return ens;
}

std::uint64_t observation_perturbation_seed(std::uint64_t experiment_seed,
                                            int member, bool is_wsr,
                                            const std::string& id,
                                            double time_s) {
  const auto time_ms =
      static_cast<std::uint64_t>(std::llround(time_s * 1000.0));
  return derive_seed(experiment_seed,
                     {kTagObsPerturb, static_cast<std::uint64_t>(member),
                      is_wsr ? 1ull : 0ull, fnv1a64(id), time_ms});
}

Eigen::MatrixXd perturbed_observations(const ObservationSet& set,
                                       const Eigen::VectorXd& transformed_obs,
                                       const Eigen::VectorXd& r_diag,
                                       int n_members,
                                       std::uint64_t experiment_seed) {
  const auto n_y = static_cast<Eigen::Index>(set.size());
  if (transformed_obs.size() != n_y || r_diag.size() != n_y)
    throw ContractError("perturbed_observations dimension mismatch");
  Eigen::MatrixXd out(n_y, n_members);
  for (int i = 0; i < n_members; ++i) {
    Eigen::Index j = 0;
    for (const GaugeObs& g : set.gauges) {
      Rng rng(observation_perturbation_seed(experiment_seed, i, false, g.id,
                                            g.time_s));
      out(j, i) = transformed_obs(j) + rng.normal(0.0, std::sqrt(r_diag(j)));
      ++j;
    }
    for (const WsrObs& w : set.wsr) {
      Rng rng(observation_perturbation_seed(experiment_seed, i, true,
                                            w.subdomain_id, w.time_s));
      out(j, i) = transformed_obs(j) + rng.normal(0.0, std::sqrt(r_diag(j)));
      ++j;
    }
  }
  return out;
}

TransformedBatch transform_batch(const ObservationSet& set,
                                 const Eigen::MatrixXd& member_equivalents,
                                 bool use_anamorphosis) {
  const auto n_y = static_cast<Eigen::Index>(set.size());
  const auto n_g = static_cast<Eigen::Index>(set.gauges.size());
  if (member_equivalents.rows() != n_y)
    throw ContractError("member equivalents row count mismatch");

  TransformedBatch tb;
  tb.member_equivalents = member_equivalents;
  tb.observed.resize(n_y);
  tb.r_diag.resize(n_y);
  Eigen::Index j = 0;
  for (const GaugeObs& g : set.gauges) {
    tb.observed(j) = g.value;
    tb.r_diag(j) = g.error_std * g.error_std;
    ++j;
  }
  for (const WsrObs& w : set.wsr) {
    tb.observed(j) = w.value;
    tb.r_diag(j) = w.error_std * w.error_std;
    ++j;
  }
  tb.phi = identity_anamorphosis();

  if (!use_anamorphosis || set.wsr.empty()) return tb;
  tb.used_anamorphosis = true;

  // Pool the cycle's ratio sample: each observed value plus every member's
  // equivalent for that row.
  std::vector<double> pool;
  pool.reserve(static_cast<std::size_t>(set.wsr.size()) *
               static_cast<std::size_t>(member_equivalents.cols() + 1));
  for (Eigen::Index r = n_g; r < n_y; ++r) {
    pool.push_back(tb.observed(r));
    for (Eigen::Index i = 0; i < member_equivalents.cols(); ++i)
      pool.push_back(member_equivalents(r, i));
  }
  try {
    tb.phi = fit_anamorphosis(pool);
  } catch (const DegenerateDistributionError&) {
    tb.phi = identity_anamorphosis();
    tb.fallback_identity = true;
  }
  for (Eigen::Index r = n_g; r < n_y; ++r) {
    tb.observed(r) = tb.phi.forward(tb.observed(r));
    for (Eigen::Index i = 0; i < member_equivalents.cols(); ++i)
      tb.member_equivalents(r, i) = tb.phi.forward(member_equivalents(r, i));
  }
  return tb;
}

AnalysisResult analyze_matrices(const Eigen::MatrixXd& forecast,
                                const Eigen::MatrixXd& member_equivalents,
                                const Eigen::MatrixXd& perturbed_obs,
                                const Eigen::VectorXd& r_diag,
                                double inflation) {
  const Eigen::Index n_x = forecast.rows();
  const Eigen::Index n_e = forecast.cols();
  const Eigen::Index n_y = member_equivalents.rows();
  if (n_e < 2) throw ContractError("analysis needs at least 2 members");
  if (member_equivalents.cols() != n_e || perturbed_obs.rows() != n_y ||
      perturbed_obs.cols() != n_e || r_diag.size() != n_y)
    throw ContractError("analysis input dimensions inconsistent");
  for (Eigen::Index j = 0; j < n_y; ++j)
    if (!(r_diag(j) > 0.0))
      throw ContractError("observation error variances must be > 0");
  if (!(inflation >= 1.0))
    throw ContractError("inflation must be >= 1");

  std::vector<double> buf;
  Eigen::MatrixXd ax = forecast;
  for (Eigen::Index r = 0; r < n_x; ++r)
    ax.row(r).array() -= row_stable_mean(forecast, static_cast<int>(r), buf);
  ax *= inflation;  // multiplying by exactly 1.0 keeps every bit
  Eigen::MatrixXd ay = member_equivalents;
  for (Eigen::Index r = 0; r < n_y; ++r)
    ay.row(r).array() -=
        row_stable_mean(member_equivalents, static_cast<int>(r), buf);

  Eigen::MatrixXd p_xy(n_x, n_y);
  for (Eigen::Index j = 0; j < n_x; ++j)
    for (Eigen::Index k = 0; k < n_y; ++k)
      p_xy(j, k) = stable_cov(ax, static_cast<int>(j), ay,
                              static_cast<int>(k), buf);

  Eigen::MatrixXd p_yy(n_y, n_y);
  for (Eigen::Index j = 0; j < n_y; ++j)
    for (Eigen::Index k = j; k < n_y; ++k) {
      const double v = stable_cov(ay, static_cast<int>(j), ay,
                                  static_cast<int>(k), buf);
      p_yy(j, k) = v;
      p_yy(k, j) = v;
    }
  Eigen::MatrixXd s = p_yy;
  s.diagonal() += r_diag;

  AnalysisResult result;
  result.cross_cov = p_xy;
  result.obs_cov = p_yy;
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-10 * s.trace() / static_cast<double>(n_y);
    s.diagonal().array() += jitter;
    llt.compute(s);
    if (llt.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
      const double lo = eig.eigenvalues().minCoeff();
      const double hi = eig.eigenvalues().maxCoeff();
      throw NumericalError(
          "analysis covariance not positive definite after jitter "
          "(eigenvalue range [" + std::to_string(lo) + ", " +
          std::to_string(hi) + "])");
    }
    result.jitter_applied = true;
  }
  result.gain = llt.solve(p_xy.transpose()).transpose();
  result.analysed =
      forecast + result.gain * (perturbed_obs - member_equivalents);
  return result;
}

CycleReport run_cycle(Ensemble& ensemble, const Grid& grid,
                      const PhysicalParams& base_params,
                      const std::vector<Subdomain>& subdomains,
                      const CycleConfig& config) {
  if (ensemble.members.empty()) throw ContractError("empty ensemble");
  if (!(config.t_end > config.t_begin))
    throw ContractError("cycle window must have positive length");
  const int n_e = ensemble.size();
  const auto n_sub = subdomains.size();
  const bool has_obs = !config.observations.empty();

  CycleReport report;
  report.cycle_index = config.cycle_index;
  report.t_begin = config.t_begin;
  report.t_end = config.t_end;
  report.n_gauge_obs = config.observations.gauges.size();
  report.n_wsr_obs = config.observations.wsr.size();

  // Fresh corrections for the window the observations will constrain.
  if (has_obs && n_sub > 0) {
    if (config.prior.correction_std.size() != n_sub)
      throw ContractError("prior correction std size mismatch");
    for (int i = 0; i < n_e; ++i) {
      Rng rng(derive_seed(config.experiment_seed,
                          {kTagRedraw,
                           static_cast<std::uint64_t>(config.cycle_index),
                           static_cast<std::uint64_t>(i)}));
      auto& corr = ensemble.members[static_cast<std::size_t>(i)]
                       .control.depth_corrections;
      corr.resize(n_sub);
      for (std::size_t s = 0; s < n_sub; ++s)
        corr[s] = rng.truncated_normal(
            config.prior.mean.depth_corrections[s],
            config.prior.correction_std[s],
            config.prior.bounds.correction_lo,
            config.prior.bounds.correction_hi);
    }
  }

  const std::vector<double> record_times =
      observation_times(config.observations);
  const auto n_y = static_cast<Eigen::Index>(config.observations.size());
  Eigen::MatrixXd equivalents(n_y, n_e);
  std::vector<HydroState> snapshots;
  for (int i = 0; i < n_e; ++i) {
    Member& m = ensemble.members[static_cast<std::size_t>(i)];
    if (m.state.time != config.t_begin)
      throw ContractError("member state time does not match cycle start");
    auto [params, state0] =
        apply_control(m.control, base_params, m.state, subdomains);
    snapshots.clear();
    try {
      m.state = run_window(std::move(state0), grid, params, config.t_end,
                           record_times, &snapshots, config.step_options);
    } catch (const NumericalError& e) {
      throw NumericalError("member " + std::to_string(i) +
                           " forecast failed: " + e.what());
    }
    if (has_obs) {
      const std::vector<double> h =
          model_equivalents(config.observations, snapshots, grid, subdomains,
                            config.wet_threshold);
      for (Eigen::Index j = 0; j < n_y; ++j)
        equivalents(j, i) = h[static_cast<std::size_t>(j)];
    }
  }

  report.forecast_mean = mean_control(ensemble.members);
  if (!has_obs) {
    report.analysis_mean = report.forecast_mean;
    return report;
  }

  const auto n_zones = static_cast<int>(base_params.friction.size());
  Eigen::MatrixXd forecast(n_zones + 1 + static_cast<int>(n_sub), n_e);
  for (int i = 0; i < n_e; ++i)
    forecast.col(i) =
        control_to_vector(ensemble.members[static_cast<std::size_t>(i)].control);

  TransformedBatch tb = transform_batch(config.observations, equivalents,
                                        config.use_anamorphosis);
  const Eigen::MatrixXd perturbed = perturbed_observations(
      config.observations, tb.observed, tb.r_diag, n_e,
      config.experiment_seed);
  AnalysisResult ar = analyze_matrices(forecast, tb.member_equivalents,
                                       perturbed, tb.r_diag,
                                       config.inflation);

  for (int i = 0; i < n_e; ++i) {
    Member& m = ensemble.members[static_cast<std::size_t>(i)];
    m.control = vector_to_control(ar.analysed.col(i), n_zones,
                                  static_cast<int>(n_sub));
    clamp_control(m.control, config.prior.bounds);
  }
  report.analysed = true;
  report.analysis_mean = mean_control(ensemble.members);
  report.anamorphosis_used = tb.used_anamorphosis;
  report.anamorphosis_fallback_identity = tb.fallback_identity;
  report.jitter_applied = ar.jitter_applied;
  report.phi = tb.phi;

  if (config.collect_diagnostics) {
    CycleDiagnostics d;
    row_stats(forecast, d.forecast_mean, d.forecast_std);
    Eigen::MatrixXd analysed_clamped(forecast.rows(), n_e);
    for (int i = 0; i < n_e; ++i)
      analysed_clamped.col(i) = control_to_vector(
          ensemble.members[static_cast<std::size_t>(i)].control);
    row_stats(analysed_clamped, d.analysis_mean, d.analysis_std);
    Eigen::MatrixXd innov_phys = -equivalents;
    Eigen::VectorXd obs_phys(n_y);
    Eigen::Index j = 0;
    for (const GaugeObs& g : config.observations.gauges) obs_phys(j++) = g.value;
    for (const WsrObs& w : config.observations.wsr) obs_phys(j++) = w.value;
    innov_phys.colwise() += obs_phys;
    row_stats(innov_phys, d.innov_mean_phys, d.innov_std_phys);
    const Eigen::MatrixXd innov_trans = perturbed - tb.member_equivalents;
    row_stats(innov_trans, d.innov_mean_trans, d.innov_std_trans);
    d.gain = ar.gain;
    report.diagnostics = std::move(d);
  }

  // The analysed corrections act on the states now, then the slots rest at
  // zero until the next observed window draws them again.
  for (Member& m : ensemble.members) {
    apply_depth_corrections(m.state, m.control.depth_corrections, subdomains);
    std::fill(m.control.depth_corrections.begin(),
              m.control.depth_corrections.end(), 0.0);
  }
  return report;
}

}  // namespace floodda
