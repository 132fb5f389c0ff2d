#include "floodda/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "floodda/anamorphosis.hpp"
#include "floodda/common.hpp"
#include "floodda/enkf.hpp"
#include "floodda/metrics.hpp"
#include "floodda/observation.hpp"
#include "floodda/rng.hpp"

namespace fs = std::filesystem;

namespace floodda {

namespace {

constexpr std::uint64_t kTagTruthNoise = 0x7271A7B5ull;

std::string time_label(double t) {
  return std::to_string(std::llround(t));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// start + k*interval for k >= 1, up to and including t_end.
std::vector<double> arithmetic_times(double start, double t_end,
                                     double interval) {
  std::vector<double> out;
  for (int k = 1;; ++k) {
    const double t = start + static_cast<double>(k) * interval;
    if (t > t_end + 1e-9) break;
    out.push_back(std::min(t, t_end));
  }
  return out;
}

std::vector<double> sorted_union(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

const HydroState& at_time(const std::vector<HydroState>& snapshots,
                          double t) {
  for (const HydroState& s : snapshots)
    if (std::abs(s.time - t) <= 1e-6) return s;
  throw ContractError("no recorded state at t=" + std::to_string(t));
}

PhysicalParams make_params(const std::vector<double>& friction,
                           double multiplier, const Hydrograph& hydrograph) {
  PhysicalParams p;
  p.friction = friction;
  p.inflow_multiplier = multiplier;
  p.hydrograph = hydrograph;
  return p;
}

// truth_gauges.csv parsed into a time-indexed table.
struct TruthGauges {
  std::vector<std::string> ids;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // [time index][gauge index]

  double at(double t, std::size_t gauge) const {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - t) <= 1e-6) return values[i][gauge];
    throw ConfigError("truth gauge table has no row at t=" +
                      std::to_string(t));
  }
};

TruthGauges load_truth_gauges(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open truth gauge file: " + path);
  TruthGauges tg;
  std::string line;
  if (!std::getline(in, line) || line.rfind("time_s", 0) != 0)
    throw ConfigError(path + ": expected header starting with time_s");
  {
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');  // time_s
    while (std::getline(ss, field, ',')) tg.ids.push_back(field);
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> row;
    while (std::getline(ss, field, ',')) {
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": cannot parse '" + field + "'");
      }
    }
    if (row.size() != tg.ids.size() + 1)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": wrong field count");
    tg.times.push_back(row[0]);
    tg.values.emplace_back(row.begin() + 1, row.end());
  }
  return tg;
}

std::vector<std::string> truth_file_list(const ExperimentConfig& cfg,
                                         const std::string& truth_dir) {
  std::vector<std::string> files = {
      truth_dir + "/observations.csv",
      truth_dir + "/truth_gauges.csv",
      truth_dir + "/truth_wsr.csv",
  };
  for (double t : cfg.contingency_times_s)
    files.push_back(truth_dir + "/truth_mask_" + time_label(t) + ".pgm");
  return files;
}

struct MetricFormat {
  int decimals;
};

MetricFormat metric_format(const std::string& metric) {
  if (metric.rfind("rmse", 0) == 0) return {3};
  if (metric == "csi") return {2};
  return {0};
}

std::string format_score(const RunReport::Row& row) {
  if (row.na) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*f", metric_format(row.metric).decimals,
                row.value);
  return buf;
}

}  // namespace

RunMode parse_run_mode(const std::string& name) {
  std::string s;
  for (char c : name) s += static_cast<char>(std::tolower(
      static_cast<unsigned char>(c)));
  if (s == "fr") return RunMode::kFR;
  if (s == "ida") return RunMode::kIDA;
  if (s == "igda") return RunMode::kIGDA;
  throw ConfigError("unknown mode '" + name + "' (expected fr, ida or igda)");
}

std::string mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::kFR: return "FR";
    case RunMode::kIDA: return "IDA";
    case RunMode::kIGDA: return "IGDA";
  }
  return "?";
}

std::optional<double> RunReport::find(const std::string& metric,
                                      const std::string& key) const {
  for (const Row& r : rows)
    if (r.metric == metric && r.key == key)
      return r.na ? std::nullopt : std::optional<double>(r.value);
  return std::nullopt;
}

void write_report_csv(const std::string& path, const RunReport& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write report file: " + path);
  out << "metric,key,value\n";
  for (const RunReport::Row& r : report.rows)
    out << r.metric << ',' << r.key << ','
        << (r.na ? std::string("NA") : fmt(r.value)) << '\n';
}

RunReport load_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report file: " + path);
  RunReport rep;
  std::string line;
  if (!std::getline(in, line) || line != "metric,key,value")
    throw ConfigError(path + ": expected header 'metric,key,value'");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    RunReport::Row row;
    std::string value;
    if (!std::getline(ss, row.metric, ',') ||
        !std::getline(ss, row.key, ',') || !std::getline(ss, value, ','))
      throw ConfigError(path + ":" + std::to_string(line_no) + ": bad row");
    if (value == "NA") {
      row.na = true;
    } else {
      try {
        row.value = std::stod(value);
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": cannot parse value '" + value + "'");
      }
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

void generate_truth(const ExperimentConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const Grid grid = cfg.build_grid();
  const std::vector<Subdomain> subs = cfg.build_subdomains(grid);
  const std::map<std::string, int> gcells = cfg.gauge_cells(grid);
  const PhysicalParams truth_params =
      make_params(cfg.truth_friction, cfg.truth_multiplier,
                  load_hydrograph_csv(cfg.hydrograph_path));
  truth_params.validate(grid);

  const std::vector<double> gauge_times =
      arithmetic_times(cfg.spinup_s, cfg.t_end_s, cfg.gauge_interval_s);
  const std::vector<double> report_times =
      arithmetic_times(cfg.spinup_s, cfg.t_end_s, cfg.report_interval_s);
  std::vector<double> record = gauge_times;
  record.insert(record.end(), report_times.begin(), report_times.end());
  record.insert(record.end(), cfg.wsr_times_s.begin(), cfg.wsr_times_s.end());
  record.insert(record.end(), cfg.contingency_times_s.begin(),
                cfg.contingency_times_s.end());
  record = sorted_union(std::move(record));

  HydroState state;
  state.time = 0.0;
  state.depth.assign(static_cast<std::size_t>(grid.size()), 0.0);
  std::vector<HydroState> snapshots;
  run_window(std::move(state), grid, truth_params, cfg.t_end_s, record,
             &snapshots, cfg.step_options);

  // Noiseless gauge table over the union of score and observation times.
  {
    std::vector<double> table_times = gauge_times;
    table_times.insert(table_times.end(), report_times.begin(),
                       report_times.end());
    table_times = sorted_union(std::move(table_times));
    std::ofstream out(out_dir + "/truth_gauges.csv");
    if (!out)
      throw ConfigError("cannot write " + out_dir + "/truth_gauges.csv");
    out << "time_s";
    for (const GaugeSpec& g : cfg.gauges) out << ',' << g.id;
    out << '\n';
    for (double t : table_times) {
      out << fmt(t);
      const HydroState& s = at_time(snapshots, t);
      for (const GaugeSpec& g : cfg.gauges)
        out << ',' << fmt(wse_at(s, grid, gcells.at(g.id)));
      out << '\n';
    }
  }

  // Noiseless ratios and the transform for their synthetic noise.
  std::vector<double> pool;
  {
    std::ofstream out(out_dir + "/truth_wsr.csv");
    if (!out) throw ConfigError("cannot write " + out_dir + "/truth_wsr.csv");
    out << "time_s,subdomain,value\n";
    for (double t : cfg.wsr_times_s) {
      const HydroState& s = at_time(snapshots, t);
      for (std::size_t i = 0; i < subs.size(); ++i) {
        const double v = wsr(s, subs[i], cfg.wet_threshold_m);
        pool.push_back(v);
        out << fmt(t) << ',' << subs[i].id << ',' << fmt(v) << '\n';
      }
    }
  }
  AnamorphosisFn truth_phi = identity_anamorphosis();
  if (!pool.empty()) {
    try {
      truth_phi = fit_anamorphosis(pool);
    } catch (const DegenerateDistributionError&) {
      std::fprintf(stderr,
                   "warning: truth ratio pool has no spread, synthetic ratio "
                   "noise stays in physical space\n");
    }
  }

  for (double t : cfg.contingency_times_s) {
    const std::vector<std::uint8_t> mask =
        wet_mask(at_time(snapshots, t), cfg.wet_threshold_m);
    write_pgm(out_dir + "/truth_mask_" + time_label(t) + ".pgm", grid.n_rows,
              grid.n_cols, mask, 1);
  }

  ObservationSet obs;
  for (const GaugeSpec& g : cfg.gauges) {
    const int cell = gcells.at(g.id);
    for (double t : gauge_times) {
      Rng rng(derive_seed(cfg.seed,
                          {kTagTruthNoise, 0ull, fnv1a64(g.id),
                           static_cast<std::uint64_t>(std::llround(t * 1000.0))}));
      GaugeObs o;
      o.id = g.id;
      o.cell = cell;
      o.time_s = t;
      o.value = wse_at(at_time(snapshots, t), grid, cell) +
                rng.normal(0.0, cfg.gauge_noise_std);
      o.error_std = cfg.gauge_noise_std;
      obs.gauges.push_back(std::move(o));
    }
  }
  for (double t : cfg.wsr_times_s) {
    const HydroState& s = at_time(snapshots, t);
    for (std::size_t i = 0; i < subs.size(); ++i) {
      Rng rng(derive_seed(cfg.seed,
                          {kTagTruthNoise, 1ull, fnv1a64(subs[i].id),
                           static_cast<std::uint64_t>(std::llround(t * 1000.0))}));
      const double v = wsr(s, subs[i], cfg.wet_threshold_m);
      const double noisy = truth_phi.inverse(
          truth_phi.forward(v) + rng.normal(0.0, cfg.wsr_noise_std));
      WsrObs o;
      o.subdomain_id = subs[i].id;
      o.subdomain = static_cast<int>(i);
      o.time_s = t;
      o.value = std::clamp(noisy, 0.0, 1.0);
      o.error_std = cfg.wsr_noise_std;
      obs.wsr.push_back(std::move(o));
    }
  }
  write_observations_csv(out_dir + "/observations.csv", obs);
}

RunReport run_experiment(const ExperimentConfig& cfg, RunMode mode,
                         const std::string& truth_dir,
                         const std::string& out_dir, bool dump_diagnostics) {
  const std::vector<std::string> truth_files =
      truth_file_list(cfg, truth_dir);
  {
    std::string missing;
    for (const std::string& f : truth_files)
      if (!fs::exists(f)) missing += "\n  " + f;
    if (!missing.empty())
      throw ConfigError("missing truth artifacts, expected:" + missing);
  }
  fs::create_directories(out_dir);

  const Grid grid = cfg.build_grid();
  const std::vector<Subdomain> subs = cfg.build_subdomains(grid);
  const std::map<std::string, int> gcells = cfg.gauge_cells(grid);
  const Hydrograph hydrograph = load_hydrograph_csv(cfg.hydrograph_path);
  const PhysicalParams base = make_params(
      cfg.prior.mean.friction, cfg.prior.mean.inflow_multiplier, hydrograph);
  base.validate(grid);

  const ObservationSet all_obs =
      load_observations_csv(truth_dir + "/observations.csv", gcells, subs);
  ObservationSet assim_obs;
  if (mode == RunMode::kIDA) {
    assim_obs.gauges = all_obs.gauges;
  } else if (mode == RunMode::kIGDA) {
    assim_obs = all_obs;
  }

  // Shared spin-up under the prior-mean control.
  HydroState spun;
  spun.depth.assign(static_cast<std::size_t>(grid.size()), 0.0);
  spun = run_window(std::move(spun), grid, base, cfg.spinup_s, {}, nullptr,
                    cfg.step_options);

  const int n_cycles = static_cast<int>(
      std::llround((cfg.t_end_s - cfg.spinup_s) / cfg.cycle_s));
  std::vector<double> bounds(static_cast<std::size_t>(n_cycles) + 1);
  for (int k = 0; k <= n_cycles; ++k)
    bounds[static_cast<std::size_t>(k)] =
        cfg.spinup_s + static_cast<double>(k) * cfg.cycle_s;
  bounds.back() = cfg.t_end_s;

  // Analysis ledger: entry k is the latest analysed control after cycle k
  // (prior mean until an analysis moves it). Depth corrections are one-shot
  // state increments, recorded separately for the cycle that analysed them.
  std::vector<ControlVector> assess(static_cast<std::size_t>(n_cycles) + 1,
                                    cfg.prior.mean);
  const std::vector<double> no_corr(cfg.subdomains.size(), 0.0);
  std::vector<std::vector<double>> applied_corr(
      static_cast<std::size_t>(n_cycles) + 1, no_corr);
  std::vector<CycleReport> cycles;
  cycles.reserve(static_cast<std::size_t>(n_cycles));

  if (mode == RunMode::kFR) {
    for (int k = 1; k <= n_cycles; ++k) {
      CycleReport r;
      r.cycle_index = k;
      r.t_begin = bounds[static_cast<std::size_t>(k - 1)];
      r.t_end = bounds[static_cast<std::size_t>(k)];
      r.forecast_mean = cfg.prior.mean;
      r.analysis_mean = cfg.prior.mean;
      cycles.push_back(std::move(r));
    }
  } else {
    Ensemble ens =
        init_ensemble(cfg.ensemble_size, cfg.prior, spun, cfg.seed);
    ControlVector current = cfg.prior.mean;
    for (int k = 1; k <= n_cycles; ++k) {
      CycleConfig cc;
      cc.cycle_index = k;
      cc.t_begin = bounds[static_cast<std::size_t>(k - 1)];
      cc.t_end = bounds[static_cast<std::size_t>(k)];
      cc.observations = slice_window(assim_obs, cc.t_begin, cc.t_end);
      cc.use_anamorphosis = mode == RunMode::kIGDA;
      cc.experiment_seed = cfg.seed;
      cc.prior = cfg.prior;
      cc.wet_threshold = cfg.wet_threshold_m;
      cc.inflation = cfg.inflation;
      cc.collect_diagnostics = dump_diagnostics;
      cc.step_options = cfg.step_options;
      CycleReport r = run_cycle(ens, grid, base, subs, cc);
      if (r.anamorphosis_fallback_identity)
        std::fprintf(stderr,
                     "warning: cycle %d ratio pool degenerate, identity "
                     "transform used\n", k);
      if (r.analysed) {
        current = r.analysis_mean;
        applied_corr[static_cast<std::size_t>(k)] =
            r.analysis_mean.depth_corrections;
      }
      assess[static_cast<std::size_t>(k)] = current;
      cycles.push_back(std::move(r));
    }
  }

  // One deterministic run chained like the ensemble forecasts: window k is
  // driven by the analysis available at its start (cycle k-1), and cycle k's
  // analysed depth corrections land at its end. All scores come from this
  // trajectory.
  std::vector<double> score_times =
      arithmetic_times(cfg.spinup_s, cfg.t_end_s, cfg.report_interval_s);
  std::vector<double> record = score_times;
  for (const GaugeObs& g : all_obs.gauges) record.push_back(g.time_s);
  record.insert(record.end(), cfg.contingency_times_s.begin(),
                cfg.contingency_times_s.end());
  record = sorted_union(std::move(record));

  std::vector<HydroState> snapshots;
  HydroState astate = spun;
  for (int k = 1; k <= n_cycles; ++k) {
    const ControlVector& c = assess[static_cast<std::size_t>(k - 1)];
    const PhysicalParams pk =
        make_params(c.friction, c.inflow_multiplier, hydrograph);
    const double t0 = bounds[static_cast<std::size_t>(k - 1)];
    const double t1 = bounds[static_cast<std::size_t>(k)];
    std::vector<double> window_records;
    for (double t : record)
      if (t > t0 && t <= t1) window_records.push_back(t);
    astate = run_window(std::move(astate), grid, pk, t1, window_records,
                        &snapshots, cfg.step_options);
    apply_depth_corrections(astate, applied_corr[static_cast<std::size_t>(k)],
                            subs);
    // A snapshot on the cycle boundary reflects the analysed state.
    if (!snapshots.empty() && snapshots.back().time == t1)
      snapshots.back().depth = astate.depth;
  }

  const TruthGauges tg = load_truth_gauges(truth_dir + "/truth_gauges.csv");
  RunReport rep;
  for (std::size_t gi = 0; gi < cfg.gauges.size(); ++gi) {
    const GaugeSpec& g = cfg.gauges[gi];
    std::size_t col = 0;
    while (col < tg.ids.size() && tg.ids[col] != g.id) ++col;
    if (col == tg.ids.size())
      throw ConfigError("truth gauge table lacks gauge '" + g.id + "'");
    const int cell = gcells.at(g.id);

    std::vector<double> sim, tru;
    for (double t : score_times) {
      sim.push_back(wse_at(at_time(snapshots, t), grid, cell));
      tru.push_back(tg.at(t, col));
    }
    rep.rows.push_back({"rmse_full", g.id, rmse(sim, tru), false});

    sim.clear();
    tru.clear();
    for (const GaugeObs& o : all_obs.gauges) {
      if (o.id != g.id) continue;
      sim.push_back(wse_at(at_time(snapshots, o.time_s), grid, cell));
      tru.push_back(tg.at(o.time_s, col));
    }
    if (sim.empty())
      rep.rows.push_back({"rmse_obs", g.id, 0.0, true});
    else
      rep.rows.push_back({"rmse_obs", g.id, rmse(sim, tru), false});
  }

  const std::vector<int> eval = cfg.eval_cells(grid);
  for (double t : cfg.contingency_times_s) {
    const PgmImage truth_mask =
        read_pgm(truth_dir + "/truth_mask_" + time_label(t) + ".pgm");
    if (truth_mask.n_rows != grid.n_rows || truth_mask.n_cols != grid.n_cols)
      throw ConfigError("truth mask dimensions do not match the grid");
    const std::vector<std::uint8_t> sim_mask =
        wet_mask(at_time(snapshots, t), cfg.wet_threshold_m);
    const ContingencyResult c =
        contingency(truth_mask.values, sim_mask, eval);
    write_pgm(out_dir + "/contingency_" + time_label(t) + ".pgm", grid.n_rows,
              grid.n_cols, c.map, 3);
    const std::string key = time_label(t);
    const std::optional<double> csi = c.csi();
    rep.rows.push_back({"csi", key, csi.value_or(0.0), !csi.has_value()});
    rep.rows.push_back({"hits", key, static_cast<double>(c.hits), false});
    rep.rows.push_back({"misses", key, static_cast<double>(c.misses), false});
    rep.rows.push_back(
        {"false_alarms", key, static_cast<double>(c.false_alarms), false});
    rep.rows.push_back({"correct_negatives", key,
                        static_cast<double>(c.correct_negatives), false});
  }
  write_report_csv(out_dir + "/report.csv", rep);

  for (const GaugeSpec& g : cfg.gauges) {
    std::ofstream out(out_dir + "/residuals_" + g.id + ".csv");
    if (!out)
      throw ConfigError("cannot write residuals file for gauge " + g.id);
    out << "time_s,observed,simulated,residual\n";
    const int cell = gcells.at(g.id);
    for (const GaugeObs& o : all_obs.gauges) {
      if (o.id != g.id) continue;
      const double sim = wse_at(at_time(snapshots, o.time_s), grid, cell);
      out << fmt(o.time_s) << ',' << fmt(o.value) << ',' << fmt(sim) << ','
          << fmt(o.value - sim) << '\n';
    }
  }

  {
    std::ofstream out(out_dir + "/controls.csv");
    if (!out) throw ConfigError("cannot write controls file");
    out << "cycle,t_begin,t_end,n_gauge_obs,n_wsr_obs,analysed,anamorphosis,"
           "fallback_identity,jitter";
    for (std::size_t z = 0; z < cfg.prior.mean.friction.size(); ++z)
      out << ",friction_" << z;
    out << ",multiplier";
    for (const RectSpec& s : cfg.subdomains) out << ",correction_" << s.id;
    out << '\n';
    for (int k = 1; k <= n_cycles; ++k) {
      const CycleReport& r = cycles[static_cast<std::size_t>(k - 1)];
      const ControlVector& c = assess[static_cast<std::size_t>(k)];
      out << k << ',' << fmt(r.t_begin) << ',' << fmt(r.t_end) << ','
          << r.n_gauge_obs << ',' << r.n_wsr_obs << ',' << (r.analysed ? 1 : 0)
          << ',' << (r.anamorphosis_used ? 1 : 0) << ','
          << (r.anamorphosis_fallback_identity ? 1 : 0) << ','
          << (r.jitter_applied ? 1 : 0);
      for (double f : c.friction) out << ',' << fmt(f);
      out << ',' << fmt(c.inflow_multiplier);
      for (double d : applied_corr[static_cast<std::size_t>(k)])
        out << ',' << fmt(d);
      out << '\n';
    }
  }

  for (const CycleReport& r : cycles) {
    if (r.anamorphosis_used && !r.anamorphosis_fallback_identity)
      write_knots_csv(r.phi, out_dir + "/phi_cycle" +
                                 std::to_string(r.cycle_index) + ".csv");
    if (r.diagnostics) {
      const CycleDiagnostics& d = *r.diagnostics;
      std::ofstream out(out_dir + "/diagnostics_cycle" +
                        std::to_string(r.cycle_index) + ".csv");
      if (!out) throw ConfigError("cannot write diagnostics file");
      out << "section,i,j,value\n";
      for (Eigen::Index i = 0; i < d.forecast_mean.size(); ++i) {
        out << "forecast_mean," << i << ",," << fmt(d.forecast_mean(i)) << '\n';
        out << "forecast_std," << i << ",," << fmt(d.forecast_std(i)) << '\n';
        out << "analysis_mean," << i << ",," << fmt(d.analysis_mean(i)) << '\n';
        out << "analysis_std," << i << ",," << fmt(d.analysis_std(i)) << '\n';
      }
      for (Eigen::Index j = 0; j < d.innov_mean_phys.size(); ++j) {
        out << "innovation_mean_physical," << j << ",,"
            << fmt(d.innov_mean_phys(j)) << '\n';
        out << "innovation_std_physical," << j << ",,"
            << fmt(d.innov_std_phys(j)) << '\n';
        out << "innovation_mean_transformed," << j << ",,"
            << fmt(d.innov_mean_trans(j)) << '\n';
        out << "innovation_std_transformed," << j << ",,"
            << fmt(d.innov_std_trans(j)) << '\n';
      }
      for (Eigen::Index i = 0; i < d.gain.rows(); ++i)
        for (Eigen::Index j = 0; j < d.gain.cols(); ++j)
          out << "gain," << i << ',' << j << ',' << fmt(d.gain(i, j)) << '\n';
    }
  }

  return rep;
}

std::string format_report_table(const std::vector<std::string>& names,
                                const std::vector<RunReport>& reports) {
  if (names.size() != reports.size())
    throw ContractError("one name per report required");
  if (reports.empty()) return "";

  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-20s %-10s", "metric", "key");
  out << buf;
  for (const std::string& n : names) {
    std::snprintf(buf, sizeof(buf), " %10s", n.c_str());
    out << buf;
  }
  const bool with_delta = reports.size() == 2;
  if (with_delta) out << "      delta";
  out << '\n';

  for (const RunReport::Row& lead : reports.front().rows) {
    std::snprintf(buf, sizeof(buf), "%-20s %-10s", lead.metric.c_str(),
                  lead.key.c_str());
    out << buf;
    bool all_present = true;
    std::vector<const RunReport::Row*> cells;
    for (const RunReport& rep : reports) {
      const RunReport::Row* found = nullptr;
      for (const RunReport::Row& r : rep.rows)
        if (r.metric == lead.metric && r.key == lead.key) {
          found = &r;
          break;
        }
      cells.push_back(found);
      if (!found) all_present = false;
    }
    for (const RunReport::Row* cell : cells) {
      std::snprintf(buf, sizeof(buf), " %10s",
                    cell ? format_score(*cell).c_str() : "-");
      out << buf;
    }
    if (with_delta) {
      if (all_present && !cells[0]->na && !cells[1]->na) {
        std::snprintf(buf, sizeof(buf), " %10.*f",
                      metric_format(lead.metric).decimals,
                      cells[1]->value - cells[0]->value);
        out << buf;
      } else {
        std::snprintf(buf, sizeof(buf), " %10s", "NA");
        out << buf;
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace floodda
