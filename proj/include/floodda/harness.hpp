#ifndef FLOODDA_HARNESS_HPP
#define FLOODDA_HARNESS_HPP

#include <optional>
#include <string>
#include <vector>

#include "floodda/config.hpp"

namespace floodda {

/// The three twin-experiment protocols: FR runs the prior-mean control with
/// no assimilation, IDA assimilates gauge elevations only, IGDA adds the
/// wet-surface ratios through the fitted transform.
enum class RunMode { kFR, kIDA, kIGDA };

/// Accepts fr/ida/igda in any case; throws ConfigError otherwise.
RunMode parse_run_mode(const std::string& name);
std::string mode_name(RunMode mode);

/// Synthesizes the reference world under the truth control and writes into
/// out_dir: observations.csv (noisy), truth_gauges.csv and truth_wsr.csv
/// (noiseless), truth_mask_<t>.pgm per contingency time. Gauge noise is
/// physical; ratio noise is added in transformed space under a transform
/// fitted to the pooled truth ratios, mapped back, and clipped to [0, 1].
void generate_truth(const ExperimentConfig& cfg, const std::string& out_dir);

/// Scores of one experiment, the content of report.csv. Values keep full
/// precision; an undefined score (e.g. CSI with an all-dry denominator)
/// is stored as NA.
struct RunReport {
  struct Row {
    std::string metric;
    std::string key;
    double value = 0.0;
    bool na = false;
  };
  std::vector<Row> rows;

  std::optional<double> find(const std::string& metric,
                             const std::string& key) const;
};

RunReport load_report_csv(const std::string& path);
void write_report_csv(const std::string& path, const RunReport& report);

/// Runs one experiment against previously generated truth artifacts and
/// writes report.csv, controls.csv, residuals_<gauge>.csv,
/// contingency_<time>.pgm and (IGDA) phi_cycle<k>.csv into out_dir.
/// Missing truth files raise ConfigError listing every expected path.
RunReport run_experiment(const ExperimentConfig& cfg, RunMode mode,
                         const std::string& truth_dir,
                         const std::string& out_dir,
                         bool dump_diagnostics = false);

/// Side-by-side score matrix (rows = metrics, one column per report, RMSE
/// with three decimals and CSI with two). With exactly two reports a delta
/// column (second minus first) is appended.
std::string format_report_table(const std::vector<std::string>& names,
                                const std::vector<RunReport>& reports);

}  // namespace floodda

#endif  // FLOODDA_HARNESS_HPP
