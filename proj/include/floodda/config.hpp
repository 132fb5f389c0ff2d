#ifndef FLOODDA_CONFIG_HPP
#define FLOODDA_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "floodda/control.hpp"
#include "floodda/grid.hpp"
#include "floodda/hydro.hpp"

namespace floodda {

/// One parsed TOML value: string, number, boolean, or (possibly nested)
/// array. The config grammar is a deliberate TOML subset: single-line
/// key = value pairs, [table] and [[table-array]] headers, # comments.
struct TomlValue {
  enum class Kind { kString, kNumber, kBool, kArray };
  Kind kind = Kind::kNumber;
  std::string str;
  double num = 0.0;
  bool boolean = false;
  std::vector<TomlValue> array;
};

/// Flat key -> value map of one table (or one table-array element), with
/// typed accessors that raise ConfigError naming the key on any mismatch.
class TomlTable {
 public:
  TomlTable() = default;
  explicit TomlTable(std::string context) : context_(std::move(context)) {}

  void set(const std::string& key, TomlValue value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  double get_number(const std::string& key) const;
  double get_number_or(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::vector<double> get_number_array(const std::string& key) const;
  /// [lo, hi] pair.
  std::pair<double, double> get_pair(const std::string& key) const;
  /// Array of [row, col] pairs.
  std::vector<std::pair<int, int>> get_cell_list(const std::string& key) const;

  const std::map<std::string, TomlValue>& entries() const { return values_; }

 private:
  const TomlValue& require(const std::string& key) const;
  std::string context_;
  std::map<std::string, TomlValue> values_;
};

/// A parsed document: dotted-path scalars plus named table arrays.
struct TomlDoc {
  TomlTable root;                                      // dotted keys
  std::map<std::string, std::vector<TomlTable>> arrays;  // [[name]] groups

  const std::vector<TomlTable>& tables(const std::string& name) const;
};

TomlDoc parse_toml(const std::string& path);

/// Gauge location by grid cell.
struct GaugeSpec {
  std::string id;
  int row = 0;
  int col = 0;
};

/// Inclusive cell rectangle used for zone painting and subdomains.
struct RectSpec {
  std::string id;
  int row0 = 0, row1 = 0;
  int col0 = 0, col1 = 0;
};

struct ZoneRect {
  int zone = 0;
  int row0 = 0, row1 = 0;
  int col0 = 0, col1 = 0;
};

/// Complete description of a twin experiment, loaded from one TOML file.
/// Relative paths are resolved against the config file's directory.
struct ExperimentConfig {
  std::string dem_path;
  std::string hydrograph_path;

  std::uint64_t seed = 0;

  double t_end_s = 0.0;
  double spinup_s = 0.0;
  double cycle_s = 0.0;

  StepOptions step_options;
  double wet_threshold_m = 0.01;

  std::vector<std::pair<int, int>> inflow_cells;
  std::vector<std::pair<int, int>> outlet_cells;
  std::vector<ZoneRect> zones;  // painted in order over a zone-0 canvas
  std::vector<GaugeSpec> gauges;
  std::vector<RectSpec> subdomains;

  ControlPrior prior;
  std::vector<double> truth_friction;
  double truth_multiplier = 1.0;

  int ensemble_size = 0;
  double inflation = 1.0;

  double gauge_noise_std = 0.0;
  double gauge_interval_s = 0.0;
  double wsr_noise_std = 0.0;
  std::vector<double> wsr_times_s;

  double report_interval_s = 0.0;
  std::vector<double> contingency_times_s;
  int exclude_zone = -1;  // zone left out of inundation scoring, -1 = none

  /// DEM load + zone painting + boundary cell resolution + validate().
  Grid build_grid() const;
  std::vector<Subdomain> build_subdomains(const Grid& grid) const;
  std::map<std::string, int> gauge_cells(const Grid& grid) const;
  /// Cells scored for inundation: everything outside the excluded zone.
  std::vector<int> eval_cells(const Grid& grid) const;
};

ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace floodda

#endif  // FLOODDA_CONFIG_HPP
