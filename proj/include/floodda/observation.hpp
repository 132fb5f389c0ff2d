#ifndef FLOODDA_OBSERVATION_HPP
#define FLOODDA_OBSERVATION_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "floodda/grid.hpp"
#include "floodda/hydro.hpp"

namespace floodda {

/// Point water-surface-elevation reading at a fixed cell.
struct GaugeObs {
  std::string id;
  int cell = -1;
  double time_s = 0.0;
  double value = 0.0;      // m, surface elevation
  double error_std = 0.0;  // m
};

/// Wet-surface ratio of one subdomain: fraction of its cells wetter than the
/// detection threshold, in [0, 1]. The error std is expressed in the
/// transformed (Gaussian) space where the analysis update happens.
struct WsrObs {
  std::string subdomain_id;
  int subdomain = -1;  // index into the experiment's subdomain list
  double time_s = 0.0;
  double value = 0.0;
  double error_std = 0.0;
};

/// All observations of an experiment, or the slice falling in one cycle.
/// Gauges and ratios are each kept sorted by (time, id); the observation
/// vector used in the analysis is gauges first, then ratios, in this order.
struct ObservationSet {
  std::vector<GaugeObs> gauges;
  std::vector<WsrObs> wsr;

  std::size_t size() const { return gauges.size() + wsr.size(); }
  bool empty() const { return gauges.empty() && wsr.empty(); }
};

/// Water surface elevation at a cell: bed + depth.
double wse_at(const HydroState& state, const Grid& grid, int cell);

/// Per-cell wet flags (1 where depth > threshold).
std::vector<std::uint8_t> wet_mask(const HydroState& state,
                                   double wet_threshold);

/// Fraction of the subdomain's cells with depth > threshold.
double wsr(const HydroState& state, const Subdomain& subdomain,
           double wet_threshold);

/// Observations with time in (t_begin, t_end].
ObservationSet slice_window(const ObservationSet& all, double t_begin,
                            double t_end);

/// Sorted unique observation times of a set.
std::vector<double> observation_times(const ObservationSet& set);

/// Evaluates the observation operator on snapshots that were recorded at the
/// set's observation times. Returns one value per observation in vector
/// order (gauges then ratios). Throws ContractError if a needed snapshot is
/// missing.
std::vector<double> model_equivalents(const ObservationSet& set,
                                      std::span<const HydroState> snapshots,
                                      const Grid& grid,
                                      const std::vector<Subdomain>& subdomains,
                                      double wet_threshold);

/// CSV persistence: `type,id,time_s,value,error_std` with a header line,
/// type is `gauge` or `wsr`. Loading resolves gauge ids to cells and
/// subdomain ids to indices and sorts each kind by (time, id); unknown ids or
/// malformed rows raise ConfigError.
ObservationSet load_observations_csv(
    const std::string& path, const std::map<std::string, int>& gauge_cells,
    const std::vector<Subdomain>& subdomains);

void write_observations_csv(const std::string& path,
                            const ObservationSet& set);

}  // namespace floodda

#endif  // FLOODDA_OBSERVATION_HPP
