#include "floodda/observation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "floodda/common.hpp"

namespace floodda {

namespace {

// Snapshots land exactly on requested times; the tolerance only absorbs
// text round-trips of times that came through a CSV.
constexpr double kTimeMatchTol = 1e-6;

const HydroState& snapshot_at(std::span<const HydroState> snapshots,
                              double t) {
  for (const HydroState& s : snapshots)
    if (std::abs(s.time - t) <= kTimeMatchTol) return s;
  throw ContractError("no model snapshot at observation time t=" +
                      std::to_string(t));
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

double parse_double_field(const std::string& text, const std::string& path,
                          int line_no) {
  try {
    std::size_t pos = 0;
    double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(path + ":" + std::to_string(line_no) +
                      ": cannot parse number '" + text + "'");
  }
}

}  // namespace

double wse_at(const HydroState& state, const Grid& grid, int cell) {
  if (cell < 0 || cell >= grid.size())
    throw ContractError("gauge cell out of range");
  return grid.bed_elevation[cell] + state.depth[cell];
}

std::vector<std::uint8_t> wet_mask(const HydroState& state,
                                   double wet_threshold) {
  std::vector<std::uint8_t> mask(state.depth.size(), 0);
  for (std::size_t i = 0; i < state.depth.size(); ++i)
    mask[i] = state.depth[i] > wet_threshold ? 1 : 0;
  return mask;
}

double wsr(const HydroState& state, const Subdomain& subdomain,
           double wet_threshold) {
  if (subdomain.cells.empty())
    throw ContractError("subdomain '" + subdomain.id + "' has no cells");
  int wet = 0;
  for (int cell : subdomain.cells)
    if (state.depth[cell] > wet_threshold) ++wet;
  return static_cast<double>(wet) / static_cast<double>(subdomain.cells.size());
}

ObservationSet slice_window(const ObservationSet& all, double t_begin,
                            double t_end) {
  ObservationSet out;
  for (const GaugeObs& g : all.gauges)
    if (g.time_s > t_begin && g.time_s <= t_end) out.gauges.push_back(g);
  for (const WsrObs& w : all.wsr)
    if (w.time_s > t_begin && w.time_s <= t_end) out.wsr.push_back(w);
  return out;
}

std::vector<double> observation_times(const ObservationSet& set) {
  std::vector<double> times;
  times.reserve(set.size());
  for (const GaugeObs& g : set.gauges) times.push_back(g.time_s);
  for (const WsrObs& w : set.wsr) times.push_back(w.time_s);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

std::vector<double> model_equivalents(const ObservationSet& set,
                                      std::span<const HydroState> snapshots,
                                      const Grid& grid,
                                      const std::vector<Subdomain>& subdomains,
                                      double wet_threshold) {
  std::vector<double> values;
  values.reserve(set.size());
  for (const GaugeObs& g : set.gauges)
    values.push_back(wse_at(snapshot_at(snapshots, g.time_s), grid, g.cell));
  for (const WsrObs& w : set.wsr) {
    if (w.subdomain < 0 || w.subdomain >= static_cast<int>(subdomains.size()))
      throw ContractError("wsr observation references unknown subdomain");
    values.push_back(wsr(snapshot_at(snapshots, w.time_s),
                         subdomains[w.subdomain], wet_threshold));
  }
  return values;
}

ObservationSet load_observations_csv(
    const std::string& path, const std::map<std::string, int>& gauge_cells,
    const std::vector<Subdomain>& subdomains) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open observations file: " + path);

  ObservationSet set;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.rfind("type,", 0) == 0) continue;  // header
    auto fields = split_csv_row(line);
    if (fields.size() != 5)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 5 fields, got " +
                        std::to_string(fields.size()));
    const std::string& type = fields[0];
    const std::string& id = fields[1];
    const double t = parse_double_field(fields[2], path, line_no);
    const double value = parse_double_field(fields[3], path, line_no);
    const double err = parse_double_field(fields[4], path, line_no);
    if (!(err >= 0.0))
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": error_std must be >= 0");
    if (type == "gauge") {
      auto it = gauge_cells.find(id);
      if (it == gauge_cells.end())
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": unknown gauge id '" + id + "'");
      set.gauges.push_back({id, it->second, t, value, err});
    } else if (type == "wsr") {
      int idx = -1;
      for (std::size_t s = 0; s < subdomains.size(); ++s)
        if (subdomains[s].id == id) { idx = static_cast<int>(s); break; }
      if (idx < 0)
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": unknown subdomain id '" + id + "'");
      if (!(value >= 0.0 && value <= 1.0))
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": wsr value must be in [0, 1]");
      set.wsr.push_back({id, idx, t, value, err});
    } else {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": unknown observation type '" + type + "'");
    }
  }

  auto gauge_key = [](const GaugeObs& g) { return std::tie(g.time_s, g.id); };
  std::sort(set.gauges.begin(), set.gauges.end(),
            [&](const GaugeObs& a, const GaugeObs& b) {
              return gauge_key(a) < gauge_key(b);
            });
  auto wsr_key = [](const WsrObs& w) {
    return std::tie(w.time_s, w.subdomain_id);
  };
  std::sort(set.wsr.begin(), set.wsr.end(),
            [&](const WsrObs& a, const WsrObs& b) {
              return wsr_key(a) < wsr_key(b);
            });
  return set;
}

void write_observations_csv(const std::string& path,
                            const ObservationSet& set) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write observations file: " + path);
  out << "type,id,time_s,value,error_std\n";
  out.precision(17);
  for (const GaugeObs& g : set.gauges)
    out << "gauge," << g.id << ',' << g.time_s << ',' << g.value << ','
        << g.error_std << '\n';
  for (const WsrObs& w : set.wsr)
    out << "wsr," << w.subdomain_id << ',' << w.time_s << ',' << w.value
        << ',' << w.error_std << '\n';
}

}  // namespace floodda
