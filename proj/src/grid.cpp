#include "floodda/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "floodda/common.hpp"

namespace floodda {

void Grid::validate() const {
  if (n_rows < 1 || n_cols < 1) {
    throw ContractError("Grid: n_rows and n_cols must be >= 1");
  }
  if (!(cell_size > 0.0)) {
    throw ContractError("Grid: cell_size must be > 0");
  }
  const size_t n = static_cast<size_t>(size());
  if (bed_elevation.size() != n) {
    throw ContractError("Grid: bed_elevation size mismatch");
  }
  if (friction_zone.size() != n) {
    throw ContractError("Grid: friction_zone size mismatch");
  }
  for (double z : bed_elevation) {
    if (!std::isfinite(z)) throw ContractError("Grid: non-finite elevation");
  }
  for (int z : friction_zone) {
    if (z < 0 || z >= n_zones) {
      throw ContractError("Grid: friction_zone index out of range");
    }
  }
  if (inflow_cells.empty()) {
    throw ContractError("Grid: inflow_cells must be non-empty");
  }
  for (int c : inflow_cells) {
    if (c < 0 || c >= size()) {
      throw ContractError("Grid: inflow cell out of range");
    }
  }
  for (int c : outlet_cells) {
    if (c < 0 || c >= size()) {
      throw ContractError("Grid: outlet cell out of range");
    }
  }
}

double Hydrograph::interpolate(double t) const {
  if (times_s.empty()) return 0.0;
  if (t <= times_s.front()) return discharges_m3s.front();
  if (t >= times_s.back()) return discharges_m3s.back();
  size_t i = 1;
  while (times_s[i] < t) ++i;
  const double t0 = times_s[i - 1], t1 = times_s[i];
  const double q0 = discharges_m3s[i - 1], q1 = discharges_m3s[i];
  return q0 + (q1 - q0) * (t - t0) / (t1 - t0);
}

void Hydrograph::validate() const {
  if (times_s.size() != discharges_m3s.size()) {
    throw ContractError("Hydrograph: times/discharges size mismatch");
  }
  if (times_s.empty()) {
    throw ContractError("Hydrograph: empty");
  }
  for (size_t i = 1; i < times_s.size(); ++i) {
    if (!(times_s[i] > times_s[i - 1])) {
      throw ContractError("Hydrograph: times must be strictly increasing");
    }
  }
  for (double q : discharges_m3s) {
    if (!(q >= 0.0) || !std::isfinite(q)) {
      throw ContractError("Hydrograph: discharges must be finite and >= 0");
    }
  }
}

Grid load_dem_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open DEM file: " + path);
  Grid g;
  if (!(in >> g.n_rows >> g.n_cols >> g.cell_size)) {
    throw ConfigError("DEM header must be `n_rows n_cols cell_size`: " + path);
  }
  if (g.n_rows < 1 || g.n_cols < 1 || !(g.cell_size > 0.0)) {
    throw ConfigError("DEM header values out of range: " + path);
  }
  g.bed_elevation.resize(static_cast<size_t>(g.size()));
  for (double& z : g.bed_elevation) {
    if (!(in >> z)) {
      throw ConfigError("DEM file truncated: " + path);
    }
  }
  g.friction_zone.assign(static_cast<size_t>(g.size()), 0);
  return g;
}

void write_dem_grid(const Grid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", grid.n_rows, grid.n_cols,
                grid.cell_size);
  out << buf;
  for (int r = 0; r < grid.n_rows; ++r) {
    for (int c = 0; c < grid.n_cols; ++c) {
      // %.17g keeps the load/write cycle exact.
      std::snprintf(buf, sizeof(buf), "%.17g%c",
                    grid.bed_elevation[grid.index(r, c)],
                    c + 1 == grid.n_cols ? '\n' : ' ');
      out << buf;
    }
  }
}

Hydrograph load_hydrograph_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open hydrograph file: " + path);
  Hydrograph h;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {  // header
      first = false;
      continue;
    }
    std::istringstream ls(line);
    std::string t_str, q_str;
    if (!std::getline(ls, t_str, ',') || !std::getline(ls, q_str)) {
      throw ConfigError("hydrograph CSV: bad line `" + line + "` in " + path);
    }
    try {
      h.times_s.push_back(std::stod(t_str));
      h.discharges_m3s.push_back(std::stod(q_str));
    } catch (const std::exception&) {
      throw ConfigError("hydrograph CSV: bad line `" + line + "` in " + path);
    }
  }
  try {
    h.validate();
  } catch (const ContractError& e) {
    throw ConfigError(std::string(e.what()) + " in " + path);
  }
  return h;
}

}  // namespace floodda
