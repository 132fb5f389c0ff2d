#ifndef FLOODDA_GRID_HPP
#define FLOODDA_GRID_HPP

#include <string>
#include <vector>

namespace floodda {

/// Rectangular DEM grid with per-cell friction zoning and declared boundary
/// cells. Cells are addressed row-major.
struct Grid {
  int n_rows = 0;
  int n_cols = 0;
  double cell_size = 0.0;               // m
  std::vector<double> bed_elevation;    // m, row-major
  std::vector<int> friction_zone;      // zone index per cell
  int n_zones = 1;
  std::vector<int> inflow_cells;        // receive boundary discharge
  std::vector<int> outlet_cells;        // free-outfall edge cells

  int size() const { return n_rows * n_cols; }
  int index(int row, int col) const { return row * n_cols + col; }
  int row_of(int cell) const { return cell / n_cols; }
  int col_of(int cell) const { return cell % n_cols; }
  double cell_area() const { return cell_size * cell_size; }

  /// Throws ContractError on any violated structural invariant.
  void validate() const;
};

/// Named set of cells treated as one unit for depth corrections and
/// wet-surface-ratio observations.
struct Subdomain {
  std::string id;
  std::vector<int> cells;  // linear indices into the grid
};

/// Inflow boundary time series, linearly interpolated and clamped to the
/// first/last value outside its span.
struct Hydrograph {
  std::vector<double> times_s;
  std::vector<double> discharges_m3s;

  double interpolate(double t) const;
  void validate() const;
};

/// Reads an ASCII grid: header line `n_rows n_cols cell_size`, then
/// row-major elevations (whitespace separated). Friction zones and boundary
/// cells default to zone 0 / empty and are assigned by the caller.
Grid load_dem_grid(const std::string& path);

void write_dem_grid(const Grid& grid, const std::string& path);

/// Reads CSV `time_s,discharge_m3s` with a header line.
Hydrograph load_hydrograph_csv(const std::string& path);

}  // namespace floodda

#endif  // FLOODDA_GRID_HPP
