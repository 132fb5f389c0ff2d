#ifndef FLOODDA_HYDRO_HPP
#define FLOODDA_HYDRO_HPP

#include <span>
#include <utility>
#include <vector>

#include "floodda/control.hpp"
#include "floodda/grid.hpp"

namespace floodda {

/// Water depth field plus per-edge unit discharges at a point in time.
/// Depths are non-negative and finite after every operation. The flux
/// vectors carry the scheme's momentum between steps; empty vectors mean
/// "no flow yet" and are sized on the first step.
struct HydroState {
  double time = 0.0;             // s
  std::vector<double> depth;     // m, row-major, matches the grid
  std::vector<double> flux_right;  // m^2/s toward (r, c+1), per cell
  std::vector<double> flux_down;   // m^2/s toward (r+1, c), per cell
  std::vector<double> flux_out;    // m^2/s leaving, per outlet cell
};

/// Physical parameters the control vector acts on.
struct PhysicalParams {
  std::vector<double> friction;   // Strickler coefficient per zone
  double inflow_multiplier = 1.0;
  Hydrograph hydrograph;

  void validate(const Grid& grid) const;
};

/// Explicit-scheme knobs. Defaults suit the bundled desk-scale cases.
struct StepOptions {
  double max_dt = 60.0;   // s, returned by stable_dt when nothing flows
  double cfl = 0.5;       // fraction of the gravity-wave celerity bound
  double wet_min = 1e-6;  // m, edges with less flow depth carry nothing
  double gravity = 9.81;
};

/// Volume bookkeeping across one or more steps, in m^3 of actually applied
/// boundary exchange (same roundings as the depth updates).
struct StepBudget {
  double inflow = 0.0;
  double outflow = 0.0;
};

/// Σ depth · cell area.
double stored_volume(const HydroState& state, const Grid& grid);

/// One explicit step of the local-inertia flood-spreading scheme.
///
/// Order within the step: boundary inflow (hydrograph at the interval
/// midpoint, split equally over inflow cells), then a simultaneous edge
/// update from the post-inflow surfaces. Each edge integrates the stored
/// unit discharge q with an explicit gravity term and an implicit Strickler
/// friction term,
///   q' = (q - g · h_f · dt · S) / (1 + g · dt · |q| / (K_e^2 · h_f^{7/3}))
/// where h_f = max(η_i, η_j) - max(z_i, z_j) is the flow depth across the
/// edge, S the water-surface slope, and K_e the harmonic-style mean of the
/// two cells' Strickler coefficients. Edges with h_f below wet_min carry
/// nothing and their stored discharge resets to zero. Outlet cells drain
/// through a ghost edge whose surface sits at the cell's own bed (free
/// outfall, never reversing). Cells never export more volume than they
/// hold: competing outgoing edges are scaled back proportionally, stored
/// discharges included.
///
/// Throws NumericalError naming the first offending cell if any depth goes
/// non-finite.
HydroState step(const HydroState& state, const Grid& grid,
                const PhysicalParams& params, double dt,
                const StepOptions& opts = {}, StepBudget* budget = nullptr);

/// Largest dt the scheme tolerates: cfl · Δx / sqrt(g · h_max) over wet
/// cells, capped at max_dt. An all-dry state returns max_dt.
double stable_dt(const HydroState& state, const Grid& grid,
                 const PhysicalParams& params, const StepOptions& opts = {});

/// Integrates with adaptive sub-steps up to t_end and returns the final
/// state. Snapshots are captured exactly at the requested record times
/// (strictly increasing, within (state.time, t_end]); the sub-step before
/// each record time is shortened to land on it exactly.
HydroState run_window(HydroState state, const Grid& grid,
                      const PhysicalParams& params, double t_end,
                      std::span<const double> record_times,
                      std::vector<HydroState>* snapshots = nullptr,
                      const StepOptions& opts = {},
                      StepBudget* budget = nullptr);

/// Applies a control vector: friction and inflow multiplier replace the base
/// values; each subdomain's depth correction is added uniformly to its member
/// cells, clamped below at zero (the clamp deliberately loses volume; the
/// increment is a statistical correction, not a flux).
std::pair<PhysicalParams, HydroState> apply_control(
    const ControlVector& control, const PhysicalParams& base,
    const HydroState& state, const std::vector<Subdomain>& subdomains);

/// The depth-correction part of apply_control alone (consumes the analysed
/// corrections at the end of a cycle).
void apply_depth_corrections(HydroState& state,
                             std::span<const double> corrections,
                             const std::vector<Subdomain>& subdomains);

}  // namespace floodda

#endif  // FLOODDA_HYDRO_HPP
