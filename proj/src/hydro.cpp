#include "floodda/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "floodda/common.hpp"

namespace floodda {

namespace {

// h^(7/3) without pow(): h^2 * cbrt(h).
inline double depth_friction_power(double h) { return h * h * std::cbrt(h); }

[[noreturn]] void throw_nonfinite(const Grid& grid, int cell, double t) {
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "non-finite depth at cell (%d,%d) after step to t=%.6g s",
                grid.row_of(cell), grid.col_of(cell), t);
  throw NumericalError(buf);
}

void size_fluxes(HydroState& s, const Grid& grid) {
  const auto n = static_cast<std::size_t>(grid.size());
  const auto n_out = grid.outlet_cells.size();
  if (s.flux_right.empty()) s.flux_right.assign(n, 0.0);
  if (s.flux_down.empty()) s.flux_down.assign(n, 0.0);
  if (s.flux_out.empty()) s.flux_out.assign(n_out, 0.0);
  if (s.flux_right.size() != n || s.flux_down.size() != n ||
      s.flux_out.size() != n_out)
    throw ContractError("flux arrays do not match the grid");
}

}  // namespace

void PhysicalParams::validate(const Grid& grid) const {
  if (static_cast<int>(friction.size()) != grid.n_zones)
    throw ContractError("friction has " + std::to_string(friction.size()) +
                        " entries for " + std::to_string(grid.n_zones) +
                        " zones");
  for (double k : friction)
    if (!(std::isfinite(k) && k > 0.0))
      throw ContractError("friction coefficients must be finite and > 0");
  if (!(std::isfinite(inflow_multiplier) && inflow_multiplier >= 0.0))
    throw ContractError("inflow multiplier must be finite and >= 0");
  hydrograph.validate();
}

double stored_volume(const HydroState& state, const Grid& grid) {
  return stable_sum(state.depth) * grid.cell_area();
}

HydroState step(const HydroState& state, const Grid& grid,
                const PhysicalParams& params, double dt,
                const StepOptions& opts, StepBudget* budget) {
  if (!(std::isfinite(dt) && dt > 0.0))
    throw ContractError("step requires finite dt > 0");
  if (static_cast<int>(state.depth.size()) != grid.size())
    throw ContractError("state size does not match grid");

  const int n = grid.size();
  const double area = grid.cell_area();
  const double dx = grid.cell_size;
  const double g = opts.gravity;

  HydroState next = state;
  next.time = state.time + dt;
  size_fluxes(next, grid);

  // Boundary inflow at the interval midpoint, split over the inflow cells.
  const double q_in =
      params.hydrograph.interpolate(state.time + 0.5 * dt) *
      params.inflow_multiplier;
  if (q_in > 0.0 && !grid.inflow_cells.empty()) {
    const double vol = q_in * dt;
    const double dh =
        vol / (area * static_cast<double>(grid.inflow_cells.size()));
    for (int cell : grid.inflow_cells) next.depth[cell] += dh;
    if (budget) budget->inflow += vol;
  }

  // Per-cell inverse Strickler, for edge-averaged friction.
  auto inv_k = [&](int cell) {
    return 1.0 / params.friction[grid.friction_zone[cell]];
  };

  // Updates one stored unit discharge from the post-inflow surfaces and
  // returns it; edges with no flow depth lose their momentum entirely.
  auto advance = [&](int i, int j, double q) {
    const double hi = next.depth[i];
    const double hj = next.depth[j];
    const double zi = grid.bed_elevation[i];
    const double zj = grid.bed_elevation[j];
    const double h_flow = std::max(zi + hi, zj + hj) - std::max(zi, zj);
    if (h_flow < opts.wet_min) return 0.0;
    const double slope = ((zj + hj) - (zi + hi)) / dx;
    const double n_edge = 0.5 * (inv_k(i) + inv_k(j));
    const double num = q - g * h_flow * dt * slope;
    const double den = 1.0 + g * dt * n_edge * n_edge * std::abs(q) /
                                 depth_friction_power(h_flow);
    return num / den;
  };

  // Phase 1: advance every discharge and tally how much volume each cell
  // would export, so competing edges can be limited together.
  std::vector<double> out_demand(static_cast<std::size_t>(n), 0.0);
  auto demand = [&](int donor, double vol) { out_demand[donor] += vol; };

  for (int r = 0; r < grid.n_rows; ++r) {
    const int base = r * grid.n_cols;
    for (int c = 0; c + 1 < grid.n_cols; ++c) {
      const int i = base + c;
      const double q = advance(i, i + 1, next.flux_right[i]);
      next.flux_right[i] = q;
      demand(q > 0.0 ? i : i + 1, std::abs(q) * dx * dt);
    }
  }
  for (int r = 0; r + 1 < grid.n_rows; ++r) {
    const int base = r * grid.n_cols;
    for (int c = 0; c < grid.n_cols; ++c) {
      const int i = base + c;
      const double q = advance(i, i + grid.n_cols, next.flux_down[i]);
      next.flux_down[i] = q;
      demand(q > 0.0 ? i : i + grid.n_cols, std::abs(q) * dx * dt);
    }
  }
  // Outlet ghost edges: the ghost surface sits at the cell's own bed, so the
  // full local depth drives a free outfall that never reverses.
  for (std::size_t o = 0; o < grid.outlet_cells.size(); ++o) {
    const int cell = grid.outlet_cells[o];
    const double h = next.depth[cell];
    double q = 0.0;
    if (h >= opts.wet_min) {
      const double n_edge = inv_k(cell);
      const double q_old = next.flux_out[o];
      const double num = q_old + g * h * dt * (h / dx);
      const double den = 1.0 + g * dt * n_edge * n_edge * std::abs(q_old) /
                                   depth_friction_power(h);
      q = std::max(0.0, num / den);
    }
    next.flux_out[o] = q;
    demand(cell, q * dx * dt);
  }

  // Phase 2: cells never export more than they hold; all outgoing edges of
  // an over-committed cell are scaled back together, stored discharges
  // included, so the momentum stays consistent with the applied volume.
  std::vector<double> factor(static_cast<std::size_t>(n), 1.0);
  for (int i = 0; i < n; ++i) {
    const double want = out_demand[static_cast<std::size_t>(i)];
    const double avail = next.depth[static_cast<std::size_t>(i)] * area;
    if (want > avail)
      factor[static_cast<std::size_t>(i)] = (want > 0.0) ? avail / want : 1.0;
  }

  std::vector<double> d_depth(static_cast<std::size_t>(n), 0.0);
  auto apply_edge = [&](double& q, int i, int j) {
    if (q == 0.0) return;
    const int donor = q > 0.0 ? i : j;
    const double f = factor[static_cast<std::size_t>(donor)];
    if (f < 1.0) q *= f;
    const double dh = q * dx * dt / area;
    d_depth[static_cast<std::size_t>(i)] -= dh;
    d_depth[static_cast<std::size_t>(j)] += dh;
  };
  for (int r = 0; r < grid.n_rows; ++r) {
    const int base = r * grid.n_cols;
    for (int c = 0; c + 1 < grid.n_cols; ++c)
      apply_edge(next.flux_right[base + c], base + c, base + c + 1);
  }
  for (int r = 0; r + 1 < grid.n_rows; ++r) {
    const int base = r * grid.n_cols;
    for (int c = 0; c < grid.n_cols; ++c)
      apply_edge(next.flux_down[base + c], base + c, base + c + grid.n_cols);
  }
  for (std::size_t o = 0; o < grid.outlet_cells.size(); ++o) {
    double& q = next.flux_out[o];
    if (q == 0.0) continue;
    const int cell = grid.outlet_cells[o];
    const double f = factor[static_cast<std::size_t>(cell)];
    if (f < 1.0) q *= f;
    const double vol = q * dx * dt;
    d_depth[static_cast<std::size_t>(cell)] -= vol / area;
    if (budget) budget->outflow += vol;
  }

  for (int i = 0; i < n; ++i) {
    double h = next.depth[static_cast<std::size_t>(i)] +
               d_depth[static_cast<std::size_t>(i)];
    // Proportional limiting leaves at most a few ulp of overdraw.
    if (h < 0.0) h = 0.0;
    if (!std::isfinite(h)) throw_nonfinite(grid, i, next.time);
    next.depth[static_cast<std::size_t>(i)] = h;
  }

  return next;
}

double stable_dt(const HydroState& state, const Grid& grid,
                 const PhysicalParams& params, const StepOptions& opts) {
  (void)params;
  double h_max = 0.0;
  for (double h : state.depth) h_max = std::max(h_max, h);
  if (h_max < opts.wet_min) return opts.max_dt;
  const double celerity = std::sqrt(opts.gravity * h_max);
  return std::min(opts.max_dt, opts.cfl * grid.cell_size / celerity);
}

HydroState run_window(HydroState state, const Grid& grid,
                      const PhysicalParams& params, double t_end,
                      std::span<const double> record_times,
                      std::vector<HydroState>* snapshots,
                      const StepOptions& opts, StepBudget* budget) {
  if (!(std::isfinite(t_end) && t_end >= state.time))
    throw ContractError("run_window requires t_end >= start time");
  for (std::size_t i = 0; i < record_times.size(); ++i) {
    const double t = record_times[i];
    if (!(t > state.time && t <= t_end))
      throw ContractError("record times must lie in (start, t_end]");
    if (i > 0 && !(t > record_times[i - 1]))
      throw ContractError("record times must be strictly increasing");
  }

  std::size_t next_record = 0;
  while (state.time < t_end) {
    const double target = (next_record < record_times.size())
                              ? record_times[next_record]
                              : t_end;
    double dt = stable_dt(state, grid, params, opts);
    bool lands = false;
    if (state.time + dt >= target) {
      dt = target - state.time;
      lands = true;
    }
    if (!(dt > 0.0))
      throw NumericalError("time step underflow at t=" +
                           std::to_string(state.time));
    state = step(state, grid, params, dt, opts, budget);
    if (lands) {
      state.time = target;  // exact landing, immune to rounding in t + dt
      if (next_record < record_times.size()) {
        if (snapshots) snapshots->push_back(state);
        ++next_record;
      }
    }
  }
  return state;
}

std::pair<PhysicalParams, HydroState> apply_control(
    const ControlVector& control, const PhysicalParams& base,
    const HydroState& state, const std::vector<Subdomain>& subdomains) {
  if (control.friction.size() != base.friction.size())
    throw ContractError("control friction size does not match parameters");
  if (control.depth_corrections.size() != subdomains.size())
    throw ContractError("control has " +
                        std::to_string(control.depth_corrections.size()) +
                        " depth corrections for " +
                        std::to_string(subdomains.size()) + " subdomains");
  PhysicalParams params = base;
  params.friction = control.friction;
  params.inflow_multiplier = control.inflow_multiplier;
  HydroState corrected = state;
  apply_depth_corrections(corrected, control.depth_corrections, subdomains);
  return {std::move(params), std::move(corrected)};
}

void apply_depth_corrections(HydroState& state,
                             std::span<const double> corrections,
                             const std::vector<Subdomain>& subdomains) {
  if (corrections.size() != subdomains.size())
    throw ContractError("corrections size does not match subdomains");
  for (std::size_t s = 0; s < subdomains.size(); ++s) {
    const double dc = corrections[s];
    if (dc == 0.0) continue;
    for (int cell : subdomains[s].cells) {
      double h = state.depth[cell] + dc;
      state.depth[cell] = (h > 0.0) ? h : 0.0;
    }
  }
}

}  // namespace floodda
