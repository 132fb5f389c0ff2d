#ifndef FLOODDA_CONTROL_HPP
#define FLOODDA_CONTROL_HPP

#include <cstddef>
#include <vector>

namespace floodda {

/// The assimilation control vector: per-zone friction coefficients, a
/// multiplicative inflow correction, and per-floodplain-subdomain uniform
/// depth corrections that are consumed when applied to a state.
struct ControlVector {
  std::vector<double> friction;          // per zone, > 0
  double inflow_multiplier = 1.0;        // > 0
  std::vector<double> depth_corrections; // per subdomain, m

  std::size_t size() const {
    return friction.size() + 1 + depth_corrections.size();
  }
};

/// Truncation box for control entries, shared per block.
struct ControlBounds {
  double friction_lo = 1e-3;
  double friction_hi = 1e3;
  double multiplier_lo = 1e-3;
  double multiplier_hi = 1e3;
  double correction_lo = -10.0;
  double correction_hi = 10.0;
};

/// Gaussian prior for the control: mean and standard deviation per entry,
/// truncated to the bounds by resampling.
struct ControlPrior {
  ControlVector mean;
  std::vector<double> friction_std;
  double multiplier_std = 0.0;
  std::vector<double> correction_std;
  ControlBounds bounds;
};

}  // namespace floodda

#endif  // FLOODDA_CONTROL_HPP
