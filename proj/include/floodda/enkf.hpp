#ifndef FLOODDA_ENKF_HPP
#define FLOODDA_ENKF_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "floodda/anamorphosis.hpp"
#include "floodda/control.hpp"
#include "floodda/grid.hpp"
#include "floodda/hydro.hpp"
#include "floodda/observation.hpp"

namespace floodda {

/// One ensemble member: its control hypothesis and its model state.
struct Member {
  ControlVector control;
  HydroState state;
};

struct Ensemble {
  std::vector<Member> members;
  int size() const { return static_cast<int>(members.size()); }
};

/// Everything one assimilation cycle needs besides the ensemble itself.
struct CycleConfig {
  int cycle_index = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
  ObservationSet observations;  // all with time in (t_begin, t_end]
  bool use_anamorphosis = false;
  std::uint64_t experiment_seed = 0;
  ControlPrior prior;      // bounds and the correction redraw spread
  double wet_threshold = 0.01;  // m, for ratio observations
  double inflation = 1.0;  // >= 1, scales control anomalies
  bool collect_diagnostics = false;
  StepOptions step_options;
};

/// Flag-gated per-cycle numbers for offline inspection. Control entries use
/// the flat [friction..., multiplier, corrections...] layout.
struct CycleDiagnostics {
  Eigen::VectorXd forecast_mean, forecast_std;
  Eigen::VectorXd analysis_mean, analysis_std;
  Eigen::VectorXd innov_mean_phys, innov_std_phys;    // per observation
  Eigen::VectorXd innov_mean_trans, innov_std_trans;  // per observation
  Eigen::MatrixXd gain;
};

/// What the analysis did, for reporting and diagnostics.
struct CycleReport {
  int cycle_index = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::size_t n_gauge_obs = 0;
  std::size_t n_wsr_obs = 0;
  bool analysed = false;  // false when the window had no observations
  ControlVector forecast_mean;
  ControlVector analysis_mean;  // corrections as analysed, before zeroing
  bool anamorphosis_used = false;
  bool anamorphosis_fallback_identity = false;
  bool jitter_applied = false;
  AnamorphosisFn phi;  // the fitted transform when anamorphosis_used
  std::optional<CycleDiagnostics> diagnostics;
};

/// Output of the raw update step on matrices.
struct AnalysisResult {
  Eigen::MatrixXd analysed;   // n_x x n_e, columns are members
  Eigen::MatrixXd gain;       // n_x x n_y
  Eigen::MatrixXd cross_cov;  // P_xy, n_x x n_y (inflated anomalies)
  Eigen::MatrixXd obs_cov;    // P_yy, n_y x n_y (before adding R)
  bool jitter_applied = false;
};

/// Observation-space quantities of one cycle after the change of variables:
/// ratio rows pass through the fitted transform, elevation rows are taken
/// as-is.
struct TransformedBatch {
  Eigen::MatrixXd member_equivalents;  // n_y x n_e
  Eigen::VectorXd observed;            // n_y
  Eigen::VectorXd r_diag;              // n_y, error variances
  AnamorphosisFn phi;                  // identity when no ratio rows
  bool used_anamorphosis = false;
  bool fallback_identity = false;
};

/// Control vector <-> flat layout [friction..., multiplier, corrections...].
Eigen::VectorXd control_to_vector(const ControlVector& control);
ControlVector vector_to_control(const Eigen::VectorXd& x, int n_zones,
                                int n_subdomains);
void clamp_control(ControlVector& control, const ControlBounds& bounds);

/// Draws the initial ensemble: every control entry from its truncated
/// Gaussian prior, every member starting from the same model state.
Ensemble init_ensemble(int n_members, const ControlPrior& prior,
                       const HydroState& initial_state,
                       std::uint64_t experiment_seed);

/// Stream seed for the synthetic perturbation of one observation as seen by
/// one member. Keyed by the observation's identity, not its position, so a
/// batch gets the same elevation draws whether or not ratio observations
/// accompany them.
std::uint64_t observation_perturbation_seed(std::uint64_t experiment_seed,
                                            int member, bool is_wsr,
                                            const std::string& id,
                                            double time_s);

/// Per-member perturbed observation matrix (n_y x n_e) in transformed space:
/// column i holds observed + eps_i with eps_i ~ N(0, r_diag).
Eigen::MatrixXd perturbed_observations(const ObservationSet& set,
                                       const Eigen::VectorXd& transformed_obs,
                                       const Eigen::VectorXd& r_diag,
                                       int n_members,
                                       std::uint64_t experiment_seed);

/// Fits the change of variables from the pooled ratio sample (observed
/// values plus every member equivalent) and maps ratio rows through it.
/// Falls back to the identity (flagged) if the pool is degenerate. With
/// use_anamorphosis false, or no ratio rows, everything passes unchanged.
TransformedBatch transform_batch(const ObservationSet& set,
                                 const Eigen::MatrixXd& member_equivalents,
                                 bool use_anamorphosis);

/// Stochastic ensemble update:
///   X_a(:,i) = X_f(:,i) + K (Y_o(:,i) - Y_f(:,i)),
///   K = P_xy (P_yy + R)^{-1}
/// with the covariances from member anomalies (1/(n_e-1) normalisation,
/// order-stable sums, control anomalies scaled by `inflation` first) and the
/// inverse applied through a Cholesky solve. If the factorisation fails, one
/// jitter of 1e-10 * trace/n_y is added to the diagonal; a second failure
/// raises NumericalError carrying a condition-number estimate. Control
/// components with zero ensemble spread get exactly zero gain rows and pass
/// through bit-identical.
AnalysisResult analyze_matrices(const Eigen::MatrixXd& forecast,
                                const Eigen::MatrixXd& member_equivalents,
                                const Eigen::MatrixXd& perturbed_obs,
                                const Eigen::VectorXd& r_diag,
                                double inflation = 1.0);

/// One full cycle: redraw depth corrections from the prior (only when there
/// is something to assimilate), run every member to t_end recording
/// snapshots at the observation times, update the controls, apply the
/// analysed corrections to the member states and zero them. With an empty
/// observation set the controls are left untouched and only the states
/// advance.
CycleReport run_cycle(Ensemble& ensemble, const Grid& grid,
                      const PhysicalParams& base_params,
                      const std::vector<Subdomain>& subdomains,
                      const CycleConfig& config);

}  // namespace floodda

#endif  // FLOODDA_ENKF_HPP
