#pragma once

#include <mdiqkd/coexistence.hpp>
#include <mdiqkd/core.hpp>

#include <vector>

namespace mdiqkd {

// Calibration of a scenario against measured gain/QBER tables taken at known
// channel losses. The tables constrain only the per-arm flux products
// mu * det_efficiency, so reported mu values follow a fixed gauge: the
// geometric mean of the two signal intensities is pinned at mu_signal_gauge
// and det_efficiency absorbs the rest.

struct FitObservation {
  GainTable table;
  double loss_db_alice = 0.0;
  double loss_db_bob = 0.0;
  double weight = 1.0;
};

struct FitOptions {
  double mu_signal_gauge = 0.55;
  double qber_weight = 25.0;  // linear error-rate terms vs log gain terms
  // log-gain residual variance model: systematic_sigma^2 + 1/(Q * pulses)
  double systematic_sigma = 0.01;
  double effective_pulses = 5e10;
  /// minimum weight for a vacuum-vacuum anchor term, so high-attenuation
  /// background cells still inform the dark floor
  double vacuum_anchor_floor = 25.0;
  double initial_step = 0.25;
  int max_iter = 6000;
};

struct FitResult {
  // first observation's geometry with all fitted parameters applied
  ScenarioConfig scenario;
  double mu_signal_alice = 0.0;
  double mu_signal_bob = 0.0;
  double mu_decoy_alice = 0.0;
  double mu_decoy_bob = 0.0;
  double det_efficiency = 0.0;
  double overlap = 0.0;
  // background counts/s summed over the four windows, first observation
  double base_dark_rate = 0.0;
  // per observation, estimated from its vacuum-vacuum cells before the fit
  std::vector<double> noise_per_window;
  double residual = 0.0;  // weighted RMS over the fitted residual terms
  int iterations = 0;
  bool converged = false;
};

// per-window background mean that reproduces a table's vacuum-vacuum gains
double noise_from_vacuum_cells(const GainTable& table);

// Weighted least squares: log-space on gains, linear on error rates,
// derivative-free simplex over {flux products, overlap}. Deterministic.
FitResult fit_scenario(const ScenarioConfig& base, const std::vector<FitObservation>& observations,
                       const FitOptions& options = {});

// Baseline scenario moved to a different total loss: the added attenuation is
// split evenly across the arms and the detector background scales with the
// per-arm transmittance, which is how the measured vacuum-vacuum gains behave.
ScenarioConfig scenario_at_loss(const ScenarioConfig& baseline, double total_loss_db);

struct PowerPoint {
  double launch_power_w = 0.0;
  double key_rate = 0.0;  // measured secret key rate at that launch power
};

struct RamanFitResult {
  NoiseModel noise;  // counts/s summed over the four windows
  double residual = 0.0;
  bool converged = false;
};

// Slope of the linear launch-power noise law, chosen so pipeline key-rate
// ratios R(P)/R(baseline) track the measured rows. The intercept preserves
// the scenario's background at the baseline power. rows must contain the
// baseline power itself.
RamanFitResult fit_raman_slope(const ScenarioConfig& fitted, const std::vector<PowerPoint>& rows,
                               double baseline_power_w);

}  // namespace mdiqkd
