#pragma once

#include <mdiqkd/core.hpp>

#include <array>
#include <complex>

namespace mdiqkd {

struct CellProbabilities {
  double gain = 0.0;
  double error_rate = 0.5;  // pure-noise convention when gain carries no signal
};

/// (early, late) field amplitudes (sqrt(mu*m), sqrt(mu*(1-m))*e^{i*phi}).
std::array<std::complex<double>, 2> pulse_amplitudes(const QubitSpec& spec, double mu);

/// Mean photon number per [detector][bin] behind the central beamsplitter.
/// Bob's field splits into a matched part (weight overlap, interferes with
/// relative phase theta) and an orthogonal part that adds incoherently.
/// Total flux is conserved exactly.
std::array<std::array<double, 2>, 2> beamsplitter_intensities(
    const std::array<std::complex<double>, 2>& alice,
    const std::array<std::complex<double>, 2>& bob, double overlap, double theta);

/// Threshold detector: 1 - exp(-(mean_photons + noise_mean)).
double click_probability(double mean_photons, double noise_mean);

/// PsiMinus iff each detector clicked in exactly one bin and the bins differ.
BsmOutcome coincidence_rule(const std::array<std::array<bool, 2>, 2>& clicks);

/// Expected gain and error rate of one (basis, intensity-pair) cell, averaged
/// over the four equal-basis state pairs and the uniform source phase. The
/// phase average uses fixed-order quadrature at the given order.
CellProbabilities cell_probabilities_at_order(const ScenarioConfig& scenario, Basis basis,
                                              Intensity ia, Intensity ib, int order);

/// Same, at the default order (64) with an automatic doubling check; orders
/// escalate to 512 before reporting non-convergence.
CellProbabilities cell_probabilities(const ScenarioConfig& scenario, Basis basis,
                                     Intensity ia, Intensity ib);

/// All 18 cells, fixed cell order, deterministic.
GainTable full_gain_table(const ScenarioConfig& scenario);

/// Gain table with every intensity prepared in the signal-intensity states.
/// Such a table satisfies the intensity-independent-yield assumption of the
/// decoy analysis exactly, so it never trips the feasibility check; use it
/// when the table feeds analyze() rather than a comparison against measured
/// data.
GainTable decoy_consistent_gain_table(const ScenarioConfig& scenario);

}  // namespace mdiqkd
