#include <mdiqkd/forward.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mdiqkd {

std::array<std::complex<double>, 2> pulse_amplitudes(const QubitSpec& spec, double mu) {
  spec.validate();
  if (!(mu >= 0.0)) throw std::invalid_argument("pulse_amplitudes: negative mu");
  double early = std::sqrt(mu * spec.m);
  double late_mag = std::sqrt(mu * (1.0 - spec.m));
  return {std::complex<double>(early, 0.0),
          std::polar(late_mag, spec.phi)};
}

std::array<std::array<double, 2>, 2> beamsplitter_intensities(
    const std::array<std::complex<double>, 2>& alice,
    const std::array<std::complex<double>, 2>& bob, double overlap, double theta) {
  if (!(overlap >= 0.0 && overlap <= 1.0))
    throw std::invalid_argument("beamsplitter_intensities: overlap outside [0,1]");
  const std::complex<double> rot = std::polar(1.0, theta);
  const double matched = std::sqrt(overlap);
  std::array<std::array<double, 2>, 2> n{};
  for (int t = 0; t < 2; ++t) {
    std::complex<double> b = matched * rot * bob[t];
    double distinguishable = 0.5 * (1.0 - overlap) * std::norm(bob[t]);
    n[0][t] = 0.5 * std::norm(alice[t] + b) + distinguishable;
    n[1][t] = 0.5 * std::norm(alice[t] - b) + distinguishable;
  }
  return n;
}

double click_probability(double mean_photons, double noise_mean) {
  if (!(mean_photons >= 0.0) || !(noise_mean >= 0.0))
    throw std::invalid_argument("click_probability: negative mean");
  return -std::expm1(-(mean_photons + noise_mean));
}

BsmOutcome coincidence_rule(const std::array<std::array<bool, 2>, 2>& clicks) {
  bool d0_early_only = clicks[0][0] && !clicks[0][1];
  bool d0_late_only = clicks[0][1] && !clicks[0][0];
  bool d1_early_only = clicks[1][0] && !clicks[1][1];
  bool d1_late_only = clicks[1][1] && !clicks[1][0];
  if ((d0_early_only && d1_late_only) || (d0_late_only && d1_early_only))
    return BsmOutcome::PsiMinus;
  return BsmOutcome::NoDetection;
}

namespace {

/// psi-minus probability for one prepared pair at one source phase.
double herald_probability(const std::array<std::complex<double>, 2>& alice,
                          const std::array<std::complex<double>, 2>& bob, double overlap,
                          double theta, double noise_mean) {
  auto n = beamsplitter_intensities(alice, bob, overlap, theta);
  double p[2][2];
  for (int d = 0; d < 2; ++d)
    for (int t = 0; t < 2; ++t) p[d][t] = click_probability(n[d][t], noise_mean);
  return p[0][0] * p[1][1] * (1.0 - p[0][1]) * (1.0 - p[1][0]) +
         p[1][0] * p[0][1] * (1.0 - p[0][0]) * (1.0 - p[1][1]);
}

}  // namespace

CellProbabilities cell_probabilities_at_order(const ScenarioConfig& scenario, Basis basis,
                                              Intensity ia, Intensity ib, int order) {
  if (order < 1) throw std::invalid_argument("cell_probabilities: order must be >= 1");
  scenario.validate();
  const DetectionConfig& det = scenario.detection;
  const double ta = db_to_transmittance(scenario.link.loss_db_alice) * det.det_efficiency;
  const double tb = db_to_transmittance(scenario.link.loss_db_bob) * det.det_efficiency;
  const double mu_a = scenario.alice.mu_of(ia) * ta;
  const double mu_b = scenario.bob.mu_of(ib) * tb;
  const double nu = det.noise_mean_per_window();
  const double overlap = det.visibility;

  double herald = 0.0, errors = 0.0;
  for (int bit_a = 0; bit_a < 2; ++bit_a)
    for (int bit_b = 0; bit_b < 2; ++bit_b) {
      auto alice = pulse_amplitudes(scenario.alice.spec(basis, bit_a, ia), mu_a);
      auto bob = pulse_amplitudes(scenario.bob.spec(basis, bit_b, ib), mu_b);
      double acc = 0.0;
      for (int k = 0; k < order; ++k) {
        double theta = 2.0 * std::numbers::pi * k / order;
        acc += herald_probability(alice, bob, overlap, theta, nu);
      }
      double p = acc / order;
      herald += 0.25 * p;
      // psi-minus announces anticorrelated bits; equal preparations that
      // still herald become errors after the reconciliation flip
      if (bit_a == bit_b) errors += 0.25 * p;
    }

  CellProbabilities cell;
  cell.gain = herald;
  cell.error_rate = herald > 0.0 ? errors / herald : 0.5;
  return cell;
}

CellProbabilities cell_probabilities(const ScenarioConfig& scenario, Basis basis,
                                     Intensity ia, Intensity ib) {
  constexpr int kDefaultOrder = 64;
  constexpr int kMaxOrder = 512;
  CellProbabilities coarse = cell_probabilities_at_order(scenario, basis, ia, ib, kDefaultOrder);
  for (int order = kDefaultOrder * 2; order <= kMaxOrder; order *= 2) {
    CellProbabilities fine = cell_probabilities_at_order(scenario, basis, ia, ib, order);
    double dg = std::abs(fine.gain - coarse.gain);
    double de = std::abs(fine.error_rate - coarse.error_rate);
    if (dg <= 1e-14 + 1e-10 * fine.gain && de <= 1e-10) return fine;
    coarse = fine;
  }
  throw std::runtime_error("cell_probabilities: phase quadrature did not converge by order 512");
}

GainTable full_gain_table(const ScenarioConfig& scenario) {
  GainTable table;
  for (Basis b : kBases)
    for (Intensity ia : kIntensities)
      for (Intensity ib : kIntensities) {
        CellProbabilities cell = cell_probabilities(scenario, b, ia, ib);
        table.set(b, ia, ib, cell.gain, cell.error_rate);
      }
  return table;
}

GainTable decoy_consistent_gain_table(const ScenarioConfig& scenario) {
  ScenarioConfig sc = scenario;
  for (SourceConfig* src : {&sc.alice, &sc.bob})
    for (auto& basis_specs : src->specs)
      for (auto& bit_specs : basis_specs) {
        bit_specs[1] = bit_specs[0];
        bit_specs[2] = bit_specs[0];
      }
  return full_gain_table(sc);
}

}  // namespace mdiqkd
