#include "mdiqkd/core.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mdiqkd {

std::string_view to_string(Basis b) { return b == Basis::Z ? "Z" : "X"; }

std::string_view to_string(Intensity i) {
  switch (i) {
    case Intensity::Signal: return "signal";
    case Intensity::Decoy: return "decoy";
    case Intensity::Vacuum: return "vacuum";
  }
  return "?";
}

Basis parse_basis(std::string_view s) {
  if (s == "Z" || s == "z") return Basis::Z;
  if (s == "X" || s == "x") return Basis::X;
  throw std::invalid_argument("unknown basis: " + std::string(s));
}

Intensity parse_intensity(std::string_view s) {
  if (s == "signal" || s == "s") return Intensity::Signal;
  if (s == "decoy" || s == "d") return Intensity::Decoy;
  if (s == "vacuum" || s == "v") return Intensity::Vacuum;
  throw std::invalid_argument("unknown intensity: " + std::string(s));
}

void QubitSpec::validate() const {
  if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("QubitSpec.m outside [0,1]");
  if (!std::isfinite(phi)) throw std::invalid_argument("QubitSpec.phi not finite");
}

void set_ideal_states(SourceConfig& src) {
  constexpr double pi = std::numbers::pi;
  for (Intensity i : kIntensities) {
    src.spec(Basis::Z, 0, i) = {1.0, 0.0};     // |early>
    src.spec(Basis::Z, 1, i) = {0.0, 0.0};     // |late>
    src.spec(Basis::X, 0, i) = {0.5, 0.0};     // |+>
    src.spec(Basis::X, 1, i) = {0.5, pi};      // |->
  }
}

SourceConfig::SourceConfig() { set_ideal_states(*this); }

void SourceConfig::validate() const {
  if (!(mu[0] > mu[1] && mu[1] > mu[2] && mu[2] >= 0.0))
    throw std::invalid_argument("intensities must satisfy mu_s > mu_d > mu_v >= 0");
  double sum = 0.0;
  for (double p : p_intensity) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p_intensity outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("intensity probabilities must sum to 1");
  if (!(p_basis_z >= 0.0 && p_basis_z <= 1.0))
    throw std::invalid_argument("p_basis_z outside [0,1]");
  for (const auto& by_basis : specs)
    for (const auto& by_bit : by_basis)
      for (const QubitSpec& s : by_bit) s.validate();
}

void LinkConfig::validate() const {
  if (!(loss_db_alice >= 0.0) || !(loss_db_bob >= 0.0))
    throw std::invalid_argument("link losses must be >= 0 dB");
}

void DetectionConfig::validate() const {
  if (!(det_efficiency >= 0.0 && det_efficiency <= 1.0))
    throw std::invalid_argument("det_efficiency outside [0,1]");
  if (!(dark_rate >= 0.0) || !(noise_rate >= 0.0))
    throw std::invalid_argument("detector noise rates must be >= 0");
  if (!(window_ps > 0.0)) throw std::invalid_argument("window_ps must be positive");
  if (!(visibility >= 0.0 && visibility <= 1.0))
    throw std::invalid_argument("visibility outside [0,1]");
  if (!(qubit_rate > 0.0)) throw std::invalid_argument("qubit_rate must be positive");
}

void ScenarioConfig::validate() const {
  alice.validate();
  bob.validate();
  link.validate();
  detection.validate();
}

void GainTable::validate() const {
  for (double v : q)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("gain outside [0,1]");
  for (double v : e)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("QBER outside [0,1]");
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binary_entropy: p outside [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double db_to_transmittance(double loss_db) {
  if (!(loss_db >= 0.0)) throw std::domain_error("db_to_transmittance: negative loss");
  return std::pow(10.0, -loss_db / 10.0);
}

double poisson_pn(double mu, int n) {
  if (!(mu >= 0.0)) throw std::domain_error("poisson_pn: mu must be >= 0");
  if (n < 0) throw std::domain_error("poisson_pn: n must be >= 0");
  if (mu == 0.0) return n == 0 ? 1.0 : 0.0;
  // e^{-mu} mu^n / n! via logs to stay finite for large n.
  return std::exp(-mu + n * std::log(mu) - std::lgamma(n + 1.0));
}

double poisson_cdf(double mu, int n_max) {
  double sum = 0.0;
  for (int n = 0; n <= n_max; ++n) sum += poisson_pn(mu, n);
  return sum < 1.0 ? sum : 1.0;
}

}  // namespace mdiqkd
