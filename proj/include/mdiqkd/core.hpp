#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace mdiqkd {

enum class Basis : uint8_t { Z = 0, X = 1 };
enum class Intensity : uint8_t { Signal = 0, Decoy = 1, Vacuum = 2 };

/// Only the psi-minus projection is heralded; every other click pattern is
/// discarded by the center node.
enum class BsmOutcome : uint8_t { PsiMinus = 0, NoDetection = 1 };

inline constexpr std::array<Basis, 2> kBases{Basis::Z, Basis::X};
inline constexpr std::array<Intensity, 3> kIntensities{
    Intensity::Signal, Intensity::Decoy, Intensity::Vacuum};

std::string_view to_string(Basis b);
std::string_view to_string(Intensity i);
Basis parse_basis(std::string_view s);
Intensity parse_intensity(std::string_view s);

/// Time-bin qubit state description: amplitude split (sqrt(m), e^{i*phi}*sqrt(1-m))
/// between the early and late bins.
struct QubitSpec {
  double m = 1.0;    // early-bin weight, in [0,1]
  double phi = 0.0;  // relative phase of the late bin, radians

  void validate() const;
};

/// Per-node source description: mean photon numbers for the three decoy
/// intensities, the prepared state for every (basis, bit, intensity)
/// combination, and the random choice probabilities.
struct SourceConfig {
  std::array<double, 3> mu{0.3, 0.04, 0.0};  // indexed by Intensity
  // specs[basis][bit][intensity]
  std::array<std::array<std::array<QubitSpec, 3>, 2>, 2> specs{};
  double p_basis_z = 0.5;
  std::array<double, 3> p_intensity{0.7, 0.2, 0.1};

  SourceConfig();

  double mu_of(Intensity i) const { return mu[static_cast<int>(i)]; }
  const QubitSpec& spec(Basis b, int bit, Intensity i) const {
    return specs[static_cast<int>(b)][bit][static_cast<int>(i)];
  }
  QubitSpec& spec(Basis b, int bit, Intensity i) {
    return specs[static_cast<int>(b)][bit][static_cast<int>(i)];
  }

  /// Requires mu_signal > mu_decoy > mu_vacuum >= 0 and probabilities that
  /// sum to one within 1e-12.
  void validate() const;
};

/// Fills specs with the ideal BB84 time-bin states (|e>, |l>, |+>, |->)
/// for every intensity.
void set_ideal_states(SourceConfig& src);

struct LinkConfig {
  double loss_db_alice = 9.75;
  double loss_db_bob = 9.75;

  double total_loss_db() const { return loss_db_alice + loss_db_bob; }
  void validate() const;
};

struct DetectionConfig {
  double det_efficiency = 0.85;  // folded into channel transmittance
  double dark_rate = 150.0;      // counts/s per detector, free running
  double noise_rate = 0.0;       // counts/s per detector from coexisting channels
  double window_ps = 400.0;      // temporal filtering window, picoseconds
  double visibility = 1.0;       // two-photon interference visibility
  double qubit_rate = 100e6;     // qubit pairs per second

  /// Mean noise photon count inside one (detector, bin) window.
  double noise_mean_per_window() const {
    return (dark_rate + noise_rate) * window_ps * 1e-12;
  }
  void validate() const;
};

/// Everything needed to predict or simulate one experimental condition.
struct ScenarioConfig {
  SourceConfig alice;
  SourceConfig bob;
  LinkConfig link;
  DetectionConfig detection;

  void validate() const;
};

/// Gains Q and error rates E over 2 bases x 3x3 intensity pairs.
/// Pure-noise cells report E = 0.5 by convention.
struct GainTable {
  std::array<double, 18> q{};
  std::array<double, 18> e{};

  static constexpr int index(Basis b, Intensity a, Intensity bb) {
    return static_cast<int>(b) * 9 + static_cast<int>(a) * 3 + static_cast<int>(bb);
  }
  double Q(Basis b, Intensity a, Intensity bb) const { return q[index(b, a, bb)]; }
  double E(Basis b, Intensity a, Intensity bb) const { return e[index(b, a, bb)]; }
  void set(Basis b, Intensity a, Intensity bb, double gain, double err) {
    q[index(b, a, bb)] = gain;
    e[index(b, a, bb)] = err;
  }

  /// Rejects any Q outside [0,1] or E outside [0,1].
  void validate() const;
};

// --- elementary math -------------------------------------------------------

/// Binary entropy H(p) = -p log2 p - (1-p) log2 (1-p), with 0 log 0 := 0.
/// Throws std::domain_error outside [0,1].
double binary_entropy(double p);

/// 10^(-loss/10). Throws std::domain_error for negative loss.
double db_to_transmittance(double loss_db);

/// Poisson probability e^{-mu} mu^n / n!.
double poisson_pn(double mu, int n);

/// Cumulative Poisson probability for n = 0..n_max.
double poisson_cdf(double mu, int n_max);

}  // namespace mdiqkd
