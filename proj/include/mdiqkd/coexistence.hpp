#pragma once

#include <mdiqkd/core.hpp>

#include <string>
#include <vector>

namespace mdiqkd {

// WDM channel plan and noise budget: maps classical launch power on the
// shared fiber to background count rates on the measurement detectors.

enum class ChannelDirection { Co, Counter };
enum class ChannelRole { Quantum, Data, Control, Stabilization };

ChannelDirection direction_from_string(std::string_view s);
ChannelRole role_from_string(std::string_view s);
const char* to_string(ChannelDirection d);
const char* to_string(ChannelRole r);

struct Channel {
  std::string name;
  double wavelength_nm = 0.0;
  double launch_power_w = 0.0;
  ChannelDirection direction = ChannelDirection::Co;
  ChannelRole role = ChannelRole::Data;
};

struct ChannelPlan {
  std::vector<Channel> channels;

  // exactly one quantum channel, pinned at 1310 nm; positive wavelengths;
  // data channels must carry power
  void validate() const;

  // classical power sharing the qubit fiber; counter-propagating channels
  // are noise-irrelevant here
  double co_propagating_power_w() const;
};

struct IsolationBudget {
  double wdm_isolation_db = 50.0;
  double filter_isolation_db = 45.0;
  double filter_bandwidth_nm = 2.0;

  void validate() const;
};

// Linear background law. base_dark_rate is the zero-power intercept of the
// summed window count rate, so it subsumes intrinsic detector darks.
struct NoiseModel {
  double base_dark_rate = 0.0;  // counts/s summed over detector windows
  double raman_slope = 0.0;     // counts/s per watt of per-node launch power

  void validate() const;
};

// background counts/s summed over the four detector windows at the given
// per-node average launch power
double noise_rate(const NoiseModel& model, double launch_power_w);

double received_power(double launch_w, double loss_db);

// whole channels supported by the budget; nearest integer so that a budget
// quoted to three digits still yields the intended count
long channel_capacity_estimate(double total_power_w, double per_channel_w);

// residual classical power surviving both isolation stages
double leakage_power(double launch_w, const IsolationBudget& budget);

// power carried by one photon per qubit slot; leakage below this floor is
// negligible next to Raman scattering
double photon_equivalent_power(double wavelength_nm, double qubit_rate_hz);

// Scenario with the detectors' background set from the noise model: the
// model's intercept replaces the scenario dark rate (it already contains it)
// and the summed rate is split evenly over the 4 (detector, bin) windows.
ScenarioConfig apply_coexistence(const ScenarioConfig& scenario, const NoiseModel& model,
                                 double launch_power_w);

}  // namespace mdiqkd
