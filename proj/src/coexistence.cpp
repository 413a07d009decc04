#include <mdiqkd/coexistence.hpp>

#include <cmath>
#include <stdexcept>

namespace mdiqkd {

ChannelDirection direction_from_string(std::string_view s) {
  if (s == "co") return ChannelDirection::Co;
  if (s == "counter") return ChannelDirection::Counter;
  throw std::invalid_argument("unknown channel direction: " + std::string(s));
}

ChannelRole role_from_string(std::string_view s) {
  if (s == "quantum") return ChannelRole::Quantum;
  if (s == "data") return ChannelRole::Data;
  if (s == "control") return ChannelRole::Control;
  if (s == "stabilization") return ChannelRole::Stabilization;
  throw std::invalid_argument("unknown channel role: " + std::string(s));
}

const char* to_string(ChannelDirection d) {
  return d == ChannelDirection::Co ? "co" : "counter";
}

const char* to_string(ChannelRole r) {
  switch (r) {
    case ChannelRole::Quantum: return "quantum";
    case ChannelRole::Data: return "data";
    case ChannelRole::Control: return "control";
    default: return "stabilization";
  }
}

void ChannelPlan::validate() const {
  int quantum = 0;
  for (const Channel& c : channels) {
    if (!(c.wavelength_nm > 0.0))
      throw std::invalid_argument("channel wavelength must be positive: " + c.name);
    if (!(c.launch_power_w >= 0.0) || !std::isfinite(c.launch_power_w))
      throw std::invalid_argument("channel launch power must be finite and >= 0: " + c.name);
    if (c.role == ChannelRole::Quantum) {
      ++quantum;
      if (c.wavelength_nm != 1310.0)
        throw std::invalid_argument("quantum channel must sit at 1310 nm: " + c.name);
    }
    if (c.role == ChannelRole::Data && !(c.launch_power_w > 0.0))
      throw std::invalid_argument("data channel must carry power: " + c.name);
  }
  if (quantum != 1)
    throw std::invalid_argument("channel plan needs exactly one quantum channel");
}

double ChannelPlan::co_propagating_power_w() const {
  double total = 0.0;
  for (const Channel& c : channels)
    if (c.direction == ChannelDirection::Co && c.role != ChannelRole::Quantum)
      total += c.launch_power_w;
  return total;
}

void IsolationBudget::validate() const {
  if (!(wdm_isolation_db >= 0.0) || !(filter_isolation_db >= 0.0))
    throw std::invalid_argument("isolation must be >= 0 dB");
  if (!(filter_bandwidth_nm > 0.0))
    throw std::invalid_argument("filter bandwidth must be positive");
}

void NoiseModel::validate() const {
  if (!(base_dark_rate >= 0.0) || !(raman_slope >= 0.0))
    throw std::invalid_argument("noise model parameters must be >= 0");
}

double noise_rate(const NoiseModel& model, double launch_power_w) {
  if (!(launch_power_w >= 0.0))
    throw std::invalid_argument("launch power must be >= 0");
  return model.base_dark_rate + model.raman_slope * launch_power_w;
}

double received_power(double launch_w, double loss_db) {
  if (!(launch_w >= 0.0)) throw std::invalid_argument("launch power must be >= 0");
  return launch_w * db_to_transmittance(loss_db);
}

long channel_capacity_estimate(double total_power_w, double per_channel_w) {
  if (!(per_channel_w > 0.0))
    throw std::invalid_argument("per-channel launch power must be positive");
  if (!(total_power_w >= 0.0))
    throw std::invalid_argument("power budget must be >= 0");
  return std::lround(total_power_w / per_channel_w);
}

double leakage_power(double launch_w, const IsolationBudget& budget) {
  budget.validate();
  return launch_w * db_to_transmittance(budget.wdm_isolation_db + budget.filter_isolation_db);
}

double photon_equivalent_power(double wavelength_nm, double qubit_rate_hz) {
  constexpr double kPlanck = 6.62607015e-34;
  constexpr double kLightSpeed = 299792458.0;
  if (!(wavelength_nm > 0.0)) throw std::invalid_argument("wavelength must be positive");
  return kPlanck * kLightSpeed / (wavelength_nm * 1e-9) * qubit_rate_hz;
}

ScenarioConfig apply_coexistence(const ScenarioConfig& scenario, const NoiseModel& model,
                                 double launch_power_w) {
  model.validate();
  ScenarioConfig out = scenario;
  out.detection.dark_rate = 0.0;
  out.detection.noise_rate = noise_rate(model, launch_power_w) / 4.0;
  return out;
}

}  // namespace mdiqkd
