#pragma once

#include <mdiqkd/coexistence.hpp>
#include <mdiqkd/core.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mdiqkd {

// Gain tables travel as CSV with the exact header "basis,mu_a,mu_b,Q,E".
// One row per (basis, intensity_a, intensity_b) cell, 18 rows, intensities
// written by name. Loading requires every cell exactly once.
GainTable load_gain_table(std::istream& in, const std::string& origin = "<stream>");
GainTable load_gain_table(const std::string& path);
void save_gain_table(std::ostream& out, const GainTable& table);
void save_gain_table(const std::string& path, const GainTable& table);

// Scenario configs are JSON with unit-suffixed keys (loss_db_*, window_ps,
// dark_rate_cps, qubit_rate_hz, phi_rad). Unknown keys are rejected; missing
// state entries fall back to the ideal preparation. Values survive a
// save/load round trip bit for bit.
ScenarioConfig scenario_from_json_text(const std::string& text,
                                       const std::string& origin = "<string>");
std::string scenario_to_json_text(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::string& path);
void save_scenario(const std::string& path, const ScenarioConfig& cfg);

enum class SweepAxis { Loss, Power };

SweepAxis sweep_axis_from_string(std::string_view s);
const char* to_string(SweepAxis a);

struct SweepSpec {
  SweepAxis axis = SweepAxis::Loss;
  /// loss axis: total link loss in dB; power axis: per-node launch in uW
  std::vector<double> points;

  /// points strictly increasing; may be empty (no sweep requested)
  void validate() const;
};

/// Everything one command invocation needs: the physics scenario, the
/// launch-power background law, the wavelength plan, and run plumbing.
struct RunConfig {
  ScenarioConfig scenario;
  NoiseModel noise;
  ChannelPlan plan;
  SweepSpec sweep;
  std::string output_path;
  uint64_t seed = 1;
  int64_t rounds = 1'000'000;

  void validate() const;
};

// Channel plans and run configs are JSON in the same unit-suffixed style
// (wavelength_nm, launch_uw). A run config embeds the scenario either inline
// under "scenario" or by file reference under "scenario_path".
ChannelPlan channel_plan_from_json_text(const std::string& text,
                                        const std::string& origin = "<string>");
std::string channel_plan_to_json_text(const ChannelPlan& plan);
ChannelPlan load_channel_plan(const std::string& path);
void save_channel_plan(const std::string& path, const ChannelPlan& plan);

RunConfig run_config_from_json_text(const std::string& text,
                                    const std::string& origin = "<string>");
std::string run_config_to_json_text(const RunConfig& cfg);
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);

}  // namespace mdiqkd
