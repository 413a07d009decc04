#include <mdiqkd/config_io.hpp>

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

using namespace mdiqkd;

TEST_CASE("scenario json round trips bit for bit") {
  ScenarioConfig cfg;
  set_ideal_states(cfg.alice);
  set_ideal_states(cfg.bob);
  cfg.alice.mu = {0.55, 0.042009, 0.0};
  cfg.alice.spec(Basis::Z, 0, Intensity::Signal) = {0.9950, 0.0};
  cfg.alice.spec(Basis::X, 1, Intensity::Decoy) = {0.5040, 3.54};
  cfg.bob.mu = {0.55, 0.044666, 0.0};
  cfg.link.loss_db_alice = 10.5;
  cfg.link.loss_db_bob = 9.0;
  cfg.detection.visibility = 0.847;
  cfg.detection.dark_rate = 150.0;
  cfg.detection.window_ps = 400.0;

  std::string text = scenario_to_json_text(cfg);
  ScenarioConfig back = scenario_from_json_text(text);
  CHECK(back.alice.mu == cfg.alice.mu);
  CHECK(back.bob.mu == cfg.bob.mu);
  CHECK(back.alice.spec(Basis::Z, 0, Intensity::Signal).m == 0.9950);
  CHECK(back.alice.spec(Basis::X, 1, Intensity::Decoy).phi == 3.54);
  CHECK(back.link.loss_db_alice == 10.5);
  CHECK(back.detection.visibility == 0.847);
  CHECK(back.detection.window_ps == 400.0);
  CHECK(scenario_to_json_text(back) == text);
}

TEST_CASE("scenario json fills missing sections with defaults") {
  ScenarioConfig cfg = scenario_from_json_text("{}");
  CHECK(cfg.detection.window_ps == 400.0);
  CHECK(cfg.alice.mu[0] == 0.3);
  // ideal preparations: Z0 all in the early bin, X1 balanced with a pi phase
  CHECK(cfg.alice.spec(Basis::Z, 0, Intensity::Signal).m == 1.0);
  CHECK(cfg.alice.spec(Basis::X, 1, Intensity::Signal).m == 0.5);
  CHECK(cfg.alice.spec(Basis::X, 1, Intensity::Signal).phi ==
        doctest::Approx(std::acos(-1.0)));
}

TEST_CASE("scenario json accepts partial overrides") {
  ScenarioConfig cfg = scenario_from_json_text(R"({
    "link": {"loss_db_bob": 13.0},
    "detection": {"visibility": 0.797},
    "alice": {"mu": {"decoy": 0.05}, "states": {"X1": {"signal": {"phi_rad": 3.2}}}}
  })");
  CHECK(cfg.link.loss_db_alice == 9.75);
  CHECK(cfg.link.loss_db_bob == 13.0);
  CHECK(cfg.detection.visibility == 0.797);
  CHECK(cfg.alice.mu[0] == 0.3);
  CHECK(cfg.alice.mu[1] == 0.05);
  CHECK(cfg.alice.spec(Basis::X, 1, Intensity::Signal).phi == 3.2);
  CHECK(cfg.alice.spec(Basis::X, 1, Intensity::Signal).m == 0.5);
  CHECK(cfg.alice.spec(Basis::X, 0, Intensity::Signal).phi == 0.0);
}

TEST_CASE("scenario json rejects unknown keys and bad shapes") {
  CHECK_THROWS_WITH_AS(scenario_from_json_text(R"({"alicia": {}})"),
                       doctest::Contains("unknown key 'alicia'"), std::runtime_error);
  CHECK_THROWS_WITH_AS(scenario_from_json_text(R"({"detection": {"window": 1}})"),
                       doctest::Contains("unknown key 'window'"), std::runtime_error);
  CHECK_THROWS_WITH_AS(scenario_from_json_text(R"({"link": {"loss_db_alice": "ten"}})"),
                       doctest::Contains("expected a number"), std::runtime_error);
  CHECK_THROWS_WITH_AS(scenario_from_json_text("not json"), doctest::Contains("parse"),
                       std::runtime_error);
  // validation still applies to parsed values
  CHECK_THROWS_AS(scenario_from_json_text(R"({"detection": {"visibility": 1.5}})"),
                  std::invalid_argument);
}

TEST_CASE("channel plan json round trips") {
  ChannelPlan plan;
  plan.channels = {
      {"qkd", 1310.0, 0.0, ChannelDirection::Co, ChannelRole::Quantum},
      {"lan", 1547.72, 4.68e-6, ChannelDirection::Co, ChannelRole::Data},
      {"clock", 1548.51, 1e-6, ChannelDirection::Counter, ChannelRole::Control},
  };
  std::string text = channel_plan_to_json_text(plan);
  ChannelPlan back = channel_plan_from_json_text(text);
  REQUIRE(back.channels.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back.channels[i].name == plan.channels[i].name);
    CHECK(back.channels[i].wavelength_nm == plan.channels[i].wavelength_nm);
    CHECK(back.channels[i].launch_power_w ==
          doctest::Approx(plan.channels[i].launch_power_w).epsilon(1e-12));
    CHECK(back.channels[i].direction == plan.channels[i].direction);
    CHECK(back.channels[i].role == plan.channels[i].role);
  }
  CHECK_THROWS_WITH_AS(
      channel_plan_from_json_text(R"({"channels": [{"role": "quantum", "color": 3}]})"),
      doctest::Contains("unknown key 'color'"), std::runtime_error);
  // plan validation applies on load: no quantum channel
  CHECK_THROWS_AS(channel_plan_from_json_text(
                      R"({"channels": [{"name": "x", "wavelength_nm": 1550.0,
                          "launch_uw": 1.0, "role": "data"}]})"),
                  std::invalid_argument);
}

TEST_CASE("run config json round trips through parse and serialize") {
  RunConfig cfg;
  set_ideal_states(cfg.scenario.alice);
  set_ideal_states(cfg.scenario.bob);
  cfg.scenario.alice.mu = {0.55, 0.042, 0.0};
  cfg.scenario.bob.mu = {0.55, 0.042, 0.0};
  cfg.noise.base_dark_rate = 230000.0;
  cfg.noise.raman_slope = 2.07e9;
  cfg.sweep.axis = SweepAxis::Power;
  cfg.sweep.points = {4.68, 61.7, 155.0, 392.0};
  cfg.seed = 99;
  cfg.rounds = 123456;
  cfg.output_path = "out.csv";

  RunConfig back = run_config_from_json_text(run_config_to_json_text(cfg));
  CHECK(back.scenario.alice.mu == cfg.scenario.alice.mu);
  CHECK(back.noise.base_dark_rate == cfg.noise.base_dark_rate);
  CHECK(back.noise.raman_slope == cfg.noise.raman_slope);
  CHECK(back.sweep.axis == SweepAxis::Power);
  CHECK(back.sweep.points == cfg.sweep.points);
  CHECK(back.seed == 99);
  CHECK(back.rounds == 123456);
  CHECK(back.output_path == "out.csv");

  // a second pass is the identity on the serialized form
  CHECK(run_config_to_json_text(back) == run_config_to_json_text(cfg));
}

TEST_CASE("run config json rejects malformed documents") {
  CHECK_THROWS_WITH_AS(run_config_from_json_text(R"({"noise": {}})"),
                       doctest::Contains("exactly one of"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      run_config_from_json_text(
          R"({"scenario": {}, "scenario_path": "x.json"})"),
      doctest::Contains("exactly one of"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      run_config_from_json_text(
          R"({"scenario": {}, "sweep": {"axis": "loss", "points_uw": [1, 2]}})"),
      doctest::Contains("does not match axis"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      run_config_from_json_text(
          R"({"scenario": {}, "sweep": {"axis": "loss", "points_db": [5, 5]}})"),
      doctest::Contains("strictly increasing"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      run_config_from_json_text(R"({"scenario": {}, "rounds": -3})"),
      doctest::Contains("rounds"), std::runtime_error);
  CHECK_THROWS_WITH_AS(run_config_from_json_text(R"({"scenario": {}, "seed": -1})"),
                       doctest::Contains("nonnegative"), std::runtime_error);
}
