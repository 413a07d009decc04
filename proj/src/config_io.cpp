#include <mdiqkd/config_io.hpp>

#include <json.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mdiqkd {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw std::runtime_error(origin + ": " + what);
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::array<std::string, 5> split5(const std::string& line, const std::string& where) {
  std::array<std::string, 5> out;
  size_t start = 0;
  for (int i = 0; i < 5; ++i) {
    size_t comma = line.find(',', start);
    bool last = (i == 4);
    if (last != (comma == std::string::npos)) fail(where, "expected 5 comma-separated fields");
    out[i] = trim(last ? line.substr(start) : line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) fail(where, "trailing junk in number '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    fail(where, "not a number: '" + s + "'");
  } catch (const std::out_of_range&) {
    fail(where, "number out of range: '" + s + "'");
  }
}

}  // namespace

GainTable load_gain_table(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) fail(origin, "empty file");
  if (trim(line) != "basis,mu_a,mu_b,Q,E")
    fail(origin, "bad header, expected 'basis,mu_a,mu_b,Q,E'");

  GainTable table;
  std::array<bool, 18> seen{};
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = origin + " line " + std::to_string(lineno);
    auto f = split5(line, where);
    Basis b;
    Intensity a, bb;
    try {
      b = parse_basis(f[0]);
      a = parse_intensity(f[1]);
      bb = parse_intensity(f[2]);
    } catch (const std::invalid_argument& e) {
      fail(where, e.what());
    }
    int idx = GainTable::index(b, a, bb);
    if (seen[idx]) fail(where, "duplicate cell");
    seen[idx] = true;
    table.set(b, a, bb, parse_double(f[3], where), parse_double(f[4], where));
  }
  for (int i = 0; i < 18; ++i)
    if (!seen[i]) fail(origin, "missing cells; need all 18 basis/intensity rows");
  table.validate();
  return table;
}

GainTable load_gain_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  return load_gain_table(in, path);
}

void save_gain_table(std::ostream& out, const GainTable& table) {
  out << "basis,mu_a,mu_b,Q,E\n";
  char buf[64];
  for (Basis b : kBases)
    for (Intensity a : kIntensities)
      for (Intensity bb : kIntensities) {
        std::snprintf(buf, sizeof buf, "%.9e,%.9e", table.Q(b, a, bb), table.E(b, a, bb));
        out << to_string(b) << ',' << to_string(a) << ',' << to_string(bb) << ',' << buf
            << '\n';
      }
}

void save_gain_table(const std::string& path, const GainTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  save_gain_table(out, table);
  if (!out) throw std::runtime_error(path + ": write failed");
}

namespace {

const char* const kIntensityKeys[3] = {"signal", "decoy", "vacuum"};
const char* const kStateKeys[4] = {"Z0", "Z1", "X0", "X1"};

void expect_keys(const json& obj, std::initializer_list<const char*> allowed,
                 const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || (it.key() == k);
    if (!ok) fail(where, "unknown key '" + it.key() + "'");
  }
}

double num(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  return v.get<double>();
}

void read_triplet(const json& obj, const char* key, std::array<double, 3>& out,
                  const std::string& where) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  const std::string sub = where + "." + key;
  expect_keys(v, {"signal", "decoy", "vacuum"}, sub);
  for (int i = 0; i < 3; ++i) out[i] = num(v, kIntensityKeys[i], out[i], sub);
}

void read_source(const json& obj, SourceConfig& src, const std::string& where) {
  expect_keys(obj, {"mu", "p_basis_z", "p_intensity", "states"}, where);
  read_triplet(obj, "mu", src.mu, where);
  src.p_basis_z = num(obj, "p_basis_z", src.p_basis_z, where);
  read_triplet(obj, "p_intensity", src.p_intensity, where);
  if (!obj.contains("states")) return;
  const json& states = obj.at("states");
  expect_keys(states, {"Z0", "Z1", "X0", "X1"}, where + ".states");
  for (int s = 0; s < 4; ++s) {
    if (!states.contains(kStateKeys[s])) continue;
    const json& per_int = states.at(kStateKeys[s]);
    const std::string sub = where + ".states." + kStateKeys[s];
    expect_keys(per_int, {"signal", "decoy", "vacuum"}, sub);
    Basis b = (s < 2) ? Basis::Z : Basis::X;
    int bit = s % 2;
    for (int i = 0; i < 3; ++i) {
      if (!per_int.contains(kIntensityKeys[i])) continue;
      const json& spec = per_int.at(kIntensityKeys[i]);
      const std::string leaf = sub + "." + kIntensityKeys[i];
      expect_keys(spec, {"m", "phi_rad"}, leaf);
      QubitSpec& q = src.spec(b, bit, static_cast<Intensity>(i));
      q.m = num(spec, "m", q.m, leaf);
      q.phi = num(spec, "phi_rad", q.phi, leaf);
    }
  }
}

json source_to_json(const SourceConfig& src) {
  json states;
  for (int s = 0; s < 4; ++s) {
    Basis b = (s < 2) ? Basis::Z : Basis::X;
    int bit = s % 2;
    json per_int;
    for (int i = 0; i < 3; ++i) {
      const QubitSpec& q = src.spec(b, bit, static_cast<Intensity>(i));
      per_int[kIntensityKeys[i]] = {{"m", q.m}, {"phi_rad", q.phi}};
    }
    states[kStateKeys[s]] = per_int;
  }
  return json{
      {"mu",
       {{"signal", src.mu[0]}, {"decoy", src.mu[1]}, {"vacuum", src.mu[2]}}},
      {"p_basis_z", src.p_basis_z},
      {"p_intensity",
       {{"signal", src.p_intensity[0]},
        {"decoy", src.p_intensity[1]},
        {"vacuum", src.p_intensity[2]}}},
      {"states", states},
  };
}

}  // namespace

ScenarioConfig scenario_from_json_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(origin, e.what());
  }
  expect_keys(root, {"alice", "bob", "link", "detection"}, origin);

  ScenarioConfig cfg;
  set_ideal_states(cfg.alice);
  set_ideal_states(cfg.bob);
  if (root.contains("alice")) read_source(root.at("alice"), cfg.alice, origin + ".alice");
  if (root.contains("bob")) read_source(root.at("bob"), cfg.bob, origin + ".bob");

  if (root.contains("link")) {
    const json& link = root.at("link");
    const std::string where = origin + ".link";
    expect_keys(link, {"loss_db_alice", "loss_db_bob"}, where);
    cfg.link.loss_db_alice = num(link, "loss_db_alice", cfg.link.loss_db_alice, where);
    cfg.link.loss_db_bob = num(link, "loss_db_bob", cfg.link.loss_db_bob, where);
  }
  if (root.contains("detection")) {
    const json& det = root.at("detection");
    const std::string where = origin + ".detection";
    expect_keys(det,
                {"det_efficiency", "dark_rate_cps", "noise_rate_cps", "window_ps",
                 "visibility", "qubit_rate_hz"},
                where);
    DetectionConfig& d = cfg.detection;
    d.det_efficiency = num(det, "det_efficiency", d.det_efficiency, where);
    d.dark_rate = num(det, "dark_rate_cps", d.dark_rate, where);
    d.noise_rate = num(det, "noise_rate_cps", d.noise_rate, where);
    d.window_ps = num(det, "window_ps", d.window_ps, where);
    d.visibility = num(det, "visibility", d.visibility, where);
    d.qubit_rate = num(det, "qubit_rate_hz", d.qubit_rate, where);
  }
  cfg.validate();
  return cfg;
}

std::string scenario_to_json_text(const ScenarioConfig& cfg) {
  json root{
      {"alice", source_to_json(cfg.alice)},
      {"bob", source_to_json(cfg.bob)},
      {"link",
       {{"loss_db_alice", cfg.link.loss_db_alice},
        {"loss_db_bob", cfg.link.loss_db_bob}}},
      {"detection",
       {{"det_efficiency", cfg.detection.det_efficiency},
        {"dark_rate_cps", cfg.detection.dark_rate},
        {"noise_rate_cps", cfg.detection.noise_rate},
        {"window_ps", cfg.detection.window_ps},
        {"visibility", cfg.detection.visibility},
        {"qubit_rate_hz", cfg.detection.qubit_rate}}},
  };
  return root.dump(2) + "\n";
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json_text(buf.str(), path);
}

void save_scenario(const std::string& path, const ScenarioConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << scenario_to_json_text(cfg);
  if (!out) throw std::runtime_error(path + ": write failed");
}

SweepAxis sweep_axis_from_string(std::string_view s) {
  if (s == "loss") return SweepAxis::Loss;
  if (s == "power") return SweepAxis::Power;
  throw std::invalid_argument("unknown sweep axis: " + std::string(s));
}

const char* to_string(SweepAxis a) { return a == SweepAxis::Loss ? "loss" : "power"; }

void SweepSpec::validate() const {
  for (size_t i = 1; i < points.size(); ++i)
    if (!(points[i] > points[i - 1]))
      throw std::invalid_argument("sweep points must be strictly increasing");
}

void RunConfig::validate() const {
  scenario.validate();
  noise.validate();
  if (!plan.channels.empty()) plan.validate();
  sweep.validate();
  if (rounds < 0) throw std::invalid_argument("rounds must be >= 0");
}

namespace {

std::string str(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_string()) fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

ChannelPlan plan_from_json(const json& root, const std::string& origin) {
  expect_keys(root, {"channels"}, origin);
  ChannelPlan plan;
  if (!root.contains("channels")) return plan;
  const json& arr = root.at("channels");
  if (!arr.is_array()) fail(origin + ".channels", "expected an array");
  int i = 0;
  for (const json& c : arr) {
    const std::string where = origin + ".channels[" + std::to_string(i++) + "]";
    expect_keys(c, {"name", "wavelength_nm", "launch_uw", "direction", "role"}, where);
    Channel ch;
    if (c.contains("name")) ch.name = str(c, "name", where);
    ch.wavelength_nm = num(c, "wavelength_nm", ch.wavelength_nm, where);
    ch.launch_power_w = num(c, "launch_uw", ch.launch_power_w * 1e6, where) * 1e-6;
    try {
      if (c.contains("direction"))
        ch.direction = direction_from_string(str(c, "direction", where));
      if (c.contains("role")) ch.role = role_from_string(str(c, "role", where));
    } catch (const std::invalid_argument& e) {
      fail(where, e.what());
    }
    plan.channels.push_back(std::move(ch));
  }
  return plan;
}

json plan_to_json(const ChannelPlan& plan) {
  json arr = json::array();
  for (const Channel& c : plan.channels)
    arr.push_back({{"name", c.name},
                   {"wavelength_nm", c.wavelength_nm},
                   {"launch_uw", c.launch_power_w * 1e6},
                   {"direction", to_string(c.direction)},
                   {"role", to_string(c.role)}});
  return json{{"channels", arr}};
}

}  // namespace

ChannelPlan channel_plan_from_json_text(const std::string& text,
                                        const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(origin, e.what());
  }
  ChannelPlan plan = plan_from_json(root, origin);
  plan.validate();
  return plan;
}

std::string channel_plan_to_json_text(const ChannelPlan& plan) {
  return plan_to_json(plan).dump(2) + "\n";
}

ChannelPlan load_channel_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return channel_plan_from_json_text(buf.str(), path);
}

void save_channel_plan(const std::string& path, const ChannelPlan& plan) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << channel_plan_to_json_text(plan);
  if (!out) throw std::runtime_error(path + ": write failed");
}

RunConfig run_config_from_json_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(origin, e.what());
  }
  expect_keys(root,
              {"scenario", "scenario_path", "noise", "plan", "sweep", "output_path",
               "seed", "rounds"},
              origin);
  if (root.contains("scenario") == root.contains("scenario_path"))
    fail(origin, "need exactly one of 'scenario' or 'scenario_path'");

  RunConfig cfg;
  if (root.contains("scenario")) {
    cfg.scenario = scenario_from_json_text(root.at("scenario").dump(), origin + ".scenario");
  } else {
    cfg.scenario = load_scenario(str(root, "scenario_path", origin));
  }
  if (root.contains("noise")) {
    const json& n = root.at("noise");
    const std::string where = origin + ".noise";
    expect_keys(n, {"base_dark_rate_cps", "raman_slope_cps_per_w"}, where);
    cfg.noise.base_dark_rate = num(n, "base_dark_rate_cps", cfg.noise.base_dark_rate, where);
    cfg.noise.raman_slope = num(n, "raman_slope_cps_per_w", cfg.noise.raman_slope, where);
  }
  if (root.contains("plan")) cfg.plan = plan_from_json(root.at("plan"), origin + ".plan");
  if (root.contains("sweep")) {
    const json& s = root.at("sweep");
    const std::string where = origin + ".sweep";
    expect_keys(s, {"axis", "points_db", "points_uw"}, where);
    try {
      if (s.contains("axis")) cfg.sweep.axis = sweep_axis_from_string(str(s, "axis", where));
    } catch (const std::invalid_argument& e) {
      fail(where, e.what());
    }
    const char* points_key =
        cfg.sweep.axis == SweepAxis::Loss ? "points_db" : "points_uw";
    const char* wrong_key =
        cfg.sweep.axis == SweepAxis::Loss ? "points_uw" : "points_db";
    if (s.contains(wrong_key))
      fail(where, std::string("'") + wrong_key + "' does not match axis '" +
                      to_string(cfg.sweep.axis) + "'");
    if (s.contains(points_key)) {
      const json& pts = s.at(points_key);
      if (!pts.is_array()) fail(where + "." + points_key, "expected an array");
      for (const json& p : pts) {
        if (!p.is_number()) fail(where + "." + points_key, "expected numbers");
        cfg.sweep.points.push_back(p.get<double>());
      }
    }
  }
  if (root.contains("output_path")) cfg.output_path = str(root, "output_path", origin);
  if (root.contains("seed")) {
    const json& v = root.at("seed");
    if (!v.is_number_unsigned()) fail(origin + ".seed", "expected a nonnegative integer");
    cfg.seed = v.get<uint64_t>();
  }
  if (root.contains("rounds")) {
    const json& v = root.at("rounds");
    if (!v.is_number_integer()) fail(origin + ".rounds", "expected an integer");
    cfg.rounds = v.get<int64_t>();
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    fail(origin, e.what());
  }
  return cfg;
}

std::string run_config_to_json_text(const RunConfig& cfg) {
  json root{
      {"scenario", json::parse(scenario_to_json_text(cfg.scenario))},
      {"noise",
       {{"base_dark_rate_cps", cfg.noise.base_dark_rate},
        {"raman_slope_cps_per_w", cfg.noise.raman_slope}}},
      {"seed", cfg.seed},
      {"rounds", cfg.rounds},
  };
  if (!cfg.plan.channels.empty()) root["plan"] = plan_to_json(cfg.plan);
  if (!cfg.sweep.points.empty()) {
    json pts = json::array();
    for (double p : cfg.sweep.points) pts.push_back(p);
    const char* key = cfg.sweep.axis == SweepAxis::Loss ? "points_db" : "points_uw";
    root["sweep"] = {{"axis", to_string(cfg.sweep.axis)}, {key, std::move(pts)}};
  }
  if (!cfg.output_path.empty()) root["output_path"] = cfg.output_path;
  return root.dump(2) + "\n";
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return run_config_from_json_text(buf.str(), path);
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << run_config_to_json_text(cfg);
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace mdiqkd
