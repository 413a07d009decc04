// Command-line front end: every operation the library offers, driven by a
// JSON config plus flags, with deterministic CSV/report output.

#include <CLI11.hpp>

#include <mdiqkd/coexistence.hpp>
#include <mdiqkd/config_io.hpp>
#include <mdiqkd/decoy.hpp>
#include <mdiqkd/fit.hpp>
#include <mdiqkd/forward.hpp>
#include <mdiqkd/lp.hpp>
#include <mdiqkd/pulse_sim.hpp>
#include <mdiqkd/session.hpp>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace mdiqkd;

namespace {

/// Flag misuse as opposed to bad data; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int thread_count() {
  const char* env = std::getenv("MDIQKD_THREADS");
  if (!env) {
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
  }
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1)
    throw UsageError("MDIQKD_THREADS must be a positive integer");
  return static_cast<int>(v);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// --config accepts either a bare scenario document or a full run config;
/// the two schemas share no top-level keys.
RunConfig load_any_config(const std::string& path) {
  std::string text = read_file(path);
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  if (root.is_object() &&
      (root.contains("alice") || root.contains("bob") || root.contains("link") ||
       root.contains("detection"))) {
    RunConfig rc;
    rc.scenario = scenario_from_json_text(text, path);
    return rc;
  }
  return run_config_from_json_text(text, path);
}

struct CommonFlags {
  std::string config_path;
  std::string output_path;
  std::string format = "csv";
  std::optional<uint64_t> seed;
  std::optional<int64_t> rounds;

  RunConfig load() const {
    if (config_path.empty()) throw UsageError("missing --config");
    RunConfig rc = load_any_config(config_path);
    if (seed) rc.seed = *seed;
    if (rounds) rc.rounds = *rounds;
    if (!output_path.empty()) rc.output_path = output_path;
    if (format != "csv") throw UsageError("unsupported --format '" + format + "'");
    return rc;
  }
};

void add_common(CLI::App* sub, CommonFlags& c) {
  sub->add_option("--config", c.config_path, "scenario or run config JSON");
  sub->add_option("--output", c.output_path, "output file (default: stdout)");
  sub->add_option("--format", c.format, "output format (csv)");
  sub->add_option("--seed", c.seed, "RNG seed override");
  sub->add_option("--rounds", c.rounds, "round count override");
}

/// Writes to the path when set, otherwise to stdout.
class OutputTarget {
 public:
  explicit OutputTarget(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error(path + ": cannot open for writing");
      path_ = path;
    }
  }
  std::ostream& stream() { return path_.empty() ? std::cout : file_; }
  void finish() {
    if (!path_.empty() && !file_) throw std::runtime_error(path_ + ": write failed");
  }

 private:
  std::ofstream file_;
  std::string path_;
};

void print_decoy(std::ostream& os, const DecoyResult& d) {
  char buf[400];
  std::snprintf(buf, sizeof buf,
                "y11_z_lower %.9e\n"
                "y11_x_lower %.9e\n"
                "b11_x_upper %.9e\n"
                "s11_z_lower %.9e\n"
                "e11_x_upper %.9e\n"
                "r %.9e\n"
                "r_clamped %.9e\n"
                "degenerate_e11 %d\n",
                d.y11_z_lower, d.y11_x_lower, d.b11_x_upper, d.s11_z_lower,
                d.e11_x_upper, d.r, d.r_clamped, d.degenerate_e11 ? 1 : 0);
  os << buf;
}

double background_cps(const ScenarioConfig& sc) {
  return sc.detection.dark_rate + sc.detection.noise_rate;
}

// ---------------------------------------------------------------- gains

void cmd_gains(const CommonFlags& flags) {
  RunConfig rc = flags.load();
  GainTable table = full_gain_table(rc.scenario);
  OutputTarget out(rc.output_path);
  save_gain_table(out.stream(), table);
  out.finish();
}

// ----------------------------------------------------------- montecarlo

std::string counts_path_for(const std::string& table_path) {
  std::string base = table_path;
  size_t dot = base.find_last_of('.');
  size_t slash = base.find_last_of('/');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
    base.resize(dot);
  return base + ".counts.csv";
}

void cmd_montecarlo(const CommonFlags& flags) {
  RunConfig rc = flags.load();
  if (rc.rounds < 1) throw UsageError("montecarlo needs --rounds >= 1");
  SimSummary summary = simulate_batch(rc.scenario, rc.rounds, rc.seed, thread_count());
  EmpiricalTable emp = empirical_gain_table(summary);

  OutputTarget out(rc.output_path);
  save_gain_table(out.stream(), emp.table);
  out.finish();

  if (rc.output_path.empty()) {
    std::cerr << "montecarlo: counts table skipped; pass --output to write it\n";
    return;
  }
  std::string counts_path = counts_path_for(rc.output_path);
  std::ofstream counts(counts_path);
  if (!counts) throw std::runtime_error(counts_path + ": cannot open for writing");
  counts << "basis,mu_a,mu_b,sent,psi_minus,errors,stderr_q\n";
  char buf[64];
  for (Basis b : kBases)
    for (Intensity a : kIntensities)
      for (Intensity bb : kIntensities) {
        int i = GainTable::index(b, a, bb);
        const CellCounts& c = summary.cells[i];
        std::snprintf(buf, sizeof buf, "%.9e", emp.stderr_q[i]);
        counts << to_string(b) << ',' << to_string(a) << ',' << to_string(bb) << ','
               << c.sent << ',' << c.psi_minus << ',' << c.errors << ',' << buf << '\n';
      }
  if (!counts) throw std::runtime_error(counts_path + ": write failed");
}

// ---------------------------------------------------------------- decoy

struct DecoyFlags {
  std::string table_path;
  std::optional<double> mu_signal, mu_decoy, mu_vacuum;
  double f = 1.12;
  int n_cut = 10;
};

void cmd_decoy(const CommonFlags& flags, const DecoyFlags& dk) {
  if (dk.table_path.empty()) throw UsageError("decoy needs --table FILE");
  GainTable table = load_gain_table(dk.table_path);

  std::array<double, 3> mu_a{}, mu_b{};
  if (!flags.config_path.empty()) {
    RunConfig rc = load_any_config(flags.config_path);
    mu_a = rc.scenario.alice.mu;
    mu_b = rc.scenario.bob.mu;
  } else if (dk.mu_signal && dk.mu_decoy) {
    mu_a = {*dk.mu_signal, *dk.mu_decoy, dk.mu_vacuum.value_or(0.0)};
    mu_b = mu_a;
  } else {
    throw UsageError("decoy needs --config or --mu-signal and --mu-decoy");
  }
  if (dk.mu_signal) mu_a[0] = mu_b[0] = *dk.mu_signal;
  if (dk.mu_decoy) mu_a[1] = mu_b[1] = *dk.mu_decoy;
  if (dk.mu_vacuum) mu_a[2] = mu_b[2] = *dk.mu_vacuum;

  DecoyResult res = analyze(table, mu_a, mu_b, dk.f, dk.n_cut);
  OutputTarget out(flags.output_path);
  print_decoy(out.stream(), res);
  out.finish();
}

// -------------------------------------------------------------- keyrate

void cmd_keyrate(const CommonFlags& flags) {
  RunConfig rc = flags.load();
  GainTable table = decoy_consistent_gain_table(rc.scenario);
  DecoyResult res = analyze(table, rc.scenario.alice.mu, rc.scenario.bob.mu);
  OutputTarget out(rc.output_path);
  char buf[128];
  std::snprintf(buf, sizeof buf, "total_loss_db %.9e\nnoise_cps %.9e\n",
                rc.scenario.link.total_loss_db(), background_cps(rc.scenario));
  out.stream() << buf;
  print_decoy(out.stream(), res);
  out.finish();
}

// --------------------------------------------------------------- sweeps

struct SweepRow {
  double axis = 0.0;
  DecoyResult res;
  double noise_cps = 0.0;
  bool ok = false;
  std::string error;
};

void run_sweep(const CommonFlags& flags, SweepAxis axis,
               const std::vector<double>& cli_points) {
  RunConfig rc = flags.load();
  std::vector<double> points = cli_points.empty() ? rc.sweep.points : cli_points;
  if (!cli_points.empty()) {
    rc.sweep.points = cli_points;
  } else if (!rc.sweep.points.empty() && rc.sweep.axis != axis) {
    throw UsageError(std::string("config sweep axis is '") + to_string(rc.sweep.axis) +
                     "', expected '" + to_string(axis) + "'");
  }
  rc.sweep.axis = axis;
  rc.sweep.validate();
  if (points.empty()) throw UsageError("empty sweep grid; pass --points or config sweep");

  if (axis == SweepAxis::Power && rc.noise.base_dark_rate == 0.0 &&
      rc.noise.raman_slope == 0.0) {
    // no launch-power law configured: hold the scenario's background constant
    rc.noise.base_dark_rate = background_cps(rc.scenario) * 4.0;
    std::cerr << "warning: no noise model in config; background held constant over power\n";
  }

  std::vector<SweepRow> rows(points.size());
  auto eval_point = [&](size_t i) {
    SweepRow& row = rows[i];
    row.axis = points[i];
    try {
      ScenarioConfig sc = axis == SweepAxis::Loss
                              ? scenario_at_loss(rc.scenario, points[i])
                              : apply_coexistence(rc.scenario, rc.noise, points[i] * 1e-6);
      GainTable table = decoy_consistent_gain_table(sc);
      row.res = analyze(table, sc.alice.mu, sc.bob.mu);
      row.noise_cps = background_cps(sc);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };

  int threads = std::min<int>(thread_count(), static_cast<int>(points.size()));
  if (threads <= 1) {
    for (size_t i = 0; i < points.size(); ++i) eval_point(i);
  } else {
    std::vector<std::thread> workers;
    for (int w = 0; w < threads; ++w)
      workers.emplace_back([&, w] {
        for (size_t i = static_cast<size_t>(w); i < points.size(); i += threads)
          eval_point(i);
      });
    for (auto& t : workers) t.join();
  }

  // single writer after the parallel section
  OutputTarget out(rc.output_path);
  out.stream() << "axis,R,R_clamped,noise_cps\n";
  char buf[160];
  size_t failures = 0;
  for (const SweepRow& row : rows) {
    if (!row.ok) {
      ++failures;
      std::cerr << "sweep point " << row.axis << " failed: " << row.error << '\n';
      continue;
    }
    std::snprintf(buf, sizeof buf, "%.9e,%.9e,%.9e,%.9e\n", row.axis, row.res.r,
                  row.res.r_clamped, row.noise_cps);
    out.stream() << buf;
  }
  out.finish();

  if (axis == SweepAxis::Loss) {
    for (size_t i = 1; i < rows.size(); ++i)
      if (rows[i].ok && rows[i - 1].ok &&
          rows[i].res.r_clamped > rows[i - 1].res.r_clamped)
        std::cerr << "warning: key rate rises between " << rows[i - 1].axis << " and "
                  << rows[i].axis << " dB\n";
  }
  if (failures == rows.size()) throw std::runtime_error("every sweep point failed");
}

// ------------------------------------------------------------------ fit

struct FitFlags {
  std::vector<std::string> observations;  // "table.csv,loss_a_db,loss_b_db"
  std::string power_rows;                 // "uw:rate,uw:rate,..."
  double baseline_uw = 0.0;
  double gauge = 0.55;
  int max_iter = 6000;
};

FitObservation parse_observation(const std::string& spec) {
  size_t c1 = spec.find(',');
  size_t c2 = c1 == std::string::npos ? std::string::npos : spec.find(',', c1 + 1);
  if (c2 == std::string::npos)
    throw UsageError("--observation wants 'table.csv,loss_a_db,loss_b_db'");
  FitObservation obs;
  std::string path = spec.substr(0, c1);
  try {
    obs.loss_db_alice = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    obs.loss_db_bob = std::stod(spec.substr(c2 + 1));
  } catch (const std::exception&) {
    throw UsageError("--observation losses must be numbers in dB");
  }
  obs.table = load_gain_table(path);
  return obs;
}

std::vector<PowerPoint> parse_power_rows(const std::string& spec) {
  std::vector<PowerPoint> rows;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw UsageError("--power-rows wants 'uw:rate,uw:rate,...'");
    try {
      rows.push_back({std::stod(item.substr(0, colon)) * 1e-6,
                      std::stod(item.substr(colon + 1))});
    } catch (const std::exception&) {
      throw UsageError("--power-rows entries must be numeric");
    }
  }
  return rows;
}

void cmd_fit(const CommonFlags& flags, const FitFlags& ff) {
  RunConfig rc = flags.load();
  if (ff.observations.size() < 2)
    throw UsageError("fit needs at least two --observation entries");
  std::vector<FitObservation> obs;
  for (const std::string& spec : ff.observations) obs.push_back(parse_observation(spec));

  FitOptions options;
  options.mu_signal_gauge = ff.gauge;
  options.max_iter = ff.max_iter;
  FitResult fr = fit_scenario(rc.scenario, obs, options);
  if (!fr.converged)
    std::cerr << "warning: fit hit the iteration limit; reporting best so far\n";

  std::optional<RamanFitResult> raman;
  if (!ff.power_rows.empty()) {
    if (!(ff.baseline_uw > 0.0))
      throw UsageError("--power-rows needs --baseline-uw > 0");
    raman = fit_raman_slope(fr.scenario, parse_power_rows(ff.power_rows),
                            ff.baseline_uw * 1e-6);
  }

  // report on stdout; fitted scenario JSON to --output (or stdout without one)
  std::ostream& rep = flags.output_path.empty() ? std::cerr : std::cout;
  char buf[64];
  auto line = [&](const char* k, double v) {
    std::snprintf(buf, sizeof buf, "%.9e", v);
    rep << k << ' ' << buf << '\n';
  };
  rep << "converged " << (fr.converged ? 1 : 0) << '\n';
  rep << "iterations " << fr.iterations << '\n';
  line("residual", fr.residual);
  line("mu_signal_alice", fr.mu_signal_alice);
  line("mu_signal_bob", fr.mu_signal_bob);
  line("mu_decoy_alice", fr.mu_decoy_alice);
  line("mu_decoy_bob", fr.mu_decoy_bob);
  line("det_efficiency", fr.det_efficiency);
  line("overlap", fr.overlap);
  line("base_dark_rate_cps", fr.base_dark_rate);
  if (raman) {
    line("raman_slope_cps_per_w", raman->noise.raman_slope);
    line("raman_residual", raman->residual);
  }

  // curvature diagnostics: RMS log-gain shift when a parameter moves +1%;
  // near-zero means the data barely constrains that direction
  auto probe = [&](const char* name, auto&& mutate) {
    ScenarioConfig bumped = fr.scenario;
    mutate(bumped);
    double ss = 0.0;
    int terms = 0;
    for (const FitObservation& o : obs) {
      ScenarioConfig at = scenario_at_loss(bumped, o.loss_db_alice + o.loss_db_bob);
      ScenarioConfig ref =
          scenario_at_loss(fr.scenario, o.loss_db_alice + o.loss_db_bob);
      GainTable gb = full_gain_table(at);
      GainTable gr = full_gain_table(ref);
      for (int i = 0; i < 18; ++i) {
        if (gr.q[i] <= 0.0 || gb.q[i] <= 0.0) continue;
        double d = std::log(gb.q[i]) - std::log(gr.q[i]);
        double de = gb.e[i] - gr.e[i];
        ss += d * d + de * de;
        ++terms;
      }
    }
    std::snprintf(buf, sizeof buf, "%.3e", terms > 0 ? std::sqrt(ss / terms) : 0.0);
    rep << "sensitivity " << name << ' ' << buf << '\n';
  };
  probe("mu_signal", [](ScenarioConfig& sc) {
    sc.alice.mu[0] *= 1.01;
    sc.bob.mu[0] *= 1.01;
  });
  probe("mu_decoy", [](ScenarioConfig& sc) {
    sc.alice.mu[1] *= 1.01;
    sc.bob.mu[1] *= 1.01;
  });
  probe("det_efficiency",
        [](ScenarioConfig& sc) { sc.detection.det_efficiency *= 1.01; });
  probe("overlap", [](ScenarioConfig& sc) {
    sc.detection.visibility = std::min(1.0, sc.detection.visibility * 1.01);
  });
  probe("background", [](ScenarioConfig& sc) {
    sc.detection.dark_rate *= 1.01;
    sc.detection.noise_rate *= 1.01;
  });

  OutputTarget out(flags.output_path);
  out.stream() << scenario_to_json_text(fr.scenario);
  out.finish();
}

// -------------------------------------------------------------- session

struct SessionFlags {
  double latency_s = 1e-3;
  double reveal_x = 1.0;
  double reveal_z = 0.1;
  std::string log_path;
};

void cmd_session(const CommonFlags& flags, const SessionFlags& sf) {
  RunConfig rc = flags.load();
  if (rc.rounds < 0) throw UsageError("session needs --rounds >= 0");

  SessionOptions options;
  options.reveal_fraction_x = sf.reveal_x;
  options.reveal_fraction_z = sf.reveal_z;
  std::ofstream log_file;
  if (!sf.log_path.empty()) {
    log_file.open(sf.log_path);
    if (!log_file) throw std::runtime_error(sf.log_path + ": cannot open for writing");
    options.event_log = &log_file;
  }

  SessionResult res = run_session(rc.scenario, rc.rounds, rc.seed, sf.latency_s, options);
  if (options.event_log && !log_file)
    throw std::runtime_error(sf.log_path + ": write failed");

  OutputTarget out(rc.output_path);
  std::ostream& os = out.stream();
  os << "rounds " << res.stats.rounds << '\n'
     << "announcements " << res.stats.announcements << '\n'
     << "retained " << res.stats.retained << '\n'
     << "revealed " << res.stats.revealed << '\n'
     << "expired " << res.stats.expired << '\n'
     << "causality_violations " << res.stats.causality_violations << '\n'
     << "virtual_end_ps " << res.stats.virtual_end_ps << '\n'
     << "decoy_feasible " << (res.decoy_feasible ? 1 : 0) << '\n';
  print_decoy(os, res.decoy);
  out.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"three-node measurement-device-independent QKD toolkit"};
  app.require_subcommand(1);

  CommonFlags cm_gains, cm_mc, cm_decoy, cm_keyrate, cm_sweep_loss, cm_sweep_power,
      cm_fit, cm_session;
  DecoyFlags decoy_flags;
  FitFlags fit_flags;
  SessionFlags session_flags;
  std::vector<double> sweep_points_loss, sweep_points_power;

  CLI::App* gains = app.add_subcommand("gains", "model gain/QBER table from a config");
  add_common(gains, cm_gains);
  gains->callback([&] { cmd_gains(cm_gains); });

  CLI::App* mc = app.add_subcommand("montecarlo", "pulse-level simulation tallies");
  add_common(mc, cm_mc);
  mc->callback([&] { cmd_montecarlo(cm_mc); });

  CLI::App* decoy = app.add_subcommand("decoy", "decoy-state bounds from a gain table");
  add_common(decoy, cm_decoy);
  decoy->add_option("--table", decoy_flags.table_path, "gain table CSV");
  decoy->add_option("--mu-signal", decoy_flags.mu_signal, "signal intensity (both nodes)");
  decoy->add_option("--mu-decoy", decoy_flags.mu_decoy, "decoy intensity (both nodes)");
  decoy->add_option("--mu-vacuum", decoy_flags.mu_vacuum, "vacuum intensity (both nodes)");
  decoy->add_option("--f", decoy_flags.f, "error-correction inefficiency");
  decoy->add_option("--n-cut", decoy_flags.n_cut, "photon-number cutoff");
  decoy->callback([&] { cmd_decoy(cm_decoy, decoy_flags); });

  CLI::App* keyrate = app.add_subcommand("keyrate", "full pipeline at the config point");
  add_common(keyrate, cm_keyrate);
  keyrate->callback([&] { cmd_keyrate(cm_keyrate); });

  CLI::App* sweep_loss = app.add_subcommand("sweep-loss", "key rate vs total link loss");
  add_common(sweep_loss, cm_sweep_loss);
  sweep_loss->add_option("--points", sweep_points_loss, "total loss grid in dB")
      ->delimiter(',');
  sweep_loss->callback(
      [&] { run_sweep(cm_sweep_loss, SweepAxis::Loss, sweep_points_loss); });

  CLI::App* sweep_power = app.add_subcommand("sweep-power", "key rate vs launch power");
  add_common(sweep_power, cm_sweep_power);
  sweep_power->add_option("--points", sweep_points_power, "launch power grid in uW")
      ->delimiter(',');
  sweep_power->callback(
      [&] { run_sweep(cm_sweep_power, SweepAxis::Power, sweep_points_power); });

  CLI::App* fit = app.add_subcommand("fit", "calibrate a scenario against measured tables");
  add_common(fit, cm_fit);
  fit->add_option("--observation", fit_flags.observations,
                  "measured table: 'table.csv,loss_a_db,loss_b_db' (repeat)");
  fit->add_option("--power-rows", fit_flags.power_rows,
                  "launch-power key rates 'uw:rate,...' for the noise slope");
  fit->add_option("--baseline-uw", fit_flags.baseline_uw, "baseline launch power in uW");
  fit->add_option("--gauge", fit_flags.gauge, "signal-intensity gauge (geometric mean)");
  fit->add_option("--max-iter", fit_flags.max_iter, "optimizer iteration cap");
  fit->callback([&] { cmd_fit(cm_fit, fit_flags); });

  CLI::App* session = app.add_subcommand("session", "event-driven protocol run");
  add_common(session, cm_session);
  session->add_option("--latency", session_flags.latency_s, "classical channel latency, s");
  session->add_option("--reveal-x", session_flags.reveal_x, "X-basis reveal fraction");
  session->add_option("--reveal-z", session_flags.reveal_z, "Z-basis reveal fraction");
  session->add_option("--log", session_flags.log_path, "event log file");
  session->callback([&] { cmd_session(cm_session, session_flags); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const lp::Infeasible& e) {
    std::cerr << "analysis infeasible: " << e.what() << '\n';
    for (const auto& v : e.violations())
      std::cerr << "  constraint " << v.row << " off by " << v.residual << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
