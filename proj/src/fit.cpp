#include <mdiqkd/fit.hpp>

#include <mdiqkd/decoy.hpp>
#include <mdiqkd/forward.hpp>
#include <mdiqkd/optimize.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mdiqkd {

namespace {

constexpr int kStreams = 4;  // (detector, bin) background windows

int cell(Basis b, Intensity a, Intensity bb) { return GainTable::index(b, a, bb); }

}  // namespace

double noise_from_vacuum_cells(const GainTable& table) {
  double q = 0.5 * (table.q[cell(Basis::Z, Intensity::Vacuum, Intensity::Vacuum)] +
                    table.q[cell(Basis::X, Intensity::Vacuum, Intensity::Vacuum)]);
  if (!(q >= 0.0)) throw std::invalid_argument("vacuum-vacuum gains must be >= 0");
  if (q == 0.0) return 0.0;
  // herald probability from background alone is 2 p^2 (1-p)^2
  double root = std::sqrt(q / 2.0);
  double p = root;
  for (int i = 0; i < 8; ++i) p = root / (1.0 - p);
  return p;
}

FitResult fit_scenario(const ScenarioConfig& base, const std::vector<FitObservation>& observations,
                       const FitOptions& options) {
  // one loss point cannot separate channel background from the dark floor
  if (observations.size() < 2)
    throw std::invalid_argument("fit needs at least two observations at distinct losses");
  base.validate();
  for (const FitObservation& o : observations) {
    o.table.validate();
    if (!(o.loss_db_alice >= 0.0) || !(o.loss_db_bob >= 0.0))
      throw std::invalid_argument("observation losses must be >= 0 dB");
    if (!(o.weight > 0.0)) throw std::invalid_argument("observation weight must be positive");
  }

  const double window_s = base.detection.window_ps * 1e-12;

  // background seeds from the vacuum-vacuum cells; the optimizer refines a
  // two-part law: a channel component following the per-arm transmittance
  // relative to the first observation, plus a fixed dark floor
  std::vector<double> nu_seed(observations.size());
  for (size_t i = 0; i < observations.size(); ++i)
    nu_seed[i] = noise_from_vacuum_cells(observations[i].table);
  std::vector<double> arm_t(observations.size());
  for (size_t i = 0; i < observations.size(); ++i)
    arm_t[i] = db_to_transmittance(observations[i].loss_db_alice -
                                   observations.front().loss_db_alice);

  // Per-cell inverse-variance weights for log-gain residuals: counting noise
  // 1/N with N ~ Q * effective pulses, saturated by a systematic floor from
  // table rounding and model error. Near-empty cells contribute ~nothing.
  const double sys_var = options.systematic_sigma * options.systematic_sigma;
  std::vector<std::array<double, 18>> cell_w(observations.size());
  for (size_t i = 0; i < observations.size(); ++i) {
    for (int c = 0; c < 18; ++c) {
      double q = observations[i].table.q[c];
      cell_w[i][c] = q > 0.0 ? 1.0 / (sys_var + 1.0 / (q * options.effective_pulses)) : 0.0;
    }
  }

  // x = {log As, log Ad, log Bs, log Bd, atanh(2 overlap - 1), log nu_ch,
  //      log nu_dark}; A/B are per-arm flux products mu * det_efficiency
  auto unpack = [](const std::vector<double>& x) {
    struct P {
      double as, ad, bs, bd, overlap, nu_ch, nu_dark;
    } p;
    p.as = std::exp(x[0]);
    p.ad = std::exp(x[1]);
    p.bs = std::exp(x[2]);
    p.bd = std::exp(x[3]);
    p.overlap = 0.5 + 0.5 * std::tanh(x[4]);
    p.nu_ch = std::exp(x[5]);
    p.nu_dark = std::exp(x[6]);
    return p;
  };

  auto eval_table = [&](const FitObservation& o, double nu_i, double as, double ad, double bs,
                        double bd, double overlap) {
    ScenarioConfig sc = base;
    sc.alice.mu = {as, ad, 0.0};
    sc.bob.mu = {bs, bd, 0.0};
    sc.link.loss_db_alice = o.loss_db_alice;
    sc.link.loss_db_bob = o.loss_db_bob;
    sc.detection.det_efficiency = 1.0;
    sc.detection.dark_rate = 0.0;
    sc.detection.noise_rate = nu_i / window_s;
    sc.detection.visibility = overlap;
    return full_gain_table(sc);
  };

  double n_terms = 0.0;
  for (size_t i = 0; i < observations.size(); ++i)
    for (int c = 0; c < 18; ++c) n_terms += 2.0 * cell_w[i][c];
  if (!(n_terms > 0.0)) throw std::invalid_argument("observations carry no usable cells");

  auto objective = [&](const std::vector<double>& x) -> double {
    auto p = unpack(x);
    if (!(p.ad < p.as) || !(p.bd < p.bs)) return std::numeric_limits<double>::infinity();
    if (!(p.nu_ch < 0.1) || !(p.nu_dark < 0.1)) return std::numeric_limits<double>::infinity();
    double ss = 0.0;
    for (size_t i = 0; i < observations.size(); ++i) {
      const FitObservation& o = observations[i];
      double nu_i = p.nu_ch * arm_t[i] + p.nu_dark;
      GainTable model = eval_table(o, nu_i, p.as, p.ad, p.bs, p.bd, p.overlap);
      for (int c = 0; c < 18; ++c) {
        double w = o.weight * cell_w[i][c];
        if (w <= 0.0) continue;
        if (model.q[c] > 0.0) {
          double d = std::log(model.q[c]) - std::log(o.table.q[c]);
          ss += w * d * d;
        } else {
          ss += w * 100.0;
        }
        double de = model.e[c] - o.table.e[c];
        ss += w * options.qber_weight * de * de;
      }
      // the vacuum-vacuum cells anchor the background law; weight them by
      // their approximate event count
      double q_vv = 0.5 * (o.table.q[cell(Basis::Z, Intensity::Vacuum, Intensity::Vacuum)] +
                           o.table.q[cell(Basis::X, Intensity::Vacuum, Intensity::Vacuum)]);
      if (q_vv > 0.0) {
        double model_vv = 2.0 * nu_i * nu_i * (1.0 - nu_i) * (1.0 - nu_i);
        double d = std::log(model_vv) - std::log(q_vv);
        // floor keeps high-loss vacuum cells informative: their digits are
        // published even when the implied event count is below one
        double w_vv = std::max(q_vv * options.effective_pulses, options.vacuum_anchor_floor);
        ss += o.weight * w_vv * d * d;
      }
    }
    return ss;
  };

  std::vector<double> x0 = {std::log(0.2),
                            std::log(0.016),
                            std::log(0.2),
                            std::log(0.016),
                            std::atanh(2.0 * 0.85 - 1.0),
                            std::log(std::max(nu_seed[0], 1e-9)),
                            std::log(std::max(nu_seed[0], 1e-9) / 50.0)};
  NelderMeadOptions nm;
  nm.initial_step = options.initial_step;
  nm.max_iter = options.max_iter;
  NelderMeadResult best = nelder_mead(objective, x0, nm);
  int iterations = best.iterations;
  // restart with a fresh simplex until the optimum stops moving
  for (int round = 0; round < 6; ++round) {
    NelderMeadOptions again = nm;
    again.initial_step = options.initial_step / (2 << round);
    NelderMeadResult next = nelder_mead(objective, best.x, again);
    iterations += next.iterations;
    bool done = best.fx - next.fx <= 1e-9 * (1.0 + std::abs(best.fx));
    if (next.fx < best.fx) best = next;
    if (done) break;
  }

  auto p = unpack(best.x);

  FitResult out;
  double eta = std::min(1.0, std::sqrt(p.as * p.bs) / options.mu_signal_gauge);
  out.mu_signal_alice = p.as / eta;
  out.mu_signal_bob = p.bs / eta;
  out.mu_decoy_alice = p.ad / eta;
  out.mu_decoy_bob = p.bd / eta;
  out.det_efficiency = eta;
  out.overlap = p.overlap;
  out.noise_per_window.resize(observations.size());
  for (size_t i = 0; i < observations.size(); ++i)
    out.noise_per_window[i] = p.nu_ch * arm_t[i] + p.nu_dark;
  out.base_dark_rate = kStreams * (p.nu_ch + p.nu_dark) / window_s;
  out.residual = std::sqrt(best.fx / n_terms);
  out.iterations = iterations;
  out.converged = best.converged;

  out.scenario = base;
  out.scenario.alice.mu = {out.mu_signal_alice, out.mu_decoy_alice, 0.0};
  out.scenario.bob.mu = {out.mu_signal_bob, out.mu_decoy_bob, 0.0};
  out.scenario.link.loss_db_alice = observations.front().loss_db_alice;
  out.scenario.link.loss_db_bob = observations.front().loss_db_bob;
  out.scenario.detection.det_efficiency = eta;
  out.scenario.detection.dark_rate = p.nu_dark / window_s;
  out.scenario.detection.noise_rate = p.nu_ch / window_s;
  out.scenario.detection.visibility = p.overlap;
  out.scenario.validate();
  return out;
}

ScenarioConfig scenario_at_loss(const ScenarioConfig& baseline, double total_loss_db) {
  double base_total = baseline.link.loss_db_alice + baseline.link.loss_db_bob;
  double extra_per_arm = (total_loss_db - base_total) / 2.0;
  ScenarioConfig sc = baseline;
  sc.link.loss_db_alice += extra_per_arm;
  sc.link.loss_db_bob += extra_per_arm;
  if (sc.link.loss_db_alice < 0.0 || sc.link.loss_db_bob < 0.0)
    throw std::invalid_argument("requested total loss would need a negative arm loss");
  // channel-borne background follows the per-arm transmittance in either
  // direction; intrinsic darks (dark_rate) do not move
  sc.detection.noise_rate *= std::pow(10.0, -extra_per_arm / 10.0);
  return sc;
}

RamanFitResult fit_raman_slope(const ScenarioConfig& fitted, const std::vector<PowerPoint>& rows,
                               double baseline_power_w) {
  fitted.validate();
  if (rows.size() < 2) throw std::invalid_argument("need at least two launch-power rows");
  const PowerPoint* baseline = nullptr;
  for (const PowerPoint& r : rows)
    if (r.launch_power_w == baseline_power_w) baseline = &r;
  if (baseline == nullptr || !(baseline->key_rate > 0.0))
    throw std::invalid_argument("rows must include the baseline power with a positive key rate");

  const double stream0 = fitted.detection.dark_rate + fitted.detection.noise_rate;

  auto key_rate_at = [&](double slope_sum, double power) {
    ScenarioConfig sc = fitted;
    sc.detection.dark_rate = 0.0;
    sc.detection.noise_rate =
        std::max(0.0, stream0 + (slope_sum / kStreams) * (power - baseline_power_w));
    return analyze(decoy_consistent_gain_table(sc), sc.alice.mu, sc.bob.mu).r;
  };

  double r_base = key_rate_at(0.0, baseline_power_w);
  if (!(r_base > 0.0))
    throw std::runtime_error("baseline scenario yields no positive key rate; cannot fit slope");

  int n_rows = 0;
  auto badness = [&](double log10_slope) {
    double slope = std::pow(10.0, log10_slope);
    double ss = 0.0;
    n_rows = 0;
    for (const PowerPoint& row : rows) {
      if (row.launch_power_w == baseline_power_w || !(row.key_rate > 0.0)) continue;
      ++n_rows;
      double target = std::log(row.key_rate / baseline->key_rate);
      double r = key_rate_at(slope, row.launch_power_w);
      double model = std::log(std::max(r, r_base * 1e-9) / r_base);
      double d = model - target;
      ss += d * d;
    }
    return ss;
  };

  double best_x = 0.0, best_f = std::numeric_limits<double>::infinity();
  for (double x = 0.0; x <= 13.0; x += 0.25) {
    double f = badness(x);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  }
  double a = best_x - 0.3, b = best_x + 0.3;
  const double gr = 0.6180339887498949;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = badness(c), fd = badness(d);
  for (int it = 0; it < 40; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = badness(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = badness(d);
    }
  }
  double x = 0.5 * (a + b);
  double slope = std::pow(10.0, x);
  double final_f = badness(x);

  RamanFitResult out;
  out.noise.raman_slope = slope;
  out.noise.base_dark_rate = std::max(0.0, kStreams * stream0 - slope * baseline_power_w);
  out.residual = n_rows > 0 ? std::sqrt(final_f / n_rows) : 0.0;
  out.converged = true;
  return out;
}

}  // namespace mdiqkd
