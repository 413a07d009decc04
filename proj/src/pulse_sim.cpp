#include <mdiqkd/pulse_sim.hpp>

#include <mdiqkd/forward.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <vector>

namespace mdiqkd {

SplitMix64 round_rng(uint64_t seed, int64_t round_index) {
  SplitMix64 rng(seed ^ (0xD1B54A32D192ED03ULL * static_cast<uint64_t>(round_index)));
  rng.next();
  return rng;
}

void SimSummary::merge(const SimSummary& other) {
  rounds += other.rounds;
  for (int i = 0; i < 18; ++i) {
    cells[i].sent += other.cells[i].sent;
    cells[i].psi_minus += other.cells[i].psi_minus;
    cells[i].errors += other.cells[i].errors;
  }
}

namespace {

struct Choice {
  Basis basis;
  int bit;
  Intensity intensity;
};

/// Per-node lookup tables so the hot loop touches no trig or sqrt beyond the
/// shared source phase.
struct NodeTables {
  // amplitudes at the beamsplitter per (basis, bit, intensity)
  std::array<std::complex<double>, 2> amp[2][2][3];
  double p_z;
  double cum_int[3];

  NodeTables(const SourceConfig& src, double transmittance) {
    for (int b = 0; b < 2; ++b)
      for (int bit = 0; bit < 2; ++bit)
        for (int i = 0; i < 3; ++i)
          amp[b][bit][i] = pulse_amplitudes(
              src.spec(static_cast<Basis>(b), bit, static_cast<Intensity>(i)),
              src.mu[i] * transmittance);
    p_z = src.p_basis_z;
    cum_int[0] = src.p_intensity[0];
    cum_int[1] = cum_int[0] + src.p_intensity[1];
    cum_int[2] = 1.0;
  }

  Choice draw(SplitMix64& rng) const {
    Choice c;
    c.basis = rng.uniform() < p_z ? Basis::Z : Basis::X;
    c.bit = rng.uniform() < 0.5 ? 0 : 1;
    double u = rng.uniform();
    c.intensity = u < cum_int[0]   ? Intensity::Signal
                  : u < cum_int[1] ? Intensity::Decoy
                                   : Intensity::Vacuum;
    return c;
  }
};

struct Engine {
  NodeTables alice, bob;
  double overlap;
  double nu;

  explicit Engine(const ScenarioConfig& sc)
      : alice(sc.alice,
              db_to_transmittance(sc.link.loss_db_alice) * sc.detection.det_efficiency),
        bob(sc.bob, db_to_transmittance(sc.link.loss_db_bob) * sc.detection.det_efficiency),
        overlap(sc.detection.visibility),
        nu(sc.detection.noise_mean_per_window()) {}

  RoundRecord run(uint64_t seed, int64_t round_index) const {
    SplitMix64 rng = round_rng(seed, round_index);
    RoundRecord rec;
    rec.round_index = round_index;
    Choice a = alice.draw(rng);
    Choice b = bob.draw(rng);
    rec.basis_a = a.basis;
    rec.bit_a = a.bit;
    rec.int_a = a.intensity;
    rec.basis_b = b.basis;
    rec.bit_b = b.bit;
    rec.int_b = b.intensity;

    double theta = 2.0 * std::numbers::pi * rng.uniform();
    auto n = beamsplitter_intensities(
        alice.amp[static_cast<int>(a.basis)][a.bit][static_cast<int>(a.intensity)],
        bob.amp[static_cast<int>(b.basis)][b.bit][static_cast<int>(b.intensity)], overlap,
        theta);
    std::array<std::array<bool, 2>, 2> clicks{};
    for (int d = 0; d < 2; ++d)
      for (int t = 0; t < 2; ++t)
        clicks[d][t] = rng.uniform() < click_probability(n[d][t], nu);
    rec.outcome = coincidence_rule(clicks);
    rec.error = rec.outcome == BsmOutcome::PsiMinus && a.basis == b.basis && a.bit == b.bit;
    return rec;
  }
};

SimSummary run_range(const Engine& eng, uint64_t seed, int64_t begin, int64_t end) {
  SimSummary s;
  s.rounds = end - begin;
  for (int64_t r = begin; r < end; ++r) {
    RoundRecord rec = eng.run(seed, r);
    if (rec.basis_a != rec.basis_b) continue;
    CellCounts& cell = s.cells[GainTable::index(rec.basis_a, rec.int_a, rec.int_b)];
    ++cell.sent;
    if (rec.outcome == BsmOutcome::PsiMinus) {
      ++cell.psi_minus;
      if (rec.error) ++cell.errors;
    }
  }
  return s;
}

}  // namespace

RoundRecord simulate_round(const ScenarioConfig& scenario, uint64_t seed,
                           int64_t round_index) {
  scenario.validate();
  return Engine(scenario).run(seed, round_index);
}

struct RoundSimulator::Impl {
  Engine eng;
  explicit Impl(const ScenarioConfig& sc) : eng(sc) {}
};

RoundSimulator::RoundSimulator(const ScenarioConfig& scenario) {
  scenario.validate();
  impl_ = std::make_unique<Impl>(scenario);
}

RoundSimulator::~RoundSimulator() = default;
RoundSimulator::RoundSimulator(RoundSimulator&&) noexcept = default;
RoundSimulator& RoundSimulator::operator=(RoundSimulator&&) noexcept = default;

RoundRecord RoundSimulator::run(uint64_t seed, int64_t round_index) const {
  return impl_->eng.run(seed, round_index);
}

SimSummary simulate_batch(const ScenarioConfig& scenario, int64_t rounds, uint64_t seed,
                          int threads, int64_t first_round) {
  if (rounds < 1) throw std::invalid_argument("simulate_batch: rounds must be >= 1");
  if (threads < 1) threads = 1;
  scenario.validate();
  Engine eng(scenario);

  if (threads == 1) return run_range(eng, seed, first_round, first_round + rounds);

  int64_t per = rounds / threads;
  std::vector<SimSummary> parts(threads);
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    int64_t begin = first_round + w * per;
    int64_t end = (w == threads - 1) ? first_round + rounds : begin + per;
    workers.emplace_back(
        [&eng, &parts, seed, begin, end, w] { parts[w] = run_range(eng, seed, begin, end); });
  }
  for (auto& t : workers) t.join();
  SimSummary total;
  for (const SimSummary& p : parts) total.merge(p);  // fixed partition order
  return total;
}

EmpiricalTable empirical_gain_table(const SimSummary& summary) {
  EmpiricalTable out;
  for (int i = 0; i < 18; ++i) {
    const CellCounts& c = summary.cells[i];
    if (c.sent == 0) {
      out.table.q[i] = 0.0;
      out.table.e[i] = 0.5;
      out.stderr_q[i] = 0.0;
      out.low_stats[i] = true;
      continue;
    }
    double q = static_cast<double>(c.psi_minus) / static_cast<double>(c.sent);
    out.table.q[i] = q;
    out.table.e[i] = c.psi_minus > 0 ? static_cast<double>(c.errors) /
                                           static_cast<double>(c.psi_minus)
                                     : 0.5;
    out.stderr_q[i] = std::sqrt(q * (1.0 - q) / static_cast<double>(c.sent));
    out.low_stats[i] = c.psi_minus == 0;
  }
  return out;
}

}  // namespace mdiqkd
