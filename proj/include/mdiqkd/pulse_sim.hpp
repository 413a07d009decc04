#pragma once

#include <mdiqkd/core.hpp>

#include <array>
#include <cstdint>
#include <memory>

namespace mdiqkd {

/// Counter-based stream: every round derives its own generator from
/// (seed, round index), so batches merge exactly at any split and worker
/// partitioning cannot change results.
struct SplitMix64 {
  uint64_t state;

  explicit SplitMix64(uint64_t s) : state(s) {}
  uint64_t next() {
    state += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }  // [0,1)
};

SplitMix64 round_rng(uint64_t seed, int64_t round_index);

struct RoundRecord {
  int64_t round_index = 0;
  Basis basis_a = Basis::Z, basis_b = Basis::Z;
  int bit_a = 0, bit_b = 0;
  Intensity int_a = Intensity::Signal, int_b = Intensity::Signal;
  BsmOutcome outcome = BsmOutcome::NoDetection;
  bool error = false;  // heralded same-basis round with equal prepared bits
};

struct CellCounts {
  uint64_t sent = 0;
  uint64_t psi_minus = 0;
  uint64_t errors = 0;
};

/// Counts per same-basis (basis, intensity-pair) cell in GainTable::index
/// order; cross-basis rounds contribute to `rounds` only.
struct SimSummary {
  int64_t rounds = 0;
  std::array<CellCounts, 18> cells{};

  void merge(const SimSummary& other);
};

RoundRecord simulate_round(const ScenarioConfig& scenario, uint64_t seed,
                           int64_t round_index);

/// Reusable per-round sampler. Precomputes the draw tables once, then
/// produces the same record as simulate_round for any (seed, round index).
class RoundSimulator {
 public:
  explicit RoundSimulator(const ScenarioConfig& scenario);
  ~RoundSimulator();
  RoundSimulator(RoundSimulator&&) noexcept;
  RoundSimulator& operator=(RoundSimulator&&) noexcept;

  RoundRecord run(uint64_t seed, int64_t round_index) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Rounds [first_round, first_round + rounds); deterministic for fixed seed
/// independent of the worker count.
SimSummary simulate_batch(const ScenarioConfig& scenario, int64_t rounds, uint64_t seed,
                          int threads = 1, int64_t first_round = 0);

struct EmpiricalTable {
  GainTable table;
  std::array<double, 18> stderr_q{};
  std::array<bool, 18> low_stats{};  // sent == 0 or no heralds in the cell
};

EmpiricalTable empirical_gain_table(const SimSummary& summary);

}  // namespace mdiqkd
