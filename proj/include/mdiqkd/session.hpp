#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <vector>

#include "mdiqkd/core.hpp"
#include "mdiqkd/decoy.hpp"
#include "mdiqkd/forward.hpp"

namespace mdiqkd {

// Event-driven three-node protocol run on a virtual clock. The center node
// announces psi-minus heralds over a reliable ordered classical channel with
// constant latency; the end nodes sift on basis agreement and reveal bit
// subsets for error estimation. Every store write is checked against the
// announcement delivery time, so a causality violation is observable rather
// than silently impossible.

enum class NodeId : uint8_t { Alice = 0, Bob = 1, Center = 2 };

std::string_view to_string(NodeId n);

struct BsmAnnouncement {
  int64_t round_index = 0;
  BsmOutcome outcome = BsmOutcome::PsiMinus;
};

struct BasisReveal {
  int64_t round_index = 0;
  Basis basis = Basis::Z;
};

struct SubsetReveal {
  int64_t round_index = 0;
  int bit = 0;
};

enum class SessionControl : uint8_t { Start, Stop, Flush };

/// One sifted round held by an end node. `revealed` marks bits sacrificed for
/// error estimation; they stay in the store but would be excluded from key
/// material.
struct SiftedRecord {
  int64_t round_index = 0;
  Basis basis = Basis::Z;
  int bit = 0;
  Intensity intensity = Intensity::Signal;
  bool revealed = false;
};

/// What an end node retains after sifting, plus per-cell tallies. The sent
/// tallies are referee instrumentation (the nodes know only their own half of
/// each joint cell); they provide the denominators for gain estimation.
struct SiftedStore {
  std::vector<SiftedRecord> records;
  std::array<uint64_t, 18> sent_cells{};
  std::array<uint64_t, 18> retained_cells{};
};

/// Protocol state machine for one end node. Rounds are committed strictly
/// before the center's announcement can arrive; processing an announcement for
/// an uncommitted round, or a reveal request for an unretained round, is a
/// protocol violation and throws.
class EndNode {
 public:
  explicit EndNode(NodeId id) : id_(id) {}

  NodeId id() const { return id_; }

  /// Record this round's committed choice. Rounds must arrive in order.
  void commit(int64_t round, Basis basis, int bit, Intensity intensity,
              int64_t t_ps);

  /// Center announcement delivered at t_ps. Returns the basis reveal this
  /// node sends back for a psi-minus herald.
  std::optional<BasisReveal> on_announcement(const BsmAnnouncement& a,
                                             int64_t t_ps);

  /// Peer basis delivered at t_ps. Retains the round on basis agreement and,
  /// when the referee asks, returns the bit reveal for error estimation.
  std::optional<SubsetReveal> on_peer_basis(const BasisReveal& r, int64_t t_ps,
                                            bool reveal_bit);

  /// Drop unannounced commits older than `round`; the announcement horizon
  /// has passed, so silence means the BSM failed. Returns how many expired.
  uint64_t expire_before(int64_t round);

  const SiftedStore& store() const { return store_; }
  SiftedStore& store() { return store_; }
  uint64_t causality_violations() const { return causality_violations_; }
  size_t pending_size() const { return pending_.size(); }

 private:
  struct Pending {
    Basis basis = Basis::Z;
    int bit = 0;
    Intensity intensity = Intensity::Signal;
    int64_t commit_t = 0;
    int64_t announce_t = -1;  // <0 until the herald arrives
    bool live = true;
  };

  Pending& pending_for(int64_t round, const char* what);
  void prune_front();

  NodeId id_;
  SiftedStore store_;
  std::deque<Pending> pending_;
  int64_t base_round_ = 0;  // round index of pending_.front()
  int64_t next_commit_ = 0;
  uint64_t causality_violations_ = 0;
};

/// One revealed bit pair joined by the referee for error estimation.
struct RevealRecord {
  int64_t round_index = 0;
  Basis basis = Basis::Z;
  Intensity int_a = Intensity::Signal;
  Intensity int_b = Intensity::Signal;
  int bit_a = 0;
  int bit_b = 0;
};

/// Gain table estimated from a finished session. Cells with no revealed bits
/// keep E = 0.5 and are flagged unestimated.
struct EstimatedTable {
  GainTable table;
  std::array<bool, 18> unestimated{};
};

EstimatedTable estimate_from_session(const SiftedStore& alice,
                                     const SiftedStore& bob,
                                     const std::vector<RevealRecord>& revealed);

struct SessionOptions {
  double reveal_fraction_x = 1.0;
  double reveal_fraction_z = 0.1;
  /// Line-delimited message log (virtual time, sender, variant, payload);
  /// byte-identical across runs with identical inputs.
  std::ostream* event_log = nullptr;
};

struct SessionStats {
  int64_t rounds = 0;
  uint64_t announcements = 0;  // psi-minus heralds sent by the center
  uint64_t retained = 0;       // basis-matched rounds kept by each node
  uint64_t revealed = 0;       // bit pairs sacrificed for estimation
  uint64_t expired = 0;        // round pairs that timed out unannounced
  uint64_t causality_violations = 0;
  int64_t virtual_end_ps = 0;
};

struct SessionResult {
  SiftedStore alice;
  SiftedStore bob;
  std::vector<RevealRecord> revealed;
  EstimatedTable estimated;
  DecoyResult decoy;
  bool decoy_feasible = false;
  SessionStats stats;
};

/// Run the full protocol for `rounds` rounds. Announcements and reveals each
/// take `channel_latency_s` to cross the classical channel; the qubit rate
/// sets the round period. Same scenario, rounds, seed, latency and options
/// give a bit-identical result and event log.
SessionResult run_session(const ScenarioConfig& scenario, int64_t rounds,
                          uint64_t seed, double channel_latency_s = 1e-3,
                          const SessionOptions& options = {});

}  // namespace mdiqkd
