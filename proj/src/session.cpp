#include <mdiqkd/session.hpp>

#include <mdiqkd/lp.hpp>
#include <mdiqkd/pulse_sim.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>

namespace mdiqkd {

std::string_view to_string(NodeId n) {
  switch (n) {
    case NodeId::Alice: return "alice";
    case NodeId::Bob: return "bob";
    case NodeId::Center: return "center";
  }
  return "?";
}

namespace {

// Distinct stream for the referee's reveal sampling so it cannot correlate
// with the physics draws of the same round.
constexpr uint64_t kRevealSalt = 0xC2B2AE3D27D4EB4FULL;

[[noreturn]] void protocol_violation(NodeId id, const char* what, int64_t round) {
  std::ostringstream os;
  os << "protocol violation at " << to_string(id) << ": " << what << " for round "
     << round;
  throw std::logic_error(os.str());
}

}  // namespace

void EndNode::commit(int64_t round, Basis basis, int bit, Intensity intensity,
                     int64_t t_ps) {
  if (round != next_commit_)
    protocol_violation(id_, "out-of-order commit", round);
  Pending p;
  p.basis = basis;
  p.bit = bit;
  p.intensity = intensity;
  p.commit_t = t_ps;
  if (pending_.empty()) base_round_ = round;
  pending_.push_back(p);
  ++next_commit_;
}

EndNode::Pending& EndNode::pending_for(int64_t round, const char* what) {
  if (pending_.empty() || round < base_round_ ||
      round >= base_round_ + static_cast<int64_t>(pending_.size()))
    protocol_violation(id_, what, round);
  Pending& p = pending_[static_cast<size_t>(round - base_round_)];
  if (!p.live) protocol_violation(id_, what, round);
  return p;
}

std::optional<BasisReveal> EndNode::on_announcement(const BsmAnnouncement& a,
                                                    int64_t t_ps) {
  Pending& p = pending_for(a.round_index, "announcement references unknown round");
  if (p.announce_t >= 0)
    protocol_violation(id_, "duplicate announcement", a.round_index);
  // the herald cannot arrive before the choice it reports on was committed;
  // equal times are one tick processed in commit, outcome, delivery order
  if (t_ps < p.commit_t) ++causality_violations_;
  if (a.outcome != BsmOutcome::PsiMinus) {
    p.live = false;
    prune_front();
    return std::nullopt;
  }
  p.announce_t = t_ps;
  return BasisReveal{a.round_index, p.basis};
}

std::optional<SubsetReveal> EndNode::on_peer_basis(const BasisReveal& r,
                                                   int64_t t_ps, bool reveal_bit) {
  Pending& p = pending_for(r.round_index, "basis reveal references unknown round");
  if (p.announce_t < 0)
    protocol_violation(id_, "basis reveal for an unannounced round", r.round_index);
  std::optional<SubsetReveal> out;
  if (r.basis == p.basis) {
    if (t_ps < p.announce_t) ++causality_violations_;
    SiftedRecord rec;
    rec.round_index = r.round_index;
    rec.basis = p.basis;
    rec.bit = p.bit;
    rec.intensity = p.intensity;
    rec.revealed = reveal_bit;
    store_.records.push_back(rec);
    if (reveal_bit) out = SubsetReveal{r.round_index, p.bit};
  }
  p.live = false;
  prune_front();
  return out;
}

void EndNode::prune_front() {
  while (!pending_.empty() && !pending_.front().live) {
    pending_.pop_front();
    ++base_round_;
  }
}

uint64_t EndNode::expire_before(int64_t round) {
  uint64_t expired = 0;
  while (!pending_.empty() && base_round_ < round) {
    Pending& p = pending_.front();
    // announced rounds inside the window are still in flight; stop there
    if (p.live && p.announce_t >= 0) break;
    if (p.live) ++expired;
    pending_.pop_front();
    ++base_round_;
  }
  return expired;
}

EstimatedTable estimate_from_session(const SiftedStore& alice,
                                     const SiftedStore& bob,
                                     const std::vector<RevealRecord>& revealed) {
  if (alice.sent_cells != bob.sent_cells ||
      alice.retained_cells != bob.retained_cells)
    throw std::invalid_argument("estimate_from_session: referee tallies disagree");
  if (alice.records.size() != bob.records.size())
    throw std::invalid_argument("estimate_from_session: stores differ in size");
  for (size_t i = 0; i < alice.records.size(); ++i)
    if (alice.records[i].round_index != bob.records[i].round_index)
      throw std::invalid_argument(
          "estimate_from_session: stores retain different rounds");

  std::array<uint64_t, 18> reveal_count{};
  std::array<uint64_t, 18> reveal_errors{};
  for (const RevealRecord& r : revealed) {
    int idx = GainTable::index(r.basis, r.int_a, r.int_b);
    ++reveal_count[idx];
    // same convention as the heralded-round error flag: identical prepared
    // bits after the announced projection count as errors in both bases
    if (r.bit_a == r.bit_b) ++reveal_errors[idx];
  }

  EstimatedTable out;
  for (int i = 0; i < 18; ++i) {
    uint64_t sent = alice.sent_cells[i];
    if (sent == 0) {
      out.table.q[i] = 0.0;
      out.table.e[i] = 0.5;
      out.unestimated[i] = true;
      continue;
    }
    out.table.q[i] = static_cast<double>(alice.retained_cells[i]) /
                     static_cast<double>(sent);
    if (reveal_count[i] > 0) {
      out.table.e[i] = static_cast<double>(reveal_errors[i]) /
                       static_cast<double>(reveal_count[i]);
    } else {
      out.table.e[i] = 0.5;
      out.unestimated[i] = true;
    }
  }
  return out;
}

namespace {

struct AnnEvent {
  int64_t deliver_t;
  BsmAnnouncement ann;
};

struct BasisEvent {
  int64_t deliver_t;
  BasisReveal from_a;
  BasisReveal from_b;
};

struct BitEvent {
  int64_t deliver_t;
  RevealRecord record;
};

class EventLog {
 public:
  explicit EventLog(std::ostream* os) : os_(os) {}

  void control(int64_t t, std::string_view what) {
    if (!os_) return;
    (*os_) << t << " center control " << what << '\n';
  }
  void bsm(int64_t t, const BsmAnnouncement& a) {
    if (!os_) return;
    (*os_) << t << " center bsm round=" << a.round_index << " outcome="
           << (a.outcome == BsmOutcome::PsiMinus ? "psi_minus" : "none") << '\n';
  }
  void basis(int64_t t, NodeId who, const BasisReveal& r) {
    if (!os_) return;
    (*os_) << t << ' ' << to_string(who) << " basis round=" << r.round_index
           << " basis=" << to_string(r.basis) << '\n';
  }
  void bit(int64_t t, NodeId who, const SubsetReveal& r) {
    if (!os_) return;
    (*os_) << t << ' ' << to_string(who) << " bit round=" << r.round_index
           << " bit=" << r.bit << '\n';
  }

 private:
  std::ostream* os_;
};

}  // namespace

SessionResult run_session(const ScenarioConfig& scenario, int64_t rounds,
                          uint64_t seed, double channel_latency_s,
                          const SessionOptions& options) {
  if (rounds < 0) throw std::invalid_argument("run_session: rounds must be >= 0");
  if (channel_latency_s < 0.0)
    throw std::invalid_argument("run_session: latency must be >= 0");
  if (options.reveal_fraction_x < 0.0 || options.reveal_fraction_x > 1.0 ||
      options.reveal_fraction_z < 0.0 || options.reveal_fraction_z > 1.0)
    throw std::invalid_argument("run_session: reveal fractions must be in [0,1]");
  scenario.validate();

  RoundSimulator sim(scenario);
  const int64_t period_ps =
      std::max<int64_t>(1, std::llround(1e12 / scenario.detection.qubit_rate));
  const int64_t lat_ps = std::llround(channel_latency_s * 1e12);
  const int64_t lat_rounds = lat_ps / period_ps + 1;
  if (lat_rounds > 50'000'000)
    throw std::invalid_argument(
        "run_session: latency spans too many rounds for an in-memory window");

  SessionResult result;
  result.stats.rounds = rounds;
  EndNode alice(NodeId::Alice);
  EndNode bob(NodeId::Bob);
  EventLog log(options.event_log);

  std::deque<AnnEvent> annq;
  std::deque<BasisEvent> basisq;
  std::deque<BitEvent> bitq;
  // referee memory: only heralded rounds need their committed choices later
  std::unordered_map<int64_t, RoundRecord> heralded;

  int64_t end_t = 0;

  auto deliver_announcement = [&](const AnnEvent& ev) {
    auto ra = alice.on_announcement(ev.ann, ev.deliver_t);
    auto rb = bob.on_announcement(ev.ann, ev.deliver_t);
    if (ra.has_value() != rb.has_value())
      throw std::logic_error("run_session: nodes disagree on a herald");
    if (ra) {
      log.basis(ev.deliver_t, NodeId::Alice, *ra);
      log.basis(ev.deliver_t, NodeId::Bob, *rb);
      basisq.push_back({ev.deliver_t + lat_ps, *ra, *rb});
    }
    end_t = std::max(end_t, ev.deliver_t);
  };

  auto deliver_basis = [&](const BasisEvent& ev) {
    int64_t round = ev.from_a.round_index;
    auto it = heralded.find(round);
    if (it == heralded.end())
      throw std::logic_error("run_session: basis reveal for an untracked round");
    const RoundRecord& rec = it->second;
    bool matched = ev.from_a.basis == ev.from_b.basis;
    bool reveal = false;
    if (matched) {
      double f = ev.from_a.basis == Basis::X ? options.reveal_fraction_x
                                             : options.reveal_fraction_z;
      reveal = round_rng(seed ^ kRevealSalt, round).uniform() < f;
    }
    // each node sifts on the other's basis
    auto sa = alice.on_peer_basis(ev.from_b, ev.deliver_t, reveal);
    auto sb = bob.on_peer_basis(ev.from_a, ev.deliver_t, reveal);
    if (matched) {
      int idx = GainTable::index(rec.basis_a, rec.int_a, rec.int_b);
      ++alice.store().retained_cells[idx];
      ++bob.store().retained_cells[idx];
      ++result.stats.retained;
    }
    if (sa && sb) {
      log.bit(ev.deliver_t, NodeId::Alice, *sa);
      log.bit(ev.deliver_t, NodeId::Bob, *sb);
      RevealRecord rr;
      rr.round_index = round;
      rr.basis = rec.basis_a;
      rr.int_a = rec.int_a;
      rr.int_b = rec.int_b;
      rr.bit_a = sa->bit;
      rr.bit_b = sb->bit;
      bitq.push_back({ev.deliver_t + lat_ps, rr});
    }
    heralded.erase(it);
    end_t = std::max(end_t, ev.deliver_t);
  };

  auto deliver_bit = [&](const BitEvent& ev) {
    result.revealed.push_back(ev.record);
    ++result.stats.revealed;
    end_t = std::max(end_t, ev.deliver_t);
  };

  // Queue heads are nondecreasing in time; ties resolve in causal order
  // (herald, then basis, then bit), which also makes zero latency well defined.
  auto process_until = [&](int64_t t_limit, bool drain_all) {
    for (;;) {
      int which = -1;
      int64_t best = 0;
      if (!annq.empty()) {
        best = annq.front().deliver_t;
        which = 0;
      }
      if (!basisq.empty() &&
          (which < 0 || basisq.front().deliver_t < best)) {
        best = basisq.front().deliver_t;
        which = 1;
      }
      if (!bitq.empty() && (which < 0 || bitq.front().deliver_t < best)) {
        best = bitq.front().deliver_t;
        which = 2;
      }
      if (which < 0) break;
      if (!drain_all && best > t_limit) break;
      if (which == 0) {
        deliver_announcement(annq.front());
        annq.pop_front();
      } else if (which == 1) {
        deliver_basis(basisq.front());
        basisq.pop_front();
      } else {
        deliver_bit(bitq.front());
        bitq.pop_front();
      }
    }
  };

  log.control(0, "start");
  for (int64_t r = 0; r < rounds; ++r) {
    int64_t t = r * period_ps;
    process_until(t, false);

    RoundRecord rec = sim.run(seed, r);
    alice.commit(r, rec.basis_a, rec.bit_a, rec.int_a, t);
    bob.commit(r, rec.basis_b, rec.bit_b, rec.int_b, t);
    if (rec.basis_a == rec.basis_b) {
      int idx = GainTable::index(rec.basis_a, rec.int_a, rec.int_b);
      ++alice.store().sent_cells[idx];
      ++bob.store().sent_cells[idx];
    }
    // outcome is computed only after both commits are on the books
    if (rec.outcome == BsmOutcome::PsiMinus) {
      log.bsm(t, {r, rec.outcome});
      annq.push_back({t + lat_ps, {r, rec.outcome}});
      heralded.emplace(r, rec);
      ++result.stats.announcements;
    }

    int64_t cutoff = r - 2 * lat_rounds - 4;
    if (cutoff > 0) {
      // both nodes expire the same rounds; count per pair
      result.stats.expired += alice.expire_before(cutoff);
      bob.expire_before(cutoff);
    }
  }

  int64_t t_flush = rounds * period_ps;
  process_until(t_flush, false);
  log.control(t_flush, "flush");
  process_until(0, true);
  result.stats.expired += alice.expire_before(rounds);
  bob.expire_before(rounds);
  if (!heralded.empty())
    throw std::logic_error("run_session: heralded rounds left unresolved");

  end_t = std::max(end_t, t_flush);
  log.control(end_t, "stop");
  result.stats.virtual_end_ps = end_t;
  result.stats.causality_violations =
      alice.causality_violations() + bob.causality_violations();

  result.alice = alice.store();
  result.bob = bob.store();
  result.estimated =
      estimate_from_session(result.alice, result.bob, result.revealed);
  try {
    result.decoy = analyze(result.estimated.table, scenario.alice.mu,
                           scenario.bob.mu);
    result.decoy_feasible = true;
  } catch (const lp::Infeasible&) {
    result.decoy = DecoyResult{};
    result.decoy.degenerate_e11 = true;
    result.decoy_feasible = false;
  } catch (const std::runtime_error&) {
    result.decoy = DecoyResult{};
    result.decoy.degenerate_e11 = true;
    result.decoy_feasible = false;
  }
  return result;
}

}  // namespace mdiqkd
