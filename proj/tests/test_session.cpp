#include <mdiqkd/session.hpp>

#include <mdiqkd/forward.hpp>
#include <mdiqkd/pulse_sim.hpp>

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace mdiqkd;

namespace {

ScenarioConfig session_scenario() {
  ScenarioConfig sc;
  set_ideal_states(sc.alice);
  set_ideal_states(sc.bob);
  sc.alice.mu = {0.55, 0.042, 0.0};
  sc.bob.mu = {0.55, 0.042, 0.0};
  sc.link.loss_db_alice = 10.5;
  sc.link.loss_db_bob = 9.0;
  sc.detection.det_efficiency = 0.48;
  sc.detection.dark_rate = 400.0;
  sc.detection.noise_rate = 57100.0;
  sc.detection.visibility = 0.85;
  return sc;
}

/// Joint probability that a round lands in the same-basis cell (basis, ia, ib).
double cell_weight(const ScenarioConfig& sc, Basis basis, Intensity ia,
                   Intensity ib) {
  double pb = basis == Basis::Z ? sc.alice.p_basis_z * sc.bob.p_basis_z
                                : (1.0 - sc.alice.p_basis_z) * (1.0 - sc.bob.p_basis_z);
  return pb * sc.alice.p_intensity[static_cast<int>(ia)] *
         sc.bob.p_intensity[static_cast<int>(ib)];
}

bool stores_equal(const SiftedStore& a, const SiftedStore& b) {
  if (a.records.size() != b.records.size()) return false;
  for (size_t i = 0; i < a.records.size(); ++i) {
    const SiftedRecord &ra = a.records[i], &rb = b.records[i];
    if (ra.round_index != rb.round_index || ra.basis != rb.basis ||
        ra.bit != rb.bit || ra.intensity != rb.intensity ||
        ra.revealed != rb.revealed)
      return false;
  }
  return a.sent_cells == b.sent_cells && a.retained_cells == b.retained_cells;
}

}  // namespace

TEST_CASE("session with no heralds leaves empty stores and a zero-rate analysis") {
  ScenarioConfig sc = session_scenario();
  sc.detection.det_efficiency = 1e-12;
  sc.detection.dark_rate = 0.0;
  sc.detection.noise_rate = 0.0;
  SessionResult out = run_session(sc, 5000, 7);
  CHECK(out.stats.announcements == 0);
  CHECK(out.alice.records.empty());
  CHECK(out.bob.records.empty());
  CHECK(out.revealed.empty());
  CHECK(out.decoy.r_clamped == 0.0);
  CHECK(out.decoy.degenerate_e11);
  for (int i = 0; i < 18; ++i) {
    CHECK(out.estimated.table.q[i] == 0.0);
    CHECK(out.estimated.unestimated[i]);
  }
}

TEST_CASE("retained fraction matches the gain-weighted expectation") {
  ScenarioConfig sc = session_scenario();
  const int64_t rounds = 2'000'000;
  SessionResult out = run_session(sc, rounds, 11);

  GainTable model = full_gain_table(sc);
  double expect = 0.0;
  for (Basis b : kBases)
    for (Intensity ia : kIntensities)
      for (Intensity ib : kIntensities)
        expect += cell_weight(sc, b, ia, ib) * model.Q(b, ia, ib);
  double sigma = std::sqrt(expect * (1.0 - expect) / static_cast<double>(rounds));
  double frac = static_cast<double>(out.stats.retained) / static_cast<double>(rounds);
  CHECK(std::abs(frac - expect) < 5.0 * sigma);
  CHECK(out.stats.retained == out.alice.records.size());
  CHECK(out.stats.retained <= out.stats.announcements);
}

TEST_CASE("full reveal reproduces the batch tally exactly") {
  ScenarioConfig sc = session_scenario();
  const int64_t rounds = 1'000'000;
  const uint64_t seed = 23;
  SessionOptions opt;
  opt.reveal_fraction_x = 1.0;
  opt.reveal_fraction_z = 1.0;
  SessionResult out = run_session(sc, rounds, seed, 1e-3, opt);

  SimSummary summary = simulate_batch(sc, rounds, seed);
  EmpiricalTable emp = empirical_gain_table(summary);
  for (int i = 0; i < 18; ++i) {
    CHECK(out.alice.sent_cells[i] == summary.cells[i].sent);
    CHECK(out.alice.retained_cells[i] == summary.cells[i].psi_minus);
    CHECK(out.estimated.table.q[i] == emp.table.q[i]);
    if (!emp.low_stats[i]) CHECK(out.estimated.table.e[i] == emp.table.e[i]);
  }
  CHECK(out.stats.causality_violations == 0);
  CHECK(out.stats.revealed == out.stats.retained);
  CHECK(out.stats.announcements + out.stats.expired == static_cast<uint64_t>(rounds));

  // both nodes kept exactly the same rounds
  REQUIRE(out.alice.records.size() == out.bob.records.size());
  for (size_t i = 0; i < out.alice.records.size(); ++i) {
    CHECK(out.alice.records[i].round_index == out.bob.records[i].round_index);
    CHECK(out.alice.records[i].basis == out.bob.records[i].basis);
  }
}

TEST_CASE("partial reveal estimates the error rates within five sigma") {
  ScenarioConfig sc = session_scenario();
  const int64_t rounds = 2'000'000;
  SessionOptions opt;  // defaults: all X rounds, a tenth of Z rounds
  SessionResult out = run_session(sc, rounds, 31, 1e-3, opt);

  std::array<uint64_t, 18> reveal_count{};
  for (const RevealRecord& r : out.revealed)
    ++reveal_count[GainTable::index(r.basis, r.int_a, r.int_b)];

  GainTable model = full_gain_table(sc);
  for (Basis b : kBases) {
    int idx = GainTable::index(b, Intensity::Signal, Intensity::Signal);
    REQUIRE(reveal_count[idx] > 3);
    double e_model = model.E(b, Intensity::Signal, Intensity::Signal);
    double sigma =
        std::sqrt(e_model * (1.0 - e_model) / static_cast<double>(reveal_count[idx]));
    CHECK(std::abs(out.estimated.table.e[idx] - e_model) < 5.0 * sigma);
  }

  // a tenth of the retained Z-basis rounds should be sacrificed
  uint64_t z_retained = 0, z_revealed = 0;
  for (const SiftedRecord& r : out.alice.records)
    if (r.basis == Basis::Z) {
      ++z_retained;
      if (r.revealed) ++z_revealed;
    }
  REQUIRE(z_retained > 30);
  double frac = static_cast<double>(z_revealed) / static_cast<double>(z_retained);
  double sigma = std::sqrt(0.1 * 0.9 / static_cast<double>(z_retained));
  CHECK(std::abs(frac - 0.1) < 5.0 * sigma);
}

TEST_CASE("session is deterministic and the event log replays byte for byte") {
  ScenarioConfig sc = session_scenario();
  std::ostringstream log_a, log_b, log_c;
  SessionOptions opt;
  opt.event_log = &log_a;
  SessionResult one = run_session(sc, 100'000, 5, 1e-3, opt);
  opt.event_log = &log_b;
  SessionResult two = run_session(sc, 100'000, 5, 1e-3, opt);
  opt.event_log = &log_c;
  SessionResult other = run_session(sc, 100'000, 6, 1e-3, opt);

  CHECK(log_a.str() == log_b.str());
  CHECK(log_a.str() != log_c.str());
  CHECK(stores_equal(one.alice, two.alice));
  CHECK(stores_equal(one.bob, two.bob));
  for (int i = 0; i < 18; ++i) {
    CHECK(one.estimated.table.q[i] == two.estimated.table.q[i]);
    CHECK(one.estimated.table.e[i] == two.estimated.table.e[i]);
  }
  CHECK(one.stats.announcements == two.stats.announcements);
  CHECK(one.decoy.r == two.decoy.r);

  // log structure: first line starts the session, last line stops it
  std::string text = log_a.str();
  CHECK(text.compare(0, 16, "0 center control") == 0);
  CHECK(text.rfind("stop\n") == text.size() - 5);
}

TEST_CASE("latency does not change what the nodes retain") {
  ScenarioConfig sc = session_scenario();
  SessionResult slow = run_session(sc, 200'000, 13, 5e-3);
  SessionResult fast = run_session(sc, 200'000, 13, 0.0);
  CHECK(stores_equal(slow.alice, fast.alice));
  CHECK(stores_equal(slow.bob, fast.bob));
  CHECK(slow.stats.virtual_end_ps > fast.stats.virtual_end_ps);
  CHECK(slow.stats.causality_violations == 0);
  CHECK(fast.stats.causality_violations == 0);
}

TEST_CASE("protocol violations halt with a diagnostic") {
  EndNode node(NodeId::Alice);
  node.commit(0, Basis::Z, 1, Intensity::Signal, 0);

  SUBCASE("announcement for a round never committed") {
    CHECK_THROWS_AS(node.on_announcement({7, BsmOutcome::PsiMinus}, 100),
                    std::logic_error);
  }
  SUBCASE("reveal for an unannounced round") {
    CHECK_THROWS_AS(node.on_peer_basis({0, Basis::Z}, 100, false), std::logic_error);
  }
  SUBCASE("duplicate announcement") {
    node.on_announcement({0, BsmOutcome::PsiMinus}, 100);
    CHECK_THROWS_AS(node.on_announcement({0, BsmOutcome::PsiMinus}, 200),
                    std::logic_error);
  }
  SUBCASE("out-of-order commit") {
    CHECK_THROWS_AS(node.commit(5, Basis::Z, 0, Intensity::Signal, 10),
                    std::logic_error);
  }
  SUBCASE("the diagnostic names the node and the round") {
    try {
      node.on_announcement({7, BsmOutcome::PsiMinus}, 100);
      FAIL("expected a protocol violation");
    } catch (const std::logic_error& e) {
      std::string msg = e.what();
      CHECK(msg.find("alice") != std::string::npos);
      CHECK(msg.find("7") != std::string::npos);
    }
  }
}

TEST_CASE("end node sifts on basis agreement and reveals on request") {
  EndNode node(NodeId::Bob);
  node.commit(0, Basis::X, 1, Intensity::Decoy, 0);
  node.commit(1, Basis::Z, 0, Intensity::Signal, 10'000);

  auto r0 = node.on_announcement({0, BsmOutcome::PsiMinus}, 1'000'000);
  REQUIRE(r0.has_value());
  CHECK(r0->basis == Basis::X);

  SUBCASE("matching basis retains and reveals") {
    auto s = node.on_peer_basis({0, Basis::X}, 2'000'000, true);
    REQUIRE(s.has_value());
    CHECK(s->bit == 1);
    REQUIRE(node.store().records.size() == 1);
    CHECK(node.store().records[0].intensity == Intensity::Decoy);
    CHECK(node.store().records[0].revealed);
    CHECK(node.causality_violations() == 0);
  }
  SUBCASE("mismatched basis discards the round") {
    auto s = node.on_peer_basis({0, Basis::Z}, 2'000'000, true);
    CHECK(!s.has_value());
    CHECK(node.store().records.empty());
  }
  SUBCASE("a store write before the announcement is flagged") {
    node.on_peer_basis({0, Basis::X}, 500'000, false);  // earlier than the herald
    CHECK(node.causality_violations() == 1);
  }
  SUBCASE("unannounced commits expire once the horizon passes") {
    CHECK(node.pending_size() == 2);
    CHECK(node.expire_before(2) == 0);  // round 0 announced, round 1 behind it
    auto s = node.on_peer_basis({0, Basis::Z}, 2'000'000, false);
    CHECK(!s.has_value());
    CHECK(node.expire_before(2) == 1);  // now round 1 times out
    CHECK(node.pending_size() == 0);
  }
}

TEST_CASE("estimate flags cells without reveals instead of zeroing them") {
  SiftedStore a, b;
  a.sent_cells[0] = 1000;
  b.sent_cells[0] = 1000;
  a.retained_cells[0] = 10;
  b.retained_cells[0] = 10;
  EstimatedTable est = estimate_from_session(a, b, {});
  CHECK(est.table.q[0] == doctest::Approx(0.01));
  CHECK(est.table.e[0] == 0.5);
  CHECK(est.unestimated[0]);

  SUBCASE("disagreeing referee tallies are rejected") {
    b.sent_cells[0] = 999;
    CHECK_THROWS_AS(estimate_from_session(a, b, {}), std::invalid_argument);
  }
  SUBCASE("stores with different round sets are rejected") {
    a.records.push_back({42, Basis::Z, 0, Intensity::Signal, false});
    b.records.push_back({43, Basis::Z, 1, Intensity::Signal, false});
    CHECK_THROWS_AS(estimate_from_session(a, b, {}), std::invalid_argument);
  }
}

TEST_CASE("session input validation") {
  ScenarioConfig sc = session_scenario();
  CHECK_THROWS_AS(run_session(sc, -1, 0), std::invalid_argument);
  CHECK_THROWS_AS(run_session(sc, 10, 0, -1.0), std::invalid_argument);
  SessionOptions opt;
  opt.reveal_fraction_z = 1.5;
  CHECK_THROWS_AS(run_session(sc, 10, 0, 1e-3, opt), std::invalid_argument);
}
