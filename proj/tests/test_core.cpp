#include "doctest.h"
#include "mdiqkd/core.hpp"

#include <cmath>
#include <stdexcept>

using namespace mdiqkd;

TEST_CASE("binary entropy endpoints and midpoint") {
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(binary_entropy(0.02) == doctest::Approx(0.141441).epsilon(1e-4));
  CHECK(binary_entropy(0.11) == doctest::Approx(0.499916).epsilon(1e-5));
  CHECK_THROWS_AS(binary_entropy(-0.1), std::domain_error);
  CHECK_THROWS_AS(binary_entropy(1.1), std::domain_error);
}

TEST_CASE("binary entropy is symmetric and concave on a grid") {
  const int n = 199;
  for (int i = 1; i <= n; ++i) {
    double p = i / double(n + 1);
    CHECK(binary_entropy(p) == doctest::Approx(binary_entropy(1.0 - p)).epsilon(1e-12));
  }
  for (int i = 2; i < n; ++i) {
    double p = i / double(n + 1);
    double h = 1.0 / double(n + 1);
    double mid = binary_entropy(p);
    double chord = 0.5 * (binary_entropy(p - h) + binary_entropy(p + h));
    CHECK(mid >= chord);  // concavity
  }
}

TEST_CASE("dB conversion") {
  CHECK(db_to_transmittance(0.0) == 1.0);
  CHECK(db_to_transmittance(10.0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(db_to_transmittance(3.0) == doctest::Approx(0.501187).epsilon(1e-5));
  CHECK(db_to_transmittance(26.0) == doctest::Approx(2.51189e-3).epsilon(1e-5));
  CHECK_THROWS_AS(db_to_transmittance(-1.0), std::domain_error);
}

TEST_CASE("dB conversion composes multiplicatively") {
  const double losses[] = {0.0, 1.5, 9.0, 10.5, 13.0, 26.0, 48.0};
  for (double a : losses)
    for (double b : losses) {
      double lhs = db_to_transmittance(a + b);
      double rhs = db_to_transmittance(a) * db_to_transmittance(b);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("poisson probabilities") {
  CHECK(poisson_pn(0.0, 0) == 1.0);
  CHECK(poisson_pn(0.0, 3) == 0.0);
  CHECK(poisson_pn(0.3, 0) == doctest::Approx(std::exp(-0.3)).epsilon(1e-14));
  CHECK(poisson_pn(0.3, 1) == doctest::Approx(0.3 * std::exp(-0.3)).epsilon(1e-14));
  CHECK(poisson_pn(1.0, 2) == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-14));
  CHECK_THROWS_AS(poisson_pn(-0.1, 0), std::domain_error);
  CHECK_THROWS_AS(poisson_pn(0.3, -1), std::domain_error);
}

TEST_CASE("poisson partial sums converge to one") {
  for (double mu : {0.01, 0.072, 0.3, 0.6, 1.0}) {
    double tail = 1.0 - poisson_cdf(mu, 50);
    CHECK(tail >= 0.0);
    CHECK(tail < 1e-15);
  }
  // Truncation tail at the default photon-number cutoff stays small for
  // realistic intensities.
  CHECK(1.0 - poisson_cdf(0.3, 10) < 1e-9);
}

TEST_CASE("enum names round trip") {
  for (Basis b : kBases) CHECK(parse_basis(std::string(to_string(b))) == b);
  for (Intensity i : kIntensities) CHECK(parse_intensity(std::string(to_string(i))) == i);
  CHECK_THROWS_AS(parse_basis("Y"), std::invalid_argument);
  CHECK_THROWS_AS(parse_intensity("bright"), std::invalid_argument);
}

TEST_CASE("source config defaults are valid ideal states") {
  SourceConfig src;
  src.validate();
  CHECK(src.mu_of(Intensity::Signal) == 0.3);
  CHECK(src.mu_of(Intensity::Decoy) == 0.04);
  CHECK(src.mu_of(Intensity::Vacuum) == 0.0);
  CHECK(src.spec(Basis::Z, 0, Intensity::Signal).m == 1.0);
  CHECK(src.spec(Basis::Z, 1, Intensity::Signal).m == 0.0);
  CHECK(src.spec(Basis::X, 0, Intensity::Signal).m == 0.5);
  CHECK(src.spec(Basis::X, 1, Intensity::Decoy).phi == doctest::Approx(3.14159265).epsilon(1e-8));
}

TEST_CASE("source config rejects bad intensity ordering") {
  SourceConfig src;
  src.mu = {0.04, 0.3, 0.0};
  CHECK_THROWS_AS(src.validate(), std::invalid_argument);
  src.mu = {0.3, 0.3, 0.0};
  CHECK_THROWS_AS(src.validate(), std::invalid_argument);
  src.mu = {0.3, 0.04, -0.01};
  CHECK_THROWS_AS(src.validate(), std::invalid_argument);
}

TEST_CASE("source config rejects bad probabilities") {
  SourceConfig src;
  src.p_intensity = {0.7, 0.2, 0.2};
  CHECK_THROWS_AS(src.validate(), std::invalid_argument);
  src.p_intensity = {0.7, 0.2, 0.1};
  src.p_basis_z = 1.5;
  CHECK_THROWS_AS(src.validate(), std::invalid_argument);
}

TEST_CASE("detection config validation") {
  DetectionConfig det;
  det.validate();
  det.window_ps = 0.0;
  CHECK_THROWS_AS(det.validate(), std::invalid_argument);
  det = DetectionConfig{};
  det.visibility = 1.2;
  CHECK_THROWS_AS(det.validate(), std::invalid_argument);
  det = DetectionConfig{};
  det.dark_rate = -1.0;
  CHECK_THROWS_AS(det.validate(), std::invalid_argument);
}

TEST_CASE("noise mean per window combines dark and coexistence rates") {
  DetectionConfig det;
  det.dark_rate = 150.0;
  det.noise_rate = 850.0;
  det.window_ps = 400.0;
  CHECK(det.noise_mean_per_window() == doctest::Approx(1000.0 * 400e-12).epsilon(1e-12));
}

TEST_CASE("gain table stores per basis and intensity pair") {
  GainTable t;
  t.set(Basis::X, Intensity::Signal, Intensity::Decoy, 1.12e-4, 0.439);
  CHECK(t.Q(Basis::X, Intensity::Signal, Intensity::Decoy) == 1.12e-4);
  CHECK(t.E(Basis::X, Intensity::Signal, Intensity::Decoy) == 0.439);
  CHECK(t.Q(Basis::Z, Intensity::Signal, Intensity::Decoy) == 0.0);
  t.validate();
  t.set(Basis::Z, Intensity::Vacuum, Intensity::Vacuum, -1e-9, 0.5);
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}
