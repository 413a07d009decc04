#include <mdiqkd/config_io.hpp>
#include <mdiqkd/decoy.hpp>
#include <mdiqkd/lp.hpp>

#include <doctest.h>

#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace mdiqkd;

namespace {

std::string data_path(const std::string& name) {
  return std::string(MDIQKD_DATA_DIR "/") + name;
}

uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Decoy mean photon numbers reproducing the published per-condition key
// rates; signal fixed at 0.55, decoy bisected per condition.
constexpr double kMuSignal = 0.55;

struct ConditionRef {
  const char* file;
  double mu_decoy;
  double r_published;   // key rate the source experiment reported
  double r_frozen;      // what this pipeline computes from the fixture
  double s11_frozen;
  double e11_frozen;
  double y11z_frozen;
};

const ConditionRef kConditions[] = {
    {"lab_19db_analysis.csv", 0.042009, 2.10e-7, 2.095416e-07, 5.051674e-05, 0.147558,
     5.016882e-04},
    {"lab_28db.csv", 0.044666, 3.79e-8, 3.793360e-08, 5.554282e-06, 0.160005, 5.516028e-05},
    {"lab_35db_analysis.csv", 0.043019, 5.83e-9, 5.841498e-09, 1.095984e-06, 0.153815,
     1.088435e-05},
    {"lab_43db.csv", 0.040435, 6.66e-10, 6.642035e-10, 1.776559e-07, 0.159735, 1.764324e-06},
    {"lab_48db.csv", 0.040764, 3.35e-10, 3.354885e-10, 7.378293e-08, 0.105265, 7.327477e-07},
    {"deployed_26db.csv", 0.042626, 3.84e-8, 3.842427e-08, 1.871823e-05, 0.173232,
     1.858931e-04},
    {"deployed_35db.csv", 0.040014, 2.07e-9, 2.089951e-09, 2.833763e-06, 0.176576,
     2.814247e-05},
    {"deployed_44db.csv", 0.040090, 2.29e-10, 2.250837e-10, 3.906856e-07, 0.172478,
     3.879948e-06},
};

}  // namespace

TEST_CASE("fixture files are intact") {
  const std::pair<const char*, uint64_t> sums[] = {
      {"deployed_26db.csv", 0x607a0b457b9950eaULL},
      {"deployed_35db.csv", 0xea3adc9f76a30c66ULL},
      {"deployed_44db.csv", 0xf374d07a2d5d1e52ULL},
      {"lab_19db.csv", 0xd137ef9a62808984ULL},
      {"lab_19db_analysis.csv", 0x26ac53f0775eeae5ULL},
      {"lab_28db.csv", 0x62cd7d648863a3f2ULL},
      {"lab_35db.csv", 0xec40ad84db237ea7ULL},
      {"lab_35db_analysis.csv", 0x31422db5fd601264ULL},
      {"lab_43db.csv", 0x0472431dccc5c8c0ULL},
      {"lab_48db.csv", 0x435978b842880c03ULL},
      {"launch_deployed_10p8uW.csv", 0xb2414b5ce332299bULL},
      {"launch_lab_11p8uW.csv", 0x99b501ffb8b64f24ULL},
      {"launch_lab_155uW.csv", 0xc6516faa51759729ULL},
      {"launch_lab_15p0uW.csv", 0xf41b2001462c6a80ULL},
      {"launch_lab_392uW.csv", 0xfc30fb0d7381321dULL},
      {"launch_lab_4p68uW.csv", 0x26ac53f0775eeae5ULL},
      {"launch_lab_61p7uW.csv", 0x86a4fb2ce4377adfULL},
  };
  for (const auto& [name, want] : sums) {
    CAPTURE(name);
    CHECK(fnv1a(slurp(data_path(name))) == want);
  }
}

TEST_CASE("gain table csv loads with verbatim cells") {
  GainTable t = load_gain_table(data_path("lab_19db.csv"));
  CHECK(t.Q(Basis::X, Intensity::Signal, Intensity::Signal) == 4.94e-4);
  CHECK(t.E(Basis::X, Intensity::Signal, Intensity::Signal) == 0.295);
  CHECK(t.Q(Basis::Z, Intensity::Signal, Intensity::Signal) == 2.33e-4);
  CHECK(t.E(Basis::Z, Intensity::Signal, Intensity::Signal) == 0.00927);
  CHECK(t.Q(Basis::Z, Intensity::Vacuum, Intensity::Vacuum) == 6.18e-8);
  CHECK(t.E(Basis::X, Intensity::Vacuum, Intensity::Vacuum) == 0.5);
}

TEST_CASE("gain table csv round trips") {
  GainTable t = load_gain_table(data_path("deployed_26db.csv"));
  std::ostringstream out;
  save_gain_table(out, t);
  std::istringstream in(out.str());
  GainTable back = load_gain_table(in);
  for (int i = 0; i < 18; ++i) {
    CHECK(back.q[i] == t.q[i]);
    CHECK(back.e[i] == t.e[i]);
  }
  CHECK(out.str().rfind("basis,mu_a,mu_b,Q,E\n", 0) == 0);
}

TEST_CASE("gain table csv rejects malformed input") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return load_gain_table(in);
  };
  CHECK_THROWS_WITH_AS(parse(""), doctest::Contains("empty"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse("foo,bar\n"), doctest::Contains("header"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse("basis,mu_a,mu_b,Q,E\nZ,signal,signal,0.1\n"),
                       doctest::Contains("5 comma-separated"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse("basis,mu_a,mu_b,Q,E\nW,signal,signal,0.1,0.1\n"),
                       doctest::Contains("basis"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse("basis,mu_a,mu_b,Q,E\nZ,signal,signal,zebra,0.1\n"),
                       doctest::Contains("not a number"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      parse("basis,mu_a,mu_b,Q,E\nZ,signal,signal,0.1,0.1\nZ,signal,signal,0.2,0.2\n"),
      doctest::Contains("duplicate"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse("basis,mu_a,mu_b,Q,E\nZ,signal,signal,0.1,0.1\n"),
                       doctest::Contains("missing"), std::runtime_error);
}

TEST_CASE("published key rates are recovered from the measurement fixtures") {
  for (const auto& c : kConditions) {
    CAPTURE(c.file);
    GainTable g = load_gain_table(data_path(c.file));
    std::array<double, 3> mu{kMuSignal, c.mu_decoy, 0.0};
    DecoyResult res = analyze(g, mu, mu, 1.12, 10);
    CHECK_FALSE(res.degenerate_e11);
    // published value within the +-30% acceptance window
    CHECK(std::abs(res.r / c.r_published - 1.0) < 0.30);
    // pipeline regression pins, frozen from the calibration run
    CHECK(res.r == doctest::Approx(c.r_frozen).epsilon(1e-6));
    CHECK(res.s11_z_lower == doctest::Approx(c.s11_frozen).epsilon(1e-6));
    CHECK(res.e11_x_upper == doctest::Approx(c.e11_frozen).epsilon(1e-6));
    CHECK(res.y11_z_lower == doctest::Approx(c.y11z_frozen).epsilon(1e-6));
  }
}

TEST_CASE("verbatim 19 dB table fails mixture feasibility in its vacuum row") {
  GainTable g = load_gain_table(data_path("lab_19db.csv"));
  std::array<double, 3> mu{kMuSignal, 0.042009, 0.0};
  try {
    analyze(g, mu, mu, 1.12, 10);
    FAIL("expected infeasibility");
  } catch (const lp::Infeasible& e) {
    CHECK(std::string(e.what()).find("Q_Z[vacuum,decoy]") != std::string::npos);
  }
}

TEST_CASE("verbatim 35 dB table fails mixture feasibility in its X signal-decoy cell") {
  GainTable g = load_gain_table(data_path("lab_35db.csv"));
  std::array<double, 3> mu{kMuSignal, 0.043019, 0.0};
  try {
    analyze(g, mu, mu, 1.12, 10);
    FAIL("expected infeasibility");
  } catch (const lp::Infeasible& e) {
    CHECK(std::string(e.what()).find("Q_X[signal,decoy]") != std::string::npos);
  }
}

TEST_CASE("every launch-power fixture admits a photon-number mixture") {
  const std::pair<const char*, double> files[] = {
      {"launch_lab_4p68uW.csv", 0.042009},  {"launch_lab_11p8uW.csv", 0.042009},
      {"launch_lab_15p0uW.csv", 0.042009},  {"launch_lab_61p7uW.csv", 0.042009},
      {"launch_lab_155uW.csv", 0.042009},   {"launch_lab_392uW.csv", 0.042009},
      {"launch_deployed_10p8uW.csv", 0.042626},
  };
  for (const auto& [name, mud] : files) {
    CAPTURE(name);
    GainTable g = load_gain_table(data_path(name));
    std::array<double, 3> mu{kMuSignal, mud, 0.0};
    CHECK_NOTHROW(analyze(g, mu, mu, 1.12, 10));
  }
}

TEST_CASE("analysis variant of the 19 dB table equals the lowest-power launch fixture") {
  CHECK(slurp(data_path("lab_19db_analysis.csv")) ==
        slurp(data_path("launch_lab_4p68uW.csv")));
}
