#include "mdiqkd/decoy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mdiqkd/lp.hpp"

namespace mdiqkd {

namespace {

constexpr double kMaxTail = 1e-10;  // allowed Poisson mass beyond n_cut

void check_mu(const std::array<double, 3>& mu, const char* side) {
  if (!(mu[0] > mu[1] && mu[1] > mu[2] && mu[2] >= 0.0))
    throw std::invalid_argument(std::string("yield_bounds: ") + side +
                                " intensities must be strictly decreasing with vacuum >= 0");
}

std::string cell_name(const char* kind, Basis basis, Intensity a, Intensity b) {
  std::string s(kind);
  s += '_';
  s += to_string(basis);
  s += '[';
  s += to_string(a);
  s += ',';
  s += to_string(b);
  s += ']';
  return s;
}

}  // namespace

void YieldModel::validate() const {
  if (n_cut < 1) throw std::invalid_argument("YieldModel: n_cut must be >= 1");
  if (y.size() != size_t(n_cut + 1) * (n_cut + 1))
    throw std::invalid_argument("YieldModel: matrix size does not match n_cut");
  for (double v : y)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("YieldModel: yield outside [0,1]");
  if (!(tail_mass >= 0.0)) throw std::invalid_argument("YieldModel: negative tail mass");
}

double expected_gain(const YieldModel& ym, double mu_a, double mu_b) {
  double q = 0.0;
  for (int n = 0; n <= ym.n_cut; ++n) {
    double pa = poisson_pn(mu_a, n);
    for (int m = 0; m <= ym.n_cut; ++m) q += pa * poisson_pn(mu_b, m) * ym.at(n, m);
  }
  return q;
}

double yield_bounds(const GainTable& gains, const std::array<double, 3>& mu_a,
                    const std::array<double, 3>& mu_b, Basis basis,
                    YieldObjective objective, int n_cut) {
  check_mu(mu_a, "alice");
  check_mu(mu_b, "bob");
  gains.validate();
  if (n_cut < 1) throw std::invalid_argument("yield_bounds: n_cut must be >= 1");
  double mu_max = std::max(mu_a[0], mu_b[0]);
  if (1.0 - poisson_cdf(mu_max, n_cut) >= kMaxTail)
    throw std::invalid_argument("yield_bounds: n_cut leaves too much Poisson tail");

  const int w = n_cut + 1;
  const int cells = w * w;
  const bool with_errors = objective == YieldObjective::MaxB11;

  // Variables: yields Y_nm, split into a no-error part C_nm and an error part
  // B_nm when the error objective is requested (Y = C + B keeps B <= Y by
  // construction). Index maps: C at nm, B at cells + nm.
  lp::Problem p;
  for (int i = 0; i < cells; ++i) p.add_var(0.0, 1.0);
  if (with_errors)
    for (int i = 0; i < cells; ++i) p.add_var(0.0, 1.0);

  for (Intensity ia : kIntensities) {
    for (Intensity ib : kIntensities) {
      double ma = mu_a[static_cast<int>(ia)];
      double mb = mu_b[static_cast<int>(ib)];
      double tail = 1.0 - poisson_cdf(ma, n_cut) * poisson_cdf(mb, n_cut);
      double q_obs = gains.Q(basis, ia, ib);

      std::vector<double> row(p.num_vars(), 0.0);
      for (int n = 0; n < w; ++n) {
        double pa = poisson_pn(ma, n);
        for (int m = 0; m < w; ++m) {
          double coeff = pa * poisson_pn(mb, m);
          row[n * w + m] = coeff;
          if (with_errors) row[cells + n * w + m] = coeff;
        }
      }
      p.add_row(row, q_obs - tail, q_obs + tail, cell_name("Q", basis, ia, ib));

      if (with_errors) {
        double eq_obs = gains.E(basis, ia, ib) * q_obs;
        std::vector<double> erow(p.num_vars(), 0.0);
        for (int n = 0; n < w; ++n) {
          double pa = poisson_pn(ma, n);
          for (int m = 0; m < w; ++m) erow[cells + n * w + m] = pa * poisson_pn(mb, m);
        }
        p.add_row(erow, eq_obs - tail, eq_obs + tail, cell_name("EQ", basis, ia, ib));
      }
    }
  }

  if (with_errors) {
    // Y_nm = C_nm + B_nm may not exceed one.
    for (int i = 0; i < cells; ++i) {
      std::vector<double> row(p.num_vars(), 0.0);
      row[i] = 1.0;
      row[cells + i] = 1.0;
      p.add_row(row, -lp::kInf, 1.0);
    }
  }

  const int y11 = 1 * w + 1;
  if (objective == YieldObjective::MinY11) {
    p.c[y11] = 1.0;
    return std::max(0.0, lp::minimize(p).objective);
  }
  p.c[cells + y11] = 1.0;
  return std::clamp(lp::maximize(p).objective, 0.0, 1.0);
}

double s11_from_yield(double y11_lower, double mu_s_a, double mu_s_b) {
  if (!(y11_lower >= 0.0) || !(mu_s_a >= 0.0) || !(mu_s_b >= 0.0))
    throw std::invalid_argument("s11_from_yield: inputs must be >= 0");
  return poisson_pn(mu_s_a, 1) * poisson_pn(mu_s_b, 1) * y11_lower;
}

KeyRate secret_key_rate(double s11_z, double e11_x, double q_ss_z, double e_ss_z,
                        double f) {
  auto prob = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument(std::string("secret_key_rate: ") + what +
                                  " outside [0,1]");
  };
  prob(s11_z, "s11_z");
  prob(e11_x, "e11_x");
  prob(q_ss_z, "q_ss_z");
  prob(e_ss_z, "e_ss_z");
  if (!(f >= 1.0)) throw std::invalid_argument("secret_key_rate: f must be >= 1");

  KeyRate kr;
  kr.r = s11_z * (1.0 - binary_entropy(e11_x)) -
         q_ss_z * f * binary_entropy(e_ss_z);
  kr.r_clamped = std::max(kr.r, 0.0);
  return kr;
}

DecoyResult analyze(const GainTable& gains, const std::array<double, 3>& mu_a,
                    const std::array<double, 3>& mu_b, double f, int n_cut) {
  DecoyResult res;
  res.y11_z_lower = yield_bounds(gains, mu_a, mu_b, Basis::Z, YieldObjective::MinY11, n_cut);
  res.y11_x_lower = yield_bounds(gains, mu_a, mu_b, Basis::X, YieldObjective::MinY11, n_cut);
  res.b11_x_upper = yield_bounds(gains, mu_a, mu_b, Basis::X, YieldObjective::MaxB11, n_cut);

  if (res.y11_x_lower > 0.0) {
    res.e11_x_upper = std::min(0.5, res.b11_x_upper / res.y11_x_lower);
    res.degenerate_e11 = false;
  } else {
    res.e11_x_upper = 0.5;
    res.degenerate_e11 = true;
  }

  res.s11_z_lower = s11_from_yield(res.y11_z_lower, mu_a[0], mu_b[0]);
  KeyRate kr = secret_key_rate(res.s11_z_lower, res.e11_x_upper,
                               gains.Q(Basis::Z, Intensity::Signal, Intensity::Signal),
                               gains.E(Basis::Z, Intensity::Signal, Intensity::Signal), f);
  res.r = kr.r;
  res.r_clamped = kr.r_clamped;
  return res;
}

}  // namespace mdiqkd
