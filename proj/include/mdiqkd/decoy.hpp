#pragma once

#include <array>
#include <vector>

#include "mdiqkd/core.hpp"

namespace mdiqkd {

/// Yields per (n, m) photon-number pair, truncated at n_cut photons per side.
struct YieldModel {
  int n_cut = 10;
  std::vector<double> y;  // (n_cut+1)^2 entries, row-major in n
  double tail_mass = 0.0;

  explicit YieldModel(int cut = 10) : n_cut(cut), y(size_t(cut + 1) * (cut + 1), 0.0) {}

  double& at(int n, int m) { return y[size_t(n) * (n_cut + 1) + m]; }
  double at(int n, int m) const { return y[size_t(n) * (n_cut + 1) + m]; }
  void validate() const;
};

/// Exact gain for Poisson sources mixing over the truncated yield matrix.
double expected_gain(const YieldModel& ym, double mu_a, double mu_b);

enum class YieldObjective {
  MinY11,  // lower bound on the single-photon-pair yield
  MaxB11,  // upper bound on the single-photon-pair error-click rate e11*Y11
};

/// Solves the photon-number yield LP for one basis of the gain table.
/// mu arrays are indexed by Intensity and must be strictly decreasing with
/// vacuum >= 0 on both sides; n_cut must leave a Poisson tail < 1e-10 at the
/// largest intensity. Throws lp::Infeasible when the gain data admit no yield
/// matrix (corrupted input tables).
double yield_bounds(const GainTable& gains, const std::array<double, 3>& mu_a,
                    const std::array<double, 3>& mu_b, Basis basis,
                    YieldObjective objective, int n_cut = 10);

/// P_1(mu_a) * P_1(mu_b) * Y11: Poisson single-photon weights times yield.
double s11_from_yield(double y11_lower, double mu_s_a, double mu_s_b);

struct KeyRate {
  double r = 0.0;          // may be negative
  double r_clamped = 0.0;  // max(r, 0)
};

/// r = s11_z*(1 - H(e11_x)) - q_ss_z*f*H(e_ss_z).
KeyRate secret_key_rate(double s11_z, double e11_x, double q_ss_z, double e_ss_z,
                        double f);

struct DecoyResult {
  double y11_z_lower = 0.0;
  double y11_x_lower = 0.0;
  double b11_x_upper = 0.0;
  double s11_z_lower = 0.0;
  double e11_x_upper = 0.5;
  double r = 0.0;
  double r_clamped = 0.0;
  bool degenerate_e11 = false;  // Y11 lower bound in X vanished; e11 pinned at 0.5
};

/// Full three-intensity analysis: Z and X yield bounds, the error-rate upper
/// bound e11 = B11_max / Y11_X_min (clamped to 0.5), and the key rate using
/// the signal-signal Z cell of the table.
DecoyResult analyze(const GainTable& gains, const std::array<double, 3>& mu_a,
                    const std::array<double, 3>& mu_b, double f = 1.12,
                    int n_cut = 10);

}  // namespace mdiqkd
