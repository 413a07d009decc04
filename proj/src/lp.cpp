#include "mdiqkd/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mdiqkd::lp {

namespace {

constexpr double kTolCost = 1e-9;    // reduced-cost optimality threshold
constexpr double kTolFeas = 1e-9;    // scaled residual / phase-1 threshold
constexpr double kTolPivot = 1e-10;  // smallest usable pivot element
constexpr int kRefactorEvery = 48;   // pivots between tableau rebuilds

std::string make_message(const std::vector<Infeasible::Violation>& v) {
  std::ostringstream os;
  os << "infeasible constraint set (" << v.size() << " rows):";
  for (const auto& viol : v)
    os << " [" << (viol.row.empty() ? "?" : viol.row) << " off by " << viol.residual << "]";
  return os.str();
}

/// Tableau state for the bounded-variable simplex. All rows are equalities
/// a.x = 0 after each original interval row gains a slack variable carrying
/// the interval as its bounds. A0 keeps the pristine matrix so the working
/// tableau can be rebuilt exactly, containing pivot roundoff.
struct Tableau {
  int m = 0, n = 0;
  std::vector<double> A0;     // m x n, row-major; never modified after setup
  std::vector<double> T;      // m x n; maintained as B^{-1} A0
  std::vector<double> lb, ub, cost, xval;
  std::vector<int> basis;     // column index per row
  std::vector<int> in_row;    // column -> row if basic, else -1
  std::vector<char> at_upper; // nonbasic position flag

  double& t(int i, int j) { return T[size_t(i) * n + j]; }
  double tv(int i, int j) const { return T[size_t(i) * n + j]; }

  void recompute_basics() {
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j)
        if (in_row[j] < 0) s -= tv(i, j) * xval[j];
      xval[basis[i]] = s;
    }
  }

  /// Rebuilds T = B^{-1} A0 through an LU factorization of the basis matrix.
  /// Backward-stable, so constraint residuals stay near machine precision
  /// even when the basis is poorly conditioned.
  void refactor() {
    if (m == 0) return;
    std::vector<double> B(size_t(m) * m);
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) B[size_t(i) * m + k] = A0[size_t(i) * n + basis[k]];
    std::vector<int> piv(m);
    for (int k = 0; k < m; ++k) {
      int p = k;
      double best = std::fabs(B[size_t(k) * m + k]);
      for (int i = k + 1; i < m; ++i) {
        double v = std::fabs(B[size_t(i) * m + k]);
        if (v > best) { best = v; p = i; }
      }
      if (best < 1e-13) throw std::runtime_error("lp: basis became singular");
      piv[k] = p;
      if (p != k)
        for (int j = 0; j < m; ++j) std::swap(B[size_t(k) * m + j], B[size_t(p) * m + j]);
      double inv = 1.0 / B[size_t(k) * m + k];
      for (int i = k + 1; i < m; ++i) {
        double f = B[size_t(i) * m + k] * inv;
        B[size_t(i) * m + k] = f;
        if (f != 0.0)
          for (int j = k + 1; j < m; ++j) B[size_t(i) * m + j] -= f * B[size_t(k) * m + j];
      }
    }
    std::vector<double> col(m);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < m; ++i) col[i] = A0[size_t(i) * n + j];
      // Row swaps rearrange stored multipliers too, so the permutation must be
      // applied in full before forward substitution.
      for (int k = 0; k < m; ++k)
        if (piv[k] != k) std::swap(col[k], col[piv[k]]);
      for (int k = 0; k < m; ++k) {
        double ck = col[k];
        if (ck != 0.0)
          for (int i = k + 1; i < m; ++i) col[i] -= B[size_t(i) * m + k] * ck;
      }
      for (int k = m - 1; k >= 0; --k) {
        double s = col[k];
        for (int j2 = k + 1; j2 < m; ++j2) s -= B[size_t(k) * m + j2] * col[j2];
        col[k] = s / B[size_t(k) * m + k];
      }
      for (int i = 0; i < m; ++i) T[size_t(i) * n + j] = col[i];
    }
    recompute_basics();
  }

  double reduced_cost(int j) const {
    double d = cost[j];
    for (int i = 0; i < m; ++i) {
      double cb = cost[basis[i]];
      if (cb != 0.0) d -= cb * tv(i, j);
    }
    return d;
  }

  void pivot(int row, int col) {
    double piv = tv(row, col);
    double inv = 1.0 / piv;
    for (int j = 0; j < n; ++j) t(row, j) *= inv;
    t(row, col) = 1.0;
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      double f = tv(i, col);
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) t(i, j) -= f * t(row, j);
      t(i, col) = 0.0;
    }
    in_row[basis[row]] = -1;
    basis[row] = col;
    in_row[col] = row;
  }

  void run(int max_iters, int& iters) {
    int bland_after = 10 * (m + n) + 200;
    int since_refactor = 0;
    for (;;) {
      if (iters > max_iters) throw std::runtime_error("lp: iteration limit exceeded");
      bool bland = iters > bland_after;

      int enter = -1;
      double best = -kTolCost;
      for (int j = 0; j < n; ++j) {
        if (in_row[j] >= 0) continue;
        if (lb[j] == ub[j]) continue;  // fixed, cannot move
        double d = reduced_cost(j);
        double gain = at_upper[j] ? -d : d;  // movement direction that lowers cost
        if (gain < best) {
          best = gain;
          enter = j;
          if (bland) break;  // lowest eligible index
        }
      }
      if (enter < 0) return;  // optimal

      double dir = at_upper[enter] ? -1.0 : 1.0;
      double t_max = ub[enter] - lb[enter];  // bound flip distance
      int leave = -1;
      bool leave_to_upper = false;
      for (int i = 0; i < m; ++i) {
        double alpha = tv(i, enter);
        if (std::fabs(alpha) <= kTolPivot) continue;
        double delta = -dir * alpha;  // d x_basic(i) / d t
        int b = basis[i];
        double step;
        bool to_upper;
        if (delta > 0) {
          step = (ub[b] - xval[b]) / delta;
          to_upper = true;
        } else {
          step = (xval[b] - lb[b]) / (-delta);
          to_upper = false;
        }
        if (step < 0) step = 0;
        bool tie_break = false;
        if (step < t_max + 1e-12 && leave >= 0) {
          tie_break = bland ? basis[i] < basis[leave]
                            : std::fabs(alpha) > std::fabs(tv(leave, enter));
        }
        if (step < t_max - 1e-12 || tie_break) {
          t_max = std::min(t_max, step);
          leave = i;
          leave_to_upper = to_upper;
        }
      }
      if (std::isinf(t_max)) throw std::runtime_error("lp: unbounded");

      xval[enter] += dir * t_max;
      for (int i = 0; i < m; ++i) {
        double alpha = tv(i, enter);
        if (alpha != 0.0) xval[basis[i]] -= dir * t_max * alpha;
      }
      if (leave < 0) {
        at_upper[enter] = !at_upper[enter];  // bound flip, basis unchanged
      } else {
        int out = basis[leave];
        xval[out] = leave_to_upper ? ub[out] : lb[out];  // land exactly on the bound
        pivot(leave, enter);
        at_upper[out] = leave_to_upper;
        if (++since_refactor >= kRefactorEvery) {
          refactor();
          since_refactor = 0;
        }
      }
      ++iters;
    }
  }
};

}  // namespace

int Problem::add_var(double lower, double upper, double cost) {
  c.push_back(cost);
  lb.push_back(lower);
  ub.push_back(upper);
  for (auto& r : rows) r.a.push_back(0.0);
  return num_vars() - 1;
}

void Problem::add_row(std::vector<double> a, double lo, double hi, std::string name) {
  if (static_cast<int>(a.size()) != num_vars())
    throw std::invalid_argument("lp: row size does not match variable count");
  if (lo > hi) throw std::invalid_argument("lp: row has lo > hi");
  rows.push_back(Row{std::move(a), lo, hi, std::move(name)});
}

Infeasible::Infeasible(std::vector<Violation> violations)
    : std::runtime_error(make_message(violations)), violations_(std::move(violations)) {}

Solution minimize(const Problem& p) {
  const int n0 = p.num_vars();
  if (static_cast<int>(p.lb.size()) != n0 || static_cast<int>(p.ub.size()) != n0)
    throw std::invalid_argument("lp: bound vectors do not match variable count");
  for (int j = 0; j < n0; ++j)
    if (p.lb[j] > p.ub[j]) throw std::invalid_argument("lp: variable has lb > ub");

  // Keep only rows with a nonzero coefficient; scale each by its largest one.
  std::vector<int> row_src;
  std::vector<double> row_scale;
  for (int r = 0; r < static_cast<int>(p.rows.size()); ++r) {
    const auto& row = p.rows[r];
    double s = 0.0;
    for (double v : row.a) s = std::max(s, std::fabs(v));
    if (s == 0.0) {
      if (row.lo > 0.0 || row.hi < 0.0)
        throw Infeasible({{row.name, row.lo > 0.0 ? row.lo : row.hi}});
      continue;
    }
    row_src.push_back(r);
    row_scale.push_back(s);
  }
  const int m = static_cast<int>(row_src.size());
  const int n = n0 + m + m;  // structural + row slacks + artificials

  Tableau tab;
  tab.m = m;
  tab.n = n;
  tab.A0.assign(size_t(m) * n, 0.0);
  tab.lb.assign(n, 0.0);
  tab.ub.assign(n, 0.0);
  tab.cost.assign(n, 0.0);
  tab.xval.assign(n, 0.0);
  tab.basis.resize(m);
  tab.in_row.assign(n, -1);
  tab.at_upper.assign(n, 0);

  for (int j = 0; j < n0; ++j) {
    tab.lb[j] = p.lb[j];
    tab.ub[j] = p.ub[j];
    double start = 0.0;
    if (std::isfinite(p.lb[j])) start = p.lb[j];
    else if (std::isfinite(p.ub[j])) start = std::min(0.0, p.ub[j]);
    tab.xval[j] = start;
    tab.at_upper[j] = (start == p.ub[j] && p.lb[j] != p.ub[j]) ? 1 : 0;
  }
  for (int i = 0; i < m; ++i) {
    const auto& row = p.rows[row_src[i]];
    double inv = 1.0 / row_scale[i];
    for (int j = 0; j < n0; ++j) tab.A0[size_t(i) * n + j] = row.a[j] * inv;
    int slack = n0 + i;
    tab.A0[size_t(i) * n + slack] = -1.0;
    tab.lb[slack] = row.lo * inv;
    tab.ub[slack] = row.hi * inv;
    double start = std::isfinite(tab.lb[slack]) ? tab.lb[slack]
                                                : std::min(0.0, tab.ub[slack]);
    tab.xval[slack] = start;
    tab.at_upper[slack] =
        (start == tab.ub[slack] && tab.lb[slack] != tab.ub[slack]) ? 1 : 0;
  }

  // Phase 1 basis: one artificial per row soaking up the starting residual.
  // Rows with a negative residual are negated so the artificial enters at +1.
  for (int i = 0; i < m; ++i) {
    double resid = 0.0;
    for (int j = 0; j < n0 + m; ++j) resid -= tab.A0[size_t(i) * n + j] * tab.xval[j];
    int art = n0 + m + i;
    if (resid < 0.0) {
      for (int j = 0; j < n0 + m; ++j) tab.A0[size_t(i) * n + j] = -tab.A0[size_t(i) * n + j];
    }
    tab.A0[size_t(i) * n + art] = 1.0;
    tab.lb[art] = 0.0;
    tab.ub[art] = kInf;
    tab.cost[art] = 1.0;
    tab.xval[art] = std::fabs(resid);
    tab.basis[i] = art;
    tab.in_row[art] = i;
  }
  tab.T = tab.A0;

  int iters = 0;
  const int max_iters = 200 * (m + n) + 2000;
  tab.run(max_iters, iters);

  double infeas = 0.0;
  for (int i = 0; i < m; ++i) infeas += tab.xval[n0 + m + i];
  if (infeas > kTolFeas) {
    std::vector<Infeasible::Violation> v;
    for (int i = 0; i < m; ++i) {
      double a = tab.xval[n0 + m + i];
      if (a > kTolFeas)
        v.push_back({p.rows[row_src[i]].name, a * row_scale[i]});
    }
    if (v.empty()) v.push_back({"", infeas});
    throw Infeasible(std::move(v));
  }

  // Phase 2: freeze artificials at zero, swap in the real objective.
  for (int i = 0; i < m; ++i) {
    int art = n0 + m + i;
    tab.lb[art] = tab.ub[art] = 0.0;
    tab.cost[art] = 0.0;
    tab.xval[art] = 0.0;
  }
  for (int j = 0; j < n0; ++j) tab.cost[j] = p.c[j];
  tab.refactor();
  tab.run(max_iters, iters);
  tab.refactor();

  Solution sol;
  sol.x.assign(tab.xval.begin(), tab.xval.begin() + n0);
  sol.iterations = iters;
  double obj = 0.0;
  for (int j = 0; j < n0; ++j) obj += p.c[j] * sol.x[j];
  sol.objective = obj;

  // Verify scaled residuals; a violation here is a solver defect, not bad input.
  for (int i = 0; i < m; ++i) {
    const auto& row = p.rows[row_src[i]];
    double ax = 0.0;
    for (int j = 0; j < n0; ++j) ax += row.a[j] * sol.x[j];
    double scaled = ax / row_scale[i];
    double lo = row.lo / row_scale[i], hi = row.hi / row_scale[i];
    if (scaled < lo - kTolFeas || scaled > hi + kTolFeas)
      throw std::runtime_error("lp: residual check failed on row " +
                               (row.name.empty() ? std::to_string(i) : row.name));
  }
  for (int j = 0; j < n0; ++j) {
    if (sol.x[j] < p.lb[j] - kTolFeas || sol.x[j] > p.ub[j] + kTolFeas)
      throw std::runtime_error("lp: variable bound violated in solution");
    sol.x[j] = std::clamp(sol.x[j], p.lb[j], p.ub[j]);
  }
  return sol;
}

Solution maximize(const Problem& p) {
  Problem neg = p;
  for (double& v : neg.c) v = -v;
  Solution s = minimize(neg);
  s.objective = -s.objective;
  return s;
}

}  // namespace mdiqkd::lp
