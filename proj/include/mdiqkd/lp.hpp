#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdiqkd::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// minimize c.x  subject to  lo_r <= a_r . x <= hi_r  and  lb <= x <= ub.
/// Rows and variable bounds may be one-sided (use +-kInf) or equalities
/// (lo == hi). Intended for small dense problems (hundreds of variables).
struct Problem {
  std::vector<double> c;
  std::vector<double> lb, ub;

  struct Row {
    std::vector<double> a;  // dense, size == num_vars()
    double lo = -kInf;
    double hi = kInf;
    std::string name;
  };
  std::vector<Row> rows;

  int num_vars() const { return static_cast<int>(c.size()); }

  /// Returns the new variable's index.
  int add_var(double lower, double upper, double cost = 0.0);
  void add_row(std::vector<double> a, double lo, double hi, std::string name = "");
};

struct Solution {
  double objective = 0.0;
  std::vector<double> x;
  int iterations = 0;
};

/// Thrown when phase 1 cannot reach feasibility. Carries the rows whose
/// intervals could not be met and by how much (in original row units).
class Infeasible : public std::runtime_error {
 public:
  struct Violation {
    std::string row;
    double residual;  // signed distance to the nearest interval endpoint
  };

  explicit Infeasible(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Two-phase bounded-variable simplex on a dense tableau. Rows are scaled by
/// their largest coefficient; scaled constraint residuals are kept below 1e-9.
/// Throws Infeasible, or std::runtime_error for unbounded / iteration limit.
Solution minimize(const Problem& p);
Solution maximize(const Problem& p);

}  // namespace mdiqkd::lp
