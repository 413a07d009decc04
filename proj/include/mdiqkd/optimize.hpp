#pragma once

#include <functional>
#include <vector>

namespace mdiqkd {

struct NelderMeadOptions {
  double initial_step = 0.1;   // simplex edge per coordinate, unless steps set
  std::vector<double> steps;   // optional per-coordinate edges
  double tol_fx = 1e-12;       // value spread across the simplex
  double tol_x = 1e-10;        // vertex spread, max-norm
  int max_iter = 4000;
};

struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Downhill simplex minimizer. The objective may return +inf to mark a
/// forbidden region; the simplex contracts away from it.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const NelderMeadOptions& opt = {});

}  // namespace mdiqkd
