#include <mdiqkd/optimize.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mdiqkd {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const NelderMeadOptions& opt) {
  const size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");
  if (!opt.steps.empty() && opt.steps.size() != n)
    throw std::invalid_argument("nelder_mead: steps size mismatch");

  std::vector<std::vector<double>> v(n + 1, x0);
  for (size_t i = 0; i < n; ++i)
    v[i + 1][i] += opt.steps.empty() ? opt.initial_step : opt.steps[i];
  std::vector<double> fv(n + 1);
  for (size_t i = 0; i <= n; ++i) fv[i] = f(v[i]);

  NelderMeadResult res;
  std::vector<size_t> order(n + 1);
  std::vector<double> centroid(n), cand(n);
  int iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    for (size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return fv[a] < fv[b]; });
    size_t best = order[0], worst = order[n], second = order[n - 1];

    double spread_f = fv[worst] - fv[best];
    double spread_x = 0.0;
    for (size_t i = 0; i < n; ++i)
      spread_x = std::max(spread_x, std::abs(v[worst][i] - v[best][i]));
    if ((spread_f < opt.tol_fx && std::isfinite(spread_f)) || spread_x < opt.tol_x) {
      res.converged = true;
      break;
    }

    for (size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (size_t j = 0; j <= n; ++j)
        if (j != worst) s += v[j][i];
      centroid[i] = s / static_cast<double>(n);
    }

    auto point = [&](double t) {
      for (size_t i = 0; i < n; ++i) cand[i] = centroid[i] + t * (v[worst][i] - centroid[i]);
      return f(cand);
    };

    double fr = point(-1.0);  // reflection
    std::vector<double> xr = cand;
    if (fr < fv[best]) {
      double fe = point(-2.0);  // expansion
      if (fe < fr) {
        v[worst] = cand;
        fv[worst] = fe;
      } else {
        v[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      v[worst] = xr;
      fv[worst] = fr;
    } else {
      double fc = fr < fv[worst] ? point(-0.5) : point(0.5);
      if (fc < std::min(fr, fv[worst])) {
        v[worst] = cand;
        fv[worst] = fc;
      } else {  // shrink toward the best vertex
        for (size_t j = 0; j <= n; ++j) {
          if (j == best) continue;
          for (size_t i = 0; i < n; ++i) v[j][i] = v[best][i] + 0.5 * (v[j][i] - v[best][i]);
          fv[j] = f(v[j]);
        }
      }
    }
  }

  size_t best = 0;
  for (size_t i = 1; i <= n; ++i)
    if (fv[i] < fv[best]) best = i;
  res.x = v[best];
  res.fx = fv[best];
  res.iterations = iter;
  return res;
}

}  // namespace mdiqkd
