#include <mdiqkd/optimize.hpp>

#include <doctest.h>

#include <cmath>

using namespace mdiqkd;

TEST_CASE("nelder-mead minimizes a separable quadratic") {
  auto f = [](const std::vector<double>& x) {
    double a = x[0] - 3.0, b = x[1] + 1.5;
    return a * a + 4.0 * b * b;
  };
  auto r = nelder_mead(f, {0.0, 0.0});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(-1.5).epsilon(1e-5));
  CHECK(r.fx < 1e-9);
}

TEST_CASE("nelder-mead handles the rosenbrock valley") {
  auto f = [](const std::vector<double>& x) {
    double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  };
  NelderMeadOptions opt;
  opt.max_iter = 20000;
  auto r = nelder_mead(f, {-1.2, 1.0}, opt);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("nelder-mead respects infinite barriers") {
  auto f = [](const std::vector<double>& x) {
    if (x[0] < 0.0) return std::numeric_limits<double>::infinity();
    double a = x[0] - 2.0;
    return a * a;
  };
  NelderMeadOptions opt;
  opt.steps = {0.5};
  auto r = nelder_mead(f, {0.1, }, opt);
  CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("nelder-mead stops at the iteration budget") {
  auto f = [](const std::vector<double>& x) { return x[0] * x[0]; };
  NelderMeadOptions opt;
  opt.max_iter = 3;
  auto r = nelder_mead(f, {50.0}, opt);
  CHECK(r.iterations == 3);
  CHECK_FALSE(r.converged);
}
