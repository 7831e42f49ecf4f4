#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "nwbec/quadrature.hpp"

using namespace nwbec;

TEST_CASE("adaptive integration of smooth and endpoint-singular integrands") {
  auto r = quad::integrate<double>([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-13));

  // sqrt singularity at 0: needs bisection but converges
  quad::Options opt;
  opt.rel_tol = 1e-10;
  opt.max_intervals = 2000;
  auto s = quad::integrate<double>([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, opt);
  CHECK(s.converged);
  CHECK(s.value == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("complex and vector integrands") {
  using C = std::complex<double>;
  auto r = quad::integrate<C>([](double x) { return std::exp(C(0.0, x)); }, 0.0,
                              std::numbers::pi / 2);
  CHECK(std::abs(r.value - C(1.0, 1.0)) < 1e-13);

  auto v = quad::integrate<Eigen::Vector2d>(
      [](double x) { return Eigen::Vector2d(x, x * x); }, 0.0, 3.0);
  CHECK(v.value[0] == doctest::Approx(4.5).epsilon(1e-14));
  CHECK(v.value[1] == doctest::Approx(9.0).epsilon(1e-14));
}

TEST_CASE("breakpoints are honoured and nonconvergence is reported") {
  const double pts[] = {-1.0, 0.0, 1.0};
  auto r = quad::integrate<double>([](double x) { return std::abs(x); }, std::span<const double>(pts));
  CHECK(r.intervals == 2);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-14));

  quad::Options opt;
  opt.rel_tol = 1e-14;
  opt.max_intervals = 4;
  auto bad = quad::integrate<double>([](double x) { return std::log(x); }, 0.0, 1.0, opt);
  CHECK_FALSE(bad.converged);
  CHECK(quad::describe(bad).find("intervals=") != std::string::npos);
  CHECK_THROWS_AS(quad::integrate_checked<double>([](double x) { return std::log(x); },
                                                  std::span<const double>(std::array{0.0, 1.0}),
                                                  opt, "log"),
                  ConvergenceError);
}

TEST_CASE("Gauss-Legendre rules are exact to degree 2n-1") {
  for (unsigned n : {2u, 5u, 16u, 32u}) {
    const auto& rule = quad::gauss_legendre(n);
    double wsum = 0.0, top = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      wsum += rule.weights[k];
      top += rule.weights[k] * std::pow(rule.nodes[k], 2 * n - 2);
    }
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(top == doctest::Approx(2.0 / (2 * n - 1)).epsilon(1e-12));
  }
}

TEST_CASE("pairwise summation is order-stable") {
  std::vector<double> v(1000, 0.1);
  CHECK(quad::pairwise_sum<double>(std::span<const double>(v)) ==
        doctest::Approx(100.0).epsilon(1e-15));
}
