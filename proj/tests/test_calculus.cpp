#include <doctest.h>

#include <cmath>
#include <limits>

#include "mvsde/calculus.hpp"
#include "mvsde/config.hpp"
#include "mvsde/error.hpp"
#include "mvsde/rng.hpp"
#include "oracles.hpp"

using namespace mvsde;
namespace tf = test_functions;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::vector<double> random_points(std::uint64_t seed, std::size_t n, std::size_t d) {
  std::vector<double> v(n * d);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng::normal(seed, 7, i, 0, 0);
  return v;
}

std::vector<TestFunction> library(std::size_t d) {
  Point c(d), e(d, 0.0);
  for (std::size_t r = 0; r < d; ++r) c[r] = 0.5 + r;
  e[0] = 1.0;
  return {tf::constant(1.5),
          tf::square_norm(),
          tf::second_moment(),
          tf::mixed(0.7),
          tf::linear(c),
          tf::mean_functional(e),
          tf::coordinate_times_mean(c, e),
          tf::bounded_tanh(),
          tf::combine(2.0, tf::square_norm(), -1.0, tf::bounded_tanh())};
}

SchemeConfig scheme(double h, std::size_t n, double T, InitialCondition ic, std::uint64_t seed = 1) {
  SchemeConfig c;
  c.h = h;
  c.N = n;
  c.T = T;
  c.initial = std::move(ic);
  c.seed = seed;
  return c;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("property: analytic x-derivatives match finite differences") {
  for (std::size_t d : {1u, 2u, 3u})
    for (std::uint64_t s = 0; s < 5; ++s) {
      const EmpiricalMeasure mu(random_points(s, 6, d), d);
      const auto x = random_points(s + 100, 1, d);
      for (const auto& f : library(d)) {
        CAPTURE(f.name);
        std::vector<double> g(d), hxx(d * d);
        f.dx(x, mu, g);
        f.dxx(x, mu, hxx);
        for (std::size_t r = 0; r < d; ++r) {
          const double fd = oracle::central_difference([&](const std::vector<double>& p) { return f.phi(p, mu); }, x, r, 1e-4);
          CHECK(rel_err(g[r], fd) <= 1e-5);
          for (std::size_t q = 0; q < d; ++q) {
            CHECK(std::abs(hxx[r * d + q] - hxx[q * d + r]) <= 1e-10);
            const double fd2 = oracle::central_difference(
                [&](const std::vector<double>& p) {
                  std::vector<double> gp(d);
                  f.dx(p, mu, gp);
                  return gp[q];
                },
                x, r, 1e-4);
            CHECK(rel_err(hxx[r * d + q], fd2) <= 1e-5);
          }
        }
      }
    }
}

TEST_CASE("property: d_y d_mu matches finite differences of d_mu") {
  for (std::size_t d : {1u, 2u, 3u}) {
    const EmpiricalMeasure mu(random_points(3, 5, d), d);
    const auto x = random_points(4, 1, d);
    const auto y = random_points(5, 1, d);
    for (const auto& f : library(d)) {
      CAPTURE(f.name);
      std::vector<double> j(d * d);
      f.dydmu(x, mu, y, j);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t q = 0; q < d; ++q) {
          const double fd = oracle::central_difference(
              [&](const std::vector<double>& p) {
                std::vector<double> v(d);
                f.dmu(x, mu, p, v);
                return v[q];
              },
              y, i, 1e-4);
          CHECK(rel_err(j[i * d + q], fd) <= 1e-5);
        }
    }
  }
}

TEST_CASE("lift gradient check") {
  SUBCASE("examples") {
    const EmpiricalMeasure mu(random_points(11, 8, 2), 2);
    const Point slot{0.0, 0.0};
    CHECK(lift_gradient_check(tf::second_moment(), slot, mu).max_abs_error <= 1e-6);
    CHECK(lift_gradient_check(tf::mean_functional({1.0, 0.0}), slot, mu).max_abs_error <= 1e-8);
    CHECK(lift_gradient_check(tf::constant(3.0), slot, mu).max_abs_error <= 1e-12);
  }
  SUBCASE("property: every measure-dependent library function, N = 8") {
    for (std::size_t d : {1u, 2u, 3u}) {
      const EmpiricalMeasure mu(random_points(20 + d, 8, d), d);
      const auto slot = random_points(40 + d, 1, d);
      for (const auto& f : library(d)) {
        if (!f.measure_dependent) continue;
        CAPTURE(f.name);
        CHECK(lift_gradient_check(f, slot, mu).max_abs_error <= 1e-5 * 8);
      }
    }
  }
  SUBCASE("size limit") {
    const EmpiricalMeasure big(std::vector<double>(1001, 0.0), 1);
    CHECK_THROWS_AS(lift_gradient_check(tf::second_moment(), Point{0.0}, big), Error);
  }
}

TEST_CASE("generator examples") {
  SUBCASE("|x|^2 under b = -x") {
    const EmpiricalMeasure mu({0.3, -1.0, 2.0}, 1);
    const auto coeffs = presets::ou(1.0, 0.0, 1);
    for (double x : {-1.5, 0.0, 0.4}) CHECK(generator(tf::square_norm(), Point{x}, mu, coeffs) == doctest::Approx(-2 * x * x));
  }
  SUBCASE("second moment under sigma = I gives d") {
    for (std::size_t d : {1u, 2u, 3u}) {
      const EmpiricalMeasure mu(random_points(d, 7, d), d);
      const auto coeffs = presets::ou(0.0, 1.0, d);
      CHECK(generator(tf::second_moment(), random_points(9, 1, d), mu, coeffs) ==
            doctest::Approx(static_cast<double>(d)).epsilon(1e-12));
    }
  }
  SUBCASE("constant") {
    const EmpiricalMeasure mu({0.3, 2.0}, 2);
    CHECK(generator(tf::constant(4.0), Point{1.0, 1.0}, mu, presets::mean_field_linear(1.0, 0.5, 0.3, 2)) == 0.0);
  }
  SUBCASE("mean-field drift acting on the mean functional") {
    // b = -a x + b_bar mean; d/dt mean = (b_bar - a) mean.
    const EmpiricalMeasure mu({1.0, 3.0}, 1);
    const auto coeffs = presets::mean_field_linear(1.0, 0.5, 0.3, 1);
    CHECK(generator(tf::mean_functional({1.0}), Point{0.0}, mu, coeffs) == doctest::Approx(-0.5 * 2.0));
  }
  SUBCASE("property: linearity") {
    for (std::size_t d : {1u, 2u}) {
      const EmpiricalMeasure mu(random_points(50 + d, 9, d), d);
      const auto coeffs = presets::mean_field_linear(0.8, 0.4, 0.6, d);
      const auto x = random_points(60 + d, 1, d);
      const auto lib = library(d);
      for (std::size_t p = 0; p < lib.size(); ++p)
        for (std::size_t q = 0; q < lib.size(); ++q) {
          const double a = 1.3, b = -0.7;
          const double lhs = generator(tf::combine(a, lib[p], b, lib[q]), x, mu, coeffs);
          const double rhs = a * generator(lib[p], x, mu, coeffs) + b * generator(lib[q], x, mu, coeffs);
          CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(rhs)));
        }
    }
  }
  SUBCASE("context matches the free function") {
    const EmpiricalMeasure mu(random_points(70, 10, 2), 2);
    const auto coeffs = presets::mean_field_linear(0.8, 0.4, 0.6, 2);
    const auto f = tf::mixed(0.5);
    const GeneratorContext ctx(f, coeffs, mu);
    for (std::size_t i = 0; i < 10; ++i) CHECK(ctx.evaluate(mu.point(i)) == doctest::Approx(generator(f, mu.point(i), mu, coeffs)));
  }
}

TEST_CASE("ito residual") {
  SUBCASE("constant function") {
    const auto op = make_operator(OperatorCatalogEntry::ball({0.0}, 1.0));
    const auto coeffs = presets::mean_field_linear(1.0, 0.5, 0.5, 1);
    const auto traj = simulate(op, coeffs, scheme(0.01, 50, 1.0, InitialCondition::point({0.5})));
    const auto r = ito_residual(traj, tf::constant(2.0), coeffs, 0, traj.steps());
    CHECK(r.lhs == 0.0);
    for (double t : r.terms) CHECK(t == 0.0);
    CHECK(r.residual == 0.0);
  }
  SUBCASE("deterministic contraction: O(h) residual") {
    const auto op = make_operator(OperatorCatalogEntry::zero(1));
    const auto coeffs = presets::ou(1.0, 0.0, 1);
    double prev = 0.0;
    for (double h : {0.02, 0.01, 0.005}) {
      const auto traj = simulate(op, coeffs, scheme(h, 1, 1.0, InitialCondition::point({1.0})));
      const auto r = ito_residual(traj, tf::square_norm(), coeffs, 0, traj.steps());
      CHECK(r.lhs == doctest::Approx(std::exp(-2.0) - 1.0).epsilon(3 * h));
      CHECK(std::abs(r.residual) <= 5 * h);
      if (prev > 0.0) CHECK(std::abs(r.residual) <= 0.7 * prev);
      prev = std::abs(r.residual);
    }
  }
  SUBCASE("reflected drift with phi = x") {
    const auto op = make_operator(OperatorCatalogEntry::box({0.0}, {kInf}));
    const auto coeffs = presets::constant_drift(-1.0, 1);
    const auto traj = simulate(op, coeffs, scheme(0.05, 1, 2.0, InitialCondition::point({1.0})));
    const auto r = ito_residual(traj, tf::linear({1.0}), coeffs, 0, traj.steps());
    CHECK(r.lhs == doctest::Approx(-1.0));
    CHECK(r.terms[1] == doctest::Approx(-2.0));
    CHECK(r.terms[0] == doctest::Approx(1.0));
    CHECK(std::abs(r.residual) <= 1e-12);
  }
  SUBCASE("sub-window and index errors") {
    const auto op = make_operator(OperatorCatalogEntry::zero(1));
    const auto coeffs = presets::ou(1.0, 0.0, 1);
    const auto traj = simulate(op, coeffs, scheme(0.01, 1, 1.0, InitialCondition::point({1.0})));
    const auto r = ito_residual(traj, tf::square_norm(), coeffs, 20, 60);
    CHECK(r.lhs == doctest::Approx(std::exp(-1.2) - std::exp(-0.4)).epsilon(0.05));
    CHECK_THROWS_AS(ito_residual(traj, tf::square_norm(), coeffs, 5, 5), Error);
    CHECK_THROWS_AS(ito_residual(traj, tf::square_norm(), coeffs, 0, traj.steps() + 1), Error);
  }
  SUBCASE("martingale term averages to zero") {
    const auto op = make_operator(OperatorCatalogEntry::zero(1));
    const auto coeffs = presets::ou(1.0, 0.5, 1);
    std::vector<double> t3;
    for (std::uint64_t s = 0; s < 32; ++s) {
      const auto traj = simulate(op, coeffs, scheme(0.01, 200, 0.5, InitialCondition::point({1.0}), s));
      t3.push_back(ito_residual(traj, tf::square_norm(), coeffs, 0, traj.steps()).terms[2]);
    }
    CHECK(std::abs(oracle::mean(t3)) <= 3 * oracle::standard_error(t3));
  }
}

TEST_CASE("k-condition monitor") {
  SUBCASE("no operator") {
    const auto op = make_operator(OperatorCatalogEntry::zero(1));
    const auto traj = simulate(op, presets::ou(1.0, 0.5, 1), scheme(0.01, 20, 0.5, InitialCondition::point({1.0})));
    const auto r = k_condition_monitor(traj, tf::square_norm());
    CHECK(r.pass);
    for (double v : r.increments) CHECK(v == 0.0);
  }
  const auto ball = make_operator(OperatorCatalogEntry::ball({0.0, 0.0}, 1.0));
  const auto traj = simulate(ball, presets::mean_field_linear(-0.5, 0.5, 0.8, 2),
                             scheme(0.01, 40, 1.0, InitialCondition::point({0.5, 0.0}), 3));
  bool touched = false;
  for (const auto& dk : traj.dk)
    for (double v : dk) touched |= v != 0.0;
  REQUIRE(touched);
  SUBCASE("ball reflection with |x|^2") {
    const auto r = k_condition_monitor(traj, tf::square_norm());
    CHECK(r.pass);
    CHECK(r.min_increment >= 0.0);
    CHECK(r.increments.size() == traj.steps());
  }
  SUBCASE("mixed function keeps the sign") {
    CHECK(k_condition_monitor(traj, tf::mixed(1.0)).pass);
  }
  SUBCASE("adversarial -|x|^2 fails") {
    const auto r = k_condition_monitor(traj, tf::combine(-1.0, tf::square_norm(), 0.0, tf::constant(0.0)));
    CHECK_FALSE(r.pass);
    CHECK(r.min_increment < 0.0);
  }
}
