#include <doctest.h>

#include <cmath>

#include "mvsde/config.hpp"
#include "mvsde/error.hpp"
#include "mvsde/stability.hpp"
#include "oracles.hpp"

using namespace mvsde;
namespace tf = test_functions;

namespace {

SchemeConfig scheme(double h, std::size_t n, double T, InitialCondition ic, std::uint64_t seed = 1) {
  SchemeConfig c;
  c.h = h;
  c.N = n;
  c.T = T;
  c.initial = std::move(ic);
  c.seed = seed;
  return c;
}

LyapunovSpec square_spec(double alpha) {
  LyapunovSpec s;
  s.F = tf::square_norm();
  s.alpha = alpha;
  return s;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an mvsde::Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("lyapunov spec validation") {
  auto s = square_spec(1.0);
  CHECK_NOTHROW(s.validate());
  s.alpha = 0.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = square_spec(1.0);
  s.a1 = 2.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = square_spec(1.0);
  s.family = HypothesisFamily::H23;
  s.gamma1 = [](double r) { return 0.5 * r * r; };
  s.gamma2 = [](double r) { return 2.0 * r * r; };
  CHECK_NOTHROW(s.validate());
  s.gamma2 = [](double r) { return 1.0 + r; };
  CHECK_THROWS_AS(s.validate(), Error);
  s.gamma2 = [](double) { return 0.0; };
  CHECK_THROWS_AS(s.validate(), Error);
  CHECK(family_from_string(to_string(HypothesisFamily::H22)) == HypothesisFamily::H22);
  CHECK(default_mode(HypothesisFamily::H23) == DissipativityMode::Pointwise);
  CHECK(default_mode(HypothesisFamily::H21) == DissipativityMode::Integrated);
}

TEST_CASE("dissipativity examples") {
  const auto coeffs = presets::ou(1.0, 0.0, 1);
  const EmpiricalMeasure mu({0.5, -1.0, 2.0}, 1);
  SUBCASE("alpha = 2 is exactly balanced") {
    const auto r = dissipativity_check(square_spec(2.0), coeffs, mu, DissipativityMode::Integrated);
    CHECK(r.pass);
    CHECK(std::abs(r.value) <= 1e-14);
    CHECK(dissipativity_check(square_spec(2.0), coeffs, mu, DissipativityMode::Pointwise).pass);
  }
  SUBCASE("alpha = 3 fails with value = second moment") {
    const auto r = dissipativity_check(square_spec(3.0), coeffs, mu, DissipativityMode::Integrated);
    CHECK_FALSE(r.pass);
    CHECK(r.value == doctest::Approx(mu.second_moment()));
  }
  SUBCASE("delta_0") {
    const auto r = dissipativity_check(square_spec(5.0), presets::mean_field_linear(1.0, 0.5, 0.0, 1),
                                       EmpiricalMeasure({0.0}, 1), DissipativityMode::Integrated);
    CHECK(r.pass);
    CHECK(r.value == 0.0);
  }
  SUBCASE("H2.2 threshold M1") {
    auto spec = square_spec(2.0);
    spec.family = HypothesisFamily::H22;
    spec.M1 = 0.09;
    // L|x|^2 + 2|x|^2 = s^2 = 0.09 under b = -x, sigma = 0.3.
    const auto r = dissipativity_check(spec, presets::ou(1.0, 0.3, 1), mu, DissipativityMode::Integrated);
    CHECK(r.threshold == 0.09);
    CHECK(r.value == doctest::Approx(0.09));
    CHECK(r.pass);
    spec.M1 = 0.08;
    CHECK_FALSE(dissipativity_check(spec, presets::ou(1.0, 0.3, 1), mu, DissipativityMode::Integrated).pass);
  }
  SUBCASE("pointwise is at least as strict as integrated") {
    // b = -x + mean: integrated dissipative for |x|^2 at alpha 0, not pointwise.
    const auto mf = presets::mean_field_linear(1.0, 1.0, 0.0, 1);
    const EmpiricalMeasure nu({1.0, 3.0}, 1);
    const auto integ = dissipativity_check(square_spec(0.01), mf, nu, DissipativityMode::Integrated);
    const auto point = dissipativity_check(square_spec(0.01), mf, nu, DissipativityMode::Pointwise);
    CHECK(point.value >= integ.value);
    CHECK(point.mode == DissipativityMode::Pointwise);
  }
  SUBCASE("trajectory overload and sweep") {
    const auto op = make_operator(OperatorCatalogEntry::zero(1));
    const auto traj = simulate(op, coeffs, scheme(0.01, 4, 1.0, InitialCondition::gaussian({1.0}, 0.5)));
    CHECK(dissipativity_check(square_spec(2.0), coeffs, traj, DissipativityMode::Integrated).pass);
    const auto bad = dissipativity_check(square_spec(2.5), coeffs, traj, DissipativityMode::Integrated);
    CHECK_FALSE(bad.pass);
    CHECK(bad.worst_index == 0);  // second moment is largest at t = 0
    const auto best = dissipativity_sweep(square_spec(1.0), coeffs, traj, {0.5, 1.0, 2.0, 3.0, 4.0});
    REQUIRE(best);
    CHECK(*best == 2.0);
    CHECK_FALSE(dissipativity_sweep(square_spec(1.0), coeffs, traj, {3.0, 4.0}));
  }
}

TEST_CASE("comparison examples") {
  const EmpiricalMeasure mu({0.5, -1.0, 2.0}, 1);
  SUBCASE("|x|^2 with a1 = a2 = 1") {
    const auto r = comparison_check(square_spec(1.0), mu);
    CHECK(r.pass);
    CHECK(r.lower == doctest::Approx(r.middle));
    CHECK(r.upper == doctest::Approx(r.middle));
  }
  SUBCASE("|x|^2 + 1") {
    LyapunovSpec s = square_spec(1.0);
    s.F = tf::combine(1.0, tf::square_norm(), 1.0, tf::constant(1.0));
    const EmpiricalMeasure delta0({0.0}, 1);
    CHECK_FALSE(comparison_check(s, delta0).pass);
    s.family = HypothesisFamily::H22;
    s.M2 = 0.0;
    s.M3 = 1.0;
    CHECK(comparison_check(s, delta0).pass);
    CHECK(comparison_check(s, mu).pass);
  }
  SUBCASE("pointwise comparison functions") {
    LyapunovSpec s = square_spec(1.0);
    s.family = HypothesisFamily::H23;
    s.gamma1 = [](double r) { return 0.5 * r * r; };
    s.gamma2 = [](double r) { return 2.0 * r * r; };
    const auto r = comparison_check(s, mu);
    CHECK(r.pointwise);
    CHECK(r.pass);
    s.gamma1 = [](double r) { return 1.5 * r * r; };
    CHECK_FALSE(comparison_check(s, mu).pass);
  }
}

TEST_CASE("decay fit") {
  SUBCASE("exact exponential") {
    std::vector<double> grid, m;
    for (int k = 0; k <= 100; ++k) {
      grid.push_back(0.05 * k);
      m.push_back(3.0 * std::exp(-1.7 * grid.back()));
    }
    const auto fit = decay_fit(grid, m, 0.2);
    CHECK(std::abs(fit.beta_hat - 1.7) <= 1.7e-6);
    CHECK(fit.intercept == doctest::Approx(std::log(3.0)));
    CHECK(fit.r2 == doctest::Approx(1.0));
    CHECK(fit.points == 81);
  }
  SUBCASE("constant moment") {
    const auto op = make_operator(OperatorCatalogEntry::zero(1));
    const auto traj = simulate(op, presets::zero(1), scheme(0.1, 3, 2.0, InitialCondition::point({1.5})));
    const auto fit = decay_fit(traj);
    CHECK(fit.beta_hat == 0.0);
    CHECK(fit.r2 == 1.0);
  }
  SUBCASE("xdot = -x recovers 2 as h shrinks") {
    const auto op = make_operator(OperatorCatalogEntry::zero(1));
    const auto traj = simulate(op, presets::ou(1.0, 0.0, 1), scheme(1e-4, 1, 2.0, InitialCondition::point({1.0})));
    CHECK(std::abs(decay_fit(traj).beta_hat - 2.0) <= 2e-4);
  }
  SUBCASE("deterministic mean-field OU rate 2(a - b_bar)") {
    const auto op = make_operator(OperatorCatalogEntry::zero(1));
    const auto traj =
        simulate(op, presets::mean_field_linear(1.0, 0.4, 0.0, 1), scheme(1e-3, 2, 2.0, InitialCondition::point({1.0})));
    CHECK(decay_fit(traj).beta_hat == doctest::Approx(1.2).epsilon(2e-3));
  }
  SUBCASE("degenerate") {
    const auto op = make_operator(OperatorCatalogEntry::zero(1));
    const auto traj = simulate(op, presets::zero(1), scheme(0.1, 3, 2.0, InitialCondition::point({0.0})));
    CHECK(code_of([&] { decay_fit(traj); }) == ErrorCode::DegenerateFit);
  }
}

TEST_CASE("bootstrap standard error") {
  const auto op = make_operator(OperatorCatalogEntry::zero(1));
  const auto traj = simulate(op, presets::zero(1), scheme(0.5, 4, 1.0, InitialCondition::uniform({-2.0}, {2.0})));
  const auto se = second_moment_standard_errors(traj);
  REQUIRE(se.size() == traj.flow.size());
  std::vector<double> sq;
  for (double v : traj.x(0)) sq.push_back(v * v);
  // ideal bootstrap of a mean: population sd / sqrt(N)
  const double m = oracle::mean(sq);
  double var = 0.0;
  for (double v : sq) var += (v - m) * (v - m);
  var /= 4.0;
  CHECK(se[0] == doctest::Approx(std::sqrt(var / 4.0)));
}

TEST_CASE("exponential bound") {
  const auto op = make_operator(OperatorCatalogEntry::zero(1));
  const auto coeffs = presets::ou(1.0, 0.0, 1);
  const auto traj = simulate(op, coeffs, scheme(1e-3, 1, 2.0, InitialCondition::point({1.0})));
  SUBCASE("contraction with alpha = 2") {
    const auto r = exponential_bound_check(traj, square_spec(2.0), coeffs);
    CHECK(r.pass());
    CHECK(r.max_violation <= 1e-6);
    REQUIRE(r.dissipativity);
    REQUIRE(r.k_condition);
    CHECK(r.curve.bound.front() == 1.0);
    CHECK(r.curve.bound.back() == doctest::Approx(std::exp(-4.0)));
  }
  SUBCASE("gate ordering: alpha = 4 is a precondition failure") {
    const auto r = exponential_bound_check(traj, square_spec(4.0), coeffs);
    CHECK(r.status == BoundStatus::PreconditionFailed);
    CHECK(r.failed_gate == "dissipativity_check");
    CHECK_FALSE(r.k_condition);
    CHECK(r.curve.grid.empty());
  }
  SUBCASE("gate ordering: k-condition") {
    const auto ball = make_operator(OperatorCatalogEntry::ball({0.0}, 1.0));
    const auto out = presets::constant_drift(1.0, 1);
    const auto t2 = simulate(ball, out, scheme(0.01, 1, 1.0, InitialCondition::point({0.5})));
    LyapunovSpec s = square_spec(1e-3);
    s.F = tf::combine(1.0, tf::linear({-1.0}), 0.0, tf::constant(0.0));
    s.a1 = 1e-3;
    // dissipativity of F = -x under b = 1: -1 - alpha x <= 0 on [0, 1] holds
    const auto r = exponential_bound_check(t2, s, out);
    CHECK(r.status == BoundStatus::PreconditionFailed);
    CHECK(r.failed_gate == "k_condition_monitor");
  }
  SUBCASE("reflected OU in the unit ball with alpha from a sweep") {
    const auto ball = make_operator(OperatorCatalogEntry::ball({0.0, 0.0}, 1.0));
    const auto ouc = presets::ou(1.0, 0.0, 2);
    const auto t3 = simulate(ball, ouc, scheme(1e-3, 8, 2.0, InitialCondition::uniform({-0.7, -0.7}, {0.7, 0.7})));
    const auto alpha = dissipativity_sweep(square_spec(1.0), ouc, t3, {0.5, 1.0, 1.5, 2.0, 2.5});
    REQUIRE(alpha);
    CHECK(*alpha == 2.0);
    CHECK(exponential_bound_check(t3, square_spec(*alpha), ouc, {2.0, 3.0}).pass());
  }
}

TEST_CASE("ultimate boundedness") {
  SUBCASE("constant wiring") {
    LyapunovSpec s = square_spec(2.0);
    s.family = HypothesisFamily::H22;
    s.a1 = 0.5;
    s.a2 = 1.5;
    s.M1 = 0.3;
    s.M2 = 0.1;
    s.M3 = 0.2;
    const auto c = ultimate_constants(s);
    CHECK(c.S == 3.0);
    CHECK(c.beta == 2.0);
    CHECK(c.M == (2.0 * (0.1 + 0.2) + 0.3) / (2.0 * 0.5));
  }
  SUBCASE("contraction to zero with M = 0") {
    const auto op = make_operator(OperatorCatalogEntry::zero(1));
    const auto traj = simulate(op, presets::ou(1.0, 0.0, 1), scheme(1e-3, 1, 2.0, InitialCondition::point({1.0})));
    CHECK(ultimate_boundedness_check(traj, {1.0, 2.0, 0.0}).pass);
  }
  SUBCASE("OU with noise approaches s^2 / (2a)") {
    const auto op = make_operator(OperatorCatalogEntry::zero(1));
    const double a = 1.0, s = 0.5;
    const auto traj = simulate(op, presets::ou(a, s, 1), scheme(0.01, 2000, 3.0, InitialCondition::point({1.0}), 4));
    const auto r = ultimate_boundedness_check(traj, {1.0, 2 * a, s * s / (2 * a) * 1.05}, {1.0, 3.0});
    CHECK(r.pass);
    CHECK_FALSE(ultimate_boundedness_check(traj, {1.0, 2 * a, 0.0}, {1.0, 3.0}).pass);
  }
}

TEST_CASE("almost-sure stability estimate") {
  const std::vector<double> eps{1e-3, 1e-2, 1e-1, 1.0, 3.0};
  auto run = [](const Coefficients& c, const OperatorCatalogEntry& e, double T, double x0, std::size_t seeds) {
    const auto op = make_operator(e);
    std::vector<TrajectoryRecord> out;
    for (std::uint64_t s = 0; s < seeds; ++s) out.push_back(simulate(op, c, scheme(0.01, 1, T, InitialCondition::point({x0}), s)));
    return out;
  };
  SUBCASE("contraction") {
    const auto r = as_stability_estimate(run(presets::ou(1.0, 0.0, 1), OperatorCatalogEntry::zero(1), 20.0, 1.0, 2), eps, 0.75);
    CHECK(r.paths == 2);
    for (const auto& l : r.levels) CHECK(l.fraction_below == 1.0);
  }
  SUBCASE("static path") {
    const auto r = as_stability_estimate(run(presets::zero(1), OperatorCatalogEntry::zero(1), 1.0, 2.0, 3), eps, 0.75);
    for (const auto& l : r.levels) {
      CHECK(l.fraction_below == (l.eps > 2.0 ? 1.0 : 0.0));
      CHECK(l.fraction_exceeding == 1.0 - l.fraction_below);
      CHECK(l.chebyshev_bound == doctest::Approx(4.0 / (l.eps * l.eps)));
    }
    CHECK(r.mean_tail_sup_sq == 4.0);
  }
  SUBCASE("soft threshold reaches zero at t = 2") {
    const auto r = as_stability_estimate(run(presets::zero(1), OperatorCatalogEntry::abs({1.0}), 4.0, 2.0, 2), eps, 0.75);
    for (const auto& l : r.levels) CHECK(l.fraction_below == 1.0);
    CHECK(r.tail_start == doctest::Approx(3.0));
  }
  SUBCASE("property: monotone in eps and in T") {
    const auto coeffs = presets::mean_field_linear(1.0, 0.0, 0.2, 1);
    std::vector<std::vector<double>> by_t;
    for (double T : {2.0, 4.0, 8.0}) {
      const auto r = as_stability_estimate(run(coeffs, OperatorCatalogEntry::zero(1), T, 1.0, 16), {0.05, 0.1, 0.2, 0.4, 0.8}, 0.75);
      std::vector<double> f;
      for (std::size_t i = 0; i < r.levels.size(); ++i) {
        f.push_back(r.levels[i].fraction_below);
        if (i > 0) CHECK(r.levels[i].fraction_below >= r.levels[i - 1].fraction_below);
      }
      by_t.push_back(f);
    }
    for (std::size_t i = 0; i < by_t[0].size(); ++i) CHECK(by_t[2][i] >= by_t[0][i]);
  }
  SUBCASE("noise-free contraction is monotone in T") {
    double prev = -1.0;
    for (double T : {2.0, 4.0, 8.0}) {
      const auto r = as_stability_estimate(run(presets::ou(1.0, 0.0, 1), OperatorCatalogEntry::zero(1), T, 1.0, 1), {0.01, 0.05}, 0.75);
      CHECK(r.levels[0].fraction_below >= prev);
      prev = r.levels[0].fraction_below;
    }
    CHECK(prev == 1.0);
  }
}
