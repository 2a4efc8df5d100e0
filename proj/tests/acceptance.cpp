// Runs every acceptance criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion. Exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mvsde/calculus.hpp"
#include "mvsde/commands.hpp"
#include "mvsde/config.hpp"
#include "mvsde/operators.hpp"
#include "mvsde/solver.hpp"
#include "mvsde/stability.hpp"
#include "oracles.hpp"

using namespace mvsde;
namespace tf = test_functions;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_s;  // 0 when no runtime bound is stated
  std::function<Outcome()> run;
};

unsigned workers() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Scenario scenario(const std::string& name, const Json& patch = Json::object()) {
  Json raw = patch;
  raw["scenario"] = name;
  const auto v = validate_config(raw);
  if (!v.ok()) throw std::runtime_error(name + ": " + v.errors.front().path + ": " + v.errors.front().message);
  return build_scenario(v.normalized);
}

Outcome c1_axioms() {
  std::size_t count = 0, failed = 0;
  double worst_exp = 0.0, worst_mono = 0.0;
  bool lambda_ok = true;
  for (std::size_t d = 1; d <= 3; ++d) {
    auto entries = sample_operator_catalog(d);
    for (const auto& s : scenario_catalog()) {
      const auto sc = scenario(s.name);
      if (sc.op.dimension == d) entries.push_back(sc.op);
    }
    for (const auto& e : entries) {
      const auto r = check_axioms(e, 1000, {1e-3, 1.0, 1e3}, 1, 1e-10);
      ++count;
      failed += !r.pass;
      worst_exp = std::max(worst_exp, r.max_expansion);
      worst_mono = std::min(worst_mono, r.min_monotone);
      if (e.is_normal_cone()) lambda_ok = lambda_ok && r.lambda_independent;
    }
  }
  return {failed == 0 && lambda_ok,
          fmt("%zu operators, %zu failed, max expansion %.2e, min monotone %.2e, normal cones lambda-independent: %s",
              count, failed, worst_exp, worst_mono, lambda_ok ? "yes" : "no")};
}

Outcome c2_reflected_drift() {
  const std::vector<double> hs{0.1, 0.05, 0.025};
  std::vector<double> grid_err, path_err;
  bool within = true;
  for (double h : hs) {
    auto sc = scenario("reflected-drift", {{"scheme", {{"h", h}, {"N", 1}, {"T", 2.0}}}});
    const auto traj = simulate(make_operator(sc.op), sc.coeffs, sc.scheme);
    double eg = 0.0, ep = 0.0;
    const auto& g = traj.grid();
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double x = traj.x(k)[0], kk = traj.k[k][0];
      eg = std::max({eg, std::abs(x - oracle::reflected_drift_x(1.0, -1.0, g[k])),
                     std::abs(kk - oracle::reflected_drift_k(1.0, -1.0, g[k]))});
      // piecewise-constant path on [t_k, t_{k+1}); the oracle is monotone so the
      // sup over the cell is attained at an end point
      if (k + 1 < g.size())
        ep = std::max({ep, eg, std::abs(x - oracle::reflected_drift_x(1.0, -1.0, g[k + 1])),
                       std::abs(kk - oracle::reflected_drift_k(1.0, -1.0, g[k + 1]))});
    }
    ep = std::max(ep, eg);
    grid_err.push_back(eg);
    path_err.push_back(ep);
    within = within && eg <= 2 * h && ep <= 2 * h;
  }
  // least-squares slope of log error against log h
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double x = std::log(hs[i]), y = std::log(path_err[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double n = static_cast<double>(hs.size());
  const double order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {within && order >= 0.8,
          fmt("grid-point error %.1e/%.1e/%.1e, path sup error %.4f/%.4f/%.4f (<= 2h), order %.3f", grid_err[0],
              grid_err[1], grid_err[2], path_err[0], path_err[1], path_err[2], order)};
}

Outcome c3_moments() {
  const double h = 0.005, T = 4.0;
  auto sc = scenario("mean-field-ou",
                     {{"scheme", {{"h", h}, {"N", 4000}, {"T", T}, {"threads", workers()}}}, {"seed", 20240}});
  const auto traj = simulate(make_operator(sc.op), sc.coeffs, sc.scheme);
  const auto ode = oracle::mean_field_ou_moments(1.0, 0.5, 0.3, 1, 1.0, T, h);
  const auto m2 = traj.second_moments();
  const auto se2 = second_moment_standard_errors(traj);
  double worst = -1e300, worst_m1 = 0, worst_m2 = 0;
  for (std::size_t k = 0; k < traj.flow.size(); ++k) {
    const auto x = traj.x(k);
    const double mean = traj.flow.measures[k].mean()[0];
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    const double se1 = std::sqrt(var / traj.n / traj.n);
    const double e1 = std::abs(mean - ode.m1[k]), e2 = std::abs(m2[k] - ode.m2[k]);
    worst_m1 = std::max(worst_m1, e1);
    worst_m2 = std::max(worst_m2, e2);
    worst = std::max({worst, e1 - (3 * se1 + 5 * h), e2 - (3 * se2[k] + 5 * h)});
  }
  return {worst <= 0.0, fmt("max |E X - ode| %.4f, max |E|X|^2 - ode| %.4f, worst margin %.4f (<= 0)", worst_m1,
                            worst_m2, worst)};
}

Outcome c4_contraction() {
  auto base = scenario("mean-field-unit-lipschitz", {{"scheme", {{"N", 1000}, {"threads", workers()}}}});
  const auto op = make_operator(base.op);
  auto translated = [](const MeasureFlow& f, double c) {
    std::vector<EmpiricalMeasure> ms;
    for (std::size_t k = 0; k < f.size(); ++k) {
      std::vector<double> p(f.measures[k].points().begin(), f.measures[k].points().end());
      for (double& v : p) v += c * f.grid[k];
      ms.emplace_back(std::move(p), f.dimension());
    }
    return MeasureFlow(f.grid, std::move(ms));
  };
  // sweep: the longest window whose translated-flow ratio stays below 1/2
  double window = 0.0;
  std::string sweep;
  for (double T : {0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2}) {
    auto cfg = base.scheme;
    cfg.T = T;
    const auto mu = initial_flow(op, cfg);
    const double r = contraction_ratio(op, base.coeffs, cfg, mu, translated(mu, 0.5));
    sweep += fmt(" T=%.2f:%.3f", T, r);
    if (r < 0.5) window = T;
    else break;
  }
  if (window == 0.0) return {false, "no window with ratio < 0.5;" + sweep};
  auto cfg = base.scheme;
  cfg.T = window;
  double worst = 0.0;
  int combos = 0;
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    cfg.seed = seed;
    const auto mu0 = initial_flow(op, cfg);
    worst = std::max(worst, contraction_ratio(op, base.coeffs, cfg, mu0, translated(mu0, 0.5 + 0.1 * seed)));
    const auto mu1 = solve_frozen_flow(op, base.coeffs, mu0, cfg, NoiseSource(seed + 100)).flow;
    worst = std::max(worst, contraction_ratio(op, base.coeffs, cfg, mu1, mu0));
    combos += 2;
  }
  cfg.seed = base.seed;
  const auto pic = picard(op, base.coeffs, cfg, 1e-4, 12);
  bool monotone = true;
  for (std::size_t i = 1; i < pic.deltas.size(); ++i) monotone = monotone && pic.deltas[i] < pic.deltas[i - 1];
  std::string deltas;
  for (double d : pic.deltas) deltas += fmt(" %.1e", d);
  return {worst < 0.5 && pic.converged && pic.iterations <= 12 && monotone,
          fmt("window T=%.2f (sweep%s), max ratio %.3f over %d combos, picard %zu iterations, deltas", window,
              sweep.c_str(), worst, combos, pic.iterations) +
              deltas};
}

Outcome c5_ito() {
  std::string detail;
  bool ok = true;
  // (i) deterministic contraction, phi = |x|^2
  {
    std::vector<double> res;
    for (double h : {0.01, 0.005}) {
      auto sc = scenario("contraction", {{"scheme", {{"h", h}, {"N", 1}}}});
      const auto traj = simulate(make_operator(sc.op), sc.coeffs, sc.scheme);
      res.push_back(std::abs(ito_residual(traj, tf::square_norm(), sc.coeffs, 0, traj.steps()).residual));
      ok = ok && res.back() <= 5 * h;
    }
    const double factor = res[0] / res[1];
    ok = ok && factor >= 1.4;
    detail += fmt("(i) |res| %.2e -> %.2e, factor %.2f", res[0], res[1], factor);
  }
  // (ii) reflected drift, phi = x: residuals sit at rounding level
  {
    std::vector<double> res;
    for (double h : {0.01, 0.005}) {
      auto sc = scenario("reflected-drift", {{"scheme", {{"h", h}, {"N", 1}, {"T", 2.0}}}});
      const auto traj = simulate(make_operator(sc.op), sc.coeffs, sc.scheme);
      res.push_back(std::abs(ito_residual(traj, tf::linear({1.0}), sc.coeffs, 0, traj.steps()).residual));
      ok = ok && res.back() <= 5 * h;
    }
    const double floor = 1e-12;
    const bool reduced = (res[0] <= floor && res[1] <= floor) || res[0] / res[1] >= 1.4;
    ok = ok && reduced;
    detail += fmt("; (ii) |res| %.2e -> %.2e (rounding floor %.0e)", res[0], res[1], floor);
  }
  // (iii) stochastic mean-field OU, phi = |x|^2 + int |y|^2 d mu
  {
    const auto f = tf::mixed(1.0);
    std::vector<double> res;
    for (std::uint64_t s = 0; s < 32; ++s) {
      auto sc = scenario("mean-field-ou",
                         {{"scheme", {{"h", 0.0025}, {"N", 2000}, {"T", 1.0}, {"threads", workers()}}}, {"seed", 5000 + s}});
      const auto traj = simulate(make_operator(sc.op), sc.coeffs, sc.scheme);
      res.push_back(ito_residual(traj, f, sc.coeffs, 0, traj.steps()).residual);
    }
    const double m = oracle::mean(res), se = oracle::standard_error(res);
    ok = ok && std::abs(m) <= 3 * se;
    detail += fmt("; (iii) mean residual %.2e, s.e. %.2e, |mean|/se %.2f", m, se, std::abs(m) / se);
  }
  return {ok, detail};
}

Outcome c6_lift() {
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t d = 1; d <= 3; ++d) {
    Point c(d, 0.0), e(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) c[r] = 1.0 - 0.3 * r;
    e[d - 1] = 1.0;
    const std::vector<TestFunction> lib{tf::second_moment(),
                                        tf::mixed(0.7),
                                        tf::mean_functional(e),
                                        tf::coordinate_times_mean(c, e),
                                        tf::bounded_tanh(),
                                        tf::combine(1.0, tf::mixed(1.0), 2.0, tf::bounded_tanh())};
    std::vector<double> pts(8 * d), slot(d);
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = std::sin(1.7 * i + d) * 1.3;
    for (std::size_t r = 0; r < d; ++r) slot[r] = 0.4 - 0.2 * r;
    const EmpiricalMeasure mu(pts, d);
    for (const auto& f : lib) {
      worst = std::max(worst, lift_gradient_check(f, slot, mu).max_abs_error);
      ++checked;
    }
  }
  return {worst <= 1e-5 * 8, fmt("%zu function/dimension pairs, max error %.2e (<= 8e-5)", checked, worst)};
}

Outcome c7_exponential() {
  auto sc = scenario("contraction", {{"scheme", {{"h", 2e-5}, {"N", 1}, {"T", 1.0}}}});
  const auto traj = simulate(make_operator(sc.op), sc.coeffs, sc.scheme);
  const auto& spec = *sc.lyapunov;
  const auto r = exponential_bound_check(traj, spec, sc.coeffs, sc.stability.bound);
  const bool gates = r.dissipativity && r.dissipativity->pass && r.k_condition && r.k_condition->pass;
  const auto fit = decay_fit(traj, sc.stability.burn_in);
  return {gates && r.pass() && r.max_slack <= 1e-6 && std::abs(fit.beta_hat - 2.0) <= 1e-4,
          fmt("gates %s, status %s, max violation %.2e, slack %.1e, beta_hat %.6f", gates ? "passed" : "failed",
              std::string(to_string(r.status)).c_str(), r.max_violation, r.max_slack, fit.beta_hat)};
}

Outcome c8_ultimate() {
  auto sc = scenario("mean-field-ou", {{"scheme", {{"h", 0.005}, {"N", 4000}, {"T", 4.0}, {"threads", workers()}}}});
  const auto& spec = *sc.lyapunov;
  const auto c = ultimate_constants(spec);
  const double S = spec.a2 / spec.a1;
  const double M = (spec.alpha * (spec.M2 + spec.M3) + spec.M1) / (spec.alpha * spec.a1);
  const bool wiring = c.S == S && c.M == M && c.beta == spec.alpha;
  const auto traj = simulate(make_operator(sc.op), sc.coeffs, sc.scheme);
  const auto diss = dissipativity_check(spec, sc.coeffs, traj, default_mode(spec.family));
  const auto r = ultimate_boundedness_check(traj, c, sc.stability.bound);
  return {wiring && diss.pass && r.pass,
          fmt("S=%g beta=%g M=%g (wiring %s), dissipativity %s, max violation %.4f", c.S, c.beta, c.M,
              wiring ? "exact" : "WRONG", diss.pass ? "pass" : "fail", r.max_violation)};
}

Outcome c9_as() {
  const std::vector<double> eps{1e-3, 1e-2, 1e-1, 1.0};
  auto batch = [&](const std::string& name, const Json& patch) {
    std::vector<TrajectoryRecord> out;
    for (std::uint64_t s = 0; s < 64; ++s) {
      Json p = patch;
      p["seed"] = s;
      auto sc = scenario(name, p);
      out.push_back(simulate(make_operator(sc.op), sc.coeffs, sc.scheme));
    }
    return as_stability_estimate(out, eps, 0.75);
  };
  const auto soft = batch("soft-threshold-flow", {{"scheme", {{"N", 1}, {"T", 4.0}}}});
  const auto contr = batch("contraction", {{"scheme", {{"N", 1}, {"T", 12.0}}}});
  const auto null = batch("null", {{"scheme", {{"N", 1}, {"T", 4.0}}}});
  const double fs = soft.levels[0].fraction_below, fc = contr.levels[0].fraction_below,
               fn = null.levels[0].fraction_below;
  return {soft.paths == 64 && fs == 1.0 && fc == 1.0 && fn == 0.0,
          fmt("fraction below 1e-3 over 64 seeds: soft-threshold %.2f, contraction %.2f, null %.2f", fs, fc, fn)};
}

Outcome c10_reproducibility() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "mvsde_acceptance_repro";
  fs::remove_all(root);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::size_t compared = 0, mismatched = 0;
  for (const auto& info : scenario_catalog()) {
    const fs::path cfg = root / (info.name + ".json");
    fs::create_directories(root);
    std::ofstream(cfg) << Json{{"scenario", info.name}, {"seed", 17}, {"scheme", {{"N", 300}, {"T", 0.5}}}}.dump();
    for (const std::string sub : {"simulate", "ito-check"}) {
      std::vector<std::string> outputs;
      int run = 0;
      for (unsigned threads : {1u, 1u, 8u}) {
        RunOptions o;
        o.config_path = cfg;
        o.threads = threads;
        o.out_dir = root / info.name / (sub + std::to_string(run++));
        const auto r = run_command(sub, o);
        if (r.exit_code != kExitOk) return {false, info.name + " " + sub + ": " + r.err};
        outputs.push_back(slurp(o.out_dir / (sub == "simulate" ? "trajectory.csv" : "ito_terms.csv")));
      }
      compared += 2;
      mismatched += (outputs[0] != outputs[1]) + (outputs[0] != outputs[2]);
    }
  }
  fs::remove_all(root);
  return {mismatched == 0, fmt("%zu CSV comparisons across %zu scenarios (threads 1, 1, 8), %zu mismatches", compared,
                               scenario_catalog().size(), mismatched)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "operator axioms", 5, c1_axioms},
      {2, "reflected-drift oracle", 10, c2_reflected_drift},
      {3, "mean-field moment oracle", 60, c3_moments},
      {4, "contraction window and picard", 60, c4_contraction},
      {5, "generalized Ito formula", 120, c5_ito},
      {6, "Lions-lift check", 5, c6_lift},
      {7, "exponential stability", 10, c7_exponential},
      {8, "2-ultimate boundedness", 60, c8_ultimate},
      {9, "a.s. asymptotic stability", 60, c9_as},
      {10, "reproducibility", 0, c10_reproducibility},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_s == 0 || secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("[%s] criterion %d: %s | %s | %.2f s%s\n", pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
                o.detail.c_str(), secs, in_time ? "" : fmt(" (over %.0f s budget)", c.budget_s).c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures;
}
