#include "mvsde/commands.hpp"

#include <cmath>
#include <sstream>

#include "mvsde/calculus.hpp"
#include "mvsde/error.hpp"
#include "mvsde/io.hpp"
#include "mvsde/measures.hpp"
#include "mvsde/solver.hpp"
#include "mvsde/stability.hpp"

namespace mvsde {

namespace {

class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string csv_header(std::size_t d, const char* prefix) {
  std::string s;
  for (std::size_t r = 1; r <= d; ++r) s += std::string(",") + prefix + std::to_string(r);
  return s;
}

void append_values(std::string& s, std::span<const double> v) {
  for (double x : v) {
    s += ',';
    s += format_double(x);
  }
}

std::string flow_csv(const MeasureFlow& flow) {
  const std::size_t d = flow.measures.front().dimension();
  std::string s = "t,particle_id" + csv_header(d, "x_") + "\n";
  for (std::size_t k = 0; k < flow.size(); ++k) {
    const auto& mu = flow.measures[k];
    for (std::size_t i = 0; i < mu.size(); ++i) {
      s += format_double(flow.grid[k]);
      s += ',';
      s += std::to_string(i);
      append_values(s, mu.point(i));
      s += '\n';
    }
  }
  return s;
}

Json dissipativity_json(const DissipativityReport& r, const TrajectoryRecord& traj) {
  return {{"mode", std::string(to_string(r.mode))},
          {"value", r.value},
          {"threshold", r.threshold},
          {"tolerance", r.tolerance},
          {"worst_time", traj.grid()[r.worst_index]},
          {"pass", r.pass}};
}

Json k_condition_json(const KConditionReport& r) {
  return {{"min_increment", r.min_increment}, {"tolerance", r.tolerance}, {"pass", r.pass}};
}

Json comparison_json(const LyapunovSpec& spec, const TrajectoryRecord& traj) {
  ComparisonReport worst;
  double worst_t = traj.grid().front();
  bool first = true;
  for (std::size_t k = 0; k < traj.flow.size(); ++k) {
    auto r = comparison_check(spec, traj.flow.measures[k]);
    if (first || (!r.pass && worst.pass)) {
      worst = r;
      worst_t = traj.grid()[k];
      first = false;
    }
  }
  return {{"pointwise", worst.pointwise}, {"lower", worst.lower}, {"middle", worst.middle},
          {"upper", worst.upper},         {"time", worst_t},        {"pass", worst.pass}};
}

std::string curve_csv(const BoundCurve& c) {
  std::string s = "t,m,bound,allowed\n";
  for (std::size_t k = 0; k < c.grid.size(); ++k) {
    s += format_double(c.grid[k]);
    s += ',';
    s += format_double(c.moment[k]);
    s += ',';
    s += format_double(c.bound[k]);
    s += ',';
    s += format_double(c.allowed[k]);
    s += '\n';
  }
  return s;
}

Json decay_json(const TrajectoryRecord& traj, double burn_in) {
  try {
    const auto fit = decay_fit(traj, burn_in);
    return {{"beta_hat", fit.beta_hat}, {"intercept", fit.intercept}, {"r2", fit.r2}, {"points", fit.points},
            {"burn_in", burn_in}};
  } catch (const Error& e) {
    return {{"error", e.what()}, {"burn_in", burn_in}};
  }
}

struct Context {
  const RunOptions& options;
  RunResult& result;

  void write(const std::string& name, const std::string& content) {
    const auto path = options.out_dir / name;
    write_text_file(path, content);
    result.files.push_back(path);
  }
};

Scenario load_scenario(const RunOptions& options, Json* normalized_out = nullptr) {
  const Json raw = assemble_config(options);
  const auto v = validate_config(raw);
  if (!v.ok()) {
    std::string msg = "invalid config:";
    for (const auto& e : v.errors) msg += "\n  " + (e.path.empty() ? std::string("<root>") : e.path) + ": " + e.message;
    fail(ErrorCode::ConfigError, msg);
  }
  if (normalized_out) *normalized_out = v.normalized;
  return build_scenario(v.normalized);
}

void cmd_validate(Context& ctx) {
  Json cfg;
  load_scenario(ctx.options, &cfg);
  ctx.result.out = dump_config(cfg);
}

void cmd_scenarios(Context& ctx) {
  std::string s;
  for (const auto& info : scenario_catalog()) {
    s += info.name + "\t" + info.description;
    if (!info.oracle.empty()) s += "\toracle: " + info.oracle;
    s += '\n';
  }
  ctx.result.out = s;
}

void cmd_simulate(Context& ctx) {
  Json cfg;
  const Scenario sc = load_scenario(ctx.options, &cfg);
  const auto op = make_operator(sc.op);
  const auto traj = simulate(op, sc.coeffs, sc.scheme);
  ctx.write("trajectory.csv", trajectory_csv(traj));
  const auto m = traj.second_moments();
  const auto& last = traj.flow.measures.back();
  double mean_variation = 0.0;
  for (double v : traj.k_variation.back()) mean_variation += v;
  mean_variation /= static_cast<double>(traj.n);
  Json summary = {{"scenario", sc.name},
                  {"seed", sc.seed},
                  {"steps", traj.steps()},
                  {"particles", traj.n},
                  {"dimension", traj.d},
                  {"final_time", traj.grid().back()},
                  {"final_mean", last.mean()},
                  {"final_second_moment", m.back()},
                  {"mean_k_variation", mean_variation},
                  {"config", cfg}};
  ctx.write("summary.json", summary.dump(2) + "\n");
  ctx.result.out = "simulate: " + std::to_string(traj.steps()) + " steps, " + std::to_string(traj.n) +
                   " particles, wrote trajectory.csv and summary.json\n";
}

void cmd_picard(Context& ctx) {
  const Scenario sc = load_scenario(ctx.options);
  const auto op = make_operator(sc.op);
  const auto res = picard(op, sc.coeffs, sc.scheme, sc.picard.tol, sc.picard.max_iter, true);
  for (std::size_t k = 0; k < res.iterates.size(); ++k)
    ctx.write("picard_flow_" + std::to_string(k) + ".csv", flow_csv(res.iterates[k]));
  Json conv = {{"scenario", sc.name},  {"seed", sc.seed},          {"tol", sc.picard.tol},
               {"max_iter", sc.picard.max_iter}, {"iterations", res.iterations}, {"converged", res.converged},
               {"deltas", res.deltas}};
  ctx.write("convergence.json", conv.dump(2) + "\n");
  if (!res.converged)
    fail(ErrorCode::NotConverged, "picard did not reach picard.tol within picard.max_iter iterations");
  ctx.result.out = "picard: converged in " + std::to_string(res.iterations) + " iterations\n";
}

void cmd_ito(Context& ctx) {
  const Scenario sc = load_scenario(ctx.options);
  const auto op = make_operator(sc.op);
  const auto traj = simulate(op, sc.coeffs, sc.scheme);
  std::string s = "step,t_start,t_end,term_1,term_2,term_3,term_4,term_5,term_6,term_7,lhs,residual,h,N,seed\n";
  std::array<double, 7> totals{};
  double lhs = 0.0, residual = 0.0;
  for (std::size_t k = 0; k < traj.steps(); ++k) {
    const auto r = ito_residual(traj, sc.ito_function, sc.coeffs, k, k + 1);
    s += std::to_string(k) + ',' + format_double(traj.grid()[k]) + ',' + format_double(traj.grid()[k + 1]);
    append_values(s, r.terms);
    s += ',' + format_double(r.lhs) + ',' + format_double(r.residual) + ',' + format_double(sc.scheme.h) + ',' +
         std::to_string(sc.scheme.N) + ',' + std::to_string(sc.seed) + '\n';
    lhs += r.lhs;
    residual += r.residual;
    for (std::size_t q = 0; q < 7; ++q) totals[q] += r.terms[q];
  }
  ctx.write("ito_terms.csv", s);
  Json summary = {{"scenario", sc.name}, {"function", sc.ito_function.name}, {"lhs", lhs},
                  {"terms", totals},     {"residual", residual},             {"h", sc.scheme.h}};
  ctx.write("ito_summary.json", summary.dump(2) + "\n");
  ctx.result.out = "ito-check: total residual " + format_double(residual) + "\n";
}

void cmd_stability(Context& ctx) {
  const Scenario sc = load_scenario(ctx.options);
  const auto op = make_operator(sc.op);
  const auto& st = sc.stability;
  Json report = {{"scenario", sc.name}, {"check", st.check}, {"hypothesis_checks", Json::object()},
                 {"decay", nullptr},    {"bounds", nullptr},  {"as_fractions", nullptr}};
  std::string failure;

  if (st.check == "as") {
    std::vector<TrajectoryRecord> runs;
    for (std::size_t i = 0; i < st.seeds; ++i) {
      SchemeConfig cfg = sc.scheme;
      cfg.seed = sc.seed + i;
      runs.push_back(simulate(op, sc.coeffs, cfg));
    }
    const auto as = as_stability_estimate(runs, st.eps, st.tail);
    Json levels = Json::array();
    for (const auto& l : as.levels)
      levels.push_back({{"eps", l.eps},
                        {"fraction_below", l.fraction_below},
                        {"fraction_exceeding", l.fraction_exceeding},
                        {"chebyshev_bound", l.chebyshev_bound}});
    report["as_fractions"] = {{"paths", as.paths},
                              {"tail_start", as.tail_start},
                              {"mean_tail_sup_sq", as.mean_tail_sup_sq},
                              {"levels", levels}};
    if (sc.lyapunov) {
      report["hypothesis_checks"]["dissipativity"] =
          dissipativity_json(dissipativity_check(*sc.lyapunov, sc.coeffs, runs.front(), default_mode(sc.lyapunov->family)),
                             runs.front());
      report["hypothesis_checks"]["k_condition"] = k_condition_json(k_condition_monitor(runs.front(), sc.lyapunov->F));
    }
    report["decay"] = decay_json(runs.front(), st.burn_in);
  } else {
    if (!sc.lyapunov) fail(ErrorCode::ConfigError, "stability.lyapunov: required for stability.check=" + st.check);
    const LyapunovSpec& spec = *sc.lyapunov;
    const auto traj = simulate(op, sc.coeffs, sc.scheme);
    report["decay"] = decay_json(traj, st.burn_in);
    report["hypothesis_checks"]["comparison"] = comparison_json(spec, traj);
    if (st.check == "exponential") {
      const auto r = exponential_bound_check(traj, spec, sc.coeffs, st.bound);
      if (r.dissipativity) report["hypothesis_checks"]["dissipativity"] = dissipativity_json(*r.dissipativity, traj);
      if (r.k_condition) report["hypothesis_checks"]["k_condition"] = k_condition_json(*r.k_condition);
      report["bounds"] = {{"kind", "exponential"},
                          {"status", std::string(to_string(r.status))},
                          {"S", spec.a2 / spec.a1},
                          {"beta", spec.alpha},
                          {"max_violation", r.max_violation},
                          {"max_slack", r.max_slack},
                          {"c_h", st.bound.c_h},
                          {"se_factor", st.bound.se_factor}};
      if (r.status == BoundStatus::PreconditionFailed) {
        report["bounds"]["failed_gate"] = r.failed_gate;
        failure = "bound not evaluated: " + r.failed_gate + " failed";
      } else {
        ctx.write("moments.csv", curve_csv(r.curve));
        if (r.status == BoundStatus::Fail) failure = "exponential bound violated";
      }
    } else {
      const auto diss = dissipativity_check(spec, sc.coeffs, traj, default_mode(spec.family));
      const auto kc = k_condition_monitor(traj, spec.F);
      report["hypothesis_checks"]["dissipativity"] = dissipativity_json(diss, traj);
      report["hypothesis_checks"]["k_condition"] = k_condition_json(kc);
      const auto constants = ultimate_constants(spec);
      Json bounds = {{"kind", "ultimate"},
                     {"S", constants.S},
                     {"beta", constants.beta},
                     {"M", constants.M},
                     {"c_h", st.bound.c_h},
                     {"se_factor", st.bound.se_factor}};
      if (!diss.pass || !kc.pass) {
        const std::string gate = !diss.pass ? "dissipativity_check" : "k_condition_monitor";
        bounds["status"] = "precondition_failed";
        bounds["failed_gate"] = gate;
        failure = "bound not evaluated: " + gate + " failed";
      } else {
        const auto r = ultimate_boundedness_check(traj, constants, st.bound);
        bounds["status"] = r.pass ? "pass" : "fail";
        bounds["max_violation"] = r.max_violation;
        bounds["max_slack"] = r.max_slack;
        ctx.write("moments.csv", curve_csv(r.curve));
        if (!r.pass) failure = "ultimate bound violated";
      }
      report["bounds"] = bounds;
    }
    if (failure.empty() && !report["hypothesis_checks"]["comparison"]["pass"].get<bool>())
      failure = "comparison_check failed";
  }
  report["pass"] = failure.empty();
  if (!failure.empty()) report["failure"] = failure;
  ctx.write("stability_report.json", report.dump(2) + "\n");
  if (!failure.empty()) throw CheckFailed("stability: " + failure);
  ctx.result.out = "stability: pass\n";
}

Json axiom_json(const AxiomReport& r) {
  return {{"name", r.name},
          {"pairs", r.pairs},
          {"max_expansion", r.max_expansion},
          {"min_monotone", r.min_monotone},
          {"min_yosida_monotone", r.min_yosida_monotone},
          {"lambda_independent", r.lambda_independent},
          {"max_linear_residual", r.max_linear_residual},
          {"max_domain_distance", r.max_domain_distance},
          {"pass", r.pass}};
}

void cmd_operators_test(Context& ctx) {
  Json results = Json::array();
  bool all = true;
  std::uint64_t seed = ctx.options.seed.value_or(1);
  for (std::size_t d = 1; d <= 3; ++d)
    for (const auto& entry : sample_operator_catalog(d)) {
      const auto r = check_axioms(entry, 1000, {1e-3, 1.0, 1e3}, seed);
      Json j = axiom_json(r);
      j["dimension"] = d;
      results.push_back(j);
      all = all && r.pass;
    }
  Json report = {{"catalog", results}};
  if (ctx.options.config_path || !ctx.options.overrides.empty()) {
    const Scenario sc = load_scenario(ctx.options);
    const auto r = check_axioms(sc.op, 1000, {1e-3, 1.0, 1e3}, seed);
    report["scenario_operator"] = axiom_json(r);
    all = all && r.pass;
  }
  report["pass"] = all;
  ctx.write("operators_report.json", report.dump(2) + "\n");
  if (!all) throw CheckFailed("operators-test: at least one operator failed its axioms");
  ctx.result.out = "operators-test: " + std::to_string(results.size()) + " catalog operators pass\n";
}

}  // namespace

Json assemble_config(const RunOptions& options) {
  Json raw = options.config_path ? load_config_file(*options.config_path) : Json::object();
  for (const auto& o : options.overrides) apply_override(raw, o);
  if (options.seed) raw["seed"] = *options.seed;
  if (options.threads) {
    if (!raw.contains("scheme") || !raw["scheme"].is_object()) raw["scheme"] = Json::object();
    raw["scheme"]["threads"] = *options.threads;
  }
  return raw;
}

std::vector<OperatorCatalogEntry> sample_operator_catalog(std::size_t d) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<OperatorCatalogEntry> out;
  out.push_back(OperatorCatalogEntry::zero(d));
  Point center(d), lo(d), hi(d), normal(d), weights(d);
  for (std::size_t i = 0; i < d; ++i) {
    center[i] = 0.25 * static_cast<double>(i + 1) * (i % 2 ? -1.0 : 1.0);
    lo[i] = i == 1 ? -inf : -1.0 + 0.1 * static_cast<double>(i);
    hi[i] = i == 2 ? inf : 0.5 + 0.2 * static_cast<double>(i);
    normal[i] = 1.0 + static_cast<double>(i);
    weights[i] = i == 1 ? 0.0 : 0.5 + static_cast<double>(i);
  }
  out.push_back(OperatorCatalogEntry::ball(center, 1.5));
  out.push_back(OperatorCatalogEntry::box(lo, hi));
  out.push_back(OperatorCatalogEntry::halfspace(normal, 0.5));
  out.push_back(OperatorCatalogEntry::abs(weights));
  std::vector<double> sym(d * d), gen(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      sym[i * d + j] = i == j ? 2.0 + static_cast<double>(i) : 0.5;
      gen[i * d + j] = i == j ? 1.0 : (i < j ? 2.0 : -2.0);
    }
  out.push_back(OperatorCatalogEntry::quadratic(sym, d));
  out.push_back(OperatorCatalogEntry::linear(gen, d));
  return out;
}

std::string trajectory_csv(const TrajectoryRecord& traj) {
  const std::size_t d = traj.d;
  std::string s = "t,particle_id" + csv_header(d, "x_") + csv_header(d, "k_") + ",k_variation\n";
  for (std::size_t k = 0; k < traj.flow.size(); ++k) {
    const auto x = traj.x(k);
    const auto& kk = traj.k[k];
    const auto& kv = traj.k_variation[k];
    const std::string t = format_double(traj.grid()[k]);
    for (std::size_t i = 0; i < traj.n; ++i) {
      s += t;
      s += ',';
      s += std::to_string(i);
      append_values(s, x.subspan(i * d, d));
      append_values(s, std::span<const double>(kk.data() + i * d, d));
      s += ',';
      s += format_double(kv[i]);
      s += '\n';
    }
  }
  return s;
}

RunResult run_command(const std::string& subcommand, const RunOptions& options) {
  RunResult result;
  Context ctx{options, result};
  try {
    if (subcommand == "simulate") cmd_simulate(ctx);
    else if (subcommand == "picard") cmd_picard(ctx);
    else if (subcommand == "ito-check") cmd_ito(ctx);
    else if (subcommand == "stability") cmd_stability(ctx);
    else if (subcommand == "operators-test") cmd_operators_test(ctx);
    else if (subcommand == "scenarios") cmd_scenarios(ctx);
    else if (subcommand == "validate") cmd_validate(ctx);
    else {
      result.exit_code = kExitUsage;
      result.err = "unknown subcommand '" + subcommand +
                   "' (expected simulate, picard, ito-check, stability, operators-test, scenarios, validate)\n";
    }
  } catch (const CheckFailed& e) {
    result.exit_code = kExitCheckFailed;
    result.err = std::string(e.what()) + "\n";
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::CoefficientBlowup:
      case ErrorCode::StateBlowup:
      case ErrorCode::NotConverged:
      case ErrorCode::NonFinite:
      case ErrorCode::ZeroDenominator:
      case ErrorCode::DegenerateFit:
        result.exit_code = kExitNumeric;
        break;
      default:
        result.exit_code = kExitUsage;
    }
    result.err = std::string(e.what());
    if (e.code() == ErrorCode::StateBlowup) result.err += " (key: scheme.blowup_threshold)";
    if (e.code() == ErrorCode::CoefficientBlowup) result.err += " (key: coefficients)";
    result.err += "\n";
  } catch (const std::exception& e) {
    result.exit_code = kExitUsage;
    result.err = std::string("error: ") + e.what() + "\n";
  }
  return result;
}

}  // namespace mvsde
