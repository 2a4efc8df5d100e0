#include "mvsde/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvsde/error.hpp"

namespace mvsde {

std::string_view to_string(HypothesisFamily f) {
  switch (f) {
    case HypothesisFamily::H21: return "H2.1";
    case HypothesisFamily::H22: return "H2.2";
    case HypothesisFamily::H23: return "H2.3";
  }
  return "?";
}

HypothesisFamily family_from_string(std::string_view s) {
  if (s == "H2.1") return HypothesisFamily::H21;
  if (s == "H2.2") return HypothesisFamily::H22;
  if (s == "H2.3") return HypothesisFamily::H23;
  fail(ErrorCode::InvalidArgument, "unknown hypothesis family '" + std::string(s) + "'");
}

std::string_view to_string(DissipativityMode m) {
  return m == DissipativityMode::Integrated ? "integrated" : "pointwise";
}

DissipativityMode default_mode(HypothesisFamily f) {
  return f == HypothesisFamily::H23 ? DissipativityMode::Pointwise : DissipativityMode::Integrated;
}

std::string_view to_string(BoundStatus s) {
  switch (s) {
    case BoundStatus::Pass: return "pass";
    case BoundStatus::Fail: return "fail";
    case BoundStatus::PreconditionFailed: return "precondition_failed";
  }
  return "?";
}

namespace {

void check_comparison_fn(const LyapunovSpec::ComparisonFn& g, const char* name) {
  require(static_cast<bool>(g), ErrorCode::InvalidArgument, std::string(name) + " is required for H2.3");
  require(std::abs(g(0.0)) <= 1e-12, ErrorCode::InvalidArgument, std::string(name) + "(0) must be 0");
  double prev = g(0.0);
  for (int i = 1; i <= 1000; ++i) {
    const double v = g(0.01 * i);
    require(std::isfinite(v) && v > prev, ErrorCode::InvalidArgument,
            std::string(name) + " must be strictly increasing");
    prev = v;
  }
}

double norm_sq(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace

void LyapunovSpec::validate() const {
  require(static_cast<bool>(F.phi), ErrorCode::InvalidArgument, "lyapunov.F is missing");
  require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::InvalidArgument, "lyapunov.alpha must be positive");
  require(std::isfinite(a1) && a1 > 0.0, ErrorCode::InvalidArgument, "lyapunov.a1 must be positive");
  require(std::isfinite(a2) && a2 > 0.0, ErrorCode::InvalidArgument, "lyapunov.a2 must be positive");
  require(a1 <= a2, ErrorCode::InvalidArgument, "lyapunov.a1 must not exceed lyapunov.a2");
  for (double m : {M1, M2, M3})
    require(std::isfinite(m) && m >= 0.0, ErrorCode::InvalidArgument, "lyapunov.M1..M3 must be nonnegative");
  if (family == HypothesisFamily::H23) {
    check_comparison_fn(gamma1, "lyapunov.gamma1");
    check_comparison_fn(gamma2, "lyapunov.gamma2");
  }
}

DissipativityReport dissipativity_check(const LyapunovSpec& spec, const Coefficients& coeffs,
                                        const EmpiricalMeasure& mu, DissipativityMode mode) {
  DissipativityReport report;
  report.mode = mode;
  report.threshold =
      (mode == DissipativityMode::Integrated && spec.family == HypothesisFamily::H22) ? spec.M1 : 0.0;
  GeneratorContext ctx(spec.F, coeffs, mu);
  double sum = 0.0, scale = 0.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto x = mu.point(i);
    const auto t = ctx.terms(x);
    const double af = spec.alpha * spec.F.phi(x, mu);
    const double v = t[0] + t[1] + t[2] + t[3] + af;
    sum += v;
    scale += std::abs(t[0]) + std::abs(t[1]) + std::abs(t[2]) + std::abs(t[3]) + std::abs(af);
    worst = std::max(worst, v);
  }
  const double n = static_cast<double>(mu.size());
  report.value = mode == DissipativityMode::Integrated ? sum / n : worst;
  report.tolerance = 1e-12 * (1.0 + scale / n);
  report.pass = report.value <= report.threshold + report.tolerance;
  return report;
}

DissipativityReport dissipativity_check(const LyapunovSpec& spec, const Coefficients& coeffs,
                                        const TrajectoryRecord& traj, DissipativityMode mode) {
  std::optional<DissipativityReport> worst;
  for (std::size_t k = 0; k < traj.flow.size(); ++k) {
    auto r = dissipativity_check(spec, coeffs, traj.flow.measures[k], mode);
    r.worst_index = k;
    const double margin = r.value - r.threshold - r.tolerance;
    if (!worst || margin > worst->value - worst->threshold - worst->tolerance) worst = r;
  }
  require(worst.has_value(), ErrorCode::InvalidArgument, "empty trajectory");
  return *worst;
}

std::optional<double> dissipativity_sweep(LyapunovSpec spec, const Coefficients& coeffs,
                                          const TrajectoryRecord& traj, std::vector<double> alphas) {
  std::sort(alphas.begin(), alphas.end(), std::greater<>());
  const auto mode = default_mode(spec.family);
  for (double a : alphas) {
    spec.alpha = a;
    if (dissipativity_check(spec, coeffs, traj, mode).pass) return a;
  }
  return std::nullopt;
}

ComparisonReport comparison_check(const LyapunovSpec& spec, const EmpiricalMeasure& mu) {
  constexpr double tol = 1e-10;
  ComparisonReport report;
  if (spec.family == HypothesisFamily::H23) {
    report.pointwise = true;
    require(spec.gamma1 && spec.gamma2, ErrorCode::InvalidArgument, "H2.3 comparison needs gamma1 and gamma2");
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const auto x = mu.point(i);
      const double r = std::sqrt(norm_sq(x));
      const double lo = spec.gamma1(r), mid = spec.F.phi(x, mu), hi = spec.gamma2(r);
      const double gap = std::max(lo - mid, mid - hi);
      if (gap > worst) {
        worst = gap;
        report.lower = lo;
        report.middle = mid;
        report.upper = hi;
      }
    }
    report.pass = worst <= tol;
    return report;
  }
  double m2 = 0.0, f = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    m2 += norm_sq(mu.point(i));
    f += spec.F.phi(mu.point(i), mu);
  }
  const double n = static_cast<double>(mu.size());
  m2 /= n;
  f /= n;
  const bool offsets = spec.family == HypothesisFamily::H22;
  report.lower = spec.a1 * m2 - (offsets ? spec.M2 : 0.0);
  report.middle = f;
  report.upper = spec.a2 * m2 + (offsets ? spec.M3 : 0.0);
  report.pass = report.lower <= report.middle + tol && report.middle <= report.upper + tol;
  return report;
}

DecayFit decay_fit(const std::vector<double>& grid, const std::vector<double>& moments, double burn_in) {
  require(grid.size() == moments.size(), ErrorCode::LengthMismatch, "grid and moments differ in length");
  require(!grid.empty(), ErrorCode::DegenerateFit, "empty moment series");
  require(burn_in >= 0.0 && burn_in < 1.0, ErrorCode::InvalidArgument, "burn_in must lie in [0, 1)");
  const double t0 = grid.front() + burn_in * (grid.back() - grid.front());
  std::vector<double> ts, ys;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k] < t0) continue;
    if (!(moments[k] >= 1e-30))
      fail(ErrorCode::DegenerateFit, "second moment below 1e-30 in the fit window");
    ts.push_back(grid[k]);
    ys.push_back(std::log(moments[k]));
  }
  const std::size_t n = ts.size();
  require(n >= 2, ErrorCode::DegenerateFit, "fit window has fewer than two points");
  const double dn = static_cast<double>(n);
  double tbar = 0.0, ybar = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    tbar += ts[k];
    ybar += ys[k];
  }
  tbar /= dn;
  ybar /= dn;
  double ctt = 0.0, cty = 0.0, cyy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dt = ts[k] - tbar, dy = ys[k] - ybar;
    ctt += dt * dt;
    cty += dt * dy;
    cyy += dy * dy;
  }
  DecayFit fit;
  fit.points = n;
  if (std::all_of(ys.begin(), ys.end(), [&](double y) { return y == ys.front(); })) {
    fit.intercept = ys.front();
    return fit;
  }
  const double slope = cty / ctt;
  fit.beta_hat = -slope;
  fit.intercept = ybar - slope * tbar;
  fit.r2 = cyy > 1e-300 * dn ? std::clamp(cty * cty / (ctt * cyy), 0.0, 1.0) : 1.0;
  return fit;
}

DecayFit decay_fit(const TrajectoryRecord& traj, double burn_in) {
  return decay_fit(traj.grid(), traj.second_moments(), burn_in);
}

std::vector<double> second_moment_standard_errors(const TrajectoryRecord& traj) {
  std::vector<double> se(traj.flow.size());
  const double n = static_cast<double>(traj.n);
  for (std::size_t k = 0; k < se.size(); ++k) {
    const auto x = traj.x(k);
    double mean = 0.0;
    for (std::size_t i = 0; i < traj.n; ++i) mean += norm_sq(x.subspan(i * traj.d, traj.d));
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < traj.n; ++i) {
      const double v = norm_sq(x.subspan(i * traj.d, traj.d)) - mean;
      var += v * v;
    }
    se[k] = std::sqrt(var / n / n);
  }
  return se;
}

namespace {

struct CurveSummary {
  BoundCurve curve;
  double max_violation = -std::numeric_limits<double>::infinity();
  double max_slack = 0.0;
  bool pass = true;
};

CurveSummary evaluate_bound(const TrajectoryRecord& traj, const std::vector<double>& bound, BoundOptions options) {
  require(options.c_h >= 0.0 && options.se_factor >= 0.0, ErrorCode::InvalidArgument,
          "slack parameters must be nonnegative");
  CurveSummary s;
  s.curve.grid = traj.grid();
  s.curve.moment = traj.second_moments();
  s.curve.bound = bound;
  const auto se = second_moment_standard_errors(traj);
  const double h = traj.config.h;
  s.curve.allowed.resize(bound.size());
  for (std::size_t k = 0; k < bound.size(); ++k) {
    const double allowed = bound[k] * (1.0 + options.c_h * h) + options.se_factor * se[k];
    s.curve.allowed[k] = allowed;
    s.max_violation = std::max(s.max_violation, s.curve.moment[k] - bound[k]);
    if (bound[k] > 0.0) s.max_slack = std::max(s.max_slack, (allowed - bound[k]) / bound[k]);
    else if (allowed > 0.0) s.max_slack = std::numeric_limits<double>::infinity();
    if (!(s.curve.moment[k] <= allowed)) s.pass = false;
  }
  return s;
}

}  // namespace

ExponentialBoundReport exponential_bound_check(const TrajectoryRecord& traj, const LyapunovSpec& spec,
                                               const Coefficients& coeffs, BoundOptions options) {
  spec.validate();
  ExponentialBoundReport report;
  const auto mode = default_mode(spec.family);
  report.dissipativity = dissipativity_check(spec, coeffs, traj, mode);
  if (!report.dissipativity->pass) {
    report.status = BoundStatus::PreconditionFailed;
    report.failed_gate = "dissipativity_check";
    return report;
  }
  report.k_condition = k_condition_monitor(traj, spec.F);
  if (!report.k_condition->pass) {
    report.status = BoundStatus::PreconditionFailed;
    report.failed_gate = "k_condition_monitor";
    return report;
  }
  const auto m = traj.second_moments();
  const double S = spec.a2 / spec.a1;
  std::vector<double> bound(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) bound[k] = S * std::exp(-spec.alpha * traj.grid()[k]) * m[0];
  auto s = evaluate_bound(traj, bound, options);
  report.curve = std::move(s.curve);
  report.max_violation = s.max_violation;
  report.max_slack = s.max_slack;
  report.status = s.pass ? BoundStatus::Pass : BoundStatus::Fail;
  return report;
}

UltimateConstants ultimate_constants(const LyapunovSpec& spec) {
  spec.validate();
  UltimateConstants c;
  c.S = spec.a2 / spec.a1;
  c.beta = spec.alpha;
  c.M = (spec.alpha * (spec.M2 + spec.M3) + spec.M1) / (spec.alpha * spec.a1);
  return c;
}

UltimateBoundReport ultimate_boundedness_check(const TrajectoryRecord& traj, UltimateConstants constants,
                                               BoundOptions options) {
  require(std::isfinite(constants.S) && constants.S > 0.0, ErrorCode::InvalidArgument, "S must be positive");
  require(std::isfinite(constants.beta) && constants.beta > 0.0, ErrorCode::InvalidArgument,
          "beta must be positive");
  require(std::isfinite(constants.M) && constants.M >= 0.0, ErrorCode::InvalidArgument,
          "M must be nonnegative");
  UltimateBoundReport report;
  report.constants = constants;
  const auto m = traj.second_moments();
  std::vector<double> bound(m.size());
  for (std::size_t k = 0; k < m.size(); ++k)
    bound[k] = constants.S * std::exp(-constants.beta * traj.grid()[k]) * m[0] + constants.M;
  auto s = evaluate_bound(traj, bound, options);
  report.curve = std::move(s.curve);
  report.max_violation = s.max_violation;
  report.max_slack = s.max_slack;
  report.pass = s.pass;
  return report;
}

AsStabilityReport as_stability_estimate(const std::vector<TrajectoryRecord>& trajectories,
                                        std::vector<double> eps_levels, double horizon_tail) {
  require(!trajectories.empty(), ErrorCode::InvalidArgument, "no trajectories");
  require(horizon_tail >= 0.0 && horizon_tail <= 1.0, ErrorCode::InvalidArgument,
          "horizon_tail must lie in [0, 1]");
  for (double e : eps_levels)
    require(std::isfinite(e) && e > 0.0, ErrorCode::InvalidArgument, "eps levels must be positive");
  std::sort(eps_levels.begin(), eps_levels.end());

  std::vector<double> tail_sups;
  AsStabilityReport report;
  for (const auto& traj : trajectories) {
    const auto& grid = traj.grid();
    const double t0 = grid.front() + horizon_tail * (grid.back() - grid.front());
    report.tail_start = t0;
    std::vector<double> sup(traj.n, 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (grid[k] < t0) continue;
      const auto x = traj.x(k);
      for (std::size_t i = 0; i < traj.n; ++i) sup[i] = std::max(sup[i], norm_sq(x.subspan(i * traj.d, traj.d)));
    }
    for (double s : sup) tail_sups.push_back(std::sqrt(s));
  }
  report.paths = tail_sups.size();
  double m2 = 0.0;
  for (double s : tail_sups) m2 += s * s;
  report.mean_tail_sup_sq = m2 / static_cast<double>(report.paths);
  for (double eps : eps_levels) {
    const auto below = std::count_if(tail_sups.begin(), tail_sups.end(), [eps](double s) { return s < eps; });
    TailLevel level;
    level.eps = eps;
    level.fraction_below = static_cast<double>(below) / static_cast<double>(report.paths);
    level.fraction_exceeding = 1.0 - level.fraction_below;
    level.chebyshev_bound = report.mean_tail_sup_sq / (eps * eps);
    report.levels.push_back(level);
  }
  return report;
}

}  // namespace mvsde
