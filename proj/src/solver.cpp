#include "mvsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mvsde/error.hpp"
#include "mvsde/parallel.hpp"

namespace mvsde {

InitialCondition InitialCondition::point(Point x0) {
  InitialCondition ic;
  ic.kind = Kind::Point;
  ic.x0 = std::move(x0);
  return ic;
}

InitialCondition InitialCondition::gaussian(Point mean, double std) {
  InitialCondition ic;
  ic.kind = Kind::Gaussian;
  ic.x0 = std::move(mean);
  ic.std = std;
  return ic;
}

InitialCondition InitialCondition::uniform(Point lo, Point hi) {
  InitialCondition ic;
  ic.kind = Kind::Uniform;
  ic.lo = std::move(lo);
  ic.hi = std::move(hi);
  return ic;
}

void SchemeConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) fail(ErrorCode::InvalidArgument, "scheme.h must be positive");
  if (N < 1) fail(ErrorCode::InvalidArgument, "scheme.N must be at least 1");
  if (!std::isfinite(T) || T < h) fail(ErrorCode::InvalidArgument, "scheme.T must be >= scheme.h");
  const double q = T / h;
  const double n = std::round(q);
  const double ulp = std::nextafter(n, std::numeric_limits<double>::infinity()) - n;
  if (std::abs(q - n) > ulp)
    fail(ErrorCode::InvalidArgument, "scheme.T must be an integer multiple of scheme.h (grid exactness)");
  if (threads < 1) fail(ErrorCode::InvalidArgument, "threads must be at least 1");
  if (!(blowup_threshold > 0.0)) fail(ErrorCode::InvalidArgument, "scheme.blowup_threshold must be positive");
  const std::size_t d = initial.dimension();
  if (d == 0) fail(ErrorCode::InvalidArgument, "initial condition has zero dimension");
  switch (initial.kind) {
    case InitialCondition::Kind::Point: break;
    case InitialCondition::Kind::Gaussian:
      if (!(initial.std >= 0.0)) fail(ErrorCode::InvalidArgument, "initial.std must be >= 0");
      break;
    case InitialCondition::Kind::Uniform:
      if (initial.hi.size() != d) fail(ErrorCode::DimensionMismatch, "initial.hi dimension");
      for (std::size_t i = 0; i < d; ++i)
        if (!(initial.lo[i] <= initial.hi[i])) fail(ErrorCode::InvalidArgument, "initial.lo must be <= initial.hi");
      break;
  }
}

std::size_t SchemeConfig::steps() const { return static_cast<std::size_t>(std::llround(T / h)); }

std::vector<double> SchemeConfig::grid() const {
  const std::size_t n = steps();
  std::vector<double> g(n + 1);
  for (std::size_t k = 0; k <= n; ++k) g[k] = static_cast<double>(k) * h;
  return g;
}

namespace {

struct StepBuffers {
  std::vector<double> b, sigma, y, xn;
};

// Advances particles [begin, end). noise(i, c) returns the standard normal for
// particle i, component c.
template <class Noise>
void advance_range(const Resolver& resolver, const Coefficients& coeffs, std::span<const double> x,
                   std::span<const double> k, std::span<const double> kvar, const EmpiricalMeasure& mu,
                   double h, Noise&& noise, double blowup, std::size_t begin, std::size_t end,
                   std::span<double> x_out, std::span<double> k_out, std::span<double> kvar_out,
                   std::span<double> dk_out, std::span<double> dw_out) {
  const std::size_t d = coeffs.d, m = coeffs.m;
  const double sqrt_h = std::sqrt(h);
  StepBuffers buf{std::vector<double>(d), std::vector<double>(d * m), std::vector<double>(d),
                  std::vector<double>(d)};
  std::vector<double> zeta(m);
  for (std::size_t i = begin; i < end; ++i) {
    std::span<const double> xi = x.subspan(i * d, d);
    coeffs.drift(xi, mu, buf.b);
    coeffs.diffusion(xi, mu, buf.sigma);
    for (double v : buf.b)
      if (!std::isfinite(v)) fail(ErrorCode::CoefficientBlowup, "drift returned a non-finite value");
    for (double v : buf.sigma)
      if (!std::isfinite(v)) fail(ErrorCode::CoefficientBlowup, "diffusion returned a non-finite value");
    for (std::size_t c = 0; c < m; ++c) {
      zeta[c] = noise(i, c);
      dw_out[i * m + c] = sqrt_h * zeta[c];
    }
    for (std::size_t r = 0; r < d; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < m; ++c) s += buf.sigma[r * m + c] * zeta[c];
      buf.y[r] = xi[r] + h * buf.b[r] + sqrt_h * s;
    }
    resolver(buf.y, buf.xn);
    double dk_norm = 0.0, x_norm = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      const double dkr = buf.y[r] - buf.xn[r];
      dk_out[i * d + r] = dkr;
      k_out[i * d + r] = k[i * d + r] + dkr;
      x_out[i * d + r] = buf.xn[r];
      dk_norm += dkr * dkr;
      x_norm += buf.xn[r] * buf.xn[r];
    }
    if (!std::isfinite(x_norm) || std::sqrt(x_norm) > blowup)
      fail(ErrorCode::StateBlowup, "particle " + std::to_string(i) + " exceeded the blowup threshold");
    kvar_out[i] = kvar[i] + std::sqrt(dk_norm);
  }
}

void check_setup(const MonotoneOperator& op, const Coefficients& coeffs) {
  require(op.dimension() == coeffs.d, ErrorCode::DimensionMismatch, "operator and coefficient dimensions differ");
  require(coeffs.m >= 1, ErrorCode::InvalidArgument, "noise dimension must be positive");
  require(static_cast<bool>(coeffs.drift) && static_cast<bool>(coeffs.diffusion), ErrorCode::InvalidArgument,
          "coefficients need drift and diffusion");
}

TrajectoryRecord run_scheme(const MonotoneOperator& op, const Coefficients& coeffs, const SchemeConfig& config,
                            const NoiseSource& noise, const MeasureFlow* frozen) {
  config.validate();
  check_setup(op, coeffs);
  require(config.initial.dimension() == coeffs.d, ErrorCode::DimensionMismatch,
          "initial condition and coefficient dimensions differ");
  const std::vector<double> grid = config.grid();
  if (frozen) {
    require(frozen->grid == grid, ErrorCode::GridMismatch, "frozen flow grid differs from the scheme grid");
    require(frozen->dimension() == coeffs.d, ErrorCode::DimensionMismatch, "frozen flow dimension");
  }
  const std::size_t n = config.N, d = coeffs.d, m = coeffs.m, steps = config.steps();
  const Resolver resolver = op.bind(config.h);

  TrajectoryRecord rec;
  rec.config = config;
  rec.n = n;
  rec.d = d;
  rec.m = m;
  rec.k.reserve(steps + 1);
  rec.k_variation.reserve(steps + 1);
  rec.dk.reserve(steps);
  rec.dw.reserve(steps);

  std::vector<EmpiricalMeasure> measures;
  measures.reserve(steps + 1);
  measures.emplace_back(sample_initial(op, config), d);
  rec.k.emplace_back(n * d, 0.0);
  rec.k_variation.emplace_back(n, 0.0);

  for (std::size_t s = 0; s < steps; ++s) {
    const EmpiricalMeasure& own = measures.back();
    const EmpiricalMeasure& mu = frozen ? frozen->measures[s] : own;
    std::vector<double> x_next(n * d), k_next(n * d), kvar_next(n), dk(n * d), dw(n * m);
    parallel_for(n, config.threads, [&](std::size_t begin, std::size_t end) {
      advance_range(resolver, coeffs, own.points(), rec.k.back(), rec.k_variation.back(), mu, config.h,
                    [&](std::size_t i, std::size_t c) { return noise.draw(s, i, c); },
                    config.blowup_threshold, begin, end, x_next, k_next, kvar_next, dk, dw);
    });
    measures.emplace_back(std::move(x_next), d);
    rec.k.push_back(std::move(k_next));
    rec.k_variation.push_back(std::move(kvar_next));
    rec.dk.push_back(std::move(dk));
    rec.dw.push_back(std::move(dw));
  }
  rec.flow = MeasureFlow(grid, std::move(measures));
  return rec;
}

}  // namespace

StepResult step(const MonotoneOperator& op, const Coefficients& coeffs, const EnsembleState& state,
                const EmpiricalMeasure& mu, double h, std::span<const double> noise, unsigned threads,
                double blowup_threshold) {
  check_setup(op, coeffs);
  const std::size_t n = state.n, d = state.d, m = coeffs.m;
  require(d == coeffs.d, ErrorCode::DimensionMismatch, "state dimension");
  require(state.x.size() == n * d && state.k.size() == n * d && state.k_variation.size() == n,
          ErrorCode::SizeMismatch, "ensemble arrays are inconsistent with N x d");
  require(noise.size() == n * m, ErrorCode::SizeMismatch, "noise must be N x m");
  const Resolver resolver = op.bind(h);
  StepResult out;
  out.state.n = n;
  out.state.d = d;
  out.state.x.resize(n * d);
  out.state.k.resize(n * d);
  out.state.k_variation.resize(n);
  out.dk.resize(n * d);
  std::vector<double> dw(n * m);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    advance_range(resolver, coeffs, state.x, state.k, state.k_variation, mu, h,
                  [&](std::size_t i, std::size_t c) { return noise[i * m + c]; }, blowup_threshold, begin,
                  end, out.state.x, out.state.k, out.state.k_variation, out.dk, dw);
  });
  return out;
}

std::vector<Point> TrajectoryRecord::particle_path(std::size_t particle) const {
  require(particle < n, ErrorCode::IndexOutOfRange, "particle index");
  std::vector<Point> path;
  path.reserve(flow.size());
  for (const auto& mu : flow.measures) {
    auto p = mu.point(particle);
    path.emplace_back(p.begin(), p.end());
  }
  return path;
}

std::vector<Point> TrajectoryRecord::constraint_path(std::size_t particle) const {
  require(particle < n, ErrorCode::IndexOutOfRange, "particle index");
  std::vector<Point> path;
  path.reserve(k.size());
  for (const auto& kk : k) path.emplace_back(kk.begin() + particle * d, kk.begin() + (particle + 1) * d);
  return path;
}

std::vector<double> TrajectoryRecord::second_moments() const {
  std::vector<double> out;
  out.reserve(flow.size());
  for (const auto& mu : flow.measures) out.push_back(mu.second_moment());
  return out;
}

std::vector<double> sample_initial(const MonotoneOperator& op, const SchemeConfig& config) {
  const InitialCondition& ic = config.initial;
  const std::size_t d = ic.dimension(), n = config.N;
  require(d == op.dimension(), ErrorCode::DimensionMismatch, "initial condition and operator dimensions differ");
  std::vector<double> out(n * d);
  Point raw(d), proj(d);
  if (ic.kind == InitialCondition::Kind::Point) {
    op.project_into(ic.x0, proj);
    double gap = 0.0;
    for (std::size_t r = 0; r < d; ++r) gap = std::max(gap, std::abs(proj[r] - ic.x0[r]));
    require(gap <= 1e-12, ErrorCode::InvalidArgument, "initial.x0 lies outside the closure of the operator domain");
    for (std::size_t i = 0; i < n; ++i) std::copy(ic.x0.begin(), ic.x0.end(), out.begin() + i * d);
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < d; ++r) {
      if (ic.kind == InitialCondition::Kind::Gaussian) {
        raw[r] = ic.x0[r] + ic.std * rng::normal(config.seed, rng::kInitialStream, i, r, 0);
      } else {
        const double u = rng::uniform(config.seed, rng::kInitialStream, i, r, 0);
        raw[r] = ic.lo[r] + u * (ic.hi[r] - ic.lo[r]);
      }
    }
    op.project_into(raw, proj);
    std::copy(proj.begin(), proj.end(), out.begin() + i * d);
  }
  return out;
}

TrajectoryRecord simulate(const MonotoneOperator& op, const Coefficients& coeffs, const SchemeConfig& config) {
  return run_scheme(op, coeffs, config, NoiseSource(config.seed), nullptr);
}

TrajectoryRecord simulate(const MonotoneOperator& op, const Coefficients& coeffs, const SchemeConfig& config,
                          const NoiseSource& noise) {
  return run_scheme(op, coeffs, config, noise, nullptr);
}

TrajectoryRecord solve_frozen_flow(const MonotoneOperator& op, const Coefficients& coeffs,
                                   const MeasureFlow& frozen, const SchemeConfig& config,
                                   const NoiseSource& noise) {
  return run_scheme(op, coeffs, config, noise, &frozen);
}

MeasureFlow initial_flow(const MonotoneOperator& op, const SchemeConfig& config) {
  config.validate();
  const std::vector<double> grid = config.grid();
  const EmpiricalMeasure xi(sample_initial(op, config), config.initial.dimension());
  return MeasureFlow(grid, std::vector<EmpiricalMeasure>(grid.size(), xi));
}

PicardResult picard(const MonotoneOperator& op, const Coefficients& coeffs, const SchemeConfig& config,
                    double tol, std::size_t max_iter, bool keep_iterates) {
  require(tol > 0.0, ErrorCode::InvalidArgument, "picard tol must be positive");
  require(max_iter >= 1, ErrorCode::InvalidArgument, "picard max_iter must be at least 1");
  const NoiseSource noise(config.seed);
  PicardResult result;
  MeasureFlow current = solve_frozen_flow(op, coeffs, initial_flow(op, config), config, noise).flow;
  if (keep_iterates) result.iterates.push_back(current);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    MeasureFlow next = solve_frozen_flow(op, coeffs, current, config, noise).flow;
    const double delta = flow_distance(next, current);
    result.deltas.push_back(delta);
    result.iterations = it;
    current = std::move(next);
    if (keep_iterates) result.iterates.push_back(current);
    if (delta < tol) {
      result.converged = true;
      break;
    }
  }
  result.flow = std::move(current);
  return result;
}

ContractionReport contraction_report(const MonotoneOperator& op, const Coefficients& coeffs,
                                     const SchemeConfig& config, const MeasureFlow& mu1,
                                     const MeasureFlow& mu2) {
  ContractionReport report;
  report.denominator = flow_distance(mu1, mu2);
  if (!(report.denominator > 0.0))
    fail(ErrorCode::ZeroDenominator, "flows coincide on the grid; contraction ratio undefined");
  const NoiseSource noise(config.seed);
  const TrajectoryRecord a = solve_frozen_flow(op, coeffs, mu1, config, noise);
  const TrajectoryRecord b = solve_frozen_flow(op, coeffs, mu2, config, noise);
  std::vector<double> sup(a.n, 0.0);
  for (std::size_t k = 0; k < a.flow.size(); ++k) {
    auto xa = a.x(k), xb = b.x(k);
    for (std::size_t i = 0; i < a.n; ++i) {
      double s = 0.0;
      for (std::size_t r = 0; r < a.d; ++r) {
        const double diff = xa[i * a.d + r] - xb[i * a.d + r];
        s += diff * diff;
      }
      sup[i] = std::max(sup[i], s);
    }
  }
  double total = 0.0;
  for (double s : sup) total += s;
  report.numerator = std::sqrt(total / static_cast<double>(a.n));
  report.ratio = report.numerator / report.denominator;
  return report;
}

double contraction_ratio(const MonotoneOperator& op, const Coefficients& coeffs, const SchemeConfig& config,
                         const MeasureFlow& mu1, const MeasureFlow& mu2) {
  return contraction_report(op, coeffs, config, mu1, mu2).ratio;
}

MomentReport moment_monitor(const TrajectoryRecord& traj, std::span<const double> anchor) {
  require(anchor.size() == traj.d, ErrorCode::DimensionMismatch, "anchor point dimension");
  MomentReport report;
  const std::size_t n = traj.n, d = traj.d;
  std::vector<double> sup(n, 0.0);
  report.running_expected_sup.reserve(traj.flow.size());
  for (std::size_t k = 0; k < traj.flow.size(); ++k) {
    auto x = traj.x(k);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t r = 0; r < d; ++r) s += x[i * d + r] * x[i * d + r];
      sup[i] = std::max(sup[i], s);
      total += sup[i];
    }
    report.running_expected_sup.push_back(total / static_cast<double>(n));
    report.sup_of_moment = std::max(report.sup_of_moment, traj.flow.measures[k].second_moment());
  }
  report.expected_sup = report.running_expected_sup.back();
  auto x0 = traj.x(0);
  double off = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < d; ++r) off += (x0[i * d + r] - anchor[r]) * (x0[i * d + r] - anchor[r]);
  report.initial_offset = off / static_cast<double>(n);
  report.horizon = traj.grid().back();
  for (double a : anchor) report.anchor_norm_sq += a * a;
  return report;
}

}  // namespace mvsde
