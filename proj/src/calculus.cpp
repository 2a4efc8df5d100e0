#include "mvsde/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvsde/error.hpp"

namespace mvsde {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void fill(std::span<double> out, double v) { std::fill(out.begin(), out.end(), v); }

void identity(std::span<double> out, std::size_t d, double scale) {
  fill(out, 0.0);
  for (std::size_t i = 0; i < d; ++i) out[i * d + i] = scale;
}

void check_dim(const Point& p, std::span<const double> x, const char* what) {
  require(p.size() == x.size(), ErrorCode::DimensionMismatch, what);
}

// tr(S D) for d x d row-major matrices.
double trace_product(std::span<const double> s, std::span<const double> dmat, std::size_t d) {
  double t = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) t += s[i * d + j] * dmat[j * d + i];
  return t;
}

void covariance(std::span<const double> sigma, std::size_t d, std::size_t m, std::span<double> out) {
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < m; ++c) s += sigma[i * m + c] * sigma[j * m + c];
      out[i * d + j] = s;
    }
}

}  // namespace

namespace test_functions {

TestFunction constant(double value) {
  TestFunction f;
  f.name = "constant";
  f.phi = [value](std::span<const double>, const EmpiricalMeasure&) { return value; };
  f.dx = [](std::span<const double>, const EmpiricalMeasure&, std::span<double> out) { fill(out, 0.0); };
  f.dxx = f.dx;
  f.dmu = [](std::span<const double>, const EmpiricalMeasure&, std::span<const double>, std::span<double> out) {
    fill(out, 0.0);
  };
  f.dydmu = f.dmu;
  f.measure_dependent = false;
  f.dmu_depends_on_x = false;
  f.sup_bound = std::abs(value);
  f.lipschitz_constant = 0.0;
  f.lipschitz_derivatives = true;
  return f;
}

TestFunction square_norm() {
  TestFunction f;
  f.name = "square";
  f.phi = [](std::span<const double> x, const EmpiricalMeasure&) { return dot(x, x); };
  f.dx = [](std::span<const double> x, const EmpiricalMeasure&, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = 2.0 * x[i];
  };
  f.dxx = [](std::span<const double> x, const EmpiricalMeasure&, std::span<double> out) {
    identity(out, x.size(), 2.0);
  };
  f.dmu = [](std::span<const double>, const EmpiricalMeasure&, std::span<const double>, std::span<double> out) {
    fill(out, 0.0);
  };
  f.dydmu = f.dmu;
  f.measure_dependent = false;
  f.dmu_depends_on_x = false;
  return f;
}

TestFunction second_moment() {
  TestFunction f;
  f.name = "second_moment";
  f.phi = [](std::span<const double>, const EmpiricalMeasure& mu) { return mu.second_moment(); };
  f.dx = [](std::span<const double>, const EmpiricalMeasure&, std::span<double> out) { fill(out, 0.0); };
  f.dxx = f.dx;
  f.dmu = [](std::span<const double>, const EmpiricalMeasure&, std::span<const double> y, std::span<double> out) {
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = 2.0 * y[i];
  };
  f.dydmu = [](std::span<const double>, const EmpiricalMeasure&, std::span<const double> y, std::span<double> out) {
    identity(out, y.size(), 2.0);
  };
  f.dmu_depends_on_x = false;
  return f;
}

TestFunction mixed(double weight) {
  TestFunction f = combine(1.0, square_norm(), weight, second_moment());
  f.name = "mixed";
  return f;
}

TestFunction linear(Point c) {
  TestFunction f;
  f.name = "linear";
  f.phi = [c](std::span<const double> x, const EmpiricalMeasure&) {
    check_dim(c, x, "linear test function dimension");
    return dot(c, x);
  };
  f.dx = [c](std::span<const double>, const EmpiricalMeasure&, std::span<double> out) {
    std::copy(c.begin(), c.end(), out.begin());
  };
  f.dxx = [](std::span<const double>, const EmpiricalMeasure&, std::span<double> out) { fill(out, 0.0); };
  f.dmu = [](std::span<const double>, const EmpiricalMeasure&, std::span<const double>, std::span<double> out) {
    fill(out, 0.0);
  };
  f.dydmu = f.dmu;
  f.measure_dependent = false;
  f.dmu_depends_on_x = false;
  return f;
}

TestFunction mean_functional(Point e) {
  TestFunction f;
  f.name = "mean_functional";
  f.phi = [e](std::span<const double>, const EmpiricalMeasure& mu) { return dot(e, mu.mean()); };
  f.dx = [](std::span<const double>, const EmpiricalMeasure&, std::span<double> out) { fill(out, 0.0); };
  f.dxx = f.dx;
  f.dmu = [e](std::span<const double>, const EmpiricalMeasure&, std::span<const double>, std::span<double> out) {
    std::copy(e.begin(), e.end(), out.begin());
  };
  f.dydmu = [](std::span<const double>, const EmpiricalMeasure&, std::span<const double>, std::span<double> out) {
    fill(out, 0.0);
  };
  f.dmu_depends_on_x = false;
  f.lipschitz_derivatives = true;
  return f;
}

TestFunction coordinate_times_mean(Point c, Point e) {
  TestFunction f;
  f.name = "coordinate_times_mean";
  f.phi = [c, e](std::span<const double> x, const EmpiricalMeasure& mu) { return dot(c, x) * dot(e, mu.mean()); };
  f.dx = [c, e](std::span<const double>, const EmpiricalMeasure& mu, std::span<double> out) {
    const double s = dot(e, mu.mean());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i] * s;
  };
  f.dxx = [](std::span<const double>, const EmpiricalMeasure&, std::span<double> out) { fill(out, 0.0); };
  f.dmu = [c, e](std::span<const double> x, const EmpiricalMeasure&, std::span<const double>, std::span<double> out) {
    const double s = dot(c, x);
    for (std::size_t i = 0; i < e.size(); ++i) out[i] = s * e[i];
  };
  f.dydmu = [](std::span<const double>, const EmpiricalMeasure&, std::span<const double>, std::span<double> out) {
    fill(out, 0.0);
  };
  return f;
}

TestFunction bounded_tanh() {
  TestFunction f;
  f.name = "bounded_tanh";
  f.phi = [](std::span<const double> x, const EmpiricalMeasure& mu) {
    return std::tanh(dot(x, x)) / (1.0 + mu.second_moment());
  };
  f.dx = [](std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out) {
    const double r = dot(x, x);
    const double sech2 = 1.0 / (std::cosh(r) * std::cosh(r));
    const double scale = 2.0 * sech2 / (1.0 + mu.second_moment());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale * x[i];
  };
  f.dxx = [](std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out) {
    const std::size_t d = x.size();
    const double r = dot(x, x);
    const double sech2 = 1.0 / (std::cosh(r) * std::cosh(r));
    const double inv = 1.0 / (1.0 + mu.second_moment());
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        out[i * d + j] = inv * ((i == j ? 2.0 * sech2 : 0.0) - 8.0 * sech2 * std::tanh(r) * x[i] * x[j]);
  };
  f.dmu = [](std::span<const double> x, const EmpiricalMeasure& mu, std::span<const double> y, std::span<double> out) {
    const double inv = 1.0 / (1.0 + mu.second_moment());
    const double scale = -2.0 * std::tanh(dot(x, x)) * inv * inv;
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = scale * y[i];
  };
  f.dydmu = [](std::span<const double> x, const EmpiricalMeasure& mu, std::span<const double> y, std::span<double> out) {
    const double inv = 1.0 / (1.0 + mu.second_moment());
    identity(out, y.size(), -2.0 * std::tanh(dot(x, x)) * inv * inv);
  };
  f.sup_bound = 1.0;
  f.lipschitz_derivatives = true;
  return f;
}

TestFunction combine(double a, TestFunction f, double b, TestFunction g) {
  TestFunction h;
  h.name = f.name + "+" + g.name;
  h.phi = [a, b, f, g](std::span<const double> x, const EmpiricalMeasure& mu) {
    return a * f.phi(x, mu) + b * g.phi(x, mu);
  };
  auto point_combo = [a, b](TestFunction::PointFn p, TestFunction::PointFn q) {
    return [a, b, p, q](std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out) {
      std::vector<double> tmp(out.size());
      p(x, mu, out);
      q(x, mu, tmp);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * out[i] + b * tmp[i];
    };
  };
  auto lift_combo = [a, b](TestFunction::LiftFn p, TestFunction::LiftFn q) {
    return [a, b, p, q](std::span<const double> x, const EmpiricalMeasure& mu, std::span<const double> y,
                        std::span<double> out) {
      std::vector<double> tmp(out.size());
      p(x, mu, y, out);
      q(x, mu, y, tmp);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * out[i] + b * tmp[i];
    };
  };
  h.dx = point_combo(f.dx, g.dx);
  h.dxx = point_combo(f.dxx, g.dxx);
  h.dmu = lift_combo(f.dmu, g.dmu);
  h.dydmu = lift_combo(f.dydmu, g.dydmu);
  h.measure_dependent = f.measure_dependent || g.measure_dependent;
  h.dmu_depends_on_x = f.dmu_depends_on_x || g.dmu_depends_on_x;
  if (f.sup_bound && g.sup_bound) h.sup_bound = std::abs(a) * *f.sup_bound + std::abs(b) * *g.sup_bound;
  h.lipschitz_derivatives = f.lipschitz_derivatives && g.lipschitz_derivatives;
  return h;
}

}  // namespace test_functions

LiftCheckReport lift_gradient_check(const TestFunction& f, std::span<const double> x_slot,
                                    const EmpiricalMeasure& mu, double fd_step) {
  const std::size_t n = mu.size(), d = mu.dimension();
  require(x_slot.size() == d, ErrorCode::DimensionMismatch, "x slot dimension");
  require(n * d <= 1000, ErrorCode::InvalidArgument, "lift check limited to N d <= 1000");
  require(fd_step > 0.0, ErrorCode::InvalidArgument, "finite-difference step must be positive");
  LiftCheckReport report;
  std::vector<double> analytic(d);
  const std::vector<double> base(mu.points().begin(), mu.points().end());
  for (std::size_t i = 0; i < n; ++i) {
    f.dmu(x_slot, mu, mu.point(i), analytic);
    for (std::size_t r = 0; r < d; ++r) {
      std::vector<double> plus = base, minus = base;
      plus[i * d + r] += fd_step;
      minus[i * d + r] -= fd_step;
      const double fp = f.phi(x_slot, EmpiricalMeasure(std::move(plus), d));
      const double fm = f.phi(x_slot, EmpiricalMeasure(std::move(minus), d));
      const double fd = static_cast<double>(n) * (fp - fm) / (2.0 * fd_step);
      report.max_abs_error = std::max(report.max_abs_error, std::abs(fd - analytic[r]));
      report.evaluations += 2;
    }
  }
  return report;
}

GeneratorContext::GeneratorContext(const TestFunction& f, const Coefficients& coeffs, const EmpiricalMeasure& mu)
    : f_(f), coeffs_(coeffs), mu_(mu) {
  require(mu.dimension() == coeffs.d, ErrorCode::DimensionMismatch, "measure and coefficient dimensions differ");
  if (!f.measure_dependent) {
    shared_ = std::array<double, 2>{0.0, 0.0};
    return;
  }
  const std::size_t n = mu.size(), d = coeffs.d, m = coeffs.m;
  atom_drift_.resize(n * d);
  atom_cov_.resize(n * d * d);
  std::vector<double> sigma(d * m);
  for (std::size_t j = 0; j < n; ++j) {
    std::span<double> bj(atom_drift_.data() + j * d, d);
    coeffs.drift(mu.point(j), mu, bj);
    coeffs.diffusion(mu.point(j), mu, sigma);
    for (double v : bj)
      if (!std::isfinite(v)) fail(ErrorCode::CoefficientBlowup, "drift returned a non-finite value");
    for (double v : sigma)
      if (!std::isfinite(v)) fail(ErrorCode::CoefficientBlowup, "diffusion returned a non-finite value");
    covariance(sigma, d, m, std::span<double>(atom_cov_.data() + j * d * d, d * d));
  }
  if (!f.dmu_depends_on_x) shared_ = measure_terms(mu.point(0));
}

std::array<double, 2> GeneratorContext::measure_terms(std::span<const double> x) const {
  const std::size_t n = mu_.size(), d = coeffs_.d;
  std::vector<double> g(d), dg(d * d);
  double drift_term = 0.0, diffusion_term = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    f_.dmu(x, mu_, mu_.point(j), g);
    f_.dydmu(x, mu_, mu_.point(j), dg);
    drift_term += dot(std::span<const double>(atom_drift_.data() + j * d, d), g);
    diffusion_term += trace_product(std::span<const double>(atom_cov_.data() + j * d * d, d * d), dg, d);
  }
  return {drift_term / static_cast<double>(n), 0.5 * diffusion_term / static_cast<double>(n)};
}

std::array<double, 4> GeneratorContext::terms(std::span<const double> x) const {
  const std::size_t d = coeffs_.d, m = coeffs_.m;
  require(x.size() == d, ErrorCode::DimensionMismatch, "generator point dimension");
  std::vector<double> b(d), sigma(d * m), cov(d * d), grad(d), hess(d * d);
  coeffs_.drift(x, mu_, b);
  coeffs_.diffusion(x, mu_, sigma);
  for (double v : b)
    if (!std::isfinite(v)) fail(ErrorCode::CoefficientBlowup, "drift returned a non-finite value");
  for (double v : sigma)
    if (!std::isfinite(v)) fail(ErrorCode::CoefficientBlowup, "diffusion returned a non-finite value");
  covariance(sigma, d, m, cov);
  f_.dx(x, mu_, grad);
  f_.dxx(x, mu_, hess);
  const auto meas = shared_ ? *shared_ : measure_terms(x);
  return {dot(b, grad), 0.5 * trace_product(cov, hess, d), meas[0], meas[1]};
}

double GeneratorContext::evaluate(std::span<const double> x) const {
  const auto t = terms(x);
  return t[0] + t[1] + t[2] + t[3];
}

double generator(const TestFunction& f, std::span<const double> x, const EmpiricalMeasure& mu,
                 const Coefficients& coeffs) {
  return GeneratorContext(f, coeffs, mu).evaluate(x);
}

ItoReport ito_residual(const TrajectoryRecord& traj, const TestFunction& f, const Coefficients& coeffs,
                       std::size_t s_index, std::size_t t_index) {
  require(s_index < t_index && t_index < traj.flow.size(), ErrorCode::IndexOutOfRange,
          "ito_residual needs s < t within the trajectory grid");
  require(traj.dk.size() + 1 == traj.flow.size() && traj.dw.size() == traj.dk.size(), ErrorCode::InvalidArgument,
          "trajectory does not retain increments");
  require(coeffs.d == traj.d && coeffs.m == traj.m, ErrorCode::DimensionMismatch,
          "coefficients do not match the trajectory");
  const std::size_t n = traj.n, d = traj.d, m = traj.m;
  const double inv_n = 1.0 / static_cast<double>(n);
  ItoReport report;

  auto mean_phi = [&](std::size_t k) {
    const EmpiricalMeasure& mu = traj.flow.measures[k];
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += f.phi(mu.point(i), mu);
    return s * inv_n;
  };
  report.lhs = mean_phi(t_index) - mean_phi(s_index);

  std::vector<double> b(n * d), sigma(n * d * m), cov(n * d * d);
  std::vector<double> grad(d), hess(d * d), g(d), dg(d * d), sdw(d);
  for (std::size_t k = s_index; k < t_index; ++k) {
    const EmpiricalMeasure& mu = traj.flow.measures[k];
    const double h = traj.flow.grid[k + 1] - traj.flow.grid[k];
    const std::vector<double>& dk = traj.dk[k];
    const std::vector<double>& dw = traj.dw[k];
    for (std::size_t j = 0; j < n; ++j) {
      coeffs.drift(mu.point(j), mu, std::span<double>(b.data() + j * d, d));
      std::span<double> sj(sigma.data() + j * d * m, d * m);
      coeffs.diffusion(mu.point(j), mu, sj);
      covariance(sj, d, m, std::span<double>(cov.data() + j * d * d, d * d));
    }

    // Measure-derivative sums for one frozen slot x = X_i.
    auto inner = [&](std::span<const double> x) {
      std::array<double, 3> acc{0.0, 0.0, 0.0};
      for (std::size_t j = 0; j < n; ++j) {
        f.dmu(x, mu, mu.point(j), g);
        f.dydmu(x, mu, mu.point(j), dg);
        acc[0] += dot(std::span<const double>(b.data() + j * d, d), g);
        acc[1] += trace_product(std::span<const double>(cov.data() + j * d * d, d * d), dg, d);
        acc[2] += dot(std::span<const double>(dk.data() + j * d, d), g);
      }
      return std::array<double, 3>{acc[0] * inv_n * h, 0.5 * acc[1] * inv_n * h, -acc[2] * inv_n};
    };
    std::optional<std::array<double, 3>> shared;
    if (!f.measure_dependent) shared = std::array<double, 3>{0.0, 0.0, 0.0};
    else if (!f.dmu_depends_on_x) shared = inner(mu.point(0));

    std::array<double, 7> step{};
    for (std::size_t i = 0; i < n; ++i) {
      auto xi = mu.point(i);
      f.dx(xi, mu, grad);
      f.dxx(xi, mu, hess);
      for (std::size_t r = 0; r < d; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < m; ++c) s += sigma[i * d * m + r * m + c] * dw[i * m + c];
        sdw[r] = s;
      }
      step[0] -= dot(grad, std::span<const double>(dk.data() + i * d, d));
      step[1] += dot(std::span<const double>(b.data() + i * d, d), grad) * h;
      step[2] += dot(grad, sdw);
      step[3] += 0.5 * trace_product(std::span<const double>(cov.data() + i * d * d, d * d), hess, d) * h;
      const auto in = shared ? *shared : inner(xi);
      step[4] += in[0];
      step[5] += in[1];
      step[6] += in[2];
    }
    for (std::size_t q = 0; q < 7; ++q) report.terms[q] += step[q] * inv_n;
  }
  double total = 0.0;
  for (double t : report.terms) total += t;
  report.residual = report.lhs - total;
  return report;
}

KConditionReport k_condition_monitor(const TrajectoryRecord& traj, const TestFunction& f,
                                     std::optional<double> tol) {
  const std::size_t n = traj.n, d = traj.d;
  const double inv_n = 1.0 / static_cast<double>(n);
  KConditionReport report;
  double sup = 0.0;
  for (std::size_t k = 0; k < traj.flow.size(); ++k)
    for (double v : traj.x(k)) sup = std::max(sup, std::abs(v));
  report.tolerance = tol.value_or(1e-8 * (1.0 + sup));
  report.min_increment = std::numeric_limits<double>::infinity();
  std::vector<double> grad(d), g(d);
  for (std::size_t k = 0; k < traj.steps(); ++k) {
    const EmpiricalMeasure& mu = traj.flow.measures[k + 1];
    const std::vector<double>& dk = traj.dk[k];
    double x_part = 0.0, mu_part = 0.0;
    auto inner = [&](std::span<const double> x) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        f.dmu(x, mu, mu.point(j), g);
        acc += dot(g, std::span<const double>(dk.data() + j * d, d));
      }
      return acc * inv_n;
    };
    std::optional<double> shared;
    if (!f.measure_dependent) shared = 0.0;
    else if (!f.dmu_depends_on_x) shared = inner(mu.point(0));
    for (std::size_t i = 0; i < n; ++i) {
      f.dx(mu.point(i), mu, grad);
      x_part += dot(grad, std::span<const double>(dk.data() + i * d, d));
      mu_part += shared ? *shared : inner(mu.point(i));
    }
    const double inc = (x_part + mu_part) * inv_n;
    report.increments.push_back(inc);
    report.min_increment = std::min(report.min_increment, inc);
  }
  if (report.increments.empty()) report.min_increment = 0.0;
  report.pass = report.min_increment >= -report.tolerance;
  return report;
}

}  // namespace mvsde
