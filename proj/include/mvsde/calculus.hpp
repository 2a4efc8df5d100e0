#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvsde/measures.hpp"
#include "mvsde/solver.hpp"

namespace mvsde {

/// A function F(x, mu) on R^d x M_2 with analytic derivatives:
///   dx     d_x F(x, mu)                 (d)
///   dxx    d_x^2 F(x, mu)               (d x d, row-major)
///   dmu    d_mu F(x, mu)(y)             (d)
///   dydmu  entry (i, j) = d_{y_i} (d_mu F)_j(x, mu)(y)   (d x d)
struct TestFunction {
  using ValueFn = std::function<double(std::span<const double> x, const EmpiricalMeasure& mu)>;
  using PointFn = std::function<void(std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out)>;
  using LiftFn = std::function<void(std::span<const double> x, const EmpiricalMeasure& mu,
                                    std::span<const double> y, std::span<double> out)>;

  std::string name;
  ValueFn phi;
  PointFn dx;
  PointFn dxx;
  LiftFn dmu;
  LiftFn dydmu;
  bool measure_dependent = true;
  // false when d_mu F(x, mu)(y) does not depend on x; lets measure integrals
  // be shared across all x.
  bool dmu_depends_on_x = true;
  std::optional<double> sup_bound;
  std::optional<double> lipschitz_constant;
  bool lipschitz_derivatives = false;
};

namespace test_functions {

TestFunction constant(double value);
TestFunction square_norm();                       // |x|^2
TestFunction second_moment();                     // int |y|^2 mu(dy)
TestFunction mixed(double weight);                // |x|^2 + weight int |y|^2 mu(dy)
TestFunction linear(Point c);                     // <c, x>
TestFunction mean_functional(Point e);            // <e, mean(mu)>
TestFunction coordinate_times_mean(Point c, Point e);  // <c, x> <e, mean(mu)>
TestFunction bounded_tanh();                      // tanh(|x|^2) / (1 + ||mu||_2^2)
TestFunction combine(double a, TestFunction f, double b, TestFunction g);  // a f + b g

}  // namespace test_functions

struct LiftCheckReport {
  double max_abs_error = 0.0;
  std::size_t evaluations = 0;
};

/// Compares d_mu f(mu)(x_i) against N times a central difference of
/// x_i -> f(x_slot, mu with atom i displaced), the gradient of the empirical
/// projection f^N.
LiftCheckReport lift_gradient_check(const TestFunction& f, std::span<const double> x_slot,
                                    const EmpiricalMeasure& mu, double fd_step = 1e-4);

/// L_mu F at points x for a fixed measure and coefficient set. Coefficients at
/// the atoms are evaluated once.
class GeneratorContext {
 public:
  GeneratorContext(const TestFunction& f, const Coefficients& coeffs, const EmpiricalMeasure& mu);

  /// {b . d_x F, 1/2 tr(sigma sigma^T d_x^2 F), int b . d_mu F, 1/2 int tr(sigma sigma^T d_y d_mu F)}.
  std::array<double, 4> terms(std::span<const double> x) const;
  double evaluate(std::span<const double> x) const;

 private:
  std::array<double, 2> measure_terms(std::span<const double> x) const;

  const TestFunction& f_;
  const Coefficients& coeffs_;
  const EmpiricalMeasure& mu_;
  std::vector<double> atom_drift_;  // N x d
  std::vector<double> atom_cov_;    // N x d x d, sigma sigma^T
  std::optional<std::array<double, 2>> shared_;
};

double generator(const TestFunction& f, std::span<const double> x, const EmpiricalMeasure& mu,
                 const Coefficients& coeffs);

struct ItoReport {
  double lhs = 0.0;
  std::array<double, 7> terms{};
  double residual = 0.0;
};

/// Discretised generalized Ito formula between grid indices s < t, all terms
/// as ensemble averages:
///   1 -sum <d_x F, dK_i>            2 sum b . d_x F h
///   3 sum <d_x F, sigma dW_i>       4 1/2 sum tr(sigma sigma^T d_x^2 F) h
///   5 sum mean_j b(X_j) . d_mu F(X_i)(X_j) h
///   6 1/2 sum mean_j tr(sigma sigma^T(X_j) d_y d_mu F(X_i)(X_j)) h
///   7 -sum mean_j <d_mu F(X_i)(X_j), dK_j>
/// Derivatives are taken at the left end of each step.
ItoReport ito_residual(const TrajectoryRecord& traj, const TestFunction& f, const Coefficients& coeffs,
                       std::size_t s_index, std::size_t t_index);

struct KConditionReport {
  double min_increment = 0.0;
  std::vector<double> increments;  // one per step
  double tolerance = 0.0;
  bool pass = true;
};

/// Per step: mean_i <d_x F(X_i), dK_i> + mean_i mean_j <d_mu F(X_i)(X_j), dK_j>,
/// evaluated at the post-step positions where dK lies in h A(X).
KConditionReport k_condition_monitor(const TrajectoryRecord& traj, const TestFunction& f,
                                     std::optional<double> tol = {});

}  // namespace mvsde
