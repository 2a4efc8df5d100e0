#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvsde/measures.hpp"
#include "mvsde/operators.hpp"
#include "mvsde/rng.hpp"

namespace mvsde {

/// Drift b(x, mu) in R^d and diffusion sigma(x, mu) in R^{d x m} (row-major).
struct Coefficients {
  using DriftFn = std::function<void(std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out)>;
  using DiffusionFn = DriftFn;

  std::size_t d = 1;
  std::size_t m = 1;
  DriftFn drift;
  DiffusionFn diffusion;
  std::optional<double> growth_constant;     // |b|^2 + ||sigma||^2 <= L1 (1 + |x|^2 + ||mu||_2^2)
  std::optional<double> lipschitz_constant;  // joint Lipschitz constant in (x, rho)
  bool measure_dependent = true;
  std::string name = "custom";
};

struct InitialCondition {
  enum class Kind { Point, Gaussian, Uniform };

  Kind kind = Kind::Point;
  Point x0;        // Point: the value; Gaussian: the mean
  double std = 0;  // Gaussian
  Point lo, hi;    // Uniform

  static InitialCondition point(Point x0);
  static InitialCondition gaussian(Point mean, double std);
  static InitialCondition uniform(Point lo, Point hi);

  std::size_t dimension() const noexcept { return kind == Kind::Uniform ? lo.size() : x0.size(); }
  bool deterministic() const noexcept { return kind == Kind::Point || (kind == Kind::Gaussian && std == 0.0); }
};

struct SchemeConfig {
  double h = 0.01;
  std::size_t N = 1000;
  double T = 1.0;
  std::uint64_t seed = 0;
  InitialCondition initial;
  unsigned threads = 1;
  double blowup_threshold = 1e8;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
  std::size_t steps() const;
  /// Uniform grid t_k = k h, k = 0..steps().
  std::vector<double> grid() const;
};

struct EnsembleState {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> x;            // N x d
  std::vector<double> k;            // N x d, accumulated constraint process
  std::vector<double> k_variation;  // N, running total variation of K
};

struct StepResult {
  EnsembleState state;
  std::vector<double> dk;  // N x d
};

/// One splitting step: Y = X + h b + sqrt(h) sigma zeta, X' = J_h(Y), dK = Y - X'.
/// noise holds N x m standard normals.
StepResult step(const MonotoneOperator& op, const Coefficients& coeffs, const EnsembleState& state,
                const EmpiricalMeasure& mu, double h, std::span<const double> noise,
                unsigned threads = 1, double blowup_threshold = 1e8);

struct TrajectoryRecord {
  SchemeConfig config;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t m = 0;
  MeasureFlow flow;  // empirical laws; flow.measures[k].points() is X at t_k
  std::vector<std::vector<double>> k;            // per grid point, N x d
  std::vector<std::vector<double>> k_variation;  // per grid point, N
  std::vector<std::vector<double>> dk;           // per step, N x d
  std::vector<std::vector<double>> dw;           // per step, N x m Brownian increments

  std::size_t steps() const noexcept { return dk.size(); }
  const std::vector<double>& grid() const noexcept { return flow.grid; }
  std::span<const double> x(std::size_t grid_index) const { return flow.measures.at(grid_index).points(); }
  std::vector<Point> particle_path(std::size_t particle) const;
  std::vector<Point> constraint_path(std::size_t particle) const;
  /// Ensemble second moment m(t_k) = (1/N) sum |X_i(t_k)|^2.
  std::vector<double> second_moments() const;
};

/// N x d initial samples. A deterministic point must lie in cl(D(A)); sampled
/// values are projected onto it.
std::vector<double> sample_initial(const MonotoneOperator& op, const SchemeConfig& config);

/// Interacting particle system driven by its own empirical law.
TrajectoryRecord simulate(const MonotoneOperator& op, const Coefficients& coeffs, const SchemeConfig& config);
TrajectoryRecord simulate(const MonotoneOperator& op, const Coefficients& coeffs, const SchemeConfig& config,
                          const NoiseSource& noise);

/// Same scheme with b and sigma evaluated at an externally given flow.
TrajectoryRecord solve_frozen_flow(const MonotoneOperator& op, const Coefficients& coeffs,
                                   const MeasureFlow& frozen, const SchemeConfig& config,
                                   const NoiseSource& noise);

/// Constant-in-time flow of the initial law on the scheme grid.
MeasureFlow initial_flow(const MonotoneOperator& op, const SchemeConfig& config);

struct PicardResult {
  MeasureFlow flow;
  std::vector<double> deltas;  // flow_distance between successive iterates
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<MeasureFlow> iterates;  // filled when requested
};

/// Fixed-point iteration mu -> law of the frozen-flow solution, with common
/// noise. The first application maps the constant initial guess into the
/// range of the map; each later application adds one delta.
PicardResult picard(const MonotoneOperator& op, const Coefficients& coeffs, const SchemeConfig& config,
                    double tol, std::size_t max_iter, bool keep_iterates = false);

struct ContractionReport {
  double ratio = 0.0;
  double numerator = 0.0;    // (mean_i sup_t |X1_i - X2_i|^2)^{1/2}
  double denominator = 0.0;  // flow_distance(mu1, mu2)
};

ContractionReport contraction_report(const MonotoneOperator& op, const Coefficients& coeffs,
                                     const SchemeConfig& config, const MeasureFlow& mu1,
                                     const MeasureFlow& mu2);
double contraction_ratio(const MonotoneOperator& op, const Coefficients& coeffs, const SchemeConfig& config,
                         const MeasureFlow& mu1, const MeasureFlow& mu2);

struct MomentReport {
  double expected_sup = 0.0;            // (1/N) sum_i sup_t |X_i(t)|^2
  double sup_of_moment = 0.0;           // sup_t (1/N) sum_i |X_i(t)|^2
  std::vector<double> running_expected_sup;  // expected_sup restricted to [0, t_k]
  double initial_offset = 0.0;          // E|xi - a|^2
  double horizon = 0.0;
  double anchor_norm_sq = 0.0;          // |a|^2
};

MomentReport moment_monitor(const TrajectoryRecord& traj, std::span<const double> anchor);

}  // namespace mvsde
