#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvsde/calculus.hpp"
#include "mvsde/measures.hpp"
#include "mvsde/solver.hpp"

namespace mvsde {

/// Which hypothesis set a Lyapunov spec is meant for: H21 exponential
/// stability, H22 ultimate boundedness, H23 almost-sure stability.
enum class HypothesisFamily { H21, H22, H23 };

std::string_view to_string(HypothesisFamily f);
HypothesisFamily family_from_string(std::string_view s);

struct LyapunovSpec {
  using ComparisonFn = std::function<double(double)>;

  TestFunction F;
  HypothesisFamily family = HypothesisFamily::H21;
  double alpha = 1.0;
  double a1 = 1.0;
  double a2 = 1.0;
  double M1 = 0.0;
  double M2 = 0.0;
  double M3 = 0.0;
  ComparisonFn gamma1;  // H23 only
  ComparisonFn gamma2;

  /// Throws InvalidArgument. Comparison functions are checked on a grid of
  /// [0, 10]: value 0 at 0 and strictly increasing.
  void validate() const;
};

enum class DissipativityMode { Integrated, Pointwise };

std::string_view to_string(DissipativityMode m);

/// Integrated for H21/H22, pointwise for H23.
DissipativityMode default_mode(HypothesisFamily f);

struct DissipativityReport {
  DissipativityMode mode = DissipativityMode::Integrated;
  double value = 0.0;      // integrated mean, or max over atoms
  double threshold = 0.0;  // M1 for H22 integrated, else 0
  double tolerance = 0.0;
  bool pass = true;
  std::size_t worst_index = 0;  // grid index for trajectory checks
};

DissipativityReport dissipativity_check(const LyapunovSpec& spec, const Coefficients& coeffs,
                                        const EmpiricalMeasure& mu, DissipativityMode mode);
/// Worst case over every grid time of a trajectory.
DissipativityReport dissipativity_check(const LyapunovSpec& spec, const Coefficients& coeffs,
                                        const TrajectoryRecord& traj, DissipativityMode mode);

/// Largest candidate alpha whose trajectory dissipativity check passes.
std::optional<double> dissipativity_sweep(LyapunovSpec spec, const Coefficients& coeffs,
                                          const TrajectoryRecord& traj, std::vector<double> alphas);

struct ComparisonReport {
  bool pointwise = false;
  double lower = 0.0;   // worst atom for pointwise mode
  double middle = 0.0;
  double upper = 0.0;
  bool pass = true;
};

ComparisonReport comparison_check(const LyapunovSpec& spec, const EmpiricalMeasure& mu);

struct DecayFit {
  double beta_hat = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
  std::size_t points = 0;
};

/// Least squares of log m(t) on t >= burn_in T.
DecayFit decay_fit(const TrajectoryRecord& traj, double burn_in = 0.2);
DecayFit decay_fit(const std::vector<double>& grid, const std::vector<double>& moments, double burn_in = 0.2);

/// Standard error of the ensemble mean of |X_i|^2 at each grid time, using the
/// closed form of the nonparametric bootstrap for a sample mean.
std::vector<double> second_moment_standard_errors(const TrajectoryRecord& traj);

struct BoundOptions {
  double c_h = 0.0;        // discretisation allowance, relative, times h
  double se_factor = 3.0;  // multiples of the bootstrap standard error
};

struct BoundCurve {
  std::vector<double> grid;
  std::vector<double> moment;
  std::vector<double> bound;
  std::vector<double> allowed;  // bound (1 + c_h h) + se_factor se
};

enum class BoundStatus { Pass, Fail, PreconditionFailed };

std::string_view to_string(BoundStatus s);

struct ExponentialBoundReport {
  BoundStatus status = BoundStatus::Pass;
  std::string failed_gate;  // "dissipativity_check" or "k_condition_monitor"
  std::optional<DissipativityReport> dissipativity;
  std::optional<KConditionReport> k_condition;
  double max_violation = 0.0;  // max_t m(t) - bound(t)
  double max_slack = 0.0;      // max_t (allowed(t) - bound(t)) / max(bound(t), tiny)
  BoundCurve curve;
  bool pass() const noexcept { return status == BoundStatus::Pass; }
};

/// m(t) <= (a2/a1) e^{-alpha t} m(0). Runs the dissipativity and K-condition
/// gates first; if either fails the bound itself is not evaluated.
ExponentialBoundReport exponential_bound_check(const TrajectoryRecord& traj, const LyapunovSpec& spec,
                                               const Coefficients& coeffs, BoundOptions options = {});

struct UltimateConstants {
  double S = 1.0;
  double beta = 1.0;
  double M = 0.0;
};

/// S = a2/a1, beta = alpha, M = (alpha (M2 + M3) + M1) / (alpha a1).
UltimateConstants ultimate_constants(const LyapunovSpec& spec);

struct UltimateBoundReport {
  UltimateConstants constants;
  double max_violation = 0.0;
  double max_slack = 0.0;
  BoundCurve curve;
  bool pass = true;
};

/// m(t) <= S e^{-beta t} m(0) + M at every grid time.
UltimateBoundReport ultimate_boundedness_check(const TrajectoryRecord& traj, UltimateConstants constants,
                                               BoundOptions options = {});

struct TailLevel {
  double eps = 0.0;
  double fraction_below = 0.0;      // paths with tail sup < eps
  double fraction_exceeding = 0.0;  // 1 - fraction_below
  double chebyshev_bound = 0.0;     // E[tail sup^2] / eps^2
};

struct AsStabilityReport {
  std::size_t paths = 0;
  double tail_start = 0.0;
  double mean_tail_sup_sq = 0.0;
  std::vector<TailLevel> levels;  // sorted by eps
};

/// Every particle of every trajectory counts as one path. The tail window is
/// t >= horizon_tail T.
AsStabilityReport as_stability_estimate(const std::vector<TrajectoryRecord>& trajectories,
                                        std::vector<double> eps_levels, double horizon_tail);

}  // namespace mvsde
