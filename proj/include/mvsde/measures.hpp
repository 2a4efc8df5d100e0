#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace mvsde {

/// Uniform atomic probability measure (1/N) sum_i delta_{x_i} on R^d.
/// Points are stored row-major (N x d). Mean and second moment are computed
/// once at construction in a fixed summation order.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(std::vector<double> points, std::size_t dimension);

  std::size_t size() const noexcept { return n_; }
  std::size_t dimension() const noexcept { return d_; }
  std::span<const double> points() const noexcept { return points_; }
  std::span<const double> point(std::size_t i) const noexcept { return {points_.data() + i * d_, d_}; }
  std::span<const double> mean() const noexcept { return mean_; }
  /// (1/N) sum |x_i|^2.
  double second_moment() const noexcept { return second_moment_; }

  friend bool operator==(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    return a.d_ == b.d_ && a.points_ == b.points_;
  }

 private:
  std::vector<double> points_;
  std::size_t n_;
  std::size_t d_;
  std::vector<double> mean_;
  double second_moment_ = 0.0;
};

/// Time-indexed family of empirical measures on a strictly increasing grid.
struct MeasureFlow {
  std::vector<double> grid;
  std::vector<EmpiricalMeasure> measures;

  MeasureFlow() = default;
  MeasureFlow(std::vector<double> grid, std::vector<EmpiricalMeasure> measures);

  std::size_t size() const noexcept { return grid.size(); }
  std::size_t dimension() const noexcept { return measures.empty() ? 0 : measures.front().dimension(); }
};

double second_moment_norm(const EmpiricalMeasure& mu);

enum class RhoMode {
  SortedExact,      // d = 1: exact W1 through the quantile functions
  AssignmentExact,  // d >= 2, equal N <= cutoff: exact optimal assignment
  PairedBound,      // equal N: (1/N) sum |x_i - y_i|, a coupling upper bound
};

struct RhoResult {
  double value = 0.0;
  RhoMode mode = RhoMode::SortedExact;
};

inline constexpr std::size_t kDefaultAssignmentCutoff = 64;

/// Computable upper bound on the dual metric rho. Every test function of the
/// rho unit ball is 1-Lipschitz, so rho <= W1 and every mode below bounds rho
/// from above; the sorted and assignment modes return W1 itself.
RhoResult rho_upper_detailed(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                             std::size_t assignment_cutoff = kDefaultAssignmentCutoff);
double rho_upper(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                 std::size_t assignment_cutoff = kDefaultAssignmentCutoff);

/// Paired-sample coupling bound regardless of dimension. Requires equal N.
double rho_paired(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// Exact W1 between equal-size atomic measures via the Hungarian algorithm.
double assignment_w1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// sup over the (shared) grid of rho_upper.
double flow_distance(const MeasureFlow& a, const MeasureFlow& b,
                     std::size_t assignment_cutoff = kDefaultAssignmentCutoff);

/// ((1/N) sum |x_i - y_i|^2)^{1/2} for coupled ensembles given as N x d arrays.
double coupled_moment_distance(std::span<const double> x, std::span<const double> y, std::size_t d);

/// One row per particle: particle_id,x_1,...,x_d.
void write_measure_csv(std::ostream& os, const EmpiricalMeasure& mu);

}  // namespace mvsde
