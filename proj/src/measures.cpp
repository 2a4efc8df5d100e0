#include "mvsde/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "mvsde/error.hpp"
#include "mvsde/io.hpp"

namespace mvsde {

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> points, std::size_t dimension)
    : points_(std::move(points)), d_(dimension) {
  require(d_ >= 1, ErrorCode::InvalidArgument, "measure dimension must be positive");
  require(points_.size() % d_ == 0, ErrorCode::DimensionMismatch, "point array is not N x d");
  n_ = points_.size() / d_;
  require(n_ >= 1, ErrorCode::InvalidArgument, "empirical measure needs at least one atom");
  mean_.assign(d_, 0.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t k = 0; k < d_; ++k) {
      const double v = points_[i * d_ + k];
      if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "empirical measure atom is not finite");
      mean_[k] += v;
      sq += v * v;
    }
  }
  for (double& m : mean_) m /= static_cast<double>(n_);
  second_moment_ = sq / static_cast<double>(n_);
}

MeasureFlow::MeasureFlow(std::vector<double> g, std::vector<EmpiricalMeasure> m)
    : grid(std::move(g)), measures(std::move(m)) {
  require(grid.size() == measures.size(), ErrorCode::LengthMismatch, "flow grid and measures differ in length");
  for (std::size_t k = 1; k < grid.size(); ++k)
    require(grid[k] > grid[k - 1], ErrorCode::InvalidArgument, "flow grid must be strictly increasing");
  for (const auto& mu : measures)
    require(mu.dimension() == measures.front().dimension(), ErrorCode::DimensionMismatch,
            "flow measures must share a dimension");
}

double second_moment_norm(const EmpiricalMeasure& mu) { return mu.second_moment(); }

namespace {

double w1_1d(std::span<const double> a, std::span<const double> b) {
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  if (x.size() == y.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
    return s / static_cast<double>(x.size());
  }
  // Unequal sizes: integrate |F^{-1} - G^{-1}| over the merged quantile breakpoints.
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double q = 0.0, s = 0.0;
  while (i < x.size() && j < y.size()) {
    const double qx = static_cast<double>(i + 1) / nx;
    const double qy = static_cast<double>(j + 1) / ny;
    const double next = std::min(qx, qy);
    s += (next - q) * std::abs(x[i] - y[j]);
    q = next;
    if (qx <= next) ++i;
    if (qy <= next) ++j;
  }
  return s;
}

double euclid(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

double assignment_w1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  require(mu.dimension() == nu.dimension(), ErrorCode::DimensionMismatch, "measures differ in dimension");
  require(mu.size() == nu.size(), ErrorCode::SizeMismatch, "assignment needs equal atom counts");
  const std::size_t n = mu.size();
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = euclid(mu.point(i), nu.point(j));

  // Hungarian algorithm with potentials (rows i = 1..n, columns j = 1..n).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) total += cost[(match[j] - 1) * n + (j - 1)];
  return total / static_cast<double>(n);
}

double rho_paired(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  require(mu.dimension() == nu.dimension(), ErrorCode::DimensionMismatch, "measures differ in dimension");
  require(mu.size() == nu.size(), ErrorCode::SizeMismatch, "paired bound needs equal atom counts");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += euclid(mu.point(i), nu.point(i));
  return s / static_cast<double>(mu.size());
}

RhoResult rho_upper_detailed(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                             std::size_t assignment_cutoff) {
  require(mu.dimension() == nu.dimension(), ErrorCode::DimensionMismatch, "measures differ in dimension");
  if (mu.dimension() == 1) return {w1_1d(mu.points(), nu.points()), RhoMode::SortedExact};
  require(mu.size() == nu.size(), ErrorCode::SizeMismatch,
          "d >= 2 requires equal atom counts (assignment or paired mode)");
  if (mu.size() <= assignment_cutoff) return {assignment_w1(mu, nu), RhoMode::AssignmentExact};
  return {rho_paired(mu, nu), RhoMode::PairedBound};
}

double rho_upper(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t assignment_cutoff) {
  return rho_upper_detailed(mu, nu, assignment_cutoff).value;
}

double flow_distance(const MeasureFlow& a, const MeasureFlow& b, std::size_t assignment_cutoff) {
  require(a.grid == b.grid, ErrorCode::GridMismatch, "flows are defined on different grids");
  double sup = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    sup = std::max(sup, rho_upper(a.measures[k], b.measures[k], assignment_cutoff));
  return sup;
}

double coupled_moment_distance(std::span<const double> x, std::span<const double> y, std::size_t d) {
  require(d >= 1, ErrorCode::InvalidArgument, "dimension must be positive");
  require(x.size() == y.size(), ErrorCode::SizeMismatch, "coupled ensembles differ in size");
  require(x.size() % d == 0 && !x.empty(), ErrorCode::SizeMismatch, "ensemble is not N x d");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s / static_cast<double>(x.size() / d));
}

void write_measure_csv(std::ostream& os, const EmpiricalMeasure& mu) {
  os << "particle_id";
  for (std::size_t k = 0; k < mu.dimension(); ++k) os << ",x_" << (k + 1);
  os << '\n';
  for (std::size_t i = 0; i < mu.size(); ++i) {
    os << i;
    for (double v : mu.point(i)) os << ',' << format_double(v);
    os << '\n';
  }
}

}  // namespace mvsde
