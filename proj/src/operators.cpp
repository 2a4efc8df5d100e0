#include "mvsde/operators.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "mvsde/error.hpp"
#include "mvsde/rng.hpp"

namespace mvsde {

namespace {

using Kind = OperatorCatalogEntry::Kind;
constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

void check_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "point has non-finite component");
}

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    fail(ErrorCode::InvalidArgument, "resolvent parameter lambda must be positive and finite");
}

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

MatrixRM to_matrix(const std::vector<double>& m, std::size_t d) {
  MatrixRM out(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out(i, j) = m[i * d + j];
  return out;
}

double probe_tol(std::span<const double> x, std::span<const double> y) {
  return 1e-9 * (1.0 + norm(x) + norm(y));
}

void validate(const OperatorCatalogEntry& e) {
  const std::size_t d = e.dimension;
  require(d >= 1, ErrorCode::InvalidArgument, "operator dimension must be positive");
  auto all_finite = [](const Point& p) {
    return std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); });
  };
  switch (e.kind) {
    case Kind::Zero: break;
    case Kind::NormalConeBall:
      require(e.center.size() == d, ErrorCode::DimensionMismatch, "ball center dimension");
      require(all_finite(e.center), ErrorCode::NonFinite, "ball center");
      require(std::isfinite(e.radius), ErrorCode::NonFinite, "ball radius");
      if (!(e.radius > 0.0)) fail(ErrorCode::DegenerateSet, "ball radius must be positive");
      break;
    case Kind::NormalConeBox:
      require(e.lo.size() == d && e.hi.size() == d, ErrorCode::DimensionMismatch, "box bounds dimension");
      for (std::size_t i = 0; i < d; ++i) {
        if (std::isnan(e.lo[i]) || std::isnan(e.hi[i])) fail(ErrorCode::NonFinite, "box bound is NaN");
        if (e.lo[i] > e.hi[i]) fail(ErrorCode::DegenerateSet, "box has lo > hi");
        if (e.lo[i] == kInf || e.hi[i] == -kInf) fail(ErrorCode::DegenerateSet, "box is empty");
      }
      break;
    case Kind::NormalConeHalfspace:
      require(e.normal.size() == d, ErrorCode::DimensionMismatch, "halfspace normal dimension");
      require(all_finite(e.normal) && std::isfinite(e.offset), ErrorCode::NonFinite, "halfspace parameters");
      if (norm(e.normal) == 0.0) fail(ErrorCode::DegenerateSet, "halfspace normal is zero");
      break;
    case Kind::SubdifferentialAbs:
      require(e.weights.size() == d, ErrorCode::DimensionMismatch, "abs weights dimension");
      for (double w : e.weights)
        require(std::isfinite(w) && w >= 0.0, ErrorCode::InvalidArgument, "abs weights must be finite and >= 0");
      break;
    case Kind::SubdifferentialQuadratic:
    case Kind::LinearMonotone: {
      require(e.matrix.size() == d * d, ErrorCode::DimensionMismatch, "matrix must be d x d");
      require(std::all_of(e.matrix.begin(), e.matrix.end(), [](double v) { return std::isfinite(v); }),
              ErrorCode::NonFinite, "matrix entries");
      const MatrixRM m = to_matrix(e.matrix, d);
      const double scale = 1.0 + m.norm();
      if (e.kind == Kind::SubdifferentialQuadratic)
        require((m - m.transpose()).norm() <= 1e-12 * scale, ErrorCode::InvalidArgument,
                "quadratic operator matrix must be symmetric");
      const MatrixRM sym = 0.5 * (m + m.transpose());
      Eigen::SelfAdjointEigenSolver<MatrixRM> eig(sym);
      require(eig.eigenvalues().minCoeff() >= -1e-12 * scale, ErrorCode::InvalidArgument,
              "operator matrix is not monotone (symmetric part has a negative eigenvalue)");
      break;
    }
  }
}

std::optional<InteriorMetadata> interior_for(const OperatorCatalogEntry& e) {
  const std::size_t d = e.dimension;
  InteriorMetadata meta;
  switch (e.kind) {
    case Kind::Zero:
      meta.interior_point.assign(d, 0.0);
      meta.gamma1 = 1.0;
      return meta;
    case Kind::NormalConeBall:
      // <X - c, dK> = radius |dK| on the sphere.
      meta.interior_point = e.center;
      meta.gamma1 = e.radius;
      return meta;
    case Kind::NormalConeBox: {
      meta.interior_point.assign(d, 0.0);
      double g = kInf;
      for (std::size_t i = 0; i < d; ++i) {
        const bool lo_f = std::isfinite(e.lo[i]);
        const bool hi_f = std::isfinite(e.hi[i]);
        if (lo_f && hi_f) {
          if (e.lo[i] == e.hi[i]) return std::nullopt;  // empty interior
          meta.interior_point[i] = 0.5 * (e.lo[i] + e.hi[i]);
          g = std::min(g, 0.5 * (e.hi[i] - e.lo[i]));
        } else if (lo_f) {
          meta.interior_point[i] = e.lo[i] + 1.0;
          g = std::min(g, 1.0);
        } else if (hi_f) {
          meta.interior_point[i] = e.hi[i] - 1.0;
          g = std::min(g, 1.0);
        }
      }
      meta.gamma1 = std::isfinite(g) ? g : 1.0;
      // Contact on one face contributes |dK_i| weighted by the distance to that
      // face; gamma1 <= min distance, and sum |dK_i| >= |dK|.
      meta.gamma3 = 1.0;
      return meta;
    }
    case Kind::NormalConeHalfspace: {
      // a at unit distance inside the boundary.
      const double nn = norm(e.normal);
      meta.interior_point.resize(d);
      for (std::size_t i = 0; i < d; ++i)
        meta.interior_point[i] = e.normal[i] * (e.offset / (nn * nn) - 1.0 / nn);
      meta.gamma1 = 1.0;
      return meta;
    }
    case Kind::SubdifferentialAbs: {
      // |dK| <= h |w| while <X, dK> >= 0.
      meta.interior_point.assign(d, 0.0);
      meta.gamma1 = 1.0;
      meta.gamma3 = norm(e.weights);
      return meta;
    }
    case Kind::SubdifferentialQuadratic:
    case Kind::LinearMonotone: {
      // |dK| = h |M X| <= h ||M||_F |X| and <X, M X> >= 0.
      meta.interior_point.assign(d, 0.0);
      meta.gamma1 = 1.0;
      meta.gamma2 = to_matrix(e.matrix, d).norm();
      return meta;
    }
  }
  return std::nullopt;
}

}  // namespace

OperatorCatalogEntry OperatorCatalogEntry::zero(std::size_t d) {
  OperatorCatalogEntry e;
  e.kind = Kind::Zero;
  e.dimension = d;
  return e;
}

OperatorCatalogEntry OperatorCatalogEntry::ball(Point center, double radius) {
  OperatorCatalogEntry e;
  e.kind = Kind::NormalConeBall;
  e.dimension = center.size();
  e.center = std::move(center);
  e.radius = radius;
  return e;
}

OperatorCatalogEntry OperatorCatalogEntry::box(Point lo, Point hi) {
  OperatorCatalogEntry e;
  e.kind = Kind::NormalConeBox;
  e.dimension = lo.size();
  e.lo = std::move(lo);
  e.hi = std::move(hi);
  return e;
}

OperatorCatalogEntry OperatorCatalogEntry::halfspace(Point normal, double offset) {
  OperatorCatalogEntry e;
  e.kind = Kind::NormalConeHalfspace;
  e.dimension = normal.size();
  e.normal = std::move(normal);
  e.offset = offset;
  return e;
}

OperatorCatalogEntry OperatorCatalogEntry::abs(Point weights) {
  OperatorCatalogEntry e;
  e.kind = Kind::SubdifferentialAbs;
  e.dimension = weights.size();
  e.weights = std::move(weights);
  return e;
}

OperatorCatalogEntry OperatorCatalogEntry::quadratic(std::vector<double> matrix, std::size_t d) {
  OperatorCatalogEntry e;
  e.kind = Kind::SubdifferentialQuadratic;
  e.dimension = d;
  e.matrix = std::move(matrix);
  return e;
}

OperatorCatalogEntry OperatorCatalogEntry::linear(std::vector<double> matrix, std::size_t d) {
  OperatorCatalogEntry e;
  e.kind = Kind::LinearMonotone;
  e.dimension = d;
  e.matrix = std::move(matrix);
  return e;
}

std::string to_string(OperatorCatalogEntry::Kind kind) {
  switch (kind) {
    case Kind::Zero: return "zero";
    case Kind::NormalConeBall: return "normal_cone_ball";
    case Kind::NormalConeBox: return "normal_cone_box";
    case Kind::NormalConeHalfspace: return "normal_cone_halfspace";
    case Kind::SubdifferentialAbs: return "subdifferential_abs";
    case Kind::SubdifferentialQuadratic: return "subdifferential_quadratic";
    case Kind::LinearMonotone: return "linear_monotone";
  }
  return "unknown";
}

std::optional<OperatorCatalogEntry::Kind> kind_from_string(const std::string& name) {
  for (Kind k : {Kind::Zero, Kind::NormalConeBall, Kind::NormalConeBox, Kind::NormalConeHalfspace,
                 Kind::SubdifferentialAbs, Kind::SubdifferentialQuadratic, Kind::LinearMonotone})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

MonotoneOperator::MonotoneOperator(std::size_t dimension, ResolventFn resolvent,
                                   ProjectionFn domain_projection, ProbeFn value_probe,
                                   std::optional<InteriorMetadata> interior, std::string name,
                                   BindFn bind)
    : dimension_(dimension),
      resolvent_(std::move(resolvent)),
      projection_(std::move(domain_projection)),
      probe_(std::move(value_probe)),
      interior_(std::move(interior)),
      name_(std::move(name)),
      bind_(std::move(bind)) {
  require(dimension_ >= 1, ErrorCode::InvalidArgument, "operator dimension must be positive");
  require(static_cast<bool>(resolvent_), ErrorCode::InvalidArgument, "operator needs a resolvent");
  if (!projection_) projection_ = [](std::span<const double> x, std::span<double> out) {
    std::copy(x.begin(), x.end(), out.begin());
  };
  if (interior_)
    require(interior_->interior_point.size() == dimension_, ErrorCode::DimensionMismatch,
            "interior point dimension");
}

void MonotoneOperator::resolve_into(std::span<const double> x, double lambda,
                                    std::span<double> out) const {
  check_lambda(lambda);
  require(x.size() == dimension_ && out.size() == dimension_, ErrorCode::DimensionMismatch,
          "resolve: point dimension");
  check_finite(x);
  resolvent_(x, lambda, out);
}

void MonotoneOperator::project_into(std::span<const double> x, std::span<double> out) const {
  require(x.size() == dimension_ && out.size() == dimension_, ErrorCode::DimensionMismatch,
          "project: point dimension");
  check_finite(x);
  projection_(x, out);
}

bool MonotoneOperator::contains(std::span<const double> x, std::span<const double> y) const {
  if (!probe_) fail(ErrorCode::MissingMetadata, "operator '" + name_ + "' has no value probe");
  require(x.size() == dimension_ && y.size() == dimension_, ErrorCode::DimensionMismatch,
          "value probe dimension");
  return probe_(x, y);
}

double MonotoneOperator::domain_distance(std::span<const double> x) const {
  Point p(dimension_);
  project_into(x, p);
  return dist(x, p);
}

Resolver MonotoneOperator::bind(double lambda) const {
  check_lambda(lambda);
  if (bind_) return bind_(lambda);
  return [fn = resolvent_, lambda](std::span<const double> x, std::span<double> out) {
    fn(x, lambda, out);
  };
}

MonotoneOperator make_operator(const OperatorCatalogEntry& entry) {
  validate(entry);
  const std::size_t d = entry.dimension;
  auto meta = interior_for(entry);
  const std::string name = to_string(entry.kind);
  auto copy = [](std::span<const double> x, std::span<double> out) {
    std::copy(x.begin(), x.end(), out.begin());
  };

  switch (entry.kind) {
    case Kind::Zero: {
      auto res = [](std::span<const double> x, double, std::span<double> out) {
        std::copy(x.begin(), x.end(), out.begin());
      };
      auto probe = [](std::span<const double> x, std::span<const double> y) {
        return norm(y) <= probe_tol(x, y);
      };
      return MonotoneOperator(d, res, copy, probe, meta, name);
    }
    case Kind::NormalConeBall: {
      auto proj = [c = entry.center, r = entry.radius](std::span<const double> x, std::span<double> out) {
        const double n = dist(x, c);
        if (n <= r) {
          std::copy(x.begin(), x.end(), out.begin());
          return;
        }
        const double s = r / n;
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = c[i] + s * (x[i] - c[i]);
      };
      auto res = [proj](std::span<const double> x, double, std::span<double> out) { proj(x, out); };
      auto probe = [c = entry.center, r = entry.radius](std::span<const double> x, std::span<const double> y) {
        const double n = dist(x, c);
        const double tol = probe_tol(x, y);
        if (n > r * (1.0 + 1e-12) + 1e-12) return false;
        if (norm(y) <= tol) return true;
        if (n < r * (1.0 - 1e-9)) return false;
        // y must be a nonnegative multiple of the outward normal x - c.
        Point u(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) u[i] = (x[i] - c[i]) / n;
        const double t = dot(y, u);
        if (t < -tol) return false;
        double off = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) off += (y[i] - t * u[i]) * (y[i] - t * u[i]);
        return std::sqrt(off) <= tol;
      };
      return MonotoneOperator(d, res, proj, probe, meta, name);
    }
    case Kind::NormalConeBox: {
      auto proj = [lo = entry.lo, hi = entry.hi](std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(x[i], lo[i], hi[i]);
      };
      auto res = [proj](std::span<const double> x, double, std::span<double> out) { proj(x, out); };
      auto probe = [lo = entry.lo, hi = entry.hi](std::span<const double> x, std::span<const double> y) {
        const double tol = probe_tol(x, y);
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (x[i] < lo[i] - 1e-12 || x[i] > hi[i] + 1e-12) return false;
          const bool at_lo = std::abs(x[i] - lo[i]) <= 1e-12;
          const bool at_hi = std::abs(x[i] - hi[i]) <= 1e-12;
          if (at_lo && at_hi) continue;
          if (at_lo && y[i] > tol) return false;
          if (at_hi && y[i] < -tol) return false;
          if (!at_lo && !at_hi && std::abs(y[i]) > tol) return false;
        }
        return true;
      };
      return MonotoneOperator(d, res, proj, probe, meta, name);
    }
    case Kind::NormalConeHalfspace: {
      auto proj = [n = entry.normal, c = entry.offset](std::span<const double> x, std::span<double> out) {
        const double excess = dot(n, x) - c;
        const double nn = dot(n, n);
        const double s = excess > 0.0 ? excess / nn : 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - s * n[i];
      };
      auto res = [proj](std::span<const double> x, double, std::span<double> out) { proj(x, out); };
      auto probe = [n = entry.normal, c = entry.offset](std::span<const double> x, std::span<const double> y) {
        const double tol = probe_tol(x, y);
        const double g = dot(n, x) - c;
        const double scale = 1e-12 * (1.0 + std::abs(c) + norm(n) * norm(x));
        if (g > scale) return false;
        if (norm(y) <= tol) return true;
        if (g < -1e-9 * (1.0 + std::abs(c))) return false;
        const double nn = norm(n);
        const double t = dot(y, n) / nn;
        if (t < -tol) return false;
        double off = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double r = y[i] - t * n[i] / nn;
          off += r * r;
        }
        return std::sqrt(off) <= tol;
      };
      return MonotoneOperator(d, res, proj, probe, meta, name);
    }
    case Kind::SubdifferentialAbs: {
      // Soft thresholding: sign(x) max(|x| - lambda w, 0).
      auto res = [w = entry.weights](std::span<const double> x, double lambda, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double t = lambda * w[i];
          out[i] = x[i] > t ? x[i] - t : (x[i] < -t ? x[i] + t : 0.0);
        }
      };
      auto probe = [w = entry.weights](std::span<const double> x, std::span<const double> y) {
        const double tol = probe_tol(x, y);
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (x[i] > 0.0) {
            if (std::abs(y[i] - w[i]) > tol) return false;
          } else if (x[i] < 0.0) {
            if (std::abs(y[i] + w[i]) > tol) return false;
          } else if (std::abs(y[i]) > w[i] + tol) {
            return false;
          }
        }
        return true;
      };
      return MonotoneOperator(d, res, copy, probe, meta, name);
    }
    case Kind::SubdifferentialQuadratic:
    case Kind::LinearMonotone: {
      auto m = std::make_shared<const MatrixRM>(to_matrix(entry.matrix, d));
      auto res = [m, d](std::span<const double> x, double lambda, std::span<double> out) {
        const MatrixRM sys = MatrixRM::Identity(d, d) + lambda * (*m);
        Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(x.data(), d);
        Eigen::VectorXd sol = sys.partialPivLu().solve(rhs);
        std::copy(sol.data(), sol.data() + d, out.begin());
      };
      auto bind = [m, d](double lambda) -> Resolver {
        const MatrixRM inv = (MatrixRM::Identity(d, d) + lambda * (*m)).partialPivLu().inverse();
        return [inv, d](std::span<const double> x, std::span<double> out) {
          for (std::size_t i = 0; i < d; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += inv(i, j) * x[j];
            out[i] = s;
          }
        };
      };
      auto probe = [m, d](std::span<const double> x, std::span<const double> y) {
        Eigen::VectorXd mx = (*m) * Eigen::Map<const Eigen::VectorXd>(x.data(), d);
        double off = 0.0;
        for (std::size_t i = 0; i < d; ++i) off += (mx[i] - y[i]) * (mx[i] - y[i]);
        return std::sqrt(off) <= probe_tol(x, y);
      };
      return MonotoneOperator(d, res, copy, probe, meta, name, bind);
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown operator kind");
}

Point resolve(const MonotoneOperator& op, std::span<const double> x, double lambda) {
  Point out(op.dimension());
  op.resolve_into(x, lambda, out);
  return out;
}

Point yosida(const MonotoneOperator& op, std::span<const double> x, double lambda) {
  Point j = resolve(op, x, lambda);
  for (std::size_t i = 0; i < j.size(); ++i) j[i] = (x[i] - j[i]) / lambda;
  return j;
}

std::vector<GraphProbe> sample_graph_probes(const MonotoneOperator& op, std::size_t count,
                                            std::uint64_t seed, double scale, double lambda) {
  const std::size_t d = op.dimension();
  std::vector<GraphProbe> probes;
  probes.reserve(count);
  Point z(d);
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t i = 0; i < d; ++i) z[i] = scale * rng::normal(seed, rng::kProbeStream, k, i, 0);
    GraphProbe p;
    p.x = resolve(op, z, lambda);
    p.y.resize(d);
    for (std::size_t i = 0; i < d; ++i) p.y[i] = (z[i] - p.x[i]) / lambda;
    probes.push_back(std::move(p));
  }
  return probes;
}

namespace {

void check_paths(const std::vector<Point>& x_path, const std::vector<Point>& k_path,
                 std::span<const double> grid, std::size_t d) {
  require(x_path.size() == grid.size() && k_path.size() == grid.size(), ErrorCode::LengthMismatch,
          "X path, K path and grid must have equal length");
  for (const auto& p : x_path) require(p.size() == d, ErrorCode::DimensionMismatch, "X path dimension");
  for (const auto& p : k_path) require(p.size() == d, ErrorCode::DimensionMismatch, "K path dimension");
}

double default_tol(const std::vector<Point>& x_path, const std::vector<Point>& k_path) {
  double sup = 0.0;
  for (const auto& p : x_path) sup = std::max(sup, norm(p));
  for (const auto& p : k_path) sup = std::max(sup, norm(p));
  return 1e-8 * (1.0 + sup);
}

}  // namespace

PairingReport check_pairing_inequality(const MonotoneOperator& op, const std::vector<Point>& x_path,
                                       const std::vector<Point>& k_path,
                                       std::span<const double> grid,
                                       const std::vector<GraphProbe>& probes,
                                       std::optional<double> tol) {
  const std::size_t d = op.dimension();
  check_paths(x_path, k_path, grid, d);
  PairingReport report;
  report.tolerance = tol.value_or(default_tol(x_path, k_path));
  report.min_value = std::numeric_limits<double>::infinity();
  for (const auto& probe : probes) {
    require(probe.x.size() == d && probe.y.size() == d, ErrorCode::DimensionMismatch, "probe dimension");
    if (op.has_value_probe() && !op.contains(probe.x, probe.y))
      fail(ErrorCode::InvalidProbe, "probe (x, y) is not in the graph of " + op.name());
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      const double dt = grid[k + 1] - grid[k];
      for (std::size_t i = 0; i < d; ++i) {
        const double dk = k_path[k + 1][i] - k_path[k][i];
        sum += (x_path[k + 1][i] - probe.x[i]) * (dk - probe.y[i] * dt);
      }
    }
    report.min_value = std::min(report.min_value, sum);
  }
  if (probes.empty()) report.min_value = 0.0;
  report.pass = report.min_value >= -report.tolerance;
  return report;
}

VariationReport interior_variation_bound_check(const MonotoneOperator& op,
                                               const std::vector<Point>& x_path,
                                               const std::vector<Point>& k_path,
                                               std::span<const double> grid,
                                               std::optional<double> tol) {
  const auto& meta = op.interior();
  if (!meta) fail(ErrorCode::MissingMetadata, "operator '" + op.name() + "' has no interior metadata");
  const std::size_t d = op.dimension();
  check_paths(x_path, k_path, grid, d);
  const Point& a = meta->interior_point;
  double lhs = 0.0, variation = 0.0, dist_integral = 0.0;
  Point dk(d), xa(d);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      dk[i] = k_path[k + 1][i] - k_path[k][i];
      xa[i] = x_path[k + 1][i] - a[i];
    }
    lhs += dot(xa, dk);
    variation += norm(dk);
    dist_integral += norm(xa) * (grid[k + 1] - grid[k]);
  }
  const double span = grid.empty() ? 0.0 : grid.back() - grid.front();
  VariationReport report;
  report.lhs = lhs;
  report.rhs = meta->gamma1 * variation - meta->gamma2 * dist_integral - meta->gamma3 * span;
  report.pass = report.lhs >= report.rhs - tol.value_or(default_tol(x_path, k_path));
  return report;
}

AxiomReport check_axioms(const OperatorCatalogEntry& entry, std::size_t pairs,
                         std::vector<double> lambdas, std::uint64_t seed, double tol) {
  const MonotoneOperator op = make_operator(entry);
  const std::size_t d = op.dimension();
  AxiomReport report;
  report.name = op.name();
  report.pairs = pairs;
  report.min_monotone = std::numeric_limits<double>::infinity();
  report.min_yosida_monotone = std::numeric_limits<double>::infinity();

  // Scale samples to straddle the constraint set boundaries.
  double scale = 2.0;
  if (entry.kind == Kind::NormalConeBall) scale = 2.0 * (entry.radius + norm(entry.center));

  Point x(d), y(d), jx(d), jy(d), ax(d), ay(d), j2(d);
  MatrixRM mat;
  if (entry.is_linear()) mat = to_matrix(entry.matrix, d);

  std::uint64_t lambda_index = 0;
  for (double lambda : lambdas) {
    const Resolver bound = op.bind(lambda);
    for (std::size_t p = 0; p < pairs; ++p) {
      for (std::size_t i = 0; i < d; ++i) {
        x[i] = scale * rng::normal(seed, rng::kProbeStream, lambda_index, 2 * p, i);
        y[i] = scale * rng::normal(seed, rng::kProbeStream, lambda_index, 2 * p + 1, i);
      }
      op.resolve_into(x, lambda, jx);
      op.resolve_into(y, lambda, jy);
      report.max_expansion = std::max(report.max_expansion, dist(jx, jy) - dist(x, y));
      report.max_domain_distance = std::max(report.max_domain_distance, op.domain_distance(jx));
      for (std::size_t i = 0; i < d; ++i) {
        ax[i] = (x[i] - jx[i]) / lambda;
        ay[i] = (y[i] - jy[i]) / lambda;
      }
      double graph_pair = 0.0, yosida_pair = 0.0, gn = 0.0, yn = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        graph_pair += (jx[i] - jy[i]) * (ax[i] - ay[i]);
        yosida_pair += (x[i] - y[i]) * (ax[i] - ay[i]);
      }
      gn = dist(jx, jy) * dist(ax, ay);
      yn = dist(x, y) * dist(ax, ay);
      report.min_monotone = std::min(report.min_monotone, graph_pair / (1.0 + gn));
      report.min_yosida_monotone = std::min(report.min_yosida_monotone, yosida_pair / (1.0 + yn));

      // The bound resolver must agree with the direct one.
      bound(x, j2);
      report.max_expansion = std::max(report.max_expansion, dist(j2, jx) - 1e-12);

      if (entry.is_normal_cone()) {
        for (double other : lambdas) {
          op.resolve_into(x, other, j2);
          if (!std::equal(j2.begin(), j2.end(), jx.begin())) report.lambda_independent = false;
        }
      }
      if (entry.kind == Kind::LinearMonotone) {
        Eigen::Map<const Eigen::VectorXd> jv(jx.data(), d), xv(x.data(), d);
        const Eigen::VectorXd r = jv + lambda * (mat * jv) - xv;
        report.max_linear_residual = std::max(report.max_linear_residual, r.norm());
      }
    }
    ++lambda_index;
  }
  report.pass = report.max_expansion <= 1e-12 && report.min_monotone >= -tol &&
                report.min_yosida_monotone >= -tol && report.lambda_independent &&
                report.max_linear_residual <= tol && report.max_domain_distance <= 1e-12;
  return report;
}

}  // namespace mvsde
