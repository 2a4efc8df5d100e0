#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvsde {

using Point = std::vector<double>;

/// Constants of the interior variation inequality
///   sum <X - a, dK> >= gamma1 |K| - gamma2 int |X - a| dt - gamma3 (t - s)
/// for an interior point a of the operator domain.
struct InteriorMetadata {
  Point interior_point;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma3 = 0.0;
};

/// Parameters of the built-in maximal monotone operators. Each kind has a
/// closed-form resolvent.
struct OperatorCatalogEntry {
  enum class Kind {
    Zero,
    NormalConeBall,
    NormalConeBox,
    NormalConeHalfspace,
    SubdifferentialAbs,
    SubdifferentialQuadratic,
    LinearMonotone,
  };

  Kind kind = Kind::Zero;
  std::size_t dimension = 1;
  Point center;                // ball
  double radius = 1.0;         // ball
  Point lo, hi;                // box, entries may be infinite
  Point normal;                // halfspace {<normal, x> <= offset}
  double offset = 0.0;         // halfspace
  Point weights;               // sum_i w_i |x_i|
  std::vector<double> matrix;  // d x d row-major, quadratic / linear kinds

  static OperatorCatalogEntry zero(std::size_t d);
  static OperatorCatalogEntry ball(Point center, double radius);
  static OperatorCatalogEntry box(Point lo, Point hi);
  static OperatorCatalogEntry halfspace(Point normal, double offset);
  static OperatorCatalogEntry abs(Point weights);
  static OperatorCatalogEntry quadratic(std::vector<double> matrix, std::size_t d);
  static OperatorCatalogEntry linear(std::vector<double> matrix, std::size_t d);

  bool is_normal_cone() const noexcept {
    return kind == Kind::NormalConeBall || kind == Kind::NormalConeBox ||
           kind == Kind::NormalConeHalfspace;
  }
  bool is_linear() const noexcept {
    return kind == Kind::SubdifferentialQuadratic || kind == Kind::LinearMonotone;
  }
};

std::string to_string(OperatorCatalogEntry::Kind kind);
std::optional<OperatorCatalogEntry::Kind> kind_from_string(const std::string& name);

/// Resolvent J_lambda with lambda already fixed: writes J_lambda(x) into out.
using Resolver = std::function<void(std::span<const double> x, std::span<double> out)>;

/// A maximal monotone operator on R^d, presented through its resolvent
/// J_lambda = (I + lambda A)^{-1} and the projection onto the closure of its domain.
/// Immutable after construction.
class MonotoneOperator {
 public:
  using ResolventFn = std::function<void(std::span<const double> x, double lambda, std::span<double> out)>;
  using ProjectionFn = std::function<void(std::span<const double> x, std::span<double> out)>;
  using ProbeFn = std::function<bool(std::span<const double> x, std::span<const double> y)>;
  using BindFn = std::function<Resolver(double lambda)>;

  MonotoneOperator(std::size_t dimension, ResolventFn resolvent, ProjectionFn domain_projection,
                   ProbeFn value_probe = {}, std::optional<InteriorMetadata> interior = {},
                   std::string name = "custom", BindFn bind = {});

  std::size_t dimension() const noexcept { return dimension_; }
  const std::string& name() const noexcept { return name_; }
  bool has_value_probe() const noexcept { return static_cast<bool>(probe_); }
  const std::optional<InteriorMetadata>& interior() const noexcept { return interior_; }

  void resolve_into(std::span<const double> x, double lambda, std::span<double> out) const;
  void project_into(std::span<const double> x, std::span<double> out) const;
  // Membership test y in A(x). Throws MissingMetadata when no probe exists.
  bool contains(std::span<const double> x, std::span<const double> y) const;
  // Distance from x to the closure of the domain.
  double domain_distance(std::span<const double> x) const;

  /// Resolver for a fixed lambda; linear kinds pre-factor (I + lambda M) once.
  Resolver bind(double lambda) const;

 private:
  std::size_t dimension_;
  ResolventFn resolvent_;
  ProjectionFn projection_;
  ProbeFn probe_;
  std::optional<InteriorMetadata> interior_;
  std::string name_;
  BindFn bind_;
};

MonotoneOperator make_operator(const OperatorCatalogEntry& entry);

Point resolve(const MonotoneOperator& op, std::span<const double> x, double lambda);

/// Yosida approximation (x - J_lambda(x)) / lambda, an element of A(J_lambda(x)).
Point yosida(const MonotoneOperator& op, std::span<const double> x, double lambda);

struct GraphProbe {
  Point x;
  Point y;
};

/// Graph points (J(z), (z - J(z)) / lambda) for random z; always inside Gr(A).
std::vector<GraphProbe> sample_graph_probes(const MonotoneOperator& op, std::size_t count,
                                            std::uint64_t seed, double scale = 2.0,
                                            double lambda = 0.5);

struct PairingReport {
  double min_value = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

/// Discrete form of <X_t - x, dK_t - y dt> >= 0 for each probe (x, y) in Gr(A).
/// Increment K_{k+1} - K_k is paired with X_{k+1}, the point where the implicit
/// step places it in h A(X_{k+1}). Default tolerance 1e-8 (1 + sup |path|).
PairingReport check_pairing_inequality(const MonotoneOperator& op, const std::vector<Point>& x_path,
                                       const std::vector<Point>& k_path,
                                       std::span<const double> grid,
                                       const std::vector<GraphProbe>& probes,
                                       std::optional<double> tol = {});

struct VariationReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = true;
};

VariationReport interior_variation_bound_check(const MonotoneOperator& op,
                                               const std::vector<Point>& x_path,
                                               const std::vector<Point>& k_path,
                                               std::span<const double> grid,
                                               std::optional<double> tol = {});

struct AxiomReport {
  std::string name;
  std::size_t pairs = 0;
  double max_expansion = 0.0;     // max |J x - J y| - |x - y|
  double min_monotone = 0.0;      // min normalised <x1 - x2, y1 - y2> over graph pairs
  double min_yosida_monotone = 0.0;
  bool lambda_independent = true;  // normal cones only
  double max_linear_residual = 0.0;  // linear_monotone only
  double max_domain_distance = 0.0;
  bool pass = true;
};

/// Sampling check of nonexpansiveness, monotonicity and (per kind) projection
/// or linear-solve identities.
AxiomReport check_axioms(const OperatorCatalogEntry& entry, std::size_t pairs = 1000,
                         std::vector<double> lambdas = {1e-3, 1.0, 1e3}, std::uint64_t seed = 1,
                         double tol = 1e-10);

}  // namespace mvsde
