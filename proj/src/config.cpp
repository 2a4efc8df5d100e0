#include "mvsde/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mvsde/error.hpp"

namespace mvsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Json zeros(std::size_t d) { return Json(std::vector<double>(d, 0.0)); }
Json ones(std::size_t d) { return Json(std::vector<double>(d, 1.0)); }

Json identity_matrix(std::size_t d) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<double> row(d, 0.0);
    row[i] = 1.0;
    rows.push_back(row);
  }
  return rows;
}

Json operator_template(const std::string& kind, std::size_t d) {
  if (kind == "zero") return {{"kind", kind}};
  if (kind == "normal_cone_ball") return {{"kind", kind}, {"center", zeros(d)}, {"radius", 1.0}};
  if (kind == "normal_cone_box")
    return {{"kind", kind}, {"lo", zeros(d)}, {"hi", Json(std::vector<std::string>(d, "inf"))}};
  if (kind == "normal_cone_halfspace") {
    std::vector<double> n(d, 0.0);
    n[0] = 1.0;
    return {{"kind", kind}, {"normal", n}, {"offset", 0.0}};
  }
  if (kind == "subdifferential_abs") return {{"kind", kind}, {"weights", ones(d)}};
  if (kind == "subdifferential_quadratic" || kind == "linear_monotone")
    return {{"kind", kind}, {"matrix", identity_matrix(d)}};
  return Json();
}

Json initial_template(const std::string& kind, std::size_t d) {
  if (kind == "point") return {{"kind", kind}, {"x0", zeros(d)}};
  if (kind == "gaussian") return {{"kind", kind}, {"mean", zeros(d)}, {"std", 1.0}};
  if (kind == "uniform") return {{"kind", kind}, {"lo", zeros(d)}, {"hi", ones(d)}};
  return Json();
}

Json coefficients_template(const std::string& preset) {
  if (preset == "mean-field-linear") return {{"preset", preset}, {"a", 1.0}, {"b_bar", 0.0}, {"s", 0.0}};
  if (preset == "reflected-drift") return {{"preset", preset}, {"c", -1.0}};
  if (preset == "reflected-ou-ball") return {{"preset", preset}, {"theta", 1.0}, {"radius", 1.0}, {"s", 0.3}};
  if (preset == "soft-threshold-flow") return {{"preset", preset}, {"w", 1.0}};
  if (preset == "zero") return {{"preset", preset}};
  return Json();
}

Json comparison_fn(double scale, double power) { return {{"scale", scale}, {"power", power}}; }

Json lyapunov_template() {
  return {{"family", "H2.1"}, {"function", "square"}, {"weight", 1.0}, {"alpha", 1.0},
          {"a1", 1.0},        {"a2", 1.0},            {"M1", 0.0},     {"M2", 0.0},
          {"M3", 0.0},        {"gamma1", comparison_fn(0.5, 2.0)},     {"gamma2", comparison_fn(2.0, 2.0)}};
}

Json lyapunov(const std::string& family, double alpha, double m1) {
  Json l = lyapunov_template();
  l["family"] = family;
  l["alpha"] = alpha;
  l["M1"] = m1;
  return l;
}

struct CatalogRow {
  ScenarioInfo info;
  Json operator_;
  Json coefficients;
  Json initial;
  std::string ito_function;
  std::string check;
  Json lyapunov;
};

const std::vector<CatalogRow>& catalog_rows() {
  static const std::vector<CatalogRow> rows = [] {
    std::vector<CatalogRow> r;
    r.push_back({{"reflected-drift", "constant drift c reflected at 0 (A = normal cone of [0, inf)), x0 = 1",
                  "X_t = max(1 + c t, 0), K_t = min(1 + c t, 0)"},
                 {{"kind", "normal_cone_box"}, {"lo", {0.0}}, {"hi", {"inf"}}},
                 coefficients_template("reflected-drift"),
                 {{"kind", "point"}, {"x0", {1.0}}},
                 "linear",
                 "as",
                 nullptr});
    r.push_back({{"mean-field-ou", "b = -a x + b_bar E X, sigma = s, unconstrained",
                  "moment ODE m1' = (b_bar - a) m1, m2' = -2a m2 + 2 b_bar m1^2 + s^2 d"},
                 operator_template("zero", 1),
                 {{"preset", "mean-field-linear"}, {"a", 1.0}, {"b_bar", 0.5}, {"s", 0.3}},
                 {{"kind", "point"}, {"x0", {1.0}}},
                 "mixed",
                 "ultimate",
                 lyapunov("H2.2", 1.0, 0.09)});
    r.push_back({{"mean-field-unit-lipschitz", "expanding mean-field drift b = x + E X, sigma = 0.3",
                  "translated frozen flows: contraction ratio (e^T - 1 - T) / T"},
                 operator_template("zero", 1),
                 {{"preset", "mean-field-linear"}, {"a", -1.0}, {"b_bar", 1.0}, {"s", 0.3}},
                 {{"kind", "point"}, {"x0", {1.0}}},
                 "mixed",
                 "as",
                 nullptr});
    r.push_back({{"reflected-ou-ball", "OU drift -theta x reflected in the unit disc of R^2", ""},
                 {{"kind", "normal_cone_ball"}, {"center", {0.0, 0.0}}, {"radius", 1.0}},
                 coefficients_template("reflected-ou-ball"),
                 {{"kind", "point"}, {"x0", {0.5, 0.0}}},
                 "square",
                 "ultimate",
                 lyapunov("H2.2", 2.0, 0.18)});
    r.push_back({{"soft-threshold-flow", "A = subdifferential of w|x|, b = 0, sigma = 0, x0 = 2",
                  "X_t = max(2 - w t, 0)"},
                 {{"kind", "subdifferential_abs"}, {"weights", {1.0}}},
                 coefficients_template("soft-threshold-flow"),
                 {{"kind", "point"}, {"x0", {2.0}}},
                 "square",
                 "as",
                 nullptr});
    r.push_back({{"contraction", "dx = -x dt, deterministic", "X_t = e^{-t} x0"},
                 operator_template("zero", 1),
                 {{"preset", "mean-field-linear"}, {"a", 1.0}, {"b_bar", 0.0}, {"s", 0.0}},
                 {{"kind", "point"}, {"x0", {1.0}}},
                 "square",
                 "exponential",
                 lyapunov("H2.1", 2.0, 0.0)});
    r.push_back({{"null", "b = 0, sigma = 0, x0 = 1: nothing moves", "X_t = x0"},
                 operator_template("zero", 1),
                 coefficients_template("zero"),
                 {{"kind", "point"}, {"x0", {1.0}}},
                 "square",
                 "as",
                 nullptr});
    r.push_back({{"mu-independent-ou", "OU drift -x, sigma = 0.3, no measure dependence",
                  "moment ODE with b_bar = 0"},
                 operator_template("zero", 1),
                 {{"preset", "mean-field-linear"}, {"a", 1.0}, {"b_bar", 0.0}, {"s", 0.3}},
                 {{"kind", "point"}, {"x0", {1.0}}},
                 "square",
                 "ultimate",
                 lyapunov("H2.2", 2.0, 0.09)});
    return r;
  }();
  return rows;
}

const CatalogRow* find_row(const std::string& name) {
  for (const auto& row : catalog_rows())
    if (row.info.name == name) return &row;
  return nullptr;
}

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

// Object-wise merge; keys absent from the template are reported.
void merge_into(Json& target, const Json& patch, const std::string& path, std::vector<ConfigIssue>& errors) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string p = join(path, it.key());
    if (!target.contains(it.key())) {
      errors.push_back({p, "unknown key"});
      continue;
    }
    Json& slot = target[it.key()];
    if (slot.is_object() && it.value().is_object()) merge_into(slot, it.value(), p, errors);
    else slot = it.value();
  }
}

class Checker {
 public:
  explicit Checker(std::vector<ConfigIssue>& errors) : errors_(errors) {}

  void error(const std::string& path, const std::string& msg) { errors_.push_back({path, msg}); }

  std::optional<double> number(const Json& obj, const std::string& key, const std::string& path) {
    const Json& v = obj.at(key);
    if (!v.is_number()) {
      error(join(path, key), "must be a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      error(join(path, key), "must be finite");
      return std::nullopt;
    }
    return x;
  }

  std::optional<std::uint64_t> count(const Json& obj, const std::string& key, const std::string& path) {
    const Json& v = obj.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (x >= 0 && x == std::floor(x) && x < 9.007199254740992e15) return static_cast<std::uint64_t>(x);
    }
    error(join(path, key), "must be a nonnegative integer");
    return std::nullopt;
  }

  std::optional<std::string> string(const Json& obj, const std::string& key, const std::string& path) {
    const Json& v = obj.at(key);
    if (!v.is_string()) {
      error(join(path, key), "must be a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  // Entries may be "inf" / "-inf" when allow_inf.
  std::optional<Point> vector(const Json& obj, const std::string& key, const std::string& path, bool allow_inf = false) {
    const Json& v = obj.at(key);
    const std::string p = join(path, key);
    if (!v.is_array() || v.empty()) {
      error(p, "must be a nonempty array of numbers");
      return std::nullopt;
    }
    Point out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Json& e = v[i];
      if (e.is_number() && std::isfinite(e.get<double>())) out.push_back(e.get<double>());
      else if (allow_inf && e.is_string() && (e == "inf" || e == "+inf")) out.push_back(kInf);
      else if (allow_inf && e.is_string() && e == "-inf") out.push_back(-kInf);
      else {
        error(p + "[" + std::to_string(i) + "]", allow_inf ? "must be a finite number, \"inf\" or \"-inf\"" : "must be a finite number");
        return std::nullopt;
      }
    }
    return out;
  }

 private:
  std::vector<ConfigIssue>& errors_;
};

// Canonical numeric forms: doubles as JSON floats, infinities as strings.
Json canonical_vector(const Point& v) {
  Json out = Json::array();
  for (double x : v) {
    if (x == kInf) out.push_back("inf");
    else if (x == -kInf) out.push_back("-inf");
    else out.push_back(x);
  }
  return out;
}

LyapunovSpec::ComparisonFn power_fn(double scale, double power) {
  return [scale, power](double r) { return scale * std::pow(r, power); };
}

Json normalize_fn(Checker& c, const Json& obj, const std::string& path) {
  if (!obj.is_object()) {
    c.error(path, "must be an object with scale and power");
    return obj;
  }
  Json out = comparison_fn(0.5, 2.0);
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!out.contains(it.key())) c.error(join(path, it.key()), "unknown key");
  for (const char* k : {"scale", "power"}) {
    if (!obj.contains(k)) continue;
    if (auto v = c.number(obj, k, path)) {
      if (*v <= 0.0) c.error(join(path, k), "must be positive");
      out[k] = *v;
    }
  }
  return out;
}

std::optional<OperatorCatalogEntry> parse_operator(Checker& c, Json& op, std::size_t d) {
  const std::string path = "operator";
  const auto kind_name = c.string(op, "kind", path);
  if (!kind_name) return std::nullopt;
  const auto kind = kind_from_string(*kind_name);
  if (!kind) {
    c.error("operator.kind", "unknown operator kind '" + *kind_name + "'");
    return std::nullopt;
  }
  using K = OperatorCatalogEntry::Kind;
  try {
    switch (*kind) {
      case K::Zero: return OperatorCatalogEntry::zero(d);
      case K::NormalConeBall: {
        auto center = c.vector(op, "center", path);
        auto radius = c.number(op, "radius", path);
        if (!center || !radius) return std::nullopt;
        op["center"] = canonical_vector(*center);
        op["radius"] = *radius;
        return OperatorCatalogEntry::ball(*center, *radius);
      }
      case K::NormalConeBox: {
        auto lo = c.vector(op, "lo", path, true);
        auto hi = c.vector(op, "hi", path, true);
        if (!lo || !hi) return std::nullopt;
        op["lo"] = canonical_vector(*lo);
        op["hi"] = canonical_vector(*hi);
        return OperatorCatalogEntry::box(*lo, *hi);
      }
      case K::NormalConeHalfspace: {
        auto normal = c.vector(op, "normal", path);
        auto offset = c.number(op, "offset", path);
        if (!normal || !offset) return std::nullopt;
        op["normal"] = canonical_vector(*normal);
        op["offset"] = *offset;
        return OperatorCatalogEntry::halfspace(*normal, *offset);
      }
      case K::SubdifferentialAbs: {
        auto w = c.vector(op, "weights", path);
        if (!w) return std::nullopt;
        op["weights"] = canonical_vector(*w);
        return OperatorCatalogEntry::abs(*w);
      }
      case K::SubdifferentialQuadratic:
      case K::LinearMonotone: {
        const Json& rows = op.at("matrix");
        const std::size_t n = rows.is_array() ? rows.size() : 0;
        std::vector<double> flat;
        Json canon = Json::array();
        bool ok = n > 0;
        for (std::size_t i = 0; ok && i < n; ++i) {
          Json holder = {{"row", rows[i]}};
          auto row = c.vector(holder, "row", "operator.matrix[" + std::to_string(i) + "]");
          if (!row || row->size() != n) {
            ok = false;
            break;
          }
          flat.insert(flat.end(), row->begin(), row->end());
          canon.push_back(canonical_vector(*row));
        }
        if (!ok) {
          c.error("operator.matrix", "must be a square array of numeric rows");
          return std::nullopt;
        }
        op["matrix"] = canon;
        return *kind == K::LinearMonotone ? OperatorCatalogEntry::linear(flat, n)
                                          : OperatorCatalogEntry::quadratic(flat, n);
      }
    }
  } catch (const Error& e) {
    c.error(path, e.what());
  }
  return std::nullopt;
}

std::optional<InitialCondition> parse_initial(Checker& c, Json& ic) {
  const std::string path = "initial";
  const auto kind = c.string(ic, "kind", path);
  if (!kind) return std::nullopt;
  if (*kind == "point") {
    auto x0 = c.vector(ic, "x0", path);
    if (!x0) return std::nullopt;
    ic["x0"] = canonical_vector(*x0);
    return InitialCondition::point(*x0);
  }
  if (*kind == "gaussian") {
    auto mean = c.vector(ic, "mean", path);
    auto sd = c.number(ic, "std", path);
    if (!mean || !sd) return std::nullopt;
    if (*sd < 0.0) {
      c.error("initial.std", "must be >= 0");
      return std::nullopt;
    }
    ic["mean"] = canonical_vector(*mean);
    ic["std"] = *sd;
    return InitialCondition::gaussian(*mean, *sd);
  }
  if (*kind == "uniform") {
    auto lo = c.vector(ic, "lo", path);
    auto hi = c.vector(ic, "hi", path);
    if (!lo || !hi) return std::nullopt;
    if (lo->size() != hi->size()) {
      c.error("initial.hi", "must have the same length as initial.lo");
      return std::nullopt;
    }
    for (std::size_t i = 0; i < lo->size(); ++i)
      if ((*lo)[i] > (*hi)[i]) {
        c.error("initial.lo", "must be <= initial.hi componentwise");
        return std::nullopt;
      }
    ic["lo"] = canonical_vector(*lo);
    ic["hi"] = canonical_vector(*hi);
    return InitialCondition::uniform(*lo, *hi);
  }
  c.error("initial.kind", "must be point, gaussian or uniform");
  return std::nullopt;
}

bool is_known_function(const std::string& name) {
  static const std::vector<std::string> names = {"square", "second_moment", "mixed", "bounded_tanh",
                                                 "linear", "mean", "coordinate_times_mean", "square_plus_constant"};
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::string kind_key(const std::string& section) { return section == "coefficients" ? "preset" : "kind"; }

Json section_template(const std::string& section, const std::string& kind, std::size_t d) {
  if (section == "operator") return operator_template(kind, d);
  if (section == "initial") return initial_template(kind, d);
  return coefficients_template(kind);
}

std::size_t vector_length(const Json& ic) {
  for (const char* k : {"x0", "mean", "lo"})
    if (ic.contains(k) && ic[k].is_array() && !ic[k].empty()) return ic[k].size();
  return 1;
}

}  // namespace

const std::vector<ScenarioInfo>& scenario_catalog() {
  static const std::vector<ScenarioInfo> infos = [] {
    std::vector<ScenarioInfo> out;
    for (const auto& row : catalog_rows()) out.push_back(row.info);
    return out;
  }();
  return infos;
}

Json scenario_defaults(const std::string& name) {
  const CatalogRow* row = find_row(name);
  if (!row) fail(ErrorCode::ConfigError, "scenario: unknown scenario '" + name + "'");
  Json stability = {{"check", row->check},
                    {"c_h", 0.0},
                    {"se_factor", 3.0},
                    {"burn_in", 0.2},
                    {"seeds", 64},
                    {"eps", {1e-3, 1e-2, 1e-1, 1.0}},
                    {"tail", 0.75},
                    {"lyapunov", row->lyapunov}};
  return {{"scenario", name},
          {"seed", 0},
          {"scheme", {{"h", 0.01}, {"N", 1000}, {"T", 1.0}, {"threads", 1}, {"blowup_threshold", 1e8}}},
          {"initial", row->initial},
          {"operator", row->operator_},
          {"coefficients", row->coefficients},
          {"picard", {{"tol", 1e-4}, {"max_iter", 12}}},
          {"ito", {{"function", row->ito_function}, {"weight", 1.0}}},
          {"stability", stability}};
}

ValidationResult validate_config(const Json& raw) {
  ValidationResult result;
  auto& errors = result.errors;
  Checker c(errors);
  if (!raw.is_object()) {
    errors.push_back({"", "config must be a JSON object"});
    return result;
  }
  if (!raw.contains("scenario") || !raw["scenario"].is_string()) {
    errors.push_back({"scenario", "required string naming a catalog scenario"});
    return result;
  }
  const std::string name = raw["scenario"].get<std::string>();
  if (!find_row(name)) {
    errors.push_back({"scenario", "unknown scenario '" + name + "'"});
    return result;
  }
  Json cfg = scenario_defaults(name);

  // Sections whose parameter set depends on a kind are replaced by the
  // template of the requested kind before merging.
  Json patch = raw;
  std::size_t d = vector_length(cfg["initial"]);
  if (patch.contains("initial") && patch["initial"].is_object()) d = vector_length(patch["initial"]);
  for (const std::string section : {"initial", "operator", "coefficients"}) {
    if (!patch.contains(section)) continue;
    if (!patch[section].is_object()) {
      errors.push_back({section, "must be an object"});
      patch.erase(section);
      continue;
    }
    const std::string key = kind_key(section);
    if (patch[section].contains(key) && patch[section][key] != cfg[section][key]) {
      if (!patch[section][key].is_string()) {
        errors.push_back({join(section, key), "must be a string"});
        patch.erase(section);
        continue;
      }
      Json tmpl = section_template(section, patch[section][key].get<std::string>(), d);
      if (tmpl.is_null()) {
        errors.push_back({join(section, key), "unknown " + key + " '" + patch[section][key].get<std::string>() + "'"});
        patch.erase(section);
        continue;
      }
      cfg[section] = tmpl;
    }
  }
  if (patch.contains("stability") && patch["stability"].is_object() && patch["stability"].contains("lyapunov")) {
    const Json& l = patch["stability"]["lyapunov"];
    if (l.is_object() && cfg["stability"]["lyapunov"].is_null()) cfg["stability"]["lyapunov"] = lyapunov_template();
    if (l.is_null()) {
      cfg["stability"]["lyapunov"] = nullptr;
      patch["stability"].erase("lyapunov");
    }
  }
  merge_into(cfg, patch, "", errors);

  bool shape_ok = true;
  for (const std::string section : {"scheme", "initial", "operator", "coefficients", "picard", "ito", "stability"})
    if (!cfg[section].is_object()) {
      errors.push_back({section, "must be an object"});
      shape_ok = false;
    }
  if (!shape_ok) return result;

  // seed
  if (auto s = c.count(cfg, "seed", "")) cfg["seed"] = *s;

  // scheme
  Json& sch = cfg["scheme"];
  SchemeConfig scheme;
  auto h = c.number(sch, "h", "scheme");
  auto T = c.number(sch, "T", "scheme");
  auto N = c.count(sch, "N", "scheme");
  auto threads = c.count(sch, "threads", "scheme");
  auto blowup = c.number(sch, "blowup_threshold", "scheme");
  if (h && !(*h > 0.0)) c.error("scheme.h", "must be positive");
  if (N && *N < 1) c.error("scheme.N", "must be at least 1");
  if (threads && (*threads < 1 || *threads > 1024)) c.error("scheme.threads", "must be between 1 and 1024");
  if (blowup && !(*blowup > 0.0)) c.error("scheme.blowup_threshold", "must be positive");
  if (h && T && *h > 0.0) {
    if (*T < *h) c.error("scheme.T", "must be >= scheme.h");
    else {
      SchemeConfig probe;
      probe.h = *h;
      probe.T = *T;
      probe.initial = InitialCondition::point({0.0});
      try {
        probe.validate();
      } catch (const Error&) {
        c.error("scheme.T", "must be an integer multiple of scheme.h (grid exactness: T / h within one ulp of an integer)");
      }
    }
  }
  if (h) sch["h"] = *h;
  if (T) sch["T"] = *T;
  if (N) sch["N"] = *N;
  if (threads) sch["threads"] = *threads;
  if (blowup) sch["blowup_threshold"] = *blowup;

  // initial and operator
  auto initial = parse_initial(c, cfg["initial"]);
  const std::size_t dim = initial ? initial->dimension() : d;
  auto entry = parse_operator(c, cfg["operator"], dim);
  if (entry && initial && entry->dimension != dim)
    c.error("operator", "dimension " + std::to_string(entry->dimension) + " does not match initial dimension " +
                            std::to_string(dim));
  if (entry && initial && entry->dimension == dim && initial->kind == InitialCondition::Kind::Point) {
    try {
      const auto op = make_operator(*entry);
      if (op.domain_distance(initial->x0) > 1e-12) c.error("initial.x0", "lies outside the closure of the operator domain");
    } catch (const Error&) {
    }
  }

  // coefficients
  Json& co = cfg["coefficients"];
  const auto preset = c.string(co, "preset", "coefficients");
  if (preset) {
    for (auto it = co.begin(); it != co.end(); ++it) {
      if (it.key() == "preset") continue;
      if (auto v = c.number(co, it.key(), "coefficients")) it.value() = *v;
    }
    if (*preset == "reflected-ou-ball") {
      if (co["radius"].is_number() && !(co["radius"].get<double>() > 0.0)) c.error("coefficients.radius", "must be positive");
      if (co["s"].is_number() && co["s"].get<double>() < 0.0) c.error("coefficients.s", "must be >= 0");
      if (entry && (entry->kind != OperatorCatalogEntry::Kind::NormalConeBall ||
                    (co["radius"].is_number() && entry->radius != co["radius"].get<double>())))
        c.error("coefficients.radius", "must match a normal_cone_ball operator of the same radius");
    } else if (*preset == "soft-threshold-flow") {
      if (co["w"].is_number() && co["w"].get<double>() < 0.0) c.error("coefficients.w", "must be >= 0");
      bool match = entry && entry->kind == OperatorCatalogEntry::Kind::SubdifferentialAbs;
      if (match && co["w"].is_number())
        for (double w : entry->weights) match = match && w == co["w"].get<double>();
      if (!match) c.error("coefficients.w", "must match the weights of a subdifferential_abs operator");
    } else if (*preset == "mean-field-linear") {
      if (co["s"].is_number() && co["s"].get<double>() < 0.0) c.error("coefficients.s", "must be >= 0");
    }
  }

  // picard
  Json& pc = cfg["picard"];
  if (auto tol = c.number(pc, "tol", "picard")) {
    if (!(*tol > 0.0)) c.error("picard.tol", "must be positive");
    pc["tol"] = *tol;
  }
  if (auto it = c.count(pc, "max_iter", "picard")) {
    if (*it < 1) c.error("picard.max_iter", "must be at least 1");
    pc["max_iter"] = *it;
  }

  // ito
  Json& ito = cfg["ito"];
  if (auto f = c.string(ito, "function", "ito"); f && !is_known_function(*f))
    c.error("ito.function", "unknown test function '" + *f + "'");
  if (auto w = c.number(ito, "weight", "ito")) ito["weight"] = *w;

  // stability
  Json& st = cfg["stability"];
  if (auto chk = c.string(st, "check", "stability"); chk && *chk != "exponential" && *chk != "ultimate" && *chk != "as")
    c.error("stability.check", "must be exponential, ultimate or as");
  for (const char* k : {"c_h", "se_factor"})
    if (auto v = c.number(st, k, "stability")) {
      if (*v < 0.0) c.error(join("stability", k), "must be >= 0");
      st[k] = *v;
    }
  if (auto v = c.number(st, "burn_in", "stability")) {
    if (*v < 0.0 || *v >= 1.0) c.error("stability.burn_in", "must lie in [0, 1)");
    st["burn_in"] = *v;
  }
  if (auto v = c.number(st, "tail", "stability")) {
    if (*v < 0.0 || *v > 1.0) c.error("stability.tail", "must lie in [0, 1]");
    st["tail"] = *v;
  }
  if (auto v = c.count(st, "seeds", "stability")) {
    if (*v < 1) c.error("stability.seeds", "must be at least 1");
    st["seeds"] = *v;
  }
  if (auto eps = c.vector(st, "eps", "stability")) {
    for (double e : *eps)
      if (!(e > 0.0)) c.error("stability.eps", "levels must be positive");
    st["eps"] = canonical_vector(*eps);
  }
  Json& ly = st["lyapunov"];
  if (!ly.is_null() && !ly.is_object()) {
    c.error("stability.lyapunov", "must be an object or null");
  } else if (!ly.is_null()) {
    const std::string lp = "stability.lyapunov";
    if (auto fam = c.string(ly, "family", lp); fam && *fam != "H2.1" && *fam != "H2.2" && *fam != "H2.3")
      c.error(lp + ".family", "must be H2.1, H2.2 or H2.3");
    if (auto f = c.string(ly, "function", lp); f && !is_known_function(*f))
      c.error(lp + ".function", "unknown test function '" + *f + "'");
    for (const char* k : {"weight", "alpha", "a1", "a2", "M1", "M2", "M3"})
      if (auto v = c.number(ly, k, lp)) ly[k] = *v;
    for (const char* k : {"alpha", "a1", "a2"})
      if (ly[k].is_number() && !(ly[k].get<double>() > 0.0)) c.error(join(lp, k), "must be positive");
    for (const char* k : {"M1", "M2", "M3"})
      if (ly[k].is_number() && ly[k].get<double>() < 0.0) c.error(join(lp, k), "must be >= 0");
    if (ly["a1"].is_number() && ly["a2"].is_number() && ly["a1"].get<double>() > ly["a2"].get<double>())
      c.error(lp + ".a1", "must not exceed stability.lyapunov.a2");
    ly["gamma1"] = normalize_fn(c, ly["gamma1"], lp + ".gamma1");
    ly["gamma2"] = normalize_fn(c, ly["gamma2"], lp + ".gamma2");
  }

  if (errors.empty()) result.normalized = std::move(cfg);
  return result;
}

Json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::ConfigError, "config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

void apply_override(Json& raw, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    fail(ErrorCode::ConfigError, "override '" + std::string(assignment) + "' must look like key.path=value");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  if (!raw.is_object()) raw = Json::object();
  Json* node = &raw;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(ErrorCode::ConfigError, "override key '" + key + "' has an empty component");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    Json& next = (*node)[part];
    if (!next.is_object()) next = Json::object();
    node = &next;
    start = dot + 1;
  }
}

std::string dump_config(const Json& config) { return config.dump(2) + "\n"; }

namespace presets {

Coefficients mean_field_linear(double a, double b_bar, double s, std::size_t d) {
  Coefficients c;
  c.d = d;
  c.m = d;
  c.name = "mean-field-linear";
  c.measure_dependent = b_bar != 0.0;
  c.drift = [a, b_bar](std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out) {
    if (b_bar == 0.0) {
      for (std::size_t r = 0; r < x.size(); ++r) out[r] = -a * x[r];
      return;
    }
    const auto& mean = mu.mean();
    for (std::size_t r = 0; r < x.size(); ++r) out[r] = -a * x[r] + b_bar * mean[r];
  };
  c.diffusion = [s, d](std::span<const double>, const EmpiricalMeasure&, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t r = 0; r < d; ++r) out[r * d + r] = s;
  };
  c.growth_constant = std::max({2.0 * a * a, 2.0 * b_bar * b_bar, s * s * static_cast<double>(d)});
  c.lipschitz_constant = std::abs(a) + std::abs(b_bar);
  return c;
}

Coefficients constant_drift(double value, std::size_t d) {
  Coefficients c = zero(d);
  c.name = "constant-drift";
  c.drift = [value](std::span<const double>, const EmpiricalMeasure&, std::span<double> out) {
    std::fill(out.begin(), out.end(), value);
  };
  c.growth_constant = value * value * static_cast<double>(d);
  return c;
}

Coefficients ou(double theta, double s, std::size_t d) {
  Coefficients c = mean_field_linear(theta, 0.0, s, d);
  c.name = "ou";
  return c;
}

Coefficients zero(std::size_t d) {
  Coefficients c;
  c.d = d;
  c.m = d;
  c.name = "zero";
  c.measure_dependent = false;
  c.drift = [](std::span<const double>, const EmpiricalMeasure&, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  c.diffusion = c.drift;
  c.growth_constant = 0.0;
  c.lipschitz_constant = 0.0;
  return c;
}

TestFunction test_function(const std::string& name, double weight, std::size_t d) {
  namespace tf = test_functions;
  if (name == "square") return tf::square_norm();
  if (name == "second_moment") return tf::second_moment();
  if (name == "mixed") return tf::mixed(weight);
  if (name == "bounded_tanh") return tf::bounded_tanh();
  if (name == "linear") return tf::linear(Point(d, 1.0));
  if (name == "mean") return tf::mean_functional(Point(d, 1.0));
  if (name == "coordinate_times_mean") return tf::coordinate_times_mean(Point(d, 1.0), Point(d, 1.0));
  if (name == "square_plus_constant") {
    auto f = tf::combine(1.0, tf::square_norm(), weight, tf::constant(1.0));
    f.name = "square_plus_constant";
    return f;
  }
  fail(ErrorCode::ConfigError, "unknown test function '" + name + "'");
}

}  // namespace presets

OperatorCatalogEntry operator_from_json(const Json& description, std::size_t d) {
  require(description.is_object() && description.contains("kind"), ErrorCode::ConfigError,
          "operator: must be an object with a kind");
  const auto kind = description["kind"].is_string() ? description["kind"].get<std::string>() : std::string();
  Json op = operator_template(kind, d);
  if (op.is_null()) fail(ErrorCode::ConfigError, "operator.kind: unknown operator kind '" + kind + "'");
  std::vector<ConfigIssue> issues;
  merge_into(op, description, "operator", issues);
  Checker c(issues);
  std::optional<OperatorCatalogEntry> entry;
  if (issues.empty()) entry = parse_operator(c, op, d);
  if (!issues.empty() || !entry) {
    std::string msg = issues.empty() ? "operator: invalid description" : issues.front().path + ": " + issues.front().message;
    fail(ErrorCode::ConfigError, msg);
  }
  return *entry;
}

Scenario build_scenario(const Json& normalized) {
  const auto check = validate_config(normalized);
  if (!check.ok())
    fail(ErrorCode::ConfigError, check.errors.front().path + ": " + check.errors.front().message);
  const Json& cfg = check.normalized;
  std::vector<ConfigIssue> sink;
  Checker c(sink);

  Scenario sc;
  sc.name = cfg["scenario"].get<std::string>();
  sc.seed = cfg["seed"].get<std::uint64_t>();
  sc.oracle = find_row(sc.name)->info.oracle;

  Json ic = cfg["initial"];
  sc.scheme.initial = *parse_initial(c, ic);
  const std::size_t d = sc.scheme.initial.dimension();
  const Json& sch = cfg["scheme"];
  sc.scheme.h = sch["h"].get<double>();
  sc.scheme.T = sch["T"].get<double>();
  sc.scheme.N = sch["N"].get<std::size_t>();
  sc.scheme.threads = sch["threads"].get<unsigned>();
  sc.scheme.blowup_threshold = sch["blowup_threshold"].get<double>();
  sc.scheme.seed = sc.seed;

  Json op = cfg["operator"];
  sc.op = *parse_operator(c, op, d);

  const Json& co = cfg["coefficients"];
  const std::string preset = co["preset"].get<std::string>();
  if (preset == "mean-field-linear")
    sc.coeffs = presets::mean_field_linear(co["a"].get<double>(), co["b_bar"].get<double>(), co["s"].get<double>(), d);
  else if (preset == "reflected-drift")
    sc.coeffs = presets::constant_drift(co["c"].get<double>(), d);
  else if (preset == "reflected-ou-ball")
    sc.coeffs = presets::ou(co["theta"].get<double>(), co["s"].get<double>(), d);
  else
    sc.coeffs = presets::zero(d);
  sc.coeffs.name = preset;

  sc.picard.tol = cfg["picard"]["tol"].get<double>();
  sc.picard.max_iter = cfg["picard"]["max_iter"].get<std::size_t>();
  sc.ito_function = presets::test_function(cfg["ito"]["function"].get<std::string>(),
                                           cfg["ito"]["weight"].get<double>(), d);

  const Json& st = cfg["stability"];
  sc.stability.check = st["check"].get<std::string>();
  sc.stability.bound.c_h = st["c_h"].get<double>();
  sc.stability.bound.se_factor = st["se_factor"].get<double>();
  sc.stability.burn_in = st["burn_in"].get<double>();
  sc.stability.seeds = st["seeds"].get<std::size_t>();
  sc.stability.eps = st["eps"].get<std::vector<double>>();
  sc.stability.tail = st["tail"].get<double>();
  if (!st["lyapunov"].is_null()) {
    const Json& ly = st["lyapunov"];
    LyapunovSpec spec;
    spec.F = presets::test_function(ly["function"].get<std::string>(), ly["weight"].get<double>(), d);
    spec.family = family_from_string(ly["family"].get<std::string>());
    spec.alpha = ly["alpha"].get<double>();
    spec.a1 = ly["a1"].get<double>();
    spec.a2 = ly["a2"].get<double>();
    spec.M1 = ly["M1"].get<double>();
    spec.M2 = ly["M2"].get<double>();
    spec.M3 = ly["M3"].get<double>();
    spec.gamma1 = power_fn(ly["gamma1"]["scale"].get<double>(), ly["gamma1"]["power"].get<double>());
    spec.gamma2 = power_fn(ly["gamma2"]["scale"].get<double>(), ly["gamma2"]["power"].get<double>());
    try {
      spec.validate();
    } catch (const Error& e) {
      fail(ErrorCode::ConfigError, std::string("stability.lyapunov: ") + e.what());
    }
    sc.lyapunov = std::move(spec);
  }
  return sc;
}

}  // namespace mvsde
