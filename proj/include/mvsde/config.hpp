#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mvsde/operators.hpp"
#include "mvsde/solver.hpp"
#include "mvsde/stability.hpp"

namespace mvsde {

using Json = nlohmann::json;

struct ConfigIssue {
  std::string path;  // dotted key path, e.g. "scheme.h"
  std::string message;
};

struct ValidationResult {
  Json normalized;  // empty when errors is nonempty
  std::vector<ConfigIssue> errors;
  bool ok() const noexcept { return errors.empty(); }
};

/// Fills every default for the named scenario and checks types, ranges and
/// cross-field constraints. Validating the normalized output reproduces it.
ValidationResult validate_config(const Json& raw);

/// Reads a JSON config file. Throws IoError or ConfigError.
Json load_config_file(const std::filesystem::path& path);

/// Applies "a.b.c=value". The value is parsed as JSON when possible and kept
/// as a string otherwise. Throws ConfigError on a malformed assignment.
void apply_override(Json& raw, std::string_view assignment);

/// Canonical text form: sorted keys, two-space indent, trailing newline.
std::string dump_config(const Json& config);

struct ScenarioInfo {
  std::string name;
  std::string description;
  std::string oracle;  // empty when none is attached
};

const std::vector<ScenarioInfo>& scenario_catalog();

/// Default (un-normalized) config for a scenario. Throws ConfigError.
Json scenario_defaults(const std::string& name);

struct PicardSettings {
  double tol = 1e-4;
  std::size_t max_iter = 12;
};

struct StabilitySettings {
  std::string check = "auto";  // exponential, ultimate, as
  BoundOptions bound;
  double burn_in = 0.2;
  std::size_t seeds = 64;
  std::vector<double> eps;
  double tail = 0.75;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  OperatorCatalogEntry op;
  Coefficients coeffs;
  SchemeConfig scheme;
  std::optional<LyapunovSpec> lyapunov;
  TestFunction ito_function;
  PicardSettings picard;
  StabilitySettings stability;
  std::string oracle;
};

/// Operator description as used under the "operator" key; d is used by the
/// zero kind. Throws ConfigError.
OperatorCatalogEntry operator_from_json(const Json& description, std::size_t d);

/// Builds the runtime objects from a normalized config. Throws ConfigError.
Scenario build_scenario(const Json& normalized);

namespace presets {

/// b(x, mu) = -a x + b_bar mean(mu), sigma = s I.
Coefficients mean_field_linear(double a, double b_bar, double s, std::size_t d);
/// b = c in every component, sigma = 0.
Coefficients constant_drift(double c, std::size_t d);
/// b(x) = -theta x, sigma = s I.
Coefficients ou(double theta, double s, std::size_t d);
/// b = 0, sigma = 0.
Coefficients zero(std::size_t d);

TestFunction test_function(const std::string& name, double weight, std::size_t d);

}  // namespace presets

}  // namespace mvsde
