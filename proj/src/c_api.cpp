#include "mvsde/mvsde.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "mvsde/commands.hpp"
#include "mvsde/config.hpp"
#include "mvsde/error.hpp"
#include "mvsde/measures.hpp"
#include "mvsde/operators.hpp"
#include "mvsde/solver.hpp"

struct mvsde_operator {
  mvsde::MonotoneOperator op;
};

struct mvsde_config {
  mvsde::Json raw;
};

struct mvsde_trajectory {
  mvsde::TrajectoryRecord traj;
};

namespace {

thread_local std::string g_last_error;

mvsde_status to_status(mvsde::ErrorCode code) {
  using mvsde::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return MVSDE_ERR_INVALID_ARGUMENT;
    case ErrorCode::NonFinite: return MVSDE_ERR_NON_FINITE;
    case ErrorCode::DegenerateSet: return MVSDE_ERR_DEGENERATE_SET;
    case ErrorCode::LengthMismatch: return MVSDE_ERR_LENGTH_MISMATCH;
    case ErrorCode::MissingMetadata: return MVSDE_ERR_MISSING_METADATA;
    case ErrorCode::DimensionMismatch: return MVSDE_ERR_DIMENSION_MISMATCH;
    case ErrorCode::SizeMismatch: return MVSDE_ERR_SIZE_MISMATCH;
    case ErrorCode::GridMismatch: return MVSDE_ERR_GRID_MISMATCH;
    case ErrorCode::CoefficientBlowup: return MVSDE_ERR_COEFFICIENT_BLOWUP;
    case ErrorCode::StateBlowup: return MVSDE_ERR_STATE_BLOWUP;
    case ErrorCode::NotConverged: return MVSDE_ERR_NOT_CONVERGED;
    case ErrorCode::ZeroDenominator: return MVSDE_ERR_ZERO_DENOMINATOR;
    case ErrorCode::IndexOutOfRange: return MVSDE_ERR_INDEX_OUT_OF_RANGE;
    case ErrorCode::DegenerateFit: return MVSDE_ERR_DEGENERATE_FIT;
    case ErrorCode::InvalidProbe: return MVSDE_ERR_INVALID_PROBE;
    case ErrorCode::ConfigError: return MVSDE_ERR_CONFIG;
    case ErrorCode::IoError: return MVSDE_ERR_IO;
  }
  return MVSDE_ERR_INTERNAL;
}

template <class F>
mvsde_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return MVSDE_OK;
  } catch (const mvsde::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MVSDE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MVSDE_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw mvsde::Error(mvsde::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

mvsde_status null_status(const char* what) {
  g_last_error = std::string(what) + " is NULL";
  return MVSDE_ERR_NULL_POINTER;
}

}  // namespace

extern "C" {

const char* mvsde_last_error(void) { return g_last_error.c_str(); }

const char* mvsde_status_name(mvsde_status status) {
  switch (status) {
    case MVSDE_OK: return "ok";
    case MVSDE_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case MVSDE_ERR_NON_FINITE: return "non_finite";
    case MVSDE_ERR_DEGENERATE_SET: return "degenerate_set";
    case MVSDE_ERR_LENGTH_MISMATCH: return "length_mismatch";
    case MVSDE_ERR_MISSING_METADATA: return "missing_metadata";
    case MVSDE_ERR_DIMENSION_MISMATCH: return "dimension_mismatch";
    case MVSDE_ERR_SIZE_MISMATCH: return "size_mismatch";
    case MVSDE_ERR_GRID_MISMATCH: return "grid_mismatch";
    case MVSDE_ERR_COEFFICIENT_BLOWUP: return "coefficient_blowup";
    case MVSDE_ERR_STATE_BLOWUP: return "state_blowup";
    case MVSDE_ERR_NOT_CONVERGED: return "not_converged";
    case MVSDE_ERR_ZERO_DENOMINATOR: return "zero_denominator";
    case MVSDE_ERR_INDEX_OUT_OF_RANGE: return "index_out_of_range";
    case MVSDE_ERR_DEGENERATE_FIT: return "degenerate_fit";
    case MVSDE_ERR_INVALID_PROBE: return "invalid_probe";
    case MVSDE_ERR_CONFIG: return "config_error";
    case MVSDE_ERR_IO: return "io_error";
    case MVSDE_ERR_NULL_POINTER: return "null_pointer";
    case MVSDE_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void mvsde_string_free(char* s) { std::free(s); }

mvsde_status mvsde_operator_create(const char* json, size_t dimension, mvsde_operator** out) {
  if (!json) return null_status("json");
  if (!out) return null_status("out");
  *out = nullptr;
  return guarded([&] {
    mvsde::Json desc;
    try {
      desc = mvsde::Json::parse(json);
    } catch (const mvsde::Json::parse_error& e) {
      mvsde::fail(mvsde::ErrorCode::ConfigError, std::string("operator: invalid JSON: ") + e.what());
    }
    const auto entry = mvsde::operator_from_json(desc, dimension);
    *out = new mvsde_operator{mvsde::make_operator(entry)};
  });
}

void mvsde_operator_destroy(mvsde_operator* op) { delete op; }

size_t mvsde_operator_dimension(const mvsde_operator* op) { return op ? op->op.dimension() : 0; }

mvsde_status mvsde_operator_resolve(const mvsde_operator* op, const double* x, double lambda, double* out) {
  if (!op) return null_status("op");
  if (!x || !out) return null_status("x/out");
  return guarded([&] {
    const std::size_t d = op->op.dimension();
    op->op.resolve_into(std::span<const double>(x, d), lambda, std::span<double>(out, d));
  });
}

mvsde_status mvsde_operator_yosida(const mvsde_operator* op, const double* x, double lambda, double* out) {
  if (!op) return null_status("op");
  if (!x || !out) return null_status("x/out");
  return guarded([&] {
    const std::size_t d = op->op.dimension();
    const auto y = mvsde::yosida(op->op, std::span<const double>(x, d), lambda);
    std::copy(y.begin(), y.end(), out);
  });
}

mvsde_status mvsde_rho_upper(const double* a, size_t na, const double* b, size_t nb, size_t d, double* out) {
  if (!a || !b || !out) return null_status("a/b/out");
  return guarded([&] {
    mvsde::require(d >= 1, mvsde::ErrorCode::InvalidArgument, "dimension must be positive");
    mvsde::EmpiricalMeasure mu(std::vector<double>(a, a + na * d), d);
    mvsde::EmpiricalMeasure nu(std::vector<double>(b, b + nb * d), d);
    *out = mvsde::rho_upper(mu, nu);
  });
}

mvsde_status mvsde_config_load(const char* path, mvsde_config** out) {
  if (!path) return null_status("path");
  if (!out) return null_status("out");
  *out = nullptr;
  return guarded([&] { *out = new mvsde_config{mvsde::load_config_file(path)}; });
}

mvsde_status mvsde_config_parse(const char* json_text, mvsde_config** out) {
  if (!json_text) return null_status("json_text");
  if (!out) return null_status("out");
  *out = nullptr;
  return guarded([&] {
    try {
      *out = new mvsde_config{mvsde::Json::parse(json_text)};
    } catch (const mvsde::Json::parse_error& e) {
      mvsde::fail(mvsde::ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
    }
  });
}

mvsde_status mvsde_config_set(mvsde_config* config, const char* assignment) {
  if (!config) return null_status("config");
  if (!assignment) return null_status("assignment");
  return guarded([&] { mvsde::apply_override(config->raw, assignment); });
}

namespace {

mvsde::Json normalize_or_throw(const mvsde::Json& raw) {
  const auto v = mvsde::validate_config(raw);
  if (!v.ok()) {
    std::string msg;
    for (const auto& e : v.errors) msg += (msg.empty() ? "" : "; ") + (e.path.empty() ? "<root>" : e.path) + ": " + e.message;
    mvsde::fail(mvsde::ErrorCode::ConfigError, msg);
  }
  return v.normalized;
}

}  // namespace

mvsde_status mvsde_config_normalized(const mvsde_config* config, char** out_json) {
  if (!config) return null_status("config");
  if (!out_json) return null_status("out_json");
  *out_json = nullptr;
  return guarded([&] { *out_json = copy_string(mvsde::dump_config(normalize_or_throw(config->raw))); });
}

void mvsde_config_destroy(mvsde_config* config) { delete config; }

mvsde_status mvsde_simulate(const mvsde_config* config, mvsde_trajectory** out) {
  if (!config) return null_status("config");
  if (!out) return null_status("out");
  *out = nullptr;
  return guarded([&] {
    const auto sc = mvsde::build_scenario(normalize_or_throw(config->raw));
    const auto op = mvsde::make_operator(sc.op);
    *out = new mvsde_trajectory{mvsde::simulate(op, sc.coeffs, sc.scheme)};
  });
}

void mvsde_trajectory_destroy(mvsde_trajectory* traj) { delete traj; }

size_t mvsde_trajectory_steps(const mvsde_trajectory* traj) { return traj ? traj->traj.steps() : 0; }
size_t mvsde_trajectory_particles(const mvsde_trajectory* traj) { return traj ? traj->traj.n : 0; }
size_t mvsde_trajectory_dimension(const mvsde_trajectory* traj) { return traj ? traj->traj.d : 0; }

mvsde_status mvsde_trajectory_time(const mvsde_trajectory* traj, size_t grid_index, double* out) {
  if (!traj || !out) return null_status("traj/out");
  return guarded([&] {
    mvsde::require(grid_index < traj->traj.flow.size(), mvsde::ErrorCode::IndexOutOfRange, "grid index");
    *out = traj->traj.grid()[grid_index];
  });
}

mvsde_status mvsde_trajectory_positions(const mvsde_trajectory* traj, size_t grid_index, double* out) {
  if (!traj || !out) return null_status("traj/out");
  return guarded([&] {
    mvsde::require(grid_index < traj->traj.flow.size(), mvsde::ErrorCode::IndexOutOfRange, "grid index");
    const auto x = traj->traj.x(grid_index);
    std::copy(x.begin(), x.end(), out);
  });
}

mvsde_status mvsde_trajectory_constraint(const mvsde_trajectory* traj, size_t grid_index, double* out) {
  if (!traj || !out) return null_status("traj/out");
  return guarded([&] {
    mvsde::require(grid_index < traj->traj.k.size(), mvsde::ErrorCode::IndexOutOfRange, "grid index");
    const auto& k = traj->traj.k[grid_index];
    std::copy(k.begin(), k.end(), out);
  });
}

mvsde_status mvsde_trajectory_second_moments(const mvsde_trajectory* traj, double* out) {
  if (!traj || !out) return null_status("traj/out");
  return guarded([&] {
    const auto m = traj->traj.second_moments();
    std::copy(m.begin(), m.end(), out);
  });
}

mvsde_status mvsde_trajectory_csv(const mvsde_trajectory* traj, char** out_csv) {
  if (!traj || !out_csv) return null_status("traj/out_csv");
  *out_csv = nullptr;
  return guarded([&] { *out_csv = copy_string(mvsde::trajectory_csv(traj->traj)); });
}

mvsde_status mvsde_run(const mvsde_run_options* options, int* exit_code, char** stdout_text, char** stderr_text) {
  if (!options || !options->subcommand) return null_status("options");
  if (!exit_code) return null_status("exit_code");
  if (stdout_text) *stdout_text = nullptr;
  if (stderr_text) *stderr_text = nullptr;
  return guarded([&] {
    mvsde::RunOptions opts;
    if (options->config_path) opts.config_path = options->config_path;
    if (options->out_dir) opts.out_dir = options->out_dir;
    if (options->has_seed) opts.seed = options->seed;
    if (options->threads > 0) opts.threads = options->threads;
    for (size_t i = 0; i < options->override_count; ++i) {
      need(options->overrides, "overrides");
      need(options->overrides[i], "override entry");
      opts.overrides.emplace_back(options->overrides[i]);
    }
    const auto result = mvsde::run_command(options->subcommand, opts);
    *exit_code = result.exit_code;
    if (stdout_text) *stdout_text = copy_string(result.out);
    if (stderr_text) *stderr_text = copy_string(result.err);
  });
}

mvsde_status mvsde_list_scenarios(char** out_text) {
  if (!out_text) return null_status("out_text");
  *out_text = nullptr;
  return guarded([&] {
    std::string s;
    for (const auto& info : mvsde::scenario_catalog()) s += info.name + "\n";
    *out_text = copy_string(s);
  });
}

}  // extern "C"
