#ifndef MVSDE_MVSDE_H
#define MVSDE_MVSDE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MVSDE_BUILDING_LIBRARY)
#    define MVSDE_API __declspec(dllexport)
#  else
#    define MVSDE_API __declspec(dllimport)
#  endif
#else
#  define MVSDE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mvsde_status {
  MVSDE_OK = 0,
  MVSDE_ERR_INVALID_ARGUMENT,
  MVSDE_ERR_NON_FINITE,
  MVSDE_ERR_DEGENERATE_SET,
  MVSDE_ERR_LENGTH_MISMATCH,
  MVSDE_ERR_MISSING_METADATA,
  MVSDE_ERR_DIMENSION_MISMATCH,
  MVSDE_ERR_SIZE_MISMATCH,
  MVSDE_ERR_GRID_MISMATCH,
  MVSDE_ERR_COEFFICIENT_BLOWUP,
  MVSDE_ERR_STATE_BLOWUP,
  MVSDE_ERR_NOT_CONVERGED,
  MVSDE_ERR_ZERO_DENOMINATOR,
  MVSDE_ERR_INDEX_OUT_OF_RANGE,
  MVSDE_ERR_DEGENERATE_FIT,
  MVSDE_ERR_INVALID_PROBE,
  MVSDE_ERR_CONFIG,
  MVSDE_ERR_IO,
  MVSDE_ERR_NULL_POINTER,
  MVSDE_ERR_INTERNAL
} mvsde_status;

/* Message of the last failing call on this thread; "" if none. */
MVSDE_API const char* mvsde_last_error(void);
MVSDE_API const char* mvsde_status_name(mvsde_status status);

/* Strings returned through char** are owned by the caller. */
MVSDE_API void mvsde_string_free(char* s);

/* Operators. The description is a JSON object such as
   {"kind":"normal_cone_ball","center":[0,0],"radius":1}. */
typedef struct mvsde_operator mvsde_operator;

MVSDE_API mvsde_status mvsde_operator_create(const char* json, size_t dimension, mvsde_operator** out);
MVSDE_API void mvsde_operator_destroy(mvsde_operator* op);
MVSDE_API size_t mvsde_operator_dimension(const mvsde_operator* op);
MVSDE_API mvsde_status mvsde_operator_resolve(const mvsde_operator* op, const double* x, double lambda, double* out);
MVSDE_API mvsde_status mvsde_operator_yosida(const mvsde_operator* op, const double* x, double lambda, double* out);

/* Upper bound on the dual metric between two empirical measures given as
   row-major n x d atom arrays. */
MVSDE_API mvsde_status mvsde_rho_upper(const double* a, size_t na, const double* b, size_t nb, size_t d,
                                       double* out);

/* Configurations. */
typedef struct mvsde_config mvsde_config;

MVSDE_API mvsde_status mvsde_config_load(const char* path, mvsde_config** out);
MVSDE_API mvsde_status mvsde_config_parse(const char* json_text, mvsde_config** out);
/* Applies one "key.path=value" override. */
MVSDE_API mvsde_status mvsde_config_set(mvsde_config* config, const char* assignment);
MVSDE_API mvsde_status mvsde_config_normalized(const mvsde_config* config, char** out_json);
MVSDE_API void mvsde_config_destroy(mvsde_config* config);

/* Trajectories. */
typedef struct mvsde_trajectory mvsde_trajectory;

MVSDE_API mvsde_status mvsde_simulate(const mvsde_config* config, mvsde_trajectory** out);
MVSDE_API void mvsde_trajectory_destroy(mvsde_trajectory* traj);
MVSDE_API size_t mvsde_trajectory_steps(const mvsde_trajectory* traj);
MVSDE_API size_t mvsde_trajectory_particles(const mvsde_trajectory* traj);
MVSDE_API size_t mvsde_trajectory_dimension(const mvsde_trajectory* traj);
MVSDE_API mvsde_status mvsde_trajectory_time(const mvsde_trajectory* traj, size_t grid_index, double* out);
/* Writes particles x dimension values. */
MVSDE_API mvsde_status mvsde_trajectory_positions(const mvsde_trajectory* traj, size_t grid_index, double* out);
MVSDE_API mvsde_status mvsde_trajectory_constraint(const mvsde_trajectory* traj, size_t grid_index, double* out);
/* Writes steps + 1 values. */
MVSDE_API mvsde_status mvsde_trajectory_second_moments(const mvsde_trajectory* traj, double* out);
MVSDE_API mvsde_status mvsde_trajectory_csv(const mvsde_trajectory* traj, char** out_csv);

/* Batch front end. */
typedef struct mvsde_run_options {
  const char* subcommand;
  const char* config_path;  /* may be NULL */
  const char* out_dir;      /* NULL means "." */
  const char* const* overrides;
  size_t override_count;
  int has_seed;
  uint64_t seed;
  unsigned threads;         /* 0 keeps the configured value */
} mvsde_run_options;

/* Runs a subcommand. exit_code follows the CLI convention: 0 success,
   1 check failure, 2 usage or config error, 3 numeric abort. stdout_text and
   stderr_text may be NULL. */
MVSDE_API mvsde_status mvsde_run(const mvsde_run_options* options, int* exit_code, char** stdout_text,
                                 char** stderr_text);

MVSDE_API mvsde_status mvsde_list_scenarios(char** out_text);

#ifdef __cplusplus
}
#endif

#endif
