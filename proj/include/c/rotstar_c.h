/* C interface to the rotstar library. All handles are opaque; every call that
 * can fail returns an rs_status and leaves a message retrievable with
 * rs_last_error() on the calling thread. Strings returned through char** are
 * owned by the caller and released with rs_free_string(). */
#ifndef ROTSTAR_C_H
#define ROTSTAR_C_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rs_status {
    RS_OK = 0,
    RS_DOMAIN = 1,
    RS_CONFIG = 2,
    RS_CONVERGENCE = 3,
    RS_VERIFICATION = 4,
    RS_IO = 5,
    RS_REGIME = 6,
    RS_SOLVER = 7,
    RS_INTERNAL = 99
} rs_status;

typedef struct rs_eos rs_eos;
typedef struct rs_solution rs_solution;
typedef struct rs_field rs_field;

const char* rs_version(void);
const char* rs_last_error(void);
/* Pipeline stage that raised the last error ("config", "eos", "solver", ...), or "". */
const char* rs_last_error_stage(void);
void rs_free_string(char* s);

/* Runs a named command with a JSON configuration. grid_level < 0 keeps the
 * configured grid. out_dir == NULL uses output.directory from the config.
 * *passed is set to 0 when a verification check fails (status stays RS_OK). */
rs_status rs_run(const char* command, const char* config_json, const char* out_dir, int grid_level,
                 char** report_json, char** summary, int* passed);

/* Validates a configuration; on success returns its canonical form. */
rs_status rs_config_canonical(const char* config_json, char** canonical);

/* Equation of state from gamma, A and the speed of light (no upsilon series). */
rs_status rs_eos_create(double gamma, double A_const, double c_light, rs_eos** out);
rs_status rs_eos_pressure(const rs_eos* e, double u, double* P);
rs_status rs_eos_density(const rs_eos* e, double u, double* rho);
rs_status rs_eos_enthalpy_of_density(const rs_eos* e, double rho, double* u);
void rs_eos_free(rs_eos* e);

/* Solves the star described by the eos and star blocks of a configuration. */
rs_status rs_solve(const char* config_json, rs_solution** out);
rs_status rs_solution_report(const rs_solution* s, char** report_json);
rs_status rs_solution_mass(const rs_solution* s, double* M, double* J);
/* Names: W Y X V w F y q K u_N rho_N Phi_N. */
rs_status rs_solution_field(const rs_solution* s, const char* name, rs_field** out);
void rs_solution_free(rs_solution* s);

rs_status rs_field_eval(const rs_field* f, double varpi, double z, double* value);
rs_status rs_field_write_binary(const rs_field* f, const char* path);
rs_status rs_field_read_binary(const char* path, rs_field** out);
void rs_field_free(rs_field* f);

#ifdef __cplusplus
}
#endif

#endif
