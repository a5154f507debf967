#ifndef NORDHEIM_H
#define NORDHEIM_H

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

// Result codes. `Ok` is zero; everything else sets the last error.
typedef enum NhStatus {
  NH_STATUS_OK = 0,
  NH_STATUS_NULL_POINTER = 1,
  // Argument outside the mathematical domain.
  NH_STATUS_DOMAIN = 2,
  NH_STATUS_CONFIG = 3,
  NH_STATUS_NUMERIC = 4,
  NH_STATUS_CONSISTENCY = 5,
  NH_STATUS_PARSE = 6,
  NH_STATUS_STIFF = 7,
  NH_STATUS_IO = 8,
  // Output buffer shorter than required; the needed length is reported.
  NH_STATUS_BUFFER_TOO_SMALL = 9,
  NH_STATUS_PANIC = 10,
} NhStatus;

// Integration rule of the collision table's quadratic term.
typedef enum NhJRule {
  NH_J_RULE_LUMPED = 0,
  NH_J_RULE_EXACT = 1,
} NhJRule;

// Energy grid `0 = x_0 < ... < x_n`.
typedef struct NhGrid NhGrid;

// Node masses on a grid; node 0 is the condensate.
typedef struct NhMeasure NhMeasure;

// Collision kernel with its quadrature.
typedef struct NhModel NhModel;

// Precomputed collision weights for one model and grid.
typedef struct NhTable NhTable;

// Continuum equilibrium with given mass and energy.
typedef struct NhEquilibrium {
  double temp_ratio;
  double a_coef;
  double kappa;
  double n0;
  double entropy;
} NhEquilibrium;

// Condensation constants for the eta model.
typedef struct NhBecConstants {
  double alpha;
  double a_star;
  double b_star;
  double c_star;
  double eps_admissible_max;
} NhBecConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *nh_last_error(void);

// Clears this thread's last error.
void nh_clear_last_error(void);

// Library version as a static NUL-terminated string.
const char *nh_version(void);

// Uniform grid with `n` cells on `[0, x_max]`.
//
// # Safety
// `out` must be valid for a pointer write.
enum NhStatus nh_grid_linear(size_t n, double x_max, struct NhGrid **out);

// Grid whose cell widths grow by `ratio`.
//
// # Safety
// `out` must be valid for a pointer write.
enum NhStatus nh_grid_geometric(size_t n, double x_max, double ratio, struct NhGrid **out);

// Number of nodes, `n + 1`.
//
// # Safety
// `grid` must be a live handle; `out` valid for a write.
enum NhStatus nh_grid_len(const struct NhGrid *grid, size_t *out);

// Copies the node energies into `buf`.
//
// # Safety
// `grid` must be a live handle; `buf` valid for `len` writes; `needed` NULL
// or valid for a write.
enum NhStatus nh_grid_nodes(const struct NhGrid *grid, double *buf, size_t len, size_t *needed);

// # Safety
// `grid` must be NULL or a handle not yet freed.
void nh_grid_free(struct NhGrid *grid);

// Measure with the given node masses, one per grid node.
//
// # Safety
// `grid` must be a live handle, `masses` valid for `len` reads, `out` valid
// for a pointer write.
enum NhStatus nh_measure_new(const struct NhGrid *grid,
                             const double *masses,
                             size_t len,
                             struct NhMeasure **out);

// Equilibrium with mass `n` and energy `e` projected onto the grid.
//
// # Safety
// `grid` must be a live handle, `out` valid for a pointer write.
enum NhStatus nh_measure_equilibrium(const struct NhGrid *grid,
                                     double n,
                                     double e,
                                     struct NhMeasure **out);

// Two-plateau low temperature data; `eps <= 0` uses the admissible scale.
//
// # Safety
// `grid` must be a live handle, `out` valid for a pointer write.
enum NhStatus nh_measure_two_bump(const struct NhGrid *grid,
                                  double n,
                                  double e,
                                  double b0,
                                  double eta,
                                  double eps,
                                  struct NhMeasure **out);

// Mass, energy, entropy of the regular part and condensate mass.
//
// # Safety
// `m` must be a live handle; each out-pointer NULL or valid for a write.
enum NhStatus nh_measure_moments(const struct NhMeasure *m,
                                 double *mass,
                                 double *energy,
                                 double *entropy,
                                 double *condensate);

// Copies the node masses into `buf`.
//
// # Safety
// `m` must be a live handle; `buf` valid for `len` writes; `needed` NULL or
// valid for a write.
enum NhStatus nh_measure_masses(const struct NhMeasure *m, double *buf, size_t len, size_t *needed);

// # Safety
// `m` must be NULL or a handle not yet freed.
void nh_measure_free(struct NhMeasure *m);

// Hard-sphere kernel, `Phi = 1`.
//
// # Safety
// `out` must be valid for a pointer write.
enum NhStatus nh_model_hard_sphere(struct NhModel **out);

// Eta model with `0 < b0 <= 1/2` and `0 <= eta < 1`.
//
// # Safety
// `out` must be valid for a pointer write.
enum NhStatus nh_model_eta(double b0, double eta, struct NhModel **out);

// Collision weight `W(x, y, z)`.
//
// # Safety
// `model` must be a live handle, `out` valid for a write.
enum NhStatus nh_kernel_w(const struct NhModel *model, double x, double y, double z, double *out);

// # Safety
// `model` must be NULL or a handle not yet freed.
void nh_model_free(struct NhModel *model);

// Builds the stored collision table of `model` on `grid`.
//
// # Safety
// `model` and `grid` must be live handles, `out` valid for a pointer write.
enum NhStatus nh_table_build(const struct NhModel *model,
                             const struct NhGrid *grid,
                             enum NhJRule j_rule,
                             struct NhTable **out);

// # Safety
// `table` must be NULL or a handle not yet freed.
void nh_table_free(struct NhTable *table);

// Mass rates `dm_i/dt` of `m`.
//
// # Safety
// `table` and `m` must be live handles on the same grid; `buf` valid for
// `len` writes; `needed` NULL or valid for a write.
enum NhStatus nh_rhs(const struct NhTable *table,
                     const struct NhMeasure *m,
                     double *buf,
                     size_t len,
                     size_t *needed);

// Integrates `m` with classical RK4 up to `t_end` and returns the final state.
//
// # Safety
// `table` and `m` must be live handles on the same grid, `out` valid for a
// pointer write.
enum NhStatus nh_run(const struct NhTable *table,
                     const struct NhMeasure *m,
                     double dt,
                     double t_end,
                     struct NhMeasure **out);

// Continuum equilibrium with mass `n` and energy `e`.
//
// # Safety
// `out` must be valid for a write.
enum NhStatus nh_equilibrium(double n, double e, struct NhEquilibrium *out);

// Condensation constants; requires `0 <= eta < 1/4`.
//
// # Safety
// `out` must be valid for a write.
enum NhStatus nh_bec_constants(double n,
                               double e,
                               double b0,
                               double eta,
                               struct NhBecConstants *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NORDHEIM_H */
