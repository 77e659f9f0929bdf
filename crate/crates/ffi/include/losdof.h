#ifndef LOSDOF_H
#define LOSDOF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LosdofStatus {
  LOSDOF_STATUS_OK = 0,
  LOSDOF_STATUS_NULL_POINTER = 1,
  LOSDOF_STATUS_INVALID_PARAMETER = 2,
  LOSDOF_STATUS_INDEX_OUT_OF_RANGE = 3,
  LOSDOF_STATUS_DIMENSION_MISMATCH = 4,
  LOSDOF_STATUS_NO_CONVERGENCE = 5,
  LOSDOF_STATUS_NUMERICAL_CHECK = 6,
  LOSDOF_STATUS_INSUFFICIENT_DATA = 7,
  LOSDOF_STATUS_BUFFER_TOO_SMALL = 8,
  LOSDOF_STATUS_PANIC = 99,
} LosdofStatus;

// Which Gram matrix a sampled spectrum belongs to.
typedef enum LosdofMatrix {
  // `nP·HH*` for the line-of-sight channel.
  LOSDOF_MATRIX_LOS_NORMALIZED = 0,
  // `GG*` for the sinc-phase kernel matrix.
  LOSDOF_MATRIX_KERNEL = 1,
  // `H̃H̃*` for the quadratic-phase approximation.
  LOSDOF_MATRIX_PHASE_FACTORED = 2,
} LosdofMatrix;

// Sinc-kernel eigenvalues, traces and Fredholm coefficients.
typedef struct LosdofFredholmTable LosdofFredholmTable;

// Cluster geometry: nodes per cluster, area, distance, wavelength.
typedef struct LosdofScenario LosdofScenario;

// Gram eigenvalues of one random instance, descending.
typedef struct LosdofSpectrum LosdofSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library name and version, NUL-terminated, static storage.
const char *losdof_version(void);

// Length in bytes of the last error message on this thread, excluding the
// terminator.
size_t losdof_last_error_length(void);

// Copies the last error message into `buf` (NUL-terminated, truncated to
// `len - 1` bytes). Returns the number of bytes written before the NUL.
//
// # Safety
// `buf` must be valid for `len` bytes or null.
size_t losdof_last_error_message(char *buf, size_t len);

// # Safety
// `out` must be a valid pointer to a handle slot.
enum LosdofStatus losdof_scenario_new(size_t n,
                                      double area_a,
                                      double dist_d,
                                      double lambda,
                                      struct LosdofScenario **out);

// # Safety
// `scenario` must come from [`losdof_scenario_new`] and not be used
// afterwards. Null is ignored.
void losdof_scenario_free(struct LosdofScenario *scenario);

// Spectral parameter `m = A / (λ d)` and per-node power `P`.
//
// # Safety
// Pointers must be valid.
enum LosdofStatus losdof_scenario_derived(const struct LosdofScenario *scenario,
                                          double *m,
                                          double *p);

// Whether `√A ≤ d ≤ A/λ`.
//
// # Safety
// Pointers must be valid.
enum LosdofStatus losdof_scenario_in_regime(const struct LosdofScenario *scenario, bool *out);

// Samples node positions with `seed` and computes the Gram spectrum of the
// chosen matrix.
//
// # Safety
// Pointers must be valid.
enum LosdofStatus losdof_spectrum_sample(const struct LosdofScenario *scenario,
                                         uint64_t seed,
                                         enum LosdofMatrix matrix,
                                         struct LosdofSpectrum **out);

// # Safety
// `spectrum` must come from [`losdof_spectrum_sample`] and not be used
// afterwards. Null is ignored.
void losdof_spectrum_free(struct LosdofSpectrum *spectrum);

// # Safety
// Pointers must be valid.
enum LosdofStatus losdof_spectrum_len(const struct LosdofSpectrum *spectrum, size_t *out);

// Copies the eigenvalues, descending, into `buf[0..len]`.
//
// # Safety
// `buf` must be valid for `len` doubles.
enum LosdofStatus losdof_spectrum_eigenvalues(const struct LosdofSpectrum *spectrum,
                                              double *buf,
                                              size_t len);

// `Σ ln(1 + λ_k)` in nats.
//
// # Safety
// Pointers must be valid.
enum LosdofStatus losdof_spectrum_log_det(const struct LosdofSpectrum *spectrum, double *out);

// Number of eigenvalues at or above `threshold`.
//
// # Safety
// Pointers must be valid.
enum LosdofStatus losdof_spectrum_effective_dof(const struct LosdofSpectrum *spectrum,
                                                double threshold,
                                                size_t *out);

// Builds the table for bandwidth `m` with `d_0..d_{k_max}` and
// `A_1..A_{max(k_max, 1)}`. `quadrature_n = 0` selects the default rule.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum LosdofStatus losdof_fredholm_table_new(double m,
                                            size_t quadrature_n,
                                            size_t k_max,
                                            struct LosdofFredholmTable **out);

// # Safety
// `table` must come from [`losdof_fredholm_table_new`] and not be used
// afterwards. Null is ignored.
void losdof_fredholm_table_free(struct LosdofFredholmTable *table);

// Number of operator eigenvalue estimates (the quadrature size).
//
// # Safety
// Pointers must be valid.
enum LosdofStatus losdof_fredholm_mu_len(const struct LosdofFredholmTable *table, size_t *out);

// Copies the operator eigenvalues, descending.
//
// # Safety
// `buf` must be valid for `len` doubles.
enum LosdofStatus losdof_fredholm_mu(const struct LosdofFredholmTable *table,
                                     double *buf,
                                     size_t len);

// Iterated trace `A_p`, `p ≥ 1`.
//
// # Safety
// Pointers must be valid.
enum LosdofStatus losdof_fredholm_trace(const struct LosdofFredholmTable *table,
                                        size_t p,
                                        double *out);

// Fredholm coefficient `d_k`.
//
// # Safety
// Pointers must be valid.
enum LosdofStatus losdof_fredholm_dk(const struct LosdofFredholmTable *table,
                                     size_t k,
                                     double *out);

// `E[det(G_k G_k*)] = (k!)² m^{-k} d_k`.
//
// # Safety
// Pointers must be valid.
enum LosdofStatus losdof_fredholm_expected_subdeterminant(const struct LosdofFredholmTable *table,
                                                          size_t k,
                                                          double *out);

// Fitted decay `μ_k ≤ exp(-δ (k - c m))`. Fails with
// `LOSDOF_STATUS_INSUFFICIENT_DATA` when the spectrum had no usable tail.
//
// # Safety
// Pointers must be valid.
enum LosdofStatus losdof_fredholm_decay(const struct LosdofFredholmTable *table,
                                        double *c,
                                        double *delta);

// Monte Carlo check of the subdeterminant identity at order `k`.
//
// # Safety
// Pointers must be valid.
enum LosdofStatus losdof_identity_check(const struct LosdofFredholmTable *table,
                                        size_t k,
                                        size_t trials,
                                        uint64_t seed,
                                        double *mean,
                                        double *std_error,
                                        double *z_score);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOSDOF_H */
