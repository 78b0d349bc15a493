#ifndef FLUIDTAIL_H
#define FLUIDTAIL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every entry point.
typedef enum FtStatus {
  FT_STATUS_OK = 0,
  FT_STATUS_NULL_POINTER = 1,
  FT_STATUS_INVALID_PARAM = 2,
  FT_STATUS_UNSTABLE_CHAIN = 3,
  FT_STATUS_UNSTABLE_FLUID = 4,
  FT_STATUS_ASSUMPTION_VIOLATED = 5,
  FT_STATUS_NUMERICAL = 6,
  FT_STATUS_BUFFER_TOO_SMALL = 7,
  FT_STATUS_PANIC = 8,
} FtStatus;

// Opaque model parameters.
typedef struct FtParams FtParams;

// Opaque tail report.
typedef struct FtReport FtReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a parameter handle. Fails with `FT_STATUS_INVALID_PARAM` or
// `FT_STATUS_UNSTABLE_CHAIN` when the values are not admissible.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle pointer.
enum FtStatus ft_params_new(uint32_t c, double lambda, double mu, double r, struct FtParams **out);

// Releases a parameter handle. Null is ignored.
//
// # Safety
// `p` must be null or a handle from [`ft_params_new`] that was not freed yet.
void ft_params_free(struct FtParams *p);

// Writes 1 if the fluid level is stable and 0 otherwise.
//
// # Safety
// `p` must be a live handle and `stable` a valid writable pointer.
enum FtStatus ft_is_stable(const struct FtParams *p, int *stable);

// Writes the stationary probability of background phase `i`.
//
// # Safety
// `p` must be a live handle and `out` a valid writable pointer.
enum FtStatus ft_phase_probability(const struct FtParams *p, uint32_t i, double *out);

// Runs the full tail analysis, with the boundary vector taken from a
// spectral solve truncated at `truncation` phases.
//
// # Safety
// `p` must be a live handle and `out` a valid pointer to writable storage
// for one handle pointer.
enum FtStatus ft_analyze(const struct FtParams *p, uint32_t truncation, struct FtReport **out);

// Releases a report handle. Null is ignored.
//
// # Safety
// `rep` must be null or a handle from [`ft_analyze`] that was not freed yet.
void ft_report_free(struct FtReport *rep);

// Writes the case number: 1, 2 or 3.
//
// # Safety
// `rep` must be a live handle and `out` a valid writable pointer.
enum FtStatus ft_report_case(const struct FtReport *rep, int *out);

// Decay rate of the level density.
//
// # Safety
// `rep` must be a live handle and `out` a valid writable pointer.
enum FtStatus ft_report_alpha_star(const struct FtReport *rep, double *out);

// Left branch point of the kernel discriminant.
//
// # Safety
// `rep` must be a live handle and `out` a valid writable pointer.
enum FtStatus ft_report_alpha1(const struct FtReport *rep, double *out);

// Power of `x` in the density asymptotics.
//
// # Safety
// `rep` must be a live handle and `out` a valid writable pointer.
enum FtStatus ft_report_power(const struct FtReport *rep, double *out);

// Density prefactor for the top lower phase.
//
// # Safety
// `rep` must be a live handle and `out` a valid writable pointer.
enum FtStatus ft_report_prefactor(const struct FtReport *rep, double *out);

// Density prefactor for the marginal level.
//
// # Safety
// `rep` must be a live handle and `out` a valid writable pointer.
enum FtStatus ft_report_marginal_prefactor(const struct FtReport *rep, double *out);

// Ratio of consecutive phase prefactors.
//
// # Safety
// `rep` must be a live handle and `out` a valid writable pointer.
enum FtStatus ft_report_phase_ratio(const struct FtReport *rep, double *out);

// Copies the boundary masses `P(X = 0, Z = i)`, `i < c`, into `buf`.
// `len` receives the number of entries; with a short buffer nothing is
// copied and `FT_STATUS_BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `rep` must be a live handle, `len` a valid writable pointer and `buf`
// valid for `cap` writes (or null when `cap` is 0).
enum FtStatus ft_report_boundary(const struct FtReport *rep,
                                 double *buf,
                                 uintptr_t cap,
                                 uintptr_t *len);

// Returns the message of the last failure on this thread, or null. The
// pointer stays valid until the next failing call on the same thread.
const char *ft_last_error(void);

// Library version as a static NUL-terminated string.
const char *ft_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLUIDTAIL_H */
