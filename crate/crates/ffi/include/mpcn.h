#ifndef MPCN_H
#define MPCN_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum {
  MpcnStatus_Ok = 0,
  MpcnStatus_NullPointer = 1,
  MpcnStatus_InvalidArgument = 2,
  MpcnStatus_DegenerateState = 3,
  MpcnStatus_Unsupported = 4,
  MpcnStatus_RuntimeError = 5,
} MpcnStatus;

/**
 * Opaque handle to a running Markov chain: kernel, current state, RNG.
 */
typedef struct MpcnSampler MpcnSampler;

/**
 * Opaque handle to an unnormalized target density.
 */
typedef struct MpcnTarget MpcnTarget;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static human-readable description of a status code.
 */
const char *mpcn_status_message(MpcnStatus status);

/**
 * Heavy-tailed target `log pi(x) = -(alpha/2) log(1 + ||x||^2)`.
 */
MpcnStatus mpcn_target_student(uintptr_t dim, double alpha, MpcnTarget **out);

/**
 * Isotropic Gaussian target with standard deviation `sigma`.
 */
MpcnStatus mpcn_target_gaussian(uintptr_t dim, double sigma, MpcnTarget **out);

/**
 * Exponential-family target `log pi(x) = -c ||x||^p`.
 */
MpcnStatus mpcn_target_gen_exponential(uintptr_t dim, double c, double p, MpcnTarget **out);

/**
 * Evaluate `log pi(x)`; `x` must point at `len` doubles.
 *
 * # Safety
 * `target` must be a live handle from a `mpcn_target_*` constructor;
 * `x` must be readable for `len` doubles; `out` must be writable.
 */
MpcnStatus mpcn_target_log_density(const MpcnTarget *target,
                                   const double *x,
                                   uintptr_t len,
                                   double *out);

/**
 * Release a target handle. Passing null is a no-op.
 *
 * # Safety
 * `target` must be null or a pointer returned by a `mpcn_target_*`
 * constructor that has not been freed yet.
 */
void mpcn_target_free(MpcnTarget *target);

/**
 * Random-walk Metropolis sampler with Gaussian increments.
 *
 * # Safety
 * See [`mpcn_target_log_density`]; additionally `x0` must hold `len`
 * doubles matching the target dimension.
 */
MpcnStatus mpcn_sampler_new_rwm(const MpcnTarget *target,
                                double step_scale,
                                const double *x0,
                                uintptr_t len,
                                uint64_t seed,
                                uint64_t stream_id,
                                MpcnSampler **out);

/**
 * Preconditioned Crank-Nicolson sampler.
 *
 * # Safety
 * See [`mpcn_sampler_new_rwm`].
 */
MpcnStatus mpcn_sampler_new_pcn(const MpcnTarget *target,
                                double rho,
                                const double *x0,
                                uintptr_t len,
                                uint64_t seed,
                                uint64_t stream_id,
                                MpcnSampler **out);

/**
 * Mixed pCN sampler. `x0` must be nonzero.
 *
 * # Safety
 * See [`mpcn_sampler_new_rwm`].
 */
MpcnStatus mpcn_sampler_new_mpcn(const MpcnTarget *target,
                                 double rho,
                                 const double *x0,
                                 uintptr_t len,
                                 uint64_t seed,
                                 uint64_t stream_id,
                                 MpcnSampler **out);

/**
 * Advance the chain by `n_steps` transitions.
 *
 * # Safety
 * `sampler` must be a live handle from a `mpcn_sampler_new_*` constructor.
 */
MpcnStatus mpcn_sampler_step(MpcnSampler *sampler, uint64_t n_steps);

/**
 * Copy the current state into `out`, which must hold `len == dim` doubles.
 *
 * # Safety
 * `sampler` must be live; `out` must be writable for `len` doubles.
 */
MpcnStatus mpcn_sampler_state(const MpcnSampler *sampler, double *out, uintptr_t len);

/**
 * Fraction of accepted transitions so far (0 before the first step).
 *
 * # Safety
 * `sampler` must be live; `out` must be writable.
 */
MpcnStatus mpcn_sampler_acceptance_rate(const MpcnSampler *sampler, double *out);

/**
 * Release a sampler handle. Passing null is a no-op.
 *
 * # Safety
 * `sampler` must be null or an unfreed pointer from `mpcn_sampler_new_*`.
 */
void mpcn_sampler_free(MpcnSampler *sampler);

/**
 * Log-density of the MpCN proposal kernel `q(x -> y)`.
 *
 * # Safety
 * `x` and `y` must each hold `len` doubles; `out` must be writable.
 */
MpcnStatus mpcn_proposal_log_density(const double *x,
                                     const double *y,
                                     uintptr_t len,
                                     double rho,
                                     double *out);

/**
 * Fill `out` with `n` draws of the MpCN log squared-radius increment law.
 *
 * # Safety
 * `out` must be writable for `n` doubles.
 */
MpcnStatus mpcn_sample_xi(uintptr_t dim,
                          double rho,
                          uint64_t seed,
                          uint64_t stream_id,
                          uintptr_t n,
                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPCN_H */
