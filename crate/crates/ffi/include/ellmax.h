/* C ABI for the ellmax library: limit laws and second-order expansions
 * for maxima of bivariate elliptical triangular arrays. */

#ifndef ELLMAX_H
#define ELLMAX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Coupling-constant kind: 0 = zero, 1 = finite (value used), 2 = infinite.
 */
#define ELLMAX_LAMBDA_ZERO 0

#define ELLMAX_LAMBDA_FINITE 1

#define ELLMAX_LAMBDA_INF 2

/**
 * Rho-rule kind: 0 = constant (param is the value), 1 = one-minus-power
 * (param is the exponent).
 */
#define ELLMAX_RHO_CONSTANT 0

#define ELLMAX_RHO_ONE_MINUS_POWER 1

/**
 * Report format: 0 = CSV, 1 = JSON.
 */
#define ELLMAX_FORMAT_CSV 0

#define ELLMAX_FORMAT_JSON 1

/**
 * Regime labels mirrored as C enum values.
 */
typedef enum EllmaxRegime {
  Interior = 0,
  BoundaryNear = 1,
  BoundaryFarY = 2,
  BoundaryFarX = 3,
  ExteriorBoth = 4,
  ExteriorYFar = 5,
  ExteriorXFar = 6,
  LambdaZero = 7,
  LambdaInf = 8,
} EllmaxRegime;

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum EllmaxStatus {
  Ok = 0,
  /**
   * An argument was outside the mathematical domain.
   */
  ErrDomain = 1,
  /**
   * Adaptive quadrature failed to converge.
   */
  ErrQuadrature = 2,
  /**
   * The norming-constant root was not bracketed.
   */
  ErrRootBracket = 3,
  /**
   * An evaluator was called outside its regime.
   */
  ErrRegime = 4,
  /**
   * The rho rule is inconsistent with its declared limits.
   */
  ErrRule = 5,
  /**
   * A threshold 1 + a_n x left (0, 1).
   */
  ErrThreshold = 6,
  /**
   * Configuration validation failed.
   */
  ErrConfig = 7,
  /**
   * I/O or serialization failure.
   */
  ErrIo = 8,
  /**
   * A required pointer was null.
   */
  ErrNullPointer = 9,
  /**
   * An enum discriminant or UTF-8 string was invalid.
   */
  ErrInvalidArgument = 10,
  /**
   * The library panicked; state is still consistent.
   */
  ErrPanic = 11,
} EllmaxStatus;

/**
 * Opaque radius-model handle.
 */
typedef struct EllmaxModel EllmaxModel;

/**
 * Exact-oracle result.
 */
typedef struct EllmaxOracleResult {
  double joint_cdf;
  double maxima_cdf;
  double log_maxima_cdf;
  double quadrature_error_bound;
} EllmaxOracleResult;

/**
 * Expansion evaluation at one (point, n).
 */
typedef struct EllmaxExpansion {
  double h;
  double bracket;
  double q_term;
  double penalty_term;
  double delta_pred;
} EllmaxExpansion;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the library; static storage, do not free.
 */
const char *ellmax_version(void);

/**
 * Message for the last error on this thread; valid until the next failing
 * call. Do not free.
 */
const char *ellmax_last_error_message(void);

/**
 * Create a Beta(a, b) radius model. On success writes a handle that must be
 * released with `ellmax_model_free`.
 */
enum EllmaxStatus ellmax_model_beta_new(double a, double b, struct EllmaxModel **out);

/**
 * Release a model handle. Null is a no-op.
 *
 * # Safety
 * `model` must be a handle returned by `ellmax_model_beta_new` that has not
 * been freed yet.
 */
void ellmax_model_free(struct EllmaxModel *model);

/**
 * Radius df F(t).
 *
 * # Safety
 * `model` must be a live handle from this library.
 */
enum EllmaxStatus ellmax_model_cdf(const struct EllmaxModel *model, double t, double *out);

/**
 * Survival 1 - F(t), endpoint-accurate.
 *
 * # Safety
 * `model` must be a live handle from this library.
 */
enum EllmaxStatus ellmax_model_survival(const struct EllmaxModel *model, double t, double *out);

/**
 * Auxiliary function A(t) of the second-order condition.
 *
 * # Safety
 * `model` must be a live handle from this library.
 */
enum EllmaxStatus ellmax_model_aux(const struct EllmaxModel *model, double t, double *out);

/**
 * Natural log of the Gamma function, x > 0.
 */
enum EllmaxStatus ellmax_log_gamma(double x, double *out);

/**
 * Regularized incomplete beta I_z(a, b).
 */
enum EllmaxStatus ellmax_reg_inc_beta(double a, double b, double z, double *out);

/**
 * c_alpha = Gamma(alpha+1) sqrt(pi) / Gamma(alpha+3/2).
 */
enum EllmaxStatus ellmax_c_alpha(double alpha, double *out);

/**
 * The angular df psi_alpha(z), clamped outside [-1, 1].
 */
enum EllmaxStatus ellmax_psi_alpha(double alpha, double z, double *out);

/**
 * First-order limit law H_{alpha+1/2, lambda}(x, y); lambda passed as
 * (kind, value) with kind in {ELLMAX_LAMBDA_ZERO, _FINITE, _INF}.
 */
enum EllmaxStatus ellmax_h_limit(double alpha,
                                 int32_t lambda_kind,
                                 double lambda_value,
                                 double x,
                                 double y,
                                 double *out);

/**
 * Classify the regime of (x, y) under lambda; writes an `EllmaxRegime`.
 */
enum EllmaxStatus ellmax_classify_regime(double x,
                                         double y,
                                         int32_t lambda_kind,
                                         double lambda_value,
                                         double boundary_tol,
                                         enum EllmaxRegime *out);

/**
 * Solve the norming constant a_n with 1 - G(1 - a_n) = 1/n.
 *
 * # Safety
 * `model` must be a live handle from this library.
 */
enum EllmaxStatus ellmax_solve_a_n(const struct EllmaxModel *model, uint64_t n, double *out);

/**
 * Marginal tail 1 - G(1 - u); route 0 = angular, 1 = Berman.
 *
 * # Safety
 * `model` must be a live handle from this library.
 */
enum EllmaxStatus ellmax_marginal_g_tail(const struct EllmaxModel *model,
                                         double u,
                                         int32_t route,
                                         double *out);

/**
 * Exact df of the normalized maxima at (x, y) for row size n, under the rho
 * rule (kind, param).
 *
 * # Safety
 * `model` must be a live handle from this library.
 */
enum EllmaxStatus ellmax_maxima_cdf_exact(const struct EllmaxModel *model,
                                          int32_t rho_kind,
                                          double rho_param,
                                          uint64_t n,
                                          double x,
                                          double y,
                                          struct EllmaxOracleResult *out);

/**
 * Second-order expansion at (x, y) for row size n under the rho rule:
 * writes H, the bracket, its Q and penalty parts and the predicted delta.
 *
 * # Safety
 * `model` must be a live handle from this library.
 */
enum EllmaxStatus ellmax_expansion_delta(const struct EllmaxModel *model,
                                         int32_t rho_kind,
                                         double rho_param,
                                         uint64_t n,
                                         double x,
                                         double y,
                                         struct EllmaxExpansion *out);

/**
 * Run a convergence study from a TOML config string and return the rendered
 * report (format 0 = CSV, 1 = JSON) as a newly allocated string; release it
 * with `ellmax_string_free`.
 *
 * # Safety
 * `config_toml` must be a valid NUL-terminated UTF-8 string.
 */
enum EllmaxStatus ellmax_run_study_toml(const char *config_toml, int32_t format, char **out);

/**
 * Release a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must originate from this library and not have been freed.
 */
void ellmax_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ELLMAX_H */
