//! C ABI over the ellmax core: opaque model handles, status codes, and a
//! string-based study entry point so other languages can bind without
//! understanding Rust types.
//!
//! Conventions: every fallible call returns an [`EllmaxStatus`]; outputs go
//! through pointers and are written only on `Ok`. The last error message is
//! kept per thread and read back with `ellmax_last_error_message`. Strings
//! returned by the library must be released with `ellmax_string_free`,
//! models with `ellmax_model_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ellmax::study::{emit_report, run_convergence_study, ReportFormat, StudyConfig};
use ellmax::{
    classify_regime, h_limit, maxima_cdf_exact, solve_a_n, Error, Lambda, QuadratureSpec,
    RadialModel, RegimeLabel, RhoRule,
};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllmaxStatus {
    Ok = 0,
    /// An argument was outside the mathematical domain.
    ErrDomain = 1,
    /// Adaptive quadrature failed to converge.
    ErrQuadrature = 2,
    /// The norming-constant root was not bracketed.
    ErrRootBracket = 3,
    /// An evaluator was called outside its regime.
    ErrRegime = 4,
    /// The rho rule is inconsistent with its declared limits.
    ErrRule = 5,
    /// A threshold 1 + a_n x left (0, 1).
    ErrThreshold = 6,
    /// Configuration validation failed.
    ErrConfig = 7,
    /// I/O or serialization failure.
    ErrIo = 8,
    /// A required pointer was null.
    ErrNullPointer = 9,
    /// An enum discriminant or UTF-8 string was invalid.
    ErrInvalidArgument = 10,
    /// The library panicked; state is still consistent.
    ErrPanic = 11,
}

/// Regime labels mirrored as C enum values.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllmaxRegime {
    Interior = 0,
    BoundaryNear = 1,
    BoundaryFarY = 2,
    BoundaryFarX = 3,
    ExteriorBoth = 4,
    ExteriorYFar = 5,
    ExteriorXFar = 6,
    LambdaZero = 7,
    LambdaInf = 8,
}

/// Coupling-constant kind: 0 = zero, 1 = finite (value used), 2 = infinite.
pub const ELLMAX_LAMBDA_ZERO: i32 = 0;
pub const ELLMAX_LAMBDA_FINITE: i32 = 1;
pub const ELLMAX_LAMBDA_INF: i32 = 2;

/// Rho-rule kind: 0 = constant (param is the value), 1 = one-minus-power
/// (param is the exponent).
pub const ELLMAX_RHO_CONSTANT: i32 = 0;
pub const ELLMAX_RHO_ONE_MINUS_POWER: i32 = 1;

/// Report format: 0 = CSV, 1 = JSON.
pub const ELLMAX_FORMAT_CSV: i32 = 0;
pub const ELLMAX_FORMAT_JSON: i32 = 1;

/// Opaque radius-model handle.
pub struct EllmaxModel {
    inner: RadialModel,
}

/// Exact-oracle result.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllmaxOracleResult {
    pub joint_cdf: f64,
    pub maxima_cdf: f64,
    pub log_maxima_cdf: f64,
    pub quadrature_error_bound: f64,
}

/// Expansion evaluation at one (point, n).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllmaxExpansion {
    pub h: f64,
    pub bracket: f64,
    pub q_term: f64,
    pub penalty_term: f64,
    pub delta_pred: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> EllmaxStatus {
    match err {
        Error::Domain(_) => EllmaxStatus::ErrDomain,
        Error::QuadratureNonConvergence { .. } => EllmaxStatus::ErrQuadrature,
        Error::RootNotBracketed(_) => EllmaxStatus::ErrRootBracket,
        Error::RegimeMismatch { .. } | Error::AmbiguousBoundary { .. } => EllmaxStatus::ErrRegime,
        Error::InconsistentRule(_) => EllmaxStatus::ErrRule,
        Error::ThresholdOutOfRange { .. } => EllmaxStatus::ErrThreshold,
        Error::InvalidConfig { .. } => EllmaxStatus::ErrConfig,
        Error::Io(_) => EllmaxStatus::ErrIo,
    }
}

fn run<T>(
    out: *mut T,
    body: impl FnOnce() -> Result<T, Error> + std::panic::UnwindSafe,
) -> EllmaxStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return EllmaxStatus::ErrNullPointer;
    }
    match catch_unwind(body) {
        Ok(Ok(v)) => {
            unsafe { out.write(v) };
            EllmaxStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside ellmax");
            EllmaxStatus::ErrPanic
        }
    }
}

fn decode_lambda(kind: i32, value: f64) -> Result<Lambda, Error> {
    match kind {
        ELLMAX_LAMBDA_ZERO => Ok(Lambda::Zero),
        ELLMAX_LAMBDA_FINITE => Lambda::finite(value),
        ELLMAX_LAMBDA_INF => Ok(Lambda::Infinite),
        other => Err(Error::domain(format!("unknown lambda kind {other}"))),
    }
}

fn decode_rho(kind: i32, param: f64) -> Result<RhoRule, Error> {
    match kind {
        ELLMAX_RHO_CONSTANT => Ok(RhoRule::Constant(param)),
        ELLMAX_RHO_ONE_MINUS_POWER => Ok(RhoRule::OneMinusPower { exponent: param }),
        other => Err(Error::domain(format!("unknown rho kind {other}"))),
    }
}

/// Version string of the library; static storage, do not free.
#[no_mangle]
pub extern "C" fn ellmax_version() -> *const c_char {
    concat!("ellmax ", env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the last error on this thread; valid until the next failing
/// call. Do not free.
#[no_mangle]
pub extern "C" fn ellmax_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Create a Beta(a, b) radius model. On success writes a handle that must be
/// released with `ellmax_model_free`.
#[no_mangle]
pub extern "C" fn ellmax_model_beta_new(
    a: f64,
    b: f64,
    out: *mut *mut EllmaxModel,
) -> EllmaxStatus {
    run(out, || {
        let model = ellmax::beta_radius(a, b)?;
        Ok(Box::into_raw(Box::new(EllmaxModel { inner: model })))
    })
}

/// Release a model handle. Null is a no-op.
///
/// # Safety
/// `model` must be a handle returned by `ellmax_model_beta_new` that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn ellmax_model_free(model: *mut EllmaxModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn model_ref<'a>(model: *const EllmaxModel) -> Result<&'a RadialModel, Error> {
    model
        .as_ref()
        .map(|m| &m.inner)
        .ok_or_else(|| Error::domain("model handle is null".to_string()))
}

/// Radius df F(t).
///
/// # Safety
/// `model` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ellmax_model_cdf(
    model: *const EllmaxModel,
    t: f64,
    out: *mut f64,
) -> EllmaxStatus {
    run(out, AssertUnwindSafe(|| Ok(model_ref(model)?.cdf(t))))
}

/// Survival 1 - F(t), endpoint-accurate.
///
/// # Safety
/// `model` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ellmax_model_survival(
    model: *const EllmaxModel,
    t: f64,
    out: *mut f64,
) -> EllmaxStatus {
    run(out, AssertUnwindSafe(|| Ok(model_ref(model)?.survival(t))))
}

/// Auxiliary function A(t) of the second-order condition.
///
/// # Safety
/// `model` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ellmax_model_aux(
    model: *const EllmaxModel,
    t: f64,
    out: *mut f64,
) -> EllmaxStatus {
    run(out, AssertUnwindSafe(|| Ok(model_ref(model)?.aux(t))))
}

/// Natural log of the Gamma function, x > 0.
#[no_mangle]
pub extern "C" fn ellmax_log_gamma(x: f64, out: *mut f64) -> EllmaxStatus {
    run(out, || ellmax::log_gamma(x))
}

/// Regularized incomplete beta I_z(a, b).
#[no_mangle]
pub extern "C" fn ellmax_reg_inc_beta(a: f64, b: f64, z: f64, out: *mut f64) -> EllmaxStatus {
    run(out, || ellmax::reg_inc_beta(a, b, z))
}

/// c_alpha = Gamma(alpha+1) sqrt(pi) / Gamma(alpha+3/2).
#[no_mangle]
pub extern "C" fn ellmax_c_alpha(alpha: f64, out: *mut f64) -> EllmaxStatus {
    run(out, || ellmax::c_alpha(alpha))
}

/// The angular df psi_alpha(z), clamped outside [-1, 1].
#[no_mangle]
pub extern "C" fn ellmax_psi_alpha(alpha: f64, z: f64, out: *mut f64) -> EllmaxStatus {
    run(out, || ellmax::psi_alpha(alpha, z))
}

/// First-order limit law H_{alpha+1/2, lambda}(x, y); lambda passed as
/// (kind, value) with kind in {ELLMAX_LAMBDA_ZERO, _FINITE, _INF}.
#[no_mangle]
pub extern "C" fn ellmax_h_limit(
    alpha: f64,
    lambda_kind: i32,
    lambda_value: f64,
    x: f64,
    y: f64,
    out: *mut f64,
) -> EllmaxStatus {
    run(out, || {
        let lambda = decode_lambda(lambda_kind, lambda_value)?;
        h_limit(alpha, &lambda, x, y)
    })
}

/// Classify the regime of (x, y) under lambda; writes an `EllmaxRegime`.
#[no_mangle]
pub extern "C" fn ellmax_classify_regime(
    x: f64,
    y: f64,
    lambda_kind: i32,
    lambda_value: f64,
    boundary_tol: f64,
    out: *mut EllmaxRegime,
) -> EllmaxStatus {
    run(out, || {
        let lambda = decode_lambda(lambda_kind, lambda_value)?;
        let regime = classify_regime(x, y, &lambda, boundary_tol)?;
        Ok(match regime.label {
            RegimeLabel::Interior => EllmaxRegime::Interior,
            RegimeLabel::BoundaryNear(_) => EllmaxRegime::BoundaryNear,
            RegimeLabel::BoundaryFarY => EllmaxRegime::BoundaryFarY,
            RegimeLabel::BoundaryFarX => EllmaxRegime::BoundaryFarX,
            RegimeLabel::ExteriorBoth => EllmaxRegime::ExteriorBoth,
            RegimeLabel::ExteriorYFar => EllmaxRegime::ExteriorYFar,
            RegimeLabel::ExteriorXFar => EllmaxRegime::ExteriorXFar,
            RegimeLabel::LambdaZero => EllmaxRegime::LambdaZero,
            RegimeLabel::LambdaInf => EllmaxRegime::LambdaInf,
        })
    })
}

/// Solve the norming constant a_n with 1 - G(1 - a_n) = 1/n.
///
/// # Safety
/// `model` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ellmax_solve_a_n(
    model: *const EllmaxModel,
    n: u64,
    out: *mut f64,
) -> EllmaxStatus {
    run(
        out,
        AssertUnwindSafe(|| solve_a_n(model_ref(model)?, n, &QuadratureSpec::default())),
    )
}

/// Marginal tail 1 - G(1 - u); route 0 = angular, 1 = Berman.
///
/// # Safety
/// `model` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ellmax_marginal_g_tail(
    model: *const EllmaxModel,
    u: f64,
    route: i32,
    out: *mut f64,
) -> EllmaxStatus {
    run(
        out,
        AssertUnwindSafe(|| {
            let m = model_ref(model)?;
            let spec = QuadratureSpec::default();
            match route {
                0 => ellmax::marginal_g_tail_angular(m, u, &spec),
                1 => ellmax::marginal_g_tail_berman(m, u, &spec),
                other => Err(Error::domain(format!("unknown route {other}"))),
            }
        }),
    )
}

/// Exact df of the normalized maxima at (x, y) for row size n, under the rho
/// rule (kind, param).
///
/// # Safety
/// `model` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ellmax_maxima_cdf_exact(
    model: *const EllmaxModel,
    rho_kind: i32,
    rho_param: f64,
    n: u64,
    x: f64,
    y: f64,
    out: *mut EllmaxOracleResult,
) -> EllmaxStatus {
    run(
        out,
        AssertUnwindSafe(|| {
            let m = model_ref(model)?;
            let rule = decode_rho(rho_kind, rho_param)?;
            let r = maxima_cdf_exact(m, &rule, n, x, y, &QuadratureSpec::default())?;
            Ok(EllmaxOracleResult {
                joint_cdf: r.joint_cdf,
                maxima_cdf: r.maxima_cdf,
                log_maxima_cdf: r.log_maxima_cdf,
                quadrature_error_bound: r.quadrature_error_bound,
            })
        }),
    )
}

/// Second-order expansion at (x, y) for row size n under the rho rule:
/// writes H, the bracket, its Q and penalty parts and the predicted delta.
///
/// # Safety
/// `model` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ellmax_expansion_delta(
    model: *const EllmaxModel,
    rho_kind: i32,
    rho_param: f64,
    n: u64,
    x: f64,
    y: f64,
    out: *mut EllmaxExpansion,
) -> EllmaxStatus {
    run(
        out,
        AssertUnwindSafe(|| {
            let m = model_ref(model)?;
            let rule = decode_rho(rho_kind, rho_param)?;
            let spec = QuadratureSpec::default();
            let seq = ellmax::build_sequence(m, &rule, n, &spec)?;
            let inputs = ellmax::ExpansionInputs::from_sequence(
                m,
                &seq,
                x,
                y,
                ellmax::DEFAULT_BOUNDARY_TOL,
                &spec,
            )?;
            let r = ellmax::expansion_result(&inputs)?;
            Ok(EllmaxExpansion {
                h: r.h,
                bracket: r.bracket,
                q_term: r.q_term,
                penalty_term: r.penalty_term,
                delta_pred: r.delta_pred,
            })
        }),
    )
}

/// Run a convergence study from a TOML config string and return the rendered
/// report (format 0 = CSV, 1 = JSON) as a newly allocated string; release it
/// with `ellmax_string_free`.
///
/// # Safety
/// `config_toml` must be a valid NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn ellmax_run_study_toml(
    config_toml: *const c_char,
    format: i32,
    out: *mut *mut c_char,
) -> EllmaxStatus {
    run(
        out,
        AssertUnwindSafe(|| {
            if config_toml.is_null() {
                return Err(Error::domain("config string is null".to_string()));
            }
            let text = CStr::from_ptr(config_toml)
                .to_str()
                .map_err(|e| Error::config("<config>", format!("invalid UTF-8: {e}")))?;
            let fmt = match format {
                ELLMAX_FORMAT_CSV => ReportFormat::Csv,
                ELLMAX_FORMAT_JSON => ReportFormat::Json,
                other => return Err(Error::domain(format!("unknown format {other}"))),
            };
            let cfg = StudyConfig::from_toml(text)?;
            let report = run_convergence_study(&cfg)?;
            let rendered = emit_report(&report, fmt)?;
            let c = CString::new(rendered)
                .map_err(|e| Error::Io(format!("report contained NUL: {e}")))?;
            Ok(c.into_raw())
        }),
    )
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must originate from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ellmax_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_paths_and_error_message() {
        let mut out = 0.0f64;
        assert_eq!(ellmax_log_gamma(5.0, &mut out), EllmaxStatus::Ok);
        assert!((out - 24.0f64.ln()).abs() < 1e-12);
        assert_eq!(ellmax_log_gamma(-1.0, &mut out), EllmaxStatus::ErrDomain);
        let msg = unsafe { CStr::from_ptr(ellmax_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("log_gamma"));
        assert_eq!(
            ellmax_log_gamma(1.0, std::ptr::null_mut()),
            EllmaxStatus::ErrNullPointer
        );
    }

    #[test]
    fn model_lifecycle() {
        let mut model: *mut EllmaxModel = std::ptr::null_mut();
        assert_eq!(
            ellmax_model_beta_new(2.0, 1.0, &mut model),
            EllmaxStatus::Ok
        );
        let mut v = 0.0f64;
        unsafe {
            assert_eq!(ellmax_model_cdf(model, 0.5, &mut v), EllmaxStatus::Ok);
            assert!((v - 0.25).abs() < 1e-14);
            assert_eq!(ellmax_model_survival(model, 0.5, &mut v), EllmaxStatus::Ok);
            assert!((v - 0.75).abs() < 1e-14);
            ellmax_model_free(model);
        }
        let mut bad: *mut EllmaxModel = std::ptr::null_mut();
        assert_eq!(
            ellmax_model_beta_new(-1.0, 1.0, &mut bad),
            EllmaxStatus::ErrDomain
        );
        assert!(bad.is_null());
    }
}
