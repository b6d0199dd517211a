//! Radius distribution models with second-order regular variation metadata,
//! the derived marginal tail of S1, and the Lemma-2/Lemma-3 expansion
//! machinery.
//!
//! A model carries the radius df F (upper endpoint 1), its first-order tail
//! index alpha, second-order index tau <= 0 and auxiliary function A(t). The
//! marginal df G of S1 is never available in closed form; its tail is computed
//! by quadrature along two distinct routes (a Beta-mixture expectation and an
//! angular integral) that double-check each other.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::specfun::{
    beta_fn, c_alpha, integrate, integrate_endpoint_powers, pow_kernel, reg_inc_beta, tau_kernel,
    QuadratureSpec,
};

static NEXT_MODEL_ID: AtomicU64 = AtomicU64::new(1);

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum ModelKind {
    Beta { a: f64, b: f64 },
    Custom { cdf: RealFn, sf: Option<RealFn>, aux: RealFn },
}

/// Key identifying a model in the norming-constant cache. Beta models with
/// equal parameters share entries; custom models are cached per instance.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ModelCacheKey {
    Beta(u64, u64),
    Instance(u64),
}

/// A radius distribution on [0, 1] with declared 2RV tail metadata.
#[derive(Clone)]
pub struct RadialModel {
    kind: ModelKind,
    alpha: f64,
    tau: f64,
    id: u64,
}

impl std::fmt::Debug for RadialModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            ModelKind::Beta { a, b } => write!(f, "RadialModel::Beta({a}, {b})"),
            ModelKind::Custom { .. } => write!(
                f,
                "RadialModel::Custom(alpha={}, tau={})",
                self.alpha, self.tau
            ),
        }
    }
}

/// Beta(a, b) radius: F = I_t(a, b), tail index alpha = b, tau = -1,
/// A(t) = b(a-1) / ((b+1) t).
pub fn beta_radius(a: f64, b: f64) -> Result<RadialModel> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!(
            "beta_radius requires positive parameters, got ({a}, {b})"
        )));
    }
    Ok(RadialModel {
        kind: ModelKind::Beta { a, b },
        alpha: b,
        tau: -1.0,
        id: NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed),
    })
}

impl RadialModel {
    /// User-supplied radius df with declared (alpha, tau, A). The survival
    /// function defaults to 1 - cdf(t), which loses relative precision near
    /// the endpoint; supply it explicitly via [`RadialModel::custom_with_survival`]
    /// when a better form is known.
    pub fn custom(
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        alpha: f64,
        tau: f64,
        aux: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<RadialModel> {
        Self::build_custom(Arc::new(cdf), None, alpha, tau, Arc::new(aux))
    }

    /// Custom model with an endpoint-accurate survival function 1 - F.
    pub fn custom_with_survival(
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        survival: impl Fn(f64) -> f64 + Send + Sync + 'static,
        alpha: f64,
        tau: f64,
        aux: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<RadialModel> {
        Self::build_custom(
            Arc::new(cdf),
            Some(Arc::new(survival)),
            alpha,
            tau,
            Arc::new(aux),
        )
    }

    fn build_custom(
        cdf: RealFn,
        sf: Option<RealFn>,
        alpha: f64,
        tau: f64,
        aux: RealFn,
    ) -> Result<RadialModel> {
        if !(alpha > 0.0) {
            return Err(Error::domain(format!(
                "custom model requires alpha > 0, got {alpha}"
            )));
        }
        if !(tau <= 0.0) {
            return Err(Error::domain(format!(
                "custom model requires tau <= 0, got {tau}"
            )));
        }
        Ok(RadialModel {
            kind: ModelKind::Custom { cdf, sf, aux },
            alpha,
            tau,
            id: NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Upper endpoint of the radius df (fixed at 1).
    pub fn endpoint(&self) -> f64 {
        1.0
    }

    pub fn cache_key(&self) -> ModelCacheKey {
        match &self.kind {
            ModelKind::Beta { a, b } => ModelCacheKey::Beta(a.to_bits(), b.to_bits()),
            ModelKind::Custom { .. } => ModelCacheKey::Instance(self.id),
        }
    }

    /// Beta parameters when this is a Beta-radius model.
    pub fn beta_params(&self) -> Option<(f64, f64)> {
        match self.kind {
            ModelKind::Beta { a, b } => Some((a, b)),
            ModelKind::Custom { .. } => None,
        }
    }

    /// F(t), clamped to [0, 1] outside the support.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        match &self.kind {
            ModelKind::Beta { a, b } => {
                if *b == 1.0 {
                    (*a * t.ln()).exp()
                } else if *a == 1.0 {
                    -(*b * (-t).ln_1p()).exp_m1()
                } else {
                    reg_inc_beta(*a, *b, t).expect("validated parameters")
                }
            }
            ModelKind::Custom { cdf, .. } => cdf(t).clamp(0.0, 1.0),
        }
    }

    /// Survival 1 - F(t), kept accurate near the endpoint (no 1 - cdf
    /// cancellation for Beta models).
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        if t >= 1.0 {
            return 0.0;
        }
        match &self.kind {
            ModelKind::Beta { a, b } => {
                if *b == 1.0 {
                    -(*a * t.ln()).exp_m1()
                } else if *a == 1.0 {
                    (*b * (-t).ln_1p()).exp()
                } else {
                    reg_inc_beta(*b, *a, 1.0 - t).expect("validated parameters")
                }
            }
            ModelKind::Custom { cdf, sf, .. } => match sf {
                Some(s) => s(t).clamp(0.0, 1.0),
                None => (1.0 - cdf(t)).clamp(0.0, 1.0),
            },
        }
    }

    /// The regularly varying tail T(t) = 1 - F(1 - 1/t), t >= 1.
    pub fn tail(&self, t: f64) -> Result<f64> {
        if !(t >= 1.0) {
            return Err(Error::domain(format!("tail requires t >= 1, got {t}")));
        }
        Ok(self.survival(1.0 - 1.0 / t))
    }

    /// Auxiliary function A(t) of the second-order condition.
    pub fn aux(&self, t: f64) -> f64 {
        match &self.kind {
            ModelKind::Beta { a, b } => b * (a - 1.0) / ((b + 1.0) * t),
            ModelKind::Custom { aux, .. } => aux(t),
        }
    }
}

/// Quadrature spec for tail-scale integrands: tolerance is purely relative so
/// values of order 1/n keep full relative accuracy.
fn tail_spec(spec: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-290,
        ..*spec
    }
}

/// Marginal tail 1 - G(1 - u) by the Berman route:
/// (1/2) E[1 - F((1-u)(1-Q)^{-1/2})] with Q ~ Beta(1/2, 1/2).
///
/// Under q = w^2 the Beta(1/2,1/2) weight is smooth; the range is truncated
/// at q = u(2-u) where the F-argument reaches the endpoint, and the vanishing
/// of the integrand there is rectified with w = w_max - z^2.
pub fn marginal_g_tail_berman(model: &RadialModel, u: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!(
            "marginal tail requires u in (0, 1), got {u}"
        )));
    }
    let v = 1.0 - u;
    let w_max = (u * (2.0 - u)).sqrt();
    let g = |z: f64| {
        let w = w_max - z * z;
        model.survival(v / (1.0 - w * w).sqrt()) / (1.0 - w * w).sqrt() * 2.0 * z
    };
    let est = integrate(g, 0.0, w_max.sqrt(), &tail_spec(spec))?;
    Ok(est / std::f64::consts::PI)
}

/// Marginal tail 1 - G(1 - u) by the angular route:
/// (1/pi) int_0^{arccos(1-u)} (1 - F((1-u)/cos a)) da.
///
/// Independent oracle for the Berman route; the integrand's vanishing at the
/// upper limit is rectified with a = A - z^2.
pub fn marginal_g_tail_angular(model: &RadialModel, u: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!(
            "marginal tail requires u in (0, 1), got {u}"
        )));
    }
    let v = 1.0 - u;
    let a_max = v.acos();
    let g = |z: f64| {
        let a = a_max - z * z;
        model.survival(v / a.cos()) * 2.0 * z
    };
    let est = integrate(g, 0.0, a_max.sqrt(), &tail_spec(spec))?;
    Ok(est / std::f64::consts::PI)
}

/// Second-order prediction for the marginal tail ratio
/// (1 - G(1 - (t x)^{-1})) / (1 - G(1 - t^{-1})):
///
/// |x|^{-1/2-alpha} (1 + t^{-1}(|x|^{-1}-1)/c_alpha * K1
///   + A(t) ((|x|^tau - 1)/tau + (|x|^tau - 1)/c_alpha * K2)),
///
/// with K1 = int (1-s)^{alpha-1} s^{1/2} (alpha+1 - 3/2 alpha s - s) ds and
/// K2 = int (1-s)^alpha ((1-s)^{-tau} - 1)/tau s^{-1/2} ds over [0, 1].
pub fn g_tail_ratio_expansion(
    model: &RadialModel,
    t: f64,
    x_abs: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(x_abs > 0.0) {
        return Err(Error::domain(format!(
            "g_tail_ratio_expansion requires x_abs > 0, got {x_abs}"
        )));
    }
    let alpha = model.alpha;
    let tau = model.tau;
    let ca = c_alpha(alpha)?;
    let k1 = k1_integral(alpha, spec)?;
    let k2 = k2_integral(alpha, tau, spec)?;
    let a_t = model.aux(t);
    let tk = pow_kernel(x_abs, tau);
    Ok(x_abs.powf(-0.5 - alpha)
        * (1.0
            + (1.0 / t) * (1.0 / x_abs - 1.0) / ca * k1
            + a_t * (tk + (x_abs.powf(tau) - 1.0) / ca * k2)))
}

/// K1(alpha) = int_0^1 (1-s)^{alpha-1} s^{1/2} (alpha+1 - 3/2 alpha s - s) ds.
pub(crate) fn k1_integral(alpha: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_endpoint_powers(
        |s| alpha + 1.0 - 1.5 * alpha * s - s,
        0.0,
        1.0,
        0.5,
        alpha - 1.0,
        spec,
    )
}

/// K2(alpha, tau) = int_0^1 (1-s)^alpha ((1-s)^{-tau} - 1)/tau s^{-1/2} ds.
pub(crate) fn k2_integral(alpha: f64, tau: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_endpoint_powers(|s| tau_kernel(1.0 - s, tau), 0.0, 1.0, -0.5, alpha, spec)
}

/// Exact Lemma-2 expectation E[1 - F(t_n(x)(1-Q)^{-1/2})], Q ~ Beta(qa, qb),
/// with t_n(x) = 1 + a_n x, by direct quadrature against the Beta density.
/// The range is truncated at q = 1 - t_n^2 where the F-argument reaches the
/// endpoint.
pub fn lemma2_expectation_exact(
    model: &RadialModel,
    qa: f64,
    qb: f64,
    n: u64,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(qa > 0.0 && qb > 0.0) {
        return Err(Error::domain(format!(
            "Beta mixing parameters must be positive, got ({qa}, {qb})"
        )));
    }
    if !(x < 0.0) {
        return Err(Error::domain(format!("lemma2 requires x < 0, got {x}")));
    }
    let a_n = crate::norming::solve_a_n(model, n, spec)?;
    let t_n = 1.0 + a_n * x;
    if !(t_n > 0.0 && t_n < 1.0) {
        return Err(Error::ThresholdOutOfRange { threshold: t_n, n });
    }
    let q_max = 1.0 - t_n * t_n;
    let norm = beta_fn(qa, qb)?;
    let ts = tail_spec(spec);
    // split at q_max/2: Beta weight singularity at 0, vanishing survival at q_max
    let mid = 0.5 * q_max;
    let left = integrate_endpoint_powers(
        |q| model.survival(t_n / (1.0 - q).sqrt()) * (1.0 - q).powf(qb - 1.0),
        0.0,
        mid,
        qa - 1.0,
        0.0,
        &ts,
    )?;
    let right = integrate(
        |z: f64| {
            let q = q_max - z * z;
            model.survival(t_n / (1.0 - q).sqrt())
                * q.powf(qa - 1.0)
                * (1.0 - q).powf(qb - 1.0)
                * 2.0
                * z
        },
        0.0,
        (q_max - mid).sqrt(),
        &ts,
    )?;
    Ok((left + right) / norm)
}

/// The Lemma-2 second-order display for the same expectation:
///
/// (2 a_n |x|)^{qa} Gamma(qa+qb)/(Gamma(qa)Gamma(qb)) [1 - F(t_n(x))] *
///   { int (1-s)^alpha s^{qa-1} ds
///     + A(a_n^{-1}) |x|^{-tau} int (1-s)^alpha ((1-s)^{-tau}-1)/tau s^{qa-1} ds
///     + a_n |x| int (1-s)^{alpha-1} s^{qa} (alpha - 2(qb-1) - 3/2 alpha s + 2(qb-1)s) ds }.
pub fn lemma2_expansion(
    model: &RadialModel,
    qa: f64,
    qb: f64,
    n: u64,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(qa > 0.0 && qb > 0.0) {
        return Err(Error::domain(format!(
            "Beta mixing parameters must be positive, got ({qa}, {qb})"
        )));
    }
    if !(x < 0.0) {
        return Err(Error::domain(format!("lemma2 requires x < 0, got {x}")));
    }
    let a_n = crate::norming::solve_a_n(model, n, spec)?;
    let t_n = 1.0 + a_n * x;
    if !(t_n > 0.0 && t_n < 1.0) {
        return Err(Error::ThresholdOutOfRange { threshold: t_n, n });
    }
    let alpha = model.alpha;
    let tau = model.tau;
    let a_val = model.aux(1.0 / a_n);
    let xa = x.abs();

    let i_lead = integrate_endpoint_powers(|_| 1.0, 0.0, 1.0, qa - 1.0, alpha, spec)?;
    let i_tau = integrate_endpoint_powers(
        |s| tau_kernel(1.0 - s, tau),
        0.0,
        1.0,
        qa - 1.0,
        alpha,
        spec,
    )?;
    let i_an = integrate_endpoint_powers(
        |s| alpha - 2.0 * (qb - 1.0) - 1.5 * alpha * s + 2.0 * (qb - 1.0) * s,
        0.0,
        1.0,
        qa,
        alpha - 1.0,
        spec,
    )?;

    let prefactor = (2.0 * a_n * xa).powf(qa) / beta_fn(qa, qb)?;
    Ok(prefactor
        * model.survival(t_n)
        * (i_lead + a_val * xa.powf(-tau) * i_tau + a_n * xa * i_an))
}
