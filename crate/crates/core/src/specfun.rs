//! Special functions and the adaptive quadrature engine used by every other
//! module.
//!
//! The quadrature rule is a nested Gauss(7)/Kronrod(15) pair refined by
//! deterministic midpoint bisection, so repeated runs subdivide in exactly the
//! same order and reproduce bit-identical results. Integrands with algebraic
//! endpoint weights go through [`integrate_endpoint_powers`], which rectifies
//! the singularity with a power substitution before the adaptive rule sees it.

use crate::error::{Error, Result};

/// Tolerances and subdivision cap for one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_depth: u32) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_depth < 1 {
            return Err(Error::domain(format!(
                "quadrature spec requires abs_tol > 0, rel_tol > 0, max_depth >= 1; \
                 got ({abs_tol}, {rel_tol}, {max_depth})"
            )));
        }
        Ok(QuadratureSpec {
            abs_tol,
            rel_tol,
            max_depth,
        })
    }

    /// Tightened copy whose absolute tolerance is at most `abs_tol`.
    pub fn tightened(&self, abs_tol: f64) -> Self {
        QuadratureSpec {
            abs_tol: self.abs_tol.min(abs_tol).max(1e-300),
            ..*self
        }
    }
}

impl Default for QuadratureSpec {
    /// Second-order deltas are O(n^{-2/3}); the defaults keep quadrature noise
    /// far below them at n = 10^6.
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-11,
            max_depth: 60,
        }
    }
}

/// Value of an integral together with the accumulated error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error_bound: f64,
}

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights; QUADPACK values.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_33,
    0.949_107_912_342_758_524_526_189_684_047_85,
    0.864_864_423_359_769_072_789_712_788_640_93,
    0.741_531_185_599_394_439_863_864_773_280_79,
    0.586_087_235_467_691_130_294_144_838_258_73,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_891_71,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_33,
];

/// One Gauss-Kronrod 15/7 panel; returns (kronrod, |kronrod - gauss|,
/// integral of |f|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut kronrod = f_center * WGK[7];
    let mut gauss = f_center * WG[3];
    let mut res_abs = f_center.abs() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let err = ((kronrod - gauss) * half).abs();
    (kronrod * half, err, res_abs * half.abs())
}

struct Accum {
    value: f64,
    error_bound: f64,
    res_abs: f64,
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32, acc: &mut Accum) {
    let (value, err, res_abs) = gk15(f, a, b);
    // second condition is the f64 rounding floor of this panel
    let mid = 0.5 * (a + b);
    if err <= tol || err <= 50.0 * f64::EPSILON * res_abs || depth == 0 || !(a < mid && mid < b) {
        acc.value += value;
        acc.error_bound += err;
        acc.res_abs += res_abs;
        return;
    }
    adapt(f, a, mid, 0.5 * tol, depth - 1, acc);
    adapt(f, mid, b, 0.5 * tol, depth - 1, acc);
}

/// Adaptive integral of `f` over `[lo, hi]` returning value and error bound.
pub fn integrate_with_bound<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    if !(lo <= hi) {
        return Err(Error::domain(format!(
            "integration range [{lo}, {hi}] is not ordered"
        )));
    }
    if lo == hi {
        return Ok(Estimate {
            value: 0.0,
            error_bound: 0.0,
        });
    }
    // Pilot estimate fixes the tolerance; the recursion then splits it in half
    // per level, keeping the subdivision sequence deterministic.
    let (pilot, _, _) = gk15(&f, lo, hi);
    let tol = spec.abs_tol.max(spec.rel_tol * pilot.abs());
    let mut acc = Accum {
        value: 0.0,
        error_bound: 0.0,
        res_abs: 0.0,
    };
    adapt(&f, lo, hi, tol, spec.max_depth, &mut acc);
    // convergence is judged globally: slack in one panel may be covered by
    // others, and the achievable floor is set by f64 rounding
    if acc.error_bound > tol.max(100.0 * f64::EPSILON * acc.res_abs) {
        return Err(Error::QuadratureNonConvergence {
            lo,
            hi,
            error_bound: acc.error_bound,
            tol,
        });
    }
    Ok(Estimate {
        value: acc.value,
        error_bound: acc.error_bound,
    })
}

/// Adaptive integral of `f` over `[lo, hi]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_with_bound(f, lo, hi, spec).map(|e| e.value)
}

/// Substitution order for an endpoint weight t^p: smallest m that turns the
/// transformed factor m t^{m(p+1)-1} into a nonnegative integer power, else
/// enough smoothing for the adaptive rule.
fn substitution_order(p: f64) -> u32 {
    if p >= 0.0 && (p - p.round()).abs() < 1e-12 {
        return 1; // polynomial weight, fold into the integrand
    }
    for m in 2..=8u32 {
        let e = f64::from(m) * (p + 1.0);
        if (e - e.round()).abs() < 1e-9 && e - 1.0 >= -1e-9 {
            return m;
        }
    }
    let mut m = 2u32;
    while f64::from(m) * (p + 1.0) - 1.0 < 3.0 {
        m += 1;
    }
    m
}

/// Integral of h(s) * (s - lo)^{p_lo} * (hi - s)^{p_hi} over [lo, hi], with
/// p_lo, p_hi > -1 and h smooth. Each weighted endpoint is rectified by the
/// substitution s = lo + v^m (resp. hi - v^m).
pub fn integrate_endpoint_powers<F: Fn(f64) -> f64>(
    h: F,
    lo: f64,
    hi: f64,
    p_lo: f64,
    p_hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(p_lo > -1.0 && p_hi > -1.0) {
        return Err(Error::domain(format!(
            "endpoint powers must exceed -1; got ({p_lo}, {p_hi})"
        )));
    }
    if !(lo <= hi) {
        return Err(Error::domain(format!(
            "integration range [{lo}, {hi}] is not ordered"
        )));
    }
    if lo == hi {
        return Ok(0.0);
    }
    let mid = 0.5 * (lo + hi);
    let left = weighted_half(&h, lo, hi, mid, p_lo, p_hi, false, spec)?;
    let right = weighted_half(&h, lo, hi, mid, p_lo, p_hi, true, spec)?;
    Ok(left + right)
}

#[allow(clippy::too_many_arguments)]
fn weighted_half<F: Fn(f64) -> f64>(
    h: &F,
    lo: f64,
    hi: f64,
    mid: f64,
    p_lo: f64,
    p_hi: f64,
    upper: bool,
    spec: &QuadratureSpec,
) -> Result<f64> {
    // On each half only the near endpoint's weight is singular; the far one is
    // smooth and folds into the integrand.
    let (p_near, p_far) = if upper { (p_hi, p_lo) } else { (p_lo, p_hi) };
    let m = substitution_order(p_near);
    let width = mid - lo; // = hi - mid
    if m == 1 {
        let g = |s: f64| h(s) * (s - lo).powf(p_lo) * (hi - s).powf(p_hi);
        return if upper {
            integrate(g, mid, hi, spec)
        } else {
            integrate(g, lo, mid, spec)
        };
    }
    let mf = f64::from(m);
    let vmax = width.powf(1.0 / mf);
    let e_near = mf * (p_near + 1.0) - 1.0;
    let g = |v: f64| {
        let t = v.powi(m as i32); // distance from the near endpoint
        let s = if upper { hi - t } else { lo + t };
        let far = if upper { s - lo } else { hi - s };
        mf * v.powf(e_near) * far.powf(p_far) * h(s)
    };
    integrate(g, 0.0, vmax, spec)
}

/// Natural log of the Gamma function, x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// Beta function B(a, b) for positive arguments, via log-gamma.
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!(
            "beta_fn requires positive arguments, got ({a}, {b})"
        )));
    }
    Ok((statrs::function::gamma::ln_gamma(a) + statrs::function::gamma::ln_gamma(b)
        - statrs::function::gamma::ln_gamma(a + b))
    .exp())
}

/// Regularized incomplete beta I_z(a, b).
pub fn reg_inc_beta(a: f64, b: f64, z: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!(
            "reg_inc_beta requires positive shape parameters, got ({a}, {b})"
        )));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::domain(format!(
            "reg_inc_beta requires z in [0, 1], got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == 1.0 {
        return Ok(1.0);
    }
    Ok(statrs::function::beta::beta_reg(a, b, z))
}

/// Normalizing constant c_alpha = Gamma(alpha+1) sqrt(pi) / Gamma(alpha+3/2)
/// = int_0^1 (1-s)^alpha s^{-1/2} ds.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!(
            "c_alpha requires alpha > 0, got {alpha}"
        )));
    }
    Ok((statrs::function::gamma::ln_gamma(alpha + 1.0) + 0.5 * std::f64::consts::PI.ln()
        - statrs::function::gamma::ln_gamma(alpha + 1.5))
    .exp())
}

/// The angular df psi_alpha(z), extended to all reals by clamping the
/// argument to [-1, 1] (0 below, 1 above).
///
/// psi_alpha(z) = Gamma(a+3/2)/(Gamma(a+1) sqrt(pi)) int_{-1}^{z} (1-s^2)^a ds,
/// which under s = 2u - 1 is the symmetric incomplete beta
/// I_{(z+1)/2}(alpha+1, alpha+1).
pub fn psi_alpha(alpha: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!(
            "psi_alpha requires alpha > 0, got {alpha}"
        )));
    }
    if z <= -1.0 {
        return Ok(0.0);
    }
    if z >= 1.0 {
        return Ok(1.0);
    }
    reg_inc_beta(alpha + 1.0, alpha + 1.0, 0.5 * (z + 1.0))
}

/// ((w^{-tau}) - 1) / tau, the second-order kernel of the theorem displays,
/// with the log limit -log(w) at tau = 0. Evaluated through expm1 so small
/// |tau| does not cancel.
pub fn tau_kernel(w: f64, tau: f64) -> f64 {
    debug_assert!(w > 0.0);
    if tau.abs() < 1e-8 {
        -w.ln()
    } else {
        (-tau * w.ln()).exp_m1() / tau
    }
}

/// (w^{tau} - 1) / tau, the kernel of the marginal tail-ratio display, with
/// the log limit log(w) at tau = 0.
pub fn pow_kernel(w: f64, tau: f64) -> f64 {
    debug_assert!(w > 0.0);
    if tau.abs() < 1e-8 {
        w.ln()
    } else {
        (tau * w.ln()).exp_m1() / tau
    }
}
