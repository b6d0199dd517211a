//! Norming constants: solve a_n from the marginal tail, assemble the
//! second-order sequence (rho_n, lambda_n, lambda, c_n, gamma, rate regime),
//! and the closed-form constants of the Beta-radius example.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::{Lambda, RateK};
use crate::radial::{marginal_g_tail_angular, ModelCacheKey, RadialModel};
use crate::specfun::{beta_fn, c_alpha, integrate_endpoint_powers, QuadratureSpec};

/// Limits a table rho rule may declare for its sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeclaredLimits {
    pub lambda: Lambda,
    pub gamma: f64,
    /// Optional c_n values aligned with the table's n entries.
    pub c_n: Option<Vec<(u64, f64)>>,
    /// Declared limit of c_n / a_n; `Infinite` selects the a_n = o(c_n)
    /// displays. Estimated from the data when absent.
    pub rate_k: Option<RateK>,
}

/// How the correlation rho_n varies with the row size n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RhoRule {
    /// rho_n = value for all n.
    Constant(f64),
    /// rho_n = 1 - n^{-exponent}, exponent > 0.
    OneMinusPower { exponent: f64 },
    /// Explicit n -> rho_n entries, with optionally declared limits.
    Table {
        entries: Vec<(u64, f64)>,
        declared: Option<DeclaredLimits>,
    },
}

impl RhoRule {
    pub fn rho(&self, n: u64) -> Result<f64> {
        let rho = match self {
            RhoRule::Constant(v) => *v,
            RhoRule::OneMinusPower { exponent } => {
                if !(*exponent > 0.0) {
                    return Err(Error::InconsistentRule(format!(
                        "one_minus_power exponent must be positive, got {exponent}"
                    )));
                }
                1.0 - (n as f64).powf(-exponent)
            }
            RhoRule::Table { entries, .. } => entries
                .iter()
                .find(|(m, _)| *m == n)
                .map(|(_, r)| *r)
                .ok_or_else(|| {
                    Error::InconsistentRule(format!("table rho rule has no entry for n = {n}"))
                })?,
        };
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::InconsistentRule(format!(
                "rho_n = {rho} outside [-1, 1] at n = {n}"
            )));
        }
        Ok(rho)
    }
}

/// Per-n norming state: everything the expansions need.
#[derive(Debug, Clone, PartialEq)]
pub struct NormingSequence {
    pub n: u64,
    pub rho_n: f64,
    pub a_n: f64,
    /// lambda_n = ((1 - rho_n) / (2 a_n))^{1/2}.
    pub lambda_n: f64,
    pub lambda: Lambda,
    pub c_n: f64,
    pub gamma: f64,
    /// Limit of c_n / a_n; `Infinite` encodes a_n = o(c_n).
    pub rate_k: RateK,
    /// Set when lambda / gamma were extrapolated rather than declared.
    pub estimated: bool,
}

/// Closed-form second-order constants of the Beta(a, b) radius example under
/// rho_n = 1 - n^{-1/(b+1/2)}.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaExampleConstants {
    pub a: f64,
    pub b: f64,
    /// c_b = int_0^1 (1-s)^b s^{-1/2} ds.
    pub c_b: f64,
    pub lambda: f64,
    /// c_n = n^{-c_n_exponent} with c_n_exponent = 1/(b + 1/2).
    pub c_n_exponent: f64,
    pub gamma: f64,
    /// The example's m, computed with the (b+1 - 3/2 b s - s) integrand of the
    /// display preceding it.
    pub m: f64,
    /// The same quantity with the example's literal (b+1 - 3/2 s - s)
    /// integrand; differs from `m` unless b = 1. Surfaced for diagnostics.
    pub m_literal: f64,
}

fn a_n_cache() -> &'static Mutex<HashMap<(ModelCacheKey, u64), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(ModelCacheKey, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Solve 1 - G(1 - a_n) = 1/n by bracketing bisection on the angular marginal
/// tail, to 1e-13 relative. Results are memoized per (model, n).
pub fn solve_a_n(model: &RadialModel, n: u64, spec: &QuadratureSpec) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("solve_a_n requires n >= 2, got {n}")));
    }
    let key = (model.cache_key(), n);
    if let Some(v) = a_n_cache().lock().unwrap().get(&key) {
        return Ok(*v);
    }
    let target = 1.0 / n as f64;
    let mut lo = 0.0f64;
    let mut hi = 1.0 - 1e-12;
    let at_hi = marginal_g_tail_angular(model, hi, spec)?;
    if at_hi < target {
        return Err(Error::RootNotBracketed(format!(
            "marginal tail reaches only {at_hi:e} at u -> 1, below 1/n = {target:e}"
        )));
    }
    // bisection: robust to quadrature noise, tolerance 1e-13 relative with an
    // absolute floor
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if marginal_g_tail_angular(model, mid, spec)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1e-300) + 1e-300 {
            break;
        }
    }
    let root = 0.5 * (lo + hi);
    a_n_cache().lock().unwrap().insert(key, root);
    Ok(root)
}

/// Closed-form constants of the Beta example.
pub fn beta_example_constants(a: f64, b: f64, spec: &QuadratureSpec) -> Result<BetaExampleConstants> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!(
            "beta example requires positive parameters, got ({a}, {b})"
        )));
    }
    let c_b = c_alpha(b)?;
    let big_k = b * beta_fn(a, b)? * std::f64::consts::SQRT_2 * std::f64::consts::PI / c_b;
    let lambda = std::f64::consts::FRAC_1_SQRT_2 * big_k.powf(-1.0 / (2.0 * b + 1.0));
    let i2 = integrate_endpoint_powers(|_| 1.0, 0.0, 1.0, 0.5, b, spec)?;
    let m_of = |k1: f64| k1 / c_b - b * (a - 1.0) / (b + 1.0) + b * (a - 1.0) / ((b + 1.0) * c_b) * i2;
    let m = m_of(crate::radial::k1_integral(b, spec)?);
    let k1_literal = integrate_endpoint_powers(
        |s| b + 1.0 - 1.5 * s - s,
        0.0,
        1.0,
        0.5,
        b - 1.0,
        spec,
    )?;
    let m_literal = m_of(k1_literal);
    let gamma = m / (2.0 * std::f64::consts::SQRT_2 * (b + 0.5)) * big_k.powf(1.0 / (2.0 * b + 1.0));
    Ok(BetaExampleConstants {
        a,
        b,
        c_b,
        lambda,
        c_n_exponent: 1.0 / (b + 0.5),
        gamma,
        m,
        m_literal,
    })
}

/// Two-term closed form for a_n in the Beta example:
/// (b B(a,b) sqrt(2) pi / (n c_b))^{1/(b+1/2)} - (m / (b+1/2)) (same)^{2/(b+1/2)}.
pub fn beta_example_a_n(a: f64, b: f64, n: u64, spec: &QuadratureSpec) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!(
            "beta_example_a_n requires n >= 2, got {n}"
        )));
    }
    let consts = beta_example_constants(a, b, spec)?;
    let base = b * beta_fn(a, b)? * std::f64::consts::SQRT_2 * std::f64::consts::PI
        / (n as f64 * consts.c_b);
    let e = 1.0 / (b + 0.5);
    Ok(base.powf(e) - consts.m / (b + 0.5) * base.powf(2.0 * e))
}

/// Leading term only of the closed form.
pub fn beta_example_a_n_leading(a: f64, b: f64, n: u64, spec: &QuadratureSpec) -> Result<f64> {
    let consts = beta_example_constants(a, b, spec)?;
    let base = b * beta_fn(a, b)? * std::f64::consts::SQRT_2 * std::f64::consts::PI
        / (n as f64 * consts.c_b);
    Ok(base.powf(1.0 / (b + 0.5)))
}

/// lambda_n at three geometrically spaced n, for extrapolation.
fn lambda_n_samples(
    model: &RadialModel,
    rule: &RhoRule,
    ns: [u64; 3],
    spec: &QuadratureSpec,
) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (i, n) in ns.into_iter().enumerate() {
        let rho = rule.rho(n)?;
        let a_n = solve_a_n(model, n, spec)?;
        out[i] = ((1.0 - rho) / (2.0 * a_n)).max(0.0).sqrt();
    }
    Ok(out)
}

/// Aitken extrapolation of lambda_n, with a crude divergence test. Returns
/// (lambda, gamma estimate unavailable => 0).
fn estimate_lambda(samples: [f64; 3]) -> Lambda {
    let [l0, l1, l2] = samples;
    let d1 = l1 - l0;
    let d2 = l2 - l1;
    if d2.abs() > 0.9 * d1.abs() && d1.abs() > 1e-12 {
        // differences not contracting: diverging or degenerating
        return if d2 > 0.0 {
            Lambda::Infinite
        } else {
            Lambda::Zero
        };
    }
    let denom = d2 - d1;
    let est = if denom.abs() < 1e-300 {
        l2
    } else {
        l2 - d2 * d2 / denom
    };
    if est > 1e6 {
        Lambda::Infinite
    } else if est < 1e-6 {
        Lambda::Zero
    } else {
        Lambda::Finite(est)
    }
}

/// Assemble the full norming state for row size n under the given rho rule.
///
/// For the Beta example rule (one_minus_power with exponent 1/(b+1/2)) the
/// closed-form lambda, c_n = n^{-1/(b+1/2)} and gamma are used. Constant rules
/// take the degenerate-lambda branches of Theorems 6 and 7. Other rules get
/// extrapolated limits, flagged `estimated`.
pub fn build_sequence(
    model: &RadialModel,
    rule: &RhoRule,
    n: u64,
    spec: &QuadratureSpec,
) -> Result<NormingSequence> {
    let rho_n = rule.rho(n)?;
    let a_n = solve_a_n(model, n, spec)?;
    let lambda_n = ((1.0 - rho_n) / (2.0 * a_n)).max(0.0).sqrt();
    let nf = n as f64;

    let (lambda, c_n, gamma, rate_k, estimated) = match rule {
        RhoRule::Constant(v) => {
            if *v == 1.0 {
                (Lambda::Zero, 0.0, 0.0, RateK::Finite(0.0), false)
            } else {
                // Theorem 7(ii): rho_n -> d in [-1, 1)
                (Lambda::Infinite, 0.0, 0.0, RateK::Finite(0.0), false)
            }
        }
        RhoRule::OneMinusPower { exponent } => {
            let p = *exponent;
            if let Some((a, b)) = model.beta_params() {
                let natural = 1.0 / (b + 0.5);
                if (p - natural).abs() <= 1e-12 * natural {
                    let consts = beta_example_constants(a, b, spec)?;
                    let c_n = nf.powf(-consts.c_n_exponent);
                    // c_n / a_n -> K^{-1/(b+1/2)} with K = b B(a,b) sqrt(2) pi / c_b
                    let big_k = b * beta_fn(a, b)? * std::f64::consts::SQRT_2
                        * std::f64::consts::PI
                        / consts.c_b;
                    (
                        Lambda::Finite(consts.lambda),
                        c_n,
                        consts.gamma,
                        RateK::Finite(big_k.powf(-natural)),
                        false,
                    )
                } else if p < natural {
                    // (1 - rho_n)/a_n -> infinity: Theorem 7(i) territory
                    (Lambda::Infinite, 0.0, 0.0, RateK::Finite(0.0), false)
                } else {
                    // (1 - rho_n)/a_n -> 0: Theorem 6(ii) territory
                    (Lambda::Zero, 0.0, 0.0, RateK::Finite(0.0), false)
                }
            } else {
                let samples = lambda_n_samples(model, rule, [n, 4 * n, 16 * n], spec)?;
                let lam = estimate_lambda(samples);
                (lam, nf.powf(-p), 0.0, RateK::Finite(0.0), true)
            }
        }
        RhoRule::Table { entries, declared } => match declared {
            Some(dl) => {
                if rho_n == 1.0 && dl.lambda != Lambda::Zero {
                    return Err(Error::InconsistentRule(format!(
                        "rho_n = 1 at n = {n} but declared lambda = {} != 0",
                        dl.lambda
                    )));
                }
                let c_n = dl
                    .c_n
                    .as_ref()
                    .and_then(|t| t.iter().find(|(m, _)| *m == n).map(|(_, c)| *c))
                    .unwrap_or(0.0);
                let rate_k = dl.rate_k.unwrap_or({
                    if c_n > 0.0 && a_n > 0.0 && c_n / a_n > 1e3 {
                        RateK::Infinite
                    } else {
                        RateK::Finite(if a_n > 0.0 { c_n / a_n } else { 0.0 })
                    }
                });
                (dl.lambda, c_n, dl.gamma, rate_k, false)
            }
            None => {
                let mut ns: Vec<u64> = entries.iter().map(|(m, _)| *m).collect();
                ns.sort_unstable();
                ns.dedup();
                if ns.len() < 3 {
                    let lam = if rho_n == 1.0 {
                        Lambda::Zero
                    } else {
                        Lambda::Finite(lambda_n.max(1e-12))
                    };
                    (lam, 0.0, 0.0, RateK::Finite(0.0), true)
                } else {
                    let last3 = [ns[ns.len() - 3], ns[ns.len() - 2], ns[ns.len() - 1]];
                    let samples = lambda_n_samples(model, rule, last3, spec)?;
                    (estimate_lambda(samples), 0.0, 0.0, RateK::Finite(0.0), true)
                }
            }
        },
    };

    if rho_n == 1.0 && lambda != Lambda::Zero {
        return Err(Error::InconsistentRule(format!(
            "rho_n = 1 at n = {n} is incompatible with lambda = {lambda}"
        )));
    }

    Ok(NormingSequence {
        n,
        rho_n,
        a_n,
        lambda_n,
        lambda,
        c_n,
        gamma,
        rate_k,
        estimated,
    })
}

/// Which degenerate rate regime to validate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateCase {
    /// Theorem 6: lambda = 0, requires (1-rho_n)/a_n -> 0 and
    /// a_n^{5/3}/(1-rho_n) -> 0 (trivially satisfied when rho_n = 1).
    LambdaZero,
    /// Theorem 7(i): lambda = inf with rho_n -> 1, requires
    /// (1-rho_n)/a_n -> inf and (1-rho_n)^3/a_n -> 0.
    LambdaInfI,
}

#[derive(Debug, Clone)]
pub struct RateRegimeRow {
    pub n: u64,
    pub ratio_primary: f64,
    pub ratio_secondary: f64,
}

/// Diagnostic report of the side-condition ratios on a geometric n-schedule.
#[derive(Debug, Clone)]
pub struct RateRegimeReport {
    pub case: RateCase,
    pub rows: Vec<RateRegimeRow>,
    /// True when rho_n = 1 identically makes Theorem 6(i) apply directly.
    pub pass_by_case: bool,
    pub pass: bool,
}

/// Evaluate the required rate ratios on n in {10^3, ..., 10^6} and check the
/// monotone trend toward the required limit.
pub fn validate_rate_regime(
    model: &RadialModel,
    rule: &RhoRule,
    case: RateCase,
    spec: &QuadratureSpec,
) -> Result<RateRegimeReport> {
    let schedule = [1_000u64, 10_000, 100_000, 1_000_000];
    if case == RateCase::LambdaZero {
        let all_one = schedule
            .iter()
            .map(|&n| rule.rho(n))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .all(|&r| r == 1.0);
        if all_one {
            return Ok(RateRegimeReport {
                case,
                rows: Vec::new(),
                pass_by_case: true,
                pass: true,
            });
        }
    }
    let mut rows = Vec::with_capacity(schedule.len());
    for &n in &schedule {
        let rho = rule.rho(n)?;
        let a_n = solve_a_n(model, n, spec)?;
        let one_minus = 1.0 - rho;
        let (r1, r2) = match case {
            RateCase::LambdaZero => (one_minus / a_n, a_n.powf(5.0 / 3.0) / one_minus),
            RateCase::LambdaInfI => (one_minus / a_n, one_minus.powi(3) / a_n),
        };
        rows.push(RateRegimeRow {
            n,
            ratio_primary: r1,
            ratio_secondary: r2,
        });
    }
    let primary_trend = rows.windows(2).all(|w| match case {
        RateCase::LambdaZero => w[1].ratio_primary < w[0].ratio_primary,
        RateCase::LambdaInfI => w[1].ratio_primary > w[0].ratio_primary,
    });
    let secondary_trend = rows
        .windows(2)
        .all(|w| w[1].ratio_secondary < w[0].ratio_secondary);
    Ok(RateRegimeReport {
        case,
        rows,
        pass_by_case: false,
        pass: primary_trend && secondary_trend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::beta_radius;
    use approx::assert_relative_eq;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn beta_example_constants_match_hand_values() {
        // b = 1: c_b = 4/3, K1 = 1/3, m = 1/4 - 1/2 + 1/10 = -0.15
        let c = beta_example_constants(2.0, 1.0, &spec()).unwrap();
        assert_relative_eq!(c.c_b, 4.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(c.m, -0.15, max_relative = 1e-10);
        assert_relative_eq!(c.c_n_exponent, 2.0 / 3.0, max_relative = 1e-15);
        // K = 1 * 0.5 * sqrt(2) pi / (4/3)
        let k = 0.5 * std::f64::consts::SQRT_2 * std::f64::consts::PI / (4.0 / 3.0);
        assert_relative_eq!(
            c.lambda,
            std::f64::consts::FRAC_1_SQRT_2 * k.powf(-1.0 / 3.0),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            c.gamma,
            -0.15 / (3.0 * std::f64::consts::SQRT_2) * k.powf(1.0 / 3.0),
            max_relative = 1e-10
        );
        // m_literal coincides with m only because b = 1 here
        assert_relative_eq!(c.m_literal, c.m, max_relative = 1e-10);
        let c23 = beta_example_constants(2.0, 3.0, &spec()).unwrap();
        assert!((c23.m - c23.m_literal).abs() > 1e-3);
    }

    #[test]
    fn solve_a_n_monotone_and_matches_closed_form() {
        let m = beta_radius(2.0, 1.0).unwrap();
        let a1e4 = solve_a_n(&m, 10_000, &spec()).unwrap();
        let a2e4 = solve_a_n(&m, 20_000, &spec()).unwrap();
        assert!(a2e4 < a1e4, "a_n must decrease in n");
        let lead = beta_example_a_n_leading(2.0, 1.0, 10_000, &spec()).unwrap();
        assert!(
            ((lead - a1e4) / a1e4).abs() < 0.05,
            "closed-form leading term {lead:e} vs solved {a1e4:e}"
        );
        let two_term = beta_example_a_n(2.0, 1.0, 10_000, &spec()).unwrap();
        assert!(((two_term - a1e4) / a1e4).abs() < 1e-5);
    }

    #[test]
    fn solve_a_n_slope_for_uniform_radius() {
        // 1 - G(1-u) ~ const u^{3/2} so a_n ~ const n^{-2/3}
        let m = beta_radius(1.0, 1.0).unwrap();
        let ns = [1_000u64, 10_000, 100_000];
        let mut logs = Vec::new();
        for &n in &ns {
            logs.push(((n as f64).ln(), solve_a_n(&m, n, &spec()).unwrap().ln()));
        }
        let slope = (logs[2].1 - logs[0].1) / (logs[2].0 - logs[0].0);
        assert!(
            (slope + 2.0 / 3.0).abs() < 0.01,
            "log-slope {slope} should be -2/3"
        );
    }

    #[test]
    fn solve_a_n_cached_and_deterministic() {
        let m = beta_radius(2.0, 3.0).unwrap();
        let a = solve_a_n(&m, 5_000, &spec()).unwrap();
        let b = solve_a_n(&m, 5_000, &spec()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(solve_a_n(&m, 1, &spec()).is_err());
    }

    #[test]
    fn second_term_sign_follows_m() {
        // m < 0 for (2,1) so the two-term value exceeds the leading term
        let lead = beta_example_a_n_leading(2.0, 1.0, 10_000, &spec()).unwrap();
        let two = beta_example_a_n(2.0, 1.0, 10_000, &spec()).unwrap();
        assert!(two > lead);
        // and for (1,1): m = 1/4 - 0 + 0 > 0, second term negative
        let lead11 = beta_example_a_n_leading(1.0, 1.0, 10_000, &spec()).unwrap();
        let two11 = beta_example_a_n(1.0, 1.0, 10_000, &spec()).unwrap();
        assert!(two11 < lead11);
    }

    #[test]
    fn build_sequence_example_rule() {
        let m = beta_radius(2.0, 1.0).unwrap();
        let rule = RhoRule::OneMinusPower { exponent: 2.0 / 3.0 };
        let seq = build_sequence(&m, &rule, 10_000, &spec()).unwrap();
        let consts = beta_example_constants(2.0, 1.0, &spec()).unwrap();
        assert_eq!(seq.lambda, Lambda::Finite(consts.lambda));
        assert_relative_eq!(seq.c_n, 1e4f64.powf(-2.0 / 3.0), max_relative = 1e-14);
        assert!(!seq.estimated);
        assert!(matches!(seq.rate_k, RateK::Finite(k) if k > 0.0));
        // lambda_n should be approaching lambda
        assert!((seq.lambda_n - consts.lambda).abs() < 0.01);
    }

    #[test]
    fn build_sequence_degenerate_rules() {
        let m = beta_radius(2.0, 1.0).unwrap();
        let seq = build_sequence(&m, &RhoRule::Constant(1.0), 1_000, &spec()).unwrap();
        assert_eq!(seq.lambda, Lambda::Zero);
        assert_eq!(seq.lambda_n, 0.0);
        let seq = build_sequence(&m, &RhoRule::Constant(0.3), 1_000, &spec()).unwrap();
        assert_eq!(seq.lambda, Lambda::Infinite);
    }

    #[test]
    fn build_sequence_rejects_inconsistent_table() {
        let m = beta_radius(2.0, 1.0).unwrap();
        let rule = RhoRule::Table {
            entries: vec![(100, 1.0)],
            declared: Some(DeclaredLimits {
                lambda: Lambda::Finite(0.5),
                gamma: 0.0,
                c_n: None,
                rate_k: None,
            }),
        };
        assert!(matches!(
            build_sequence(&m, &rule, 100, &spec()),
            Err(Error::InconsistentRule(_))
        ));
    }

    #[test]
    fn lambda_n_converges_to_example_lambda() {
        let m = beta_radius(2.0, 1.0).unwrap();
        let rule = RhoRule::OneMinusPower { exponent: 2.0 / 3.0 };
        let consts = beta_example_constants(2.0, 1.0, &spec()).unwrap();
        let mut prev_gap = f64::INFINITY;
        let mut prev_score = f64::INFINITY;
        for n in [1_000u64, 10_000, 100_000, 1_000_000] {
            let seq = build_sequence(&m, &rule, n, &spec()).unwrap();
            let gap = (seq.lambda_n - consts.lambda).abs();
            assert!(gap < prev_gap, "lambda_n gap must shrink, n={n}");
            prev_gap = gap;
            let score = ((seq.lambda_n - consts.lambda) / seq.c_n - consts.gamma).abs();
            assert!(score < prev_score, "(lambda_n-lambda)/c_n -> gamma, n={n}");
            prev_score = score;
        }
    }

    #[test]
    fn rate_regime_validation() {
        let m = beta_radius(1.0, 1.0).unwrap();
        // rho = 1 trivially satisfies Theorem 6(i)
        let rep = validate_rate_regime(&m, &RhoRule::Constant(1.0), RateCase::LambdaZero, &spec())
            .unwrap();
        assert!(rep.pass && rep.pass_by_case);
        // a_n ~ n^{-2/3}: p in (2/3, 10/9) satisfies Theorem 6(ii)
        let rule = RhoRule::OneMinusPower { exponent: 0.9 };
        let rep = validate_rate_regime(&m, &rule, RateCase::LambdaZero, &spec()).unwrap();
        assert!(rep.pass, "{:?}", rep.rows);
        // p < 2/3: first ratio diverges (Theorem 7(i) side), third-power ratio
        // needs 3p > 2/3
        let rule = RhoRule::OneMinusPower { exponent: 0.5 };
        let rep = validate_rate_regime(&m, &rule, RateCase::LambdaInfI, &spec()).unwrap();
        assert!(rep.pass, "{:?}", rep.rows);
        // p = 0.2: 3p = 0.6 < 2/3, secondary ratio diverges
        let rule = RhoRule::OneMinusPower { exponent: 0.2 };
        let rep = validate_rate_regime(&m, &rule, RateCase::LambdaInfI, &spec()).unwrap();
        assert!(!rep.pass);
    }
}
