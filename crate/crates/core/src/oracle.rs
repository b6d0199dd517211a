//! Ground truth for the expansion claims: the exact finite-n joint df via the
//! angular survival representation, and a deterministic Monte Carlo sampler.
//!
//! Accuracy note: the n-th power of a probability 1 - eps with eps of order
//! 1/n is always assembled as exp(n log1p(-eps)) where eps itself is built
//! from tail quantities (marginal tails and the joint survival), never as a
//! 1 - cdf subtraction. The second-order deltas are O(n^{-2/3}) and would not
//! survive that cancellation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::norming::{solve_a_n, RhoRule};
use crate::radial::RadialModel;
use crate::specfun::{integrate_with_bound, Estimate, QuadratureSpec};

/// Exact angular geometry of a threshold pair; no asymptotics involved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularGeometry {
    /// tau_n = arccos(rho_n).
    pub tau_n: f64,
    /// beta = arctan(((v/u) - rho) / sin(tau_n)).
    pub beta: f64,
    /// beta_tilde = tau_n - beta.
    pub beta_tilde: f64,
    pub u: f64,
    pub v: f64,
}

/// Result of an exact oracle evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    /// Single-pair df at (u, v).
    pub joint_cdf: f64,
    /// joint_cdf^n, assembled in log space.
    pub maxima_cdf: f64,
    /// n * log1p(-eps); exact log of maxima_cdf.
    pub log_maxima_cdf: f64,
    /// Accumulated quadrature error estimate, scaled by n.
    pub quadrature_error_bound: f64,
}

/// Monte Carlo configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct McConfig {
    pub replications: u64,
    pub seed: u64,
    #[serde(default)]
    pub antithetic: bool,
}

/// Empirical df estimate at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub x: f64,
    pub y: f64,
    /// Fraction of replications whose componentwise maximum fell below the
    /// thresholds.
    pub p_hat: f64,
    /// Binomial standard error sqrt(p(1-p)/replications).
    pub std_err: f64,
}

/// Exact angular geometry for |rho| < 1 (rho = +-1 reduce to one dimension
/// and never reach the angular integrals).
pub fn angular_geometry(rho: f64, u: f64, v: f64) -> Result<AngularGeometry> {
    if !(rho.abs() < 1.0) {
        return Err(Error::domain(format!(
            "angular geometry requires |rho| < 1, got {rho}"
        )));
    }
    if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
        return Err(Error::domain(format!(
            "thresholds must lie in (0, 1), got ({u}, {v})"
        )));
    }
    let tau_n = rho.acos();
    let beta = ((v / u - rho) / tau_n.sin()).atan();
    Ok(AngularGeometry {
        tau_n,
        beta,
        beta_tilde: tau_n - beta,
        u,
        v,
    })
}

/// Relative-tolerance spec for tail-scale quadratures.
fn tail_spec(spec: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-290,
        ..*spec
    }
}

/// One angular piece: (1/2pi) int_{lo}^{pi/2} (1 - F(thr / cos a)) da, with
/// the upper limit tightened to arccos(thr) where the integrand vanishes.
/// The vanishing endpoint is rectified with a = A - z^2; when the effective
/// range is the full symmetric window both endpoints vanish and the range is
/// split at zero.
fn angular_piece(
    model: &RadialModel,
    thr: f64,
    lo: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let a_max = thr.acos();
    let lo_eff = lo.max(-a_max);
    if lo_eff >= a_max {
        return Ok(Estimate {
            value: 0.0,
            error_bound: 0.0,
        });
    }
    let ts = tail_spec(spec);
    let upper = |z: f64| {
        let a = a_max - z * z;
        model.survival(thr / a.cos()) * 2.0 * z
    };
    if lo <= -a_max {
        let lower = |z: f64| {
            let a = -a_max + z * z;
            model.survival(thr / a.cos()) * 2.0 * z
        };
        let e1 = integrate_with_bound(upper, 0.0, a_max.sqrt(), &ts)?;
        let e2 = integrate_with_bound(lower, 0.0, a_max.sqrt(), &ts)?;
        Ok(Estimate {
            value: (e1.value + e2.value) / (2.0 * std::f64::consts::PI),
            error_bound: (e1.error_bound + e2.error_bound) / (2.0 * std::f64::consts::PI),
        })
    } else {
        let e = integrate_with_bound(upper, 0.0, (a_max - lo_eff).sqrt(), &ts)?;
        Ok(Estimate {
            value: e.value / (2.0 * std::f64::consts::PI),
            error_bound: e.error_bound / (2.0 * std::f64::consts::PI),
        })
    }
}

/// Joint survival P(xi > u, eta > v) by the angular representation:
/// (1/2pi) int_{clamp(beta)}^{pi/2} (1-F(u/cos a)) da
/// + (1/2pi) int_{clamp(beta_tilde)}^{pi/2} (1-F(v/cos a)) da.
pub fn joint_survival(
    model: &RadialModel,
    rho: f64,
    u: f64,
    v: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let geo = angular_geometry(rho, u, v)?;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let b = geo.beta.clamp(-half_pi, half_pi);
    let bt = geo.beta_tilde.clamp(-half_pi, half_pi);
    let p1 = angular_piece(model, u, b, spec)?;
    let p2 = angular_piece(model, v, bt, spec)?;
    Ok(Estimate {
        value: p1.value + p2.value,
        error_bound: p1.error_bound + p2.error_bound,
    })
}

/// Marginal tail with its quadrature error bound (angular route, shared with
/// the survival pieces).
fn marginal_tail_est(model: &RadialModel, threshold: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    // 1 - G(threshold) = 2 * (1/2pi) int_{-arccos(thr)}^{arccos(thr)} ... da
    let one_sided = angular_piece(model, threshold, -std::f64::consts::FRAC_PI_2, spec)?;
    Ok(one_sided)
}

/// Exact single-pair joint df by inclusion-exclusion around the survival
/// representation; rho = 1 reduces to G(min(u, v)) and rho = -1 to the
/// countermonotone bound max(0, G(u) + G(v) - 1).
pub fn joint_cdf_exact(
    model: &RadialModel,
    rho: f64,
    u: f64,
    v: f64,
    spec: &QuadratureSpec,
) -> Result<OracleResult> {
    joint_law(model, rho, u, v, 1, spec)
}

fn joint_law(
    model: &RadialModel,
    rho: f64,
    u: f64,
    v: f64,
    n: u64,
    spec: &QuadratureSpec,
) -> Result<OracleResult> {
    if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
        return Err(Error::domain(format!(
            "thresholds must lie in (0, 1), got ({u}, {v})"
        )));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::domain(format!("rho must lie in [-1, 1], got {rho}")));
    }
    let nf = n as f64;
    let (eps, err) = if rho == 1.0 {
        let g = marginal_tail_est(model, u.min(v), spec)?;
        (g.value, g.error_bound)
    } else if rho == -1.0 {
        let gu = marginal_tail_est(model, u, spec)?;
        let gv = marginal_tail_est(model, v, spec)?;
        (
            (gu.value + gv.value).min(1.0),
            gu.error_bound + gv.error_bound,
        )
    } else {
        let gu = marginal_tail_est(model, u, spec)?;
        let gv = marginal_tail_est(model, v, spec)?;
        let s = joint_survival(model, rho, u, v, spec)?;
        (
            gu.value + gv.value - s.value,
            gu.error_bound + gv.error_bound + s.error_bound,
        )
    };
    let log_maxima = if eps < 1.0 { nf * (-eps).ln_1p() } else { f64::NEG_INFINITY };
    Ok(OracleResult {
        joint_cdf: 1.0 - eps,
        maxima_cdf: log_maxima.exp(),
        log_maxima_cdf: log_maxima,
        quadrature_error_bound: nf * err,
    })
}

/// Exact df of the normalized maxima: joint df at (1 + a_n x, 1 + a_n y)
/// raised to the n-th power, with the quadrature tolerance tightened so
/// n * (quadrature error) stays below 1e-9.
pub fn maxima_cdf_exact(
    model: &RadialModel,
    rule: &RhoRule,
    n: u64,
    x: f64,
    y: f64,
    spec: &QuadratureSpec,
) -> Result<OracleResult> {
    if n < 2 {
        return Err(Error::domain(format!(
            "maxima_cdf_exact requires n >= 2, got {n}"
        )));
    }
    let rho = rule.rho(n)?;
    let a_n = solve_a_n(model, n, spec)?;
    let u = 1.0 + a_n * x;
    let v = 1.0 + a_n * y;
    for t in [u, v] {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::ThresholdOutOfRange { threshold: t, n });
        }
    }
    let tightened = spec.tightened(1e-10 / n as f64);
    joint_law(model, rho, u, v, n, &tightened)
}

/// SplitMix64 finalizer; mixes the base seed with a replication counter so
/// per-replication streams are independent of scheduling.
fn stream_seed(base: u64, counter: u64) -> u64 {
    let mut z = base ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic inverse cdf by 60 bisection steps on [0, 1]; platform
/// samplers are avoided so reruns reproduce bit-identically everywhere.
fn inverse_cdf(model: &RadialModel, p: f64) -> f64 {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if model.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Empirical maxima df at each grid point: for every replication, draw n
/// vectors (S1, rho S1 + sqrt(1-rho^2) S2) with (S1, S2) = R (cos T, sin T),
/// T uniform on (-pi, pi], and count componentwise maxima below the
/// thresholds (1 + a_n x, 1 + a_n y).
pub fn sample_maxima(
    model: &RadialModel,
    rule: &RhoRule,
    n: u64,
    mc: &McConfig,
    grid: &[(f64, f64)],
    spec: &QuadratureSpec,
) -> Result<Vec<McEstimate>> {
    if mc.replications < 100 {
        return Err(Error::domain(format!(
            "sample_maxima requires at least 100 replications, got {}",
            mc.replications
        )));
    }
    if grid.is_empty() {
        return Err(Error::domain("sample_maxima requires a nonempty grid".to_string()));
    }
    let rho = rule.rho(n)?;
    let a_n = solve_a_n(model, n, spec)?;
    let thresholds: Vec<(f64, f64)> = grid
        .iter()
        .map(|&(x, y)| (1.0 + a_n * x, 1.0 + a_n * y))
        .collect();
    for &(u, v) in &thresholds {
        if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
            return Err(Error::ThresholdOutOfRange {
                threshold: u.min(v),
                n,
            });
        }
    }
    let comp = (1.0 - rho * rho).max(0.0).sqrt();
    let reps = mc.replications;
    let counts = (0..reps)
        .into_par_iter()
        .fold(
            || vec![0u64; grid.len()],
            |mut acc, rep| {
                let (stream, mirror) = if mc.antithetic {
                    (rep / 2, rep % 2 == 1)
                } else {
                    (rep, false)
                };
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(mc.seed, stream));
                let mut m1 = f64::NEG_INFINITY;
                let mut m2 = f64::NEG_INFINITY;
                for _ in 0..n {
                    let mut u1: f64 = rng.gen();
                    let mut u2: f64 = rng.gen();
                    if mirror {
                        u1 = 1.0 - u1;
                        u2 = 1.0 - u2;
                    }
                    let theta = (2.0 * u1 - 1.0) * std::f64::consts::PI;
                    let r = inverse_cdf(model, u2);
                    let s1 = r * theta.cos();
                    let s2 = r * theta.sin();
                    let eta = rho * s1 + comp * s2;
                    if s1 > m1 {
                        m1 = s1;
                    }
                    if eta > m2 {
                        m2 = eta;
                    }
                }
                for (k, &(u, v)) in thresholds.iter().enumerate() {
                    if m1 <= u && m2 <= v {
                        acc[k] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; grid.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(grid
        .iter()
        .zip(counts)
        .map(|(&(x, y), c)| {
            let p_hat = c as f64 / reps as f64;
            McEstimate {
                x,
                y,
                p_hat,
                std_err: (p_hat * (1.0 - p_hat) / reps as f64).sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{beta_radius, marginal_g_tail_angular};
    use approx::assert_relative_eq;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn geometry_symmetric_when_equal_thresholds() {
        for rho in [-0.7, 0.0, 0.5, 0.97] {
            let g = angular_geometry(rho, 0.9, 0.9).unwrap();
            assert_relative_eq!(g.beta, g.tau_n / 2.0, max_relative = 1e-12);
            assert_relative_eq!(g.beta + g.beta_tilde, g.tau_n, max_relative = 1e-14);
        }
        let g = angular_geometry(0.0, 0.8, 0.9).unwrap();
        assert_relative_eq!(g.tau_n, std::f64::consts::FRAC_PI_2, max_relative = 1e-15);
        assert_relative_eq!(g.beta, (0.9f64 / 0.8).atan(), max_relative = 1e-14);
        assert!(angular_geometry(1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn survival_marginal_limit() {
        // v -> 0: survival -> P(xi > u) = 1 - G(u)
        let m = beta_radius(2.0, 1.0).unwrap();
        let s = joint_survival(&m, 0.5, 0.9, 1e-9, &spec()).unwrap();
        let g = marginal_g_tail_angular(&m, 1.0 - 0.9, &spec()).unwrap();
        assert_relative_eq!(s.value, g, max_relative = 1e-8);
    }

    #[test]
    fn survival_symmetric_split_when_equal() {
        let m = beta_radius(2.0, 1.0).unwrap();
        let s_uv = joint_survival(&m, 0.5, 0.9, 0.9, &spec()).unwrap();
        let s_vu = joint_survival(&m, 0.5, 0.9, 0.9, &spec()).unwrap();
        assert_eq!(s_uv.value.to_bits(), s_vu.value.to_bits());
        assert!(s_uv.value > 0.0);
    }

    #[test]
    fn joint_cdf_two_increasing_and_exchangeable() {
        let m = beta_radius(2.0, 1.0).unwrap();
        let rho = 0.6;
        let f = |u: f64, v: f64| joint_cdf_exact(&m, rho, u, v, &spec()).unwrap().joint_cdf;
        let (u1, u2, v1, v2) = (0.7, 0.9, 0.75, 0.95);
        let rect = f(u2, v2) - f(u1, v2) - f(u2, v1) + f(u1, v1);
        assert!(rect >= -1e-10, "rectangle mass {rect}");
        assert_relative_eq!(f(0.8, 0.93), f(0.93, 0.8), max_relative = 1e-11);
    }

    #[test]
    fn joint_cdf_comonotone_reduction() {
        let m = beta_radius(2.0, 1.0).unwrap();
        let r = joint_cdf_exact(&m, 1.0, 0.9, 0.95, &spec()).unwrap();
        let g = 1.0 - marginal_g_tail_angular(&m, 1.0 - 0.9, &spec()).unwrap();
        assert_relative_eq!(r.joint_cdf, g, max_relative = 1e-11);
        // countermonotone
        let r = joint_cdf_exact(&m, -1.0, 0.9, 0.95, &spec()).unwrap();
        let gu = marginal_g_tail_angular(&m, 0.1, &spec()).unwrap();
        let gv = marginal_g_tail_angular(&m, 0.05, &spec()).unwrap();
        assert_relative_eq!(r.joint_cdf, 1.0 - gu - gv, max_relative = 1e-10);
    }

    #[test]
    fn joint_cdf_frechet_bounds_and_pqd() {
        let m = beta_radius(2.0, 3.0).unwrap();
        for rho in [0.0, 0.4, 0.9] {
            for &(u, v) in &[(0.7, 0.8), (0.9, 0.95), (0.85, 0.6)] {
                let c = joint_cdf_exact(&m, rho, u, v, &spec()).unwrap().joint_cdf;
                let gu = 1.0 - marginal_g_tail_angular(&m, 1.0 - u, &spec()).unwrap();
                let gv = 1.0 - marginal_g_tail_angular(&m, 1.0 - v, &spec()).unwrap();
                assert!(c <= gu.min(gv) + 1e-11);
                assert!(c >= (gu + gv - 1.0).max(0.0) - 1e-11);
                // positive quadrant dependence for rho >= 0
                assert!(c >= gu * gv - 1e-10, "rho={rho} ({u},{v})");
            }
        }
    }

    #[test]
    fn marginal_consistency_near_upper_endpoint() {
        let m = beta_radius(2.0, 1.0).unwrap();
        let r = joint_cdf_exact(&m, 0.5, 0.9, 1.0 - 1e-12, &spec()).unwrap();
        let g = 1.0 - marginal_g_tail_angular(&m, 0.1, &spec()).unwrap();
        assert_relative_eq!(r.joint_cdf, g, epsilon = 1e-10);
    }

    #[test]
    fn maxima_threshold_validation() {
        let m = beta_radius(2.0, 1.0).unwrap();
        let rule = RhoRule::OneMinusPower { exponent: 2.0 / 3.0 };
        // huge |x| pushes the threshold out of (0, 1)
        let r = maxima_cdf_exact(&m, &rule, 100, -2000.0, -1.0, &spec());
        assert!(matches!(r, Err(Error::ThresholdOutOfRange { .. })));
    }

    #[test]
    fn mc_deterministic_across_worker_counts() {
        let m = beta_radius(2.0, 1.0).unwrap();
        let rule = RhoRule::OneMinusPower { exponent: 2.0 / 3.0 };
        let mc = McConfig {
            replications: 400,
            seed: 7,
            antithetic: false,
        };
        let grid = [(-1.0, -1.0), (-2.0, -0.5)];
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let e1 = pool1
            .install(|| sample_maxima(&m, &rule, 50, &mc, &grid, &spec()))
            .unwrap();
        let e4 = pool4
            .install(|| sample_maxima(&m, &rule, 50, &mc, &grid, &spec()))
            .unwrap();
        for (a, b) in e1.iter().zip(&e4) {
            assert_eq!(a.p_hat.to_bits(), b.p_hat.to_bits());
        }
        // SE formula is binomial
        for e in &e1 {
            assert_relative_eq!(
                e.std_err,
                (e.p_hat * (1.0 - e.p_hat) / 400.0).sqrt(),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn mc_comonotone_matches_min_threshold() {
        // rho = 1: xi = eta a.s., so the bivariate indicator equals the
        // univariate one at the min threshold
        let m = beta_radius(2.0, 1.0).unwrap();
        let rule = RhoRule::Constant(1.0);
        let mc = McConfig {
            replications: 500,
            seed: 11,
            antithetic: false,
        };
        let est = sample_maxima(&m, &rule, 40, &mc, &[(-1.0, -2.0), (-2.0, -2.0)], &spec())
            .unwrap();
        // (x, y) = (-1, -2) and (-2, -2) share min = -2, hence equal counts
        assert_eq!(est[0].p_hat.to_bits(), est[1].p_hat.to_bits());
    }

    #[test]
    fn mc_agrees_with_exact_oracle() {
        let m = beta_radius(2.0, 1.0).unwrap();
        let rule = RhoRule::OneMinusPower { exponent: 2.0 / 3.0 };
        let mc = McConfig {
            replications: 20_000,
            seed: 123,
            antithetic: false,
        };
        let grid = [(-1.0, -1.0)];
        let est = sample_maxima(&m, &rule, 100, &mc, &grid, &spec()).unwrap();
        let exact = maxima_cdf_exact(&m, &rule, 100, -1.0, -1.0, &spec()).unwrap();
        let gap = (est[0].p_hat - exact.maxima_cdf).abs();
        assert!(
            gap <= 4.0 * est[0].std_err,
            "MC {} vs exact {} (4se = {})",
            est[0].p_hat,
            exact.maxima_cdf,
            4.0 * est[0].std_err
        );
    }

    #[test]
    fn mc_requires_enough_replications() {
        let m = beta_radius(2.0, 1.0).unwrap();
        let rule = RhoRule::Constant(0.5);
        let mc = McConfig {
            replications: 10,
            seed: 1,
            antithetic: false,
        };
        assert!(sample_maxima(&m, &rule, 10, &mc, &[(-1.0, -1.0)], &spec()).is_err());
    }
}
