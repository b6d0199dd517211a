//! The self-contained invariant suite: every module's documented invariants,
//! runnable deterministically with no configuration.

use crate::error::Result;
use crate::expansions::{
    bracket_boundary, example_delta_beta, expansion_result, q_theorem1, ExpansionInputs,
    DEFAULT_BOUNDARY_TOL,
};
use crate::limits::{classify_regime, h_limit, Lambda, RateK};
use crate::norming::{
    beta_example_a_n, beta_example_constants, build_sequence, solve_a_n, RhoRule,
};
use crate::oracle::{
    angular_geometry, joint_cdf_exact, joint_survival, sample_maxima, McConfig,
};
use crate::radial::{
    beta_radius, g_tail_ratio_expansion, lemma2_expansion, lemma2_expectation_exact,
    marginal_g_tail_angular, marginal_g_tail_berman,
};
use crate::specfun::{c_alpha, integrate, integrate_endpoint_powers, psi_alpha, QuadratureSpec};

/// Outcome of one invariant check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Full suite outcome.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Test hooks for mutation checks. `psi_normalizer_scale` multiplies the
/// psi_alpha normalizer seen by the suite; anything but 1.0 must break the
/// df-symmetry invariant.
#[derive(Debug, Clone, Copy)]
pub struct VerifyHooks {
    pub psi_normalizer_scale: f64,
}

impl Default for VerifyHooks {
    fn default() -> Self {
        VerifyHooks {
            psi_normalizer_scale: 1.0,
        }
    }
}

fn check(name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match body() {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check {
            name,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// Run the invariant suite with default hooks.
pub fn run_invariant_suite() -> VerifyReport {
    run_invariant_suite_with(&VerifyHooks::default())
}

/// Run the invariant suite; hooks let tests inject deliberate defects.
pub fn run_invariant_suite_with(hooks: &VerifyHooks) -> VerifyReport {
    let scale = hooks.psi_normalizer_scale;
    let mut checks = Vec::new();

    checks.push(check("specfun/psi_df_axioms", || {
        let mut worst: f64 = 0.0;
        for alpha in [0.3, 0.5, 1.0, 1.7, 3.0] {
            worst = worst.max((scale * psi_alpha(alpha, -1.0)?).abs());
            worst = worst.max((scale * psi_alpha(alpha, 1.0)? - 1.0).abs());
        }
        Ok((worst <= 1e-11, format!("worst endpoint gap {worst:e}")))
    }));

    checks.push(check("specfun/psi_symmetry", || {
        let mut worst: f64 = 0.0;
        for alpha in [0.3, 0.5, 1.0, 1.7, 3.0] {
            for i in 0..=100 {
                let z = -1.0 + 0.02 * f64::from(i);
                let s = scale * psi_alpha(alpha, z)? + scale * psi_alpha(alpha, -z)?;
                worst = worst.max((s - 1.0).abs());
            }
        }
        Ok((worst <= 1e-11, format!("worst symmetry gap {worst:e}")))
    }));

    checks.push(check("specfun/psi_monotone", || {
        for alpha in [0.3, 0.5, 1.0, 1.7, 3.0] {
            let mut prev = -1.0;
            for i in 0..=100 {
                let z = -1.0 + 0.02 * f64::from(i);
                let p = scale * psi_alpha(alpha, z)?;
                if p < prev - 1e-12 {
                    return Ok((false, format!("non-monotone at alpha={alpha}, z={z}")));
                }
                prev = p;
            }
        }
        Ok((true, "nondecreasing on [-1, 1]".into()))
    }));

    checks.push(check("specfun/c_alpha_quadrature_identity", || {
        let mut worst: f64 = 0.0;
        for alpha in [0.3, 0.5, 1.0, 1.7, 3.0] {
            let q = integrate_endpoint_powers(|_| 1.0, 0.0, 1.0, -0.5, alpha, &spec())?;
            worst = worst.max(((q - c_alpha(alpha)?) / c_alpha(alpha)?).abs());
        }
        Ok((worst <= 1e-10, format!("worst relative gap {worst:e}")))
    }));

    checks.push(check("specfun/polynomial_exactness", || {
        let mut worst: f64 = 0.0;
        for deg in 0..=22i32 {
            let exact = 1.0 / f64::from(deg + 1);
            let v = integrate(|s| s.powi(deg), 0.0, 1.0, &spec())?;
            worst = worst.max((v - exact).abs() / exact);
        }
        Ok((worst <= 1e-13, format!("worst relative gap {worst:e}")))
    }));

    checks.push(check("radial/cross_route_marginal_tail", || {
        let models = [
            beta_radius(1.0, 1.0)?,
            beta_radius(2.0, 1.0)?,
            beta_radius(2.0, 3.0)?,
            beta_radius(0.5, 2.0)?,
        ];
        let mut worst: f64 = 0.0;
        for m in &models {
            for u in [1e-1, 1e-2, 1e-3, 1e-4] {
                let a = marginal_g_tail_angular(m, u, &spec())?;
                let b = marginal_g_tail_berman(m, u, &spec())?;
                worst = worst.max(((a - b) / a).abs());
            }
        }
        Ok((worst <= 1e-10, format!("worst relative gap {worst:e}")))
    }));

    checks.push(check("radial/lemma3_first_order_slope", || {
        let models = [
            beta_radius(1.0, 1.0)?,
            beta_radius(2.0, 1.0)?,
            beta_radius(2.0, 3.0)?,
            beta_radius(0.5, 2.0)?,
        ];
        let mut worst: f64 = 0.0;
        for m in &models {
            let us: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];
            let mut pts = Vec::new();
            for &u in &us {
                pts.push((u.ln(), marginal_g_tail_angular(m, u, &spec())?.ln()));
            }
            let slope = fit_slope(&pts);
            worst = worst.max((slope - (m.alpha() + 0.5)).abs());
        }
        Ok((worst <= 0.02, format!("worst slope error {worst:.4}")))
    }));

    checks.push(check("radial/lemma3_second_order_residual", || {
        let m = beta_radius(2.0, 1.0)?;
        for x_abs in [0.5, 2.0] {
            let mut residuals = Vec::new();
            for t in [1e2, 1e3, 1e4] {
                let num = marginal_g_tail_berman(&m, 1.0 / (t * x_abs), &spec())?
                    / marginal_g_tail_berman(&m, 1.0 / t, &spec())?;
                let pred = g_tail_ratio_expansion(&m, t, x_abs, &spec())?;
                residuals.push((num - pred).abs() / (1.0 / t + m.aux(t)));
            }
            if !decreasing(&residuals) {
                return Ok((false, format!("x_abs={x_abs}: {residuals:?}")));
            }
        }
        Ok((true, "normalized residuals strictly decreasing".into()))
    }));

    checks.push(check("radial/lemma2_normalized_residual", || {
        let m = beta_radius(2.0, 1.0)?;
        for (qa, qb) in [(0.5, 0.5), (2.0, 3.0)] {
            let mut residuals = Vec::new();
            for n in [1_000u64, 10_000, 100_000] {
                let exact = lemma2_expectation_exact(&m, qa, qb, n, -1.0, &spec())?;
                let pred = lemma2_expansion(&m, qa, qb, n, -1.0, &spec())?;
                let a_n = solve_a_n(&m, n, &spec())?;
                residuals.push((exact - pred).abs() / exact / (a_n + m.aux(1.0 / a_n)));
            }
            if !decreasing(&residuals) {
                return Ok((false, format!("(qa,qb)=({qa},{qb}): {residuals:?}")));
            }
        }
        Ok((true, "normalized residuals decreasing over the n-schedule".into()))
    }));

    checks.push(check("radial/numeric_2rv_check", || {
        let m = beta_radius(2.0, 1.0)?;
        for s in [0.5, 2.0] {
            let mut gaps = Vec::new();
            for t in [1e3, 1e4, 1e5] {
                let ratio = m.tail(t * s)? / m.tail(t)?;
                let lhs = (ratio - s.powf(-m.alpha())) / m.aux(t);
                let rhs = s.powf(-m.alpha()) * (s.powf(m.tau()) - 1.0) / m.tau();
                gaps.push((lhs - rhs).abs());
            }
            if !decreasing(&gaps) {
                return Ok((false, format!("s={s}: {gaps:?}")));
            }
        }
        Ok((true, "2RV deviation shrinks in t".into()))
    }));

    checks.push(check("norming/solve_vs_closed_form", || {
        let m = beta_radius(2.0, 1.0)?;
        let mut gaps = Vec::new();
        for n in [1_000u64, 10_000, 100_000, 1_000_000] {
            let solved = solve_a_n(&m, n, &spec())?;
            let closed = beta_example_a_n(2.0, 1.0, n, &spec())?;
            gaps.push(((closed - solved) / solved).abs());
        }
        Ok((decreasing(&gaps), format!("relative gaps {gaps:?}")))
    }));

    checks.push(check("norming/lambda_n_to_lambda", || {
        let m = beta_radius(2.0, 1.0)?;
        let rule = RhoRule::OneMinusPower {
            exponent: 2.0 / 3.0,
        };
        let consts = beta_example_constants(2.0, 1.0, &spec())?;
        let mut gaps = Vec::new();
        let mut scores = Vec::new();
        for n in [1_000u64, 10_000, 100_000, 1_000_000] {
            let seq = build_sequence(&m, &rule, n, &spec())?;
            gaps.push((seq.lambda_n - consts.lambda).abs());
            scores.push(((seq.lambda_n - consts.lambda) / seq.c_n - consts.gamma).abs());
        }
        Ok((
            decreasing(&gaps) && decreasing(&scores),
            format!("|lambda_n-lambda| {gaps:?}; |(l_n-l)/c_n - gamma| {scores:?}"),
        ))
    }));

    checks.push(check("limits/h_bounds_and_ordering", || {
        for lam_v in [0.2, 0.6, 1.0, 3.0] {
            let lam = Lambda::finite(lam_v)?;
            for alpha in [0.5, 1.0, 2.0] {
                for i in 0..12 {
                    for j in 0..12 {
                        let x = -5.0 + 0.45 * f64::from(i);
                        let y = -5.0 + 0.45 * f64::from(j);
                        let h = h_limit(alpha, &lam, x, y)?;
                        let indep = h_limit(alpha, &Lambda::Infinite, x, y)?;
                        let comon = h_limit(alpha, &Lambda::Zero, x, y)?;
                        if !(0.0..=1.0).contains(&h)
                            || h < indep - 1e-12
                            || h > comon + 1e-12
                        {
                            return Ok((false, format!("violation at ({x}, {y})")));
                        }
                    }
                }
            }
        }
        Ok((true, "independence <= H <= comonotone on the grid".into()))
    }));

    checks.push(check("limits/h_monotone", || {
        let lam = Lambda::finite(0.6)?;
        for alpha in [0.5, 1.0, 2.0] {
            for j in 0..8 {
                let y = -5.0 + 0.62 * f64::from(j);
                let mut prev = f64::NEG_INFINITY;
                for i in 0..50 {
                    let x = -5.0 + 4.95 * f64::from(i) / 49.0;
                    let h = h_limit(alpha, &lam, x, y)?;
                    if h < prev - 1e-12 {
                        return Ok((false, format!("decreasing at ({x}, {y})")));
                    }
                    prev = h;
                }
            }
        }
        Ok((true, "H nondecreasing along grid lines".into()))
    }));

    checks.push(check("limits/h_continuity_across_boundary", || {
        let lam_v = beta_example_constants(2.0, 1.0, &spec())?.lambda;
        let lam = Lambda::finite(lam_v)?;
        let x = -0.25;
        let step = 1e-6;
        let mut worst: f64 = 0.0;
        for y0 in [
            -(std::f64::consts::SQRT_2 * lam_v - 0.5).powi(2),
            -(std::f64::consts::SQRT_2 * lam_v + 0.5).powi(2),
        ] {
            let inside = h_limit(1.0, &lam, x, y0 - step)?;
            let outside = h_limit(1.0, &lam, x, y0 + step)?;
            worst = worst.max((inside - outside).abs());
        }
        Ok((worst <= 1e-4, format!("worst jump {worst:e} at step {step:e}")))
    }));

    checks.push(check("expansions/swap_symmetry", || {
        let m = beta_radius(2.0, 1.0)?;
        let rule = RhoRule::OneMinusPower {
            exponent: 2.0 / 3.0,
        };
        let seq = build_sequence(&m, &rule, 10_000, &spec())?;
        let mut worst: f64 = 0.0;
        for &(x, y) in &[(-1.0, -2.0), (-0.7, -1.3), (-0.25, -0.15)] {
            let a = ExpansionInputs::from_sequence(&m, &seq, x, y, DEFAULT_BOUNDARY_TOL, &spec())?;
            let b = ExpansionInputs::from_sequence(&m, &seq, y, x, DEFAULT_BOUNDARY_TOL, &spec())?;
            let ra = expansion_result(&a)?.delta_pred;
            let rb = expansion_result(&b)?.delta_pred;
            worst = worst.max(((ra - rb) / ra.abs().max(1e-300)).abs());
        }
        Ok((worst <= 1e-10, format!("worst swap asymmetry {worst:e}")))
    }));

    checks.push(check("expansions/interior_degenerates_to_boundary", || {
        let m = beta_radius(2.0, 1.0)?;
        let rule = RhoRule::OneMinusPower {
            exponent: 2.0 / 3.0,
        };
        let seq = build_sequence(&m, &rule, 10_000, &spec())?;
        let lam = seq.lambda.as_finite().unwrap();
        let x = -0.25;
        let y_bnd = -(std::f64::consts::SQRT_2 * lam - 0.5).powi(2);
        let bnd =
            ExpansionInputs::from_sequence(&m, &seq, x, y_bnd, DEFAULT_BOUNDARY_TOL, &spec())?;
        let target = bracket_boundary(&bnd)?;
        let mut gaps = Vec::new();
        for eps in [1e-1, 1e-2, 1e-3] {
            let inputs = ExpansionInputs::from_sequence(
                &m,
                &seq,
                x,
                y_bnd - eps,
                DEFAULT_BOUNDARY_TOL,
                &spec(),
            )?;
            let pen = expansion_result(&inputs)?.penalty_term;
            gaps.push((q_theorem1(&inputs)? + pen - target).abs());
        }
        Ok((decreasing(&gaps), format!("gaps along the path {gaps:?}")))
    }));

    checks.push(check("expansions/brackets_vanish_with_small_factors", || {
        let m = beta_radius(2.0, 1.0)?;
        let rule = RhoRule::OneMinusPower {
            exponent: 2.0 / 3.0,
        };
        let seq = build_sequence(&m, &rule, 10_000, &spec())?;
        let mut inputs =
            ExpansionInputs::from_sequence(&m, &seq, -1.0, -1.5, DEFAULT_BOUNDARY_TOL, &spec())?;
        let q1 = {
            inputs.a_n = 1e-5;
            inputs.c_n = 1e-5;
            inputs.a_val = 1e-5;
            inputs.n = 100_000;
            expansion_result(&inputs)?.bracket
        };
        let q2 = {
            inputs.a_n = 5e-6;
            inputs.c_n = 5e-6;
            inputs.a_val = 5e-6;
            inputs.n = 200_000;
            expansion_result(&inputs)?.bracket
        };
        let halves = (q1 / q2 - 2.0).abs() < 1e-3;
        Ok((
            q1.abs() < 1e-4 && halves,
            format!("bracket {q1:e} -> {q2:e} under halved factors"),
        ))
    }));

    checks.push(check("expansions/generic_vs_example_grid", || {
        let m = beta_radius(2.0, 1.0)?;
        let consts = beta_example_constants(2.0, 1.0, &spec())?;
        let n = 10_000u64;
        let an_lead = crate::norming::beta_example_a_n_leading(2.0, 1.0, n, &spec())?;
        let mut worst: f64 = 0.0;
        let grid = [-0.3, -0.75, -1.25, -2.0, -3.0];
        for &x in &grid {
            for &y in &grid {
                let regime =
                    classify_regime(x, y, &Lambda::Finite(consts.lambda), DEFAULT_BOUNDARY_TOL)?;
                let inputs = ExpansionInputs {
                    alpha: 1.0,
                    tau: -1.0,
                    a_n: an_lead,
                    c_n: (n as f64).powf(-2.0 / 3.0),
                    a_val: m.aux(1.0 / an_lead),
                    gamma: consts.gamma,
                    n,
                    x,
                    y,
                    lambda: Lambda::Finite(consts.lambda),
                    rate_k: RateK::Finite(1.0),
                    regime,
                    quad: spec(),
                    rate_regime_ok: None,
                };
                let generic = expansion_result(&inputs)?.delta_pred;
                let example = example_delta_beta(2.0, 1.0, x, y, n, &spec())?;
                let scale = generic.abs().max(example.abs()).max(1e-300);
                worst = worst.max(((generic - example) / scale).abs());
            }
        }
        Ok((worst <= 1e-10, format!("worst relative gap {worst:e}")))
    }));

    checks.push(check("oracle/marginal_consistency", || {
        let m = beta_radius(2.0, 1.0)?;
        let r = joint_cdf_exact(&m, 0.5, 0.9, 1.0 - 1e-12, &spec())?;
        let g = 1.0 - marginal_g_tail_angular(&m, 0.1, &spec())?;
        let gap = (r.joint_cdf - g).abs();
        Ok((gap <= 1e-10, format!("gap {gap:e}")))
    }));

    checks.push(check("oracle/frechet_bounds_and_pqd", || {
        let m = beta_radius(2.0, 3.0)?;
        for rho in [0.0, 0.4, 0.9] {
            for &(u, v) in &[(0.7, 0.8), (0.9, 0.95), (0.85, 0.6)] {
                let c = joint_cdf_exact(&m, rho, u, v, &spec())?.joint_cdf;
                let gu = 1.0 - marginal_g_tail_angular(&m, 1.0 - u, &spec())?;
                let gv = 1.0 - marginal_g_tail_angular(&m, 1.0 - v, &spec())?;
                if c > gu.min(gv) + 1e-11
                    || c < (gu + gv - 1.0).max(0.0) - 1e-11
                    || c < gu * gv - 1e-10
                {
                    return Ok((false, format!("violated at rho={rho}, ({u}, {v})")));
                }
            }
        }
        Ok((true, "Frechet bounds and PQD hold on the grid".into()))
    }));

    checks.push(check("oracle/angle_asymptotics", || {
        // sin(beta)/sqrt(a_n) and sin(beta~)/sqrt(a_n) against displays,
        // normalized residuals shrinking along the example sequence
        let consts = beta_example_constants(2.0, 1.0, &spec())?;
        let (lam, gam) = (consts.lambda, consts.gamma);
        let (x, y) = (-1.0, -2.0);
        let d = y - x;
        let mut r_beta = Vec::new();
        let mut r_btil = Vec::new();
        for n in [10_000u64, 1_000_000, 100_000_000] {
            let a_n = beta_example_a_n(2.0, 1.0, n, &spec())?;
            let c_n = (n as f64).powf(-2.0 / 3.0);
            let rho = 1.0 - c_n;
            let u = 1.0 + a_n * x;
            let v = 1.0 + a_n * y;
            let geo = angular_geometry(rho, u, v)?;
            let rhs_b = lam + d / (2.0 * lam) + gam * (1.0 - d / (2.0 * lam * lam)) * c_n
                - 0.5
                    * a_n
                    * (lam * d + x * d / lam + 0.75 * d * d / lam + d.powi(3) / (8.0 * lam.powi(3)));
            let rhs_t = lam - d / (2.0 * lam) + gam * (1.0 + d / (2.0 * lam * lam)) * c_n
                + 0.5
                    * a_n
                    * (lam * d + x * d / lam + 0.25 * d * d / lam + d.powi(3) / (8.0 * lam.powi(3)));
            r_beta.push((geo.beta.sin() / a_n.sqrt() - rhs_b).abs() / (a_n + c_n));
            r_btil.push((geo.beta_tilde.sin() / a_n.sqrt() - rhs_t).abs() / (a_n + c_n));
        }
        Ok((
            decreasing(&r_beta) && decreasing(&r_btil),
            format!("beta residuals {r_beta:?}; beta~ residuals {r_btil:?}"),
        ))
    }));

    checks.push(check("oracle/mc_determinism", || {
        let m = beta_radius(2.0, 1.0)?;
        let rule = RhoRule::OneMinusPower {
            exponent: 2.0 / 3.0,
        };
        let mc = McConfig {
            replications: 2_000,
            seed: 42,
            antithetic: false,
        };
        let grid = [(-1.0, -1.0), (-2.0, -0.5)];
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| crate::error::Error::Io(e.to_string()))?;
        let pool3 = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .map_err(|e| crate::error::Error::Io(e.to_string()))?;
        let e1 = pool1.install(|| sample_maxima(&m, &rule, 50, &mc, &grid, &spec()))?;
        let e2 = pool3.install(|| sample_maxima(&m, &rule, 50, &mc, &grid, &spec()))?;
        let same = e1
            .iter()
            .zip(&e2)
            .all(|(a, b)| a.p_hat.to_bits() == b.p_hat.to_bits());
        Ok((same, "bit-identical across 1 and 3 workers".into()))
    }));

    checks.push(check("oracle/survival_positive_dependence", || {
        let m = beta_radius(2.0, 1.0)?;
        let s = joint_survival(&m, 0.5, 0.9, 0.95, &spec())?;
        Ok((
            s.value > 0.0 && s.value < 1.0,
            format!("survival {0:e}", s.value),
        ))
    }));

    checks.push(check("study/rows_match_classification", || {
        let cfg = crate::study::StudyConfig::from_toml(
            r#"
n_schedule = [1000, 10000]

[model]
kind = "beta"
a = 2.0
b = 1.0

[rho]
kind = "one_minus_power"
exponent = 0.6666666666666666

[[grid]]
x = -1.0
y = -1.0

[[grid]]
branch = "far_y"
x = -1.0
"#,
        )?;
        let report = crate::study::run_convergence_study(&cfg)?;
        let consts = beta_example_constants(2.0, 1.0, &spec())?;
        let ok = crate::study::rows_match_classification(
            &report,
            &Lambda::Finite(consts.lambda),
        )?;
        Ok((
            ok && report.failures.is_empty(),
            format!("{} rows, {} failures", report.rows.len(), report.failures.len()),
        ))
    }));

    VerifyReport { checks }
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbed_psi_normalizer_fails_symmetry() {
        let hooks = VerifyHooks {
            psi_normalizer_scale: 1.01,
        };
        let report = run_invariant_suite_with(&hooks);
        let sym = report
            .checks
            .iter()
            .find(|c| c.name == "specfun/psi_symmetry")
            .unwrap();
        assert!(!sym.pass, "mutated normalizer must break symmetry");
    }
}
