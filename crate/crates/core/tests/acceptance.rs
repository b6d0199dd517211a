//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured figures. Tolerances are fixed here, not tuned at run time.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion lines.

use std::time::Instant;

use ellmax::study::{emit_report, parse_report_csv, run_convergence_study, ReportFormat, StudyConfig};
use ellmax::{
    beta_example_a_n, beta_example_constants, beta_radius, build_sequence, c_alpha,
    example_delta_beta, expansion_result, g_tail_ratio_expansion, h_limit,
    lemma2_expansion, lemma2_expectation_exact, marginal_g_tail_angular, marginal_g_tail_berman,
    maxima_cdf_exact, psi_alpha, sample_maxima, solve_a_n, ExpansionInputs, Lambda, McConfig,
    QuadratureSpec, RadialModel, RhoRule, DEFAULT_BOUNDARY_TOL,
};

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn example_rule() -> RhoRule {
    RhoRule::OneMinusPower {
        exponent: 2.0 / 3.0,
    }
}

fn budget(name: &str, started: Instant, limit_s: u64) {
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() < limit_s,
        "{name}: runtime {elapsed:.1?} exceeded {limit_s}s budget"
    );
}

/// Criterion 1: psi_alpha df axioms to 1e-11 and the c_alpha
/// quadrature-vs-Gamma identity to 1e-10 relative, alpha in
/// {0.3, 0.5, 1, 1.7, 3}. Runtime < 10 s.
#[test]
fn criterion_1_special_functions() {
    let started = Instant::now();
    let mut worst_axiom: f64 = 0.0;
    let mut worst_c: f64 = 0.0;
    for alpha in [0.3, 0.5, 1.0, 1.7, 3.0] {
        worst_axiom = worst_axiom.max(psi_alpha(alpha, -1.0).unwrap().abs());
        worst_axiom = worst_axiom.max((psi_alpha(alpha, 1.0).unwrap() - 1.0).abs());
        let mut prev = -1.0f64;
        for i in 0..=400 {
            let z = -1.0 + 2.0 * f64::from(i) / 400.0;
            let p = psi_alpha(alpha, z).unwrap();
            let q = psi_alpha(alpha, -z).unwrap();
            worst_axiom = worst_axiom.max((p + q - 1.0).abs());
            assert!(
                p >= prev - 1e-12,
                "criterion 1: psi not monotone at alpha={alpha}, z={z}"
            );
            prev = p;
        }
        let quad = ellmax::specfun::integrate_endpoint_powers(
            |_| 1.0,
            0.0,
            1.0,
            -0.5,
            alpha,
            &spec(),
        )
        .unwrap();
        let closed = c_alpha(alpha).unwrap();
        worst_c = worst_c.max(((quad - closed) / closed).abs());
    }
    assert!(worst_axiom <= 1e-11, "psi axiom gap {worst_axiom:e}");
    assert!(worst_c <= 1e-10, "c_alpha identity gap {worst_c:e}");
    budget("criterion 1", started, 10);
    println!(
        "ACCEPT criterion 1 PASS: psi axioms {worst_axiom:.2e} <= 1e-11, c_alpha identity {worst_c:.2e} <= 1e-10 rel ({:.2?})",
        started.elapsed()
    );
}

/// Criterion 2: Berman vs angular marginal-tail routes agree to 1e-10
/// relative on u in {1e-1..1e-4} across four Beta models; G-tail log-slope
/// equals alpha + 1/2 within 0.02. Runtime < 30 s.
#[test]
fn criterion_2_marginal_tail_cross_route() {
    let started = Instant::now();
    let models = [
        beta_radius(1.0, 1.0).unwrap(),
        beta_radius(2.0, 1.0).unwrap(),
        beta_radius(2.0, 3.0).unwrap(),
        beta_radius(0.5, 2.0).unwrap(),
    ];
    let mut worst_route: f64 = 0.0;
    let mut worst_slope: f64 = 0.0;
    for m in &models {
        for u in [1e-1, 1e-2, 1e-3, 1e-4] {
            let a = marginal_g_tail_angular(m, u, &spec()).unwrap();
            let b = marginal_g_tail_berman(m, u, &spec()).unwrap();
            worst_route = worst_route.max(((a - b) / a).abs());
        }
        let us: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];
        let pts: Vec<(f64, f64)> = us
            .iter()
            .map(|&u| {
                (
                    u.ln(),
                    marginal_g_tail_angular(m, u, &spec()).unwrap().ln(),
                )
            })
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        worst_slope = worst_slope.max((slope - (m.alpha() + 0.5)).abs());
    }
    assert!(worst_route <= 1e-10, "cross-route gap {worst_route:e}");
    assert!(worst_slope <= 0.02, "log-slope error {worst_slope}");
    budget("criterion 2", started, 30);
    println!(
        "ACCEPT criterion 2 PASS: cross-route {worst_route:.2e} <= 1e-10 rel, slope error {worst_slope:.4} <= 0.02 ({:.2?})",
        started.elapsed()
    );
}

/// Criterion 3: Lemma 3 second order for Beta(2,1): normalized residual
/// |numeric ratio - expansion| / (t^{-1} + A(t)) strictly decreasing over
/// t in {1e2, 1e3, 1e4} at x_abs in {1/2, 2}. Runtime < 30 s.
#[test]
fn criterion_3_lemma3_second_order() {
    let started = Instant::now();
    let m = beta_radius(2.0, 1.0).unwrap();
    let mut lines = Vec::new();
    for x_abs in [0.5, 2.0] {
        let mut prev = f64::INFINITY;
        for t in [1e2, 1e3, 1e4] {
            let num = marginal_g_tail_berman(&m, 1.0 / (t * x_abs), &spec()).unwrap()
                / marginal_g_tail_berman(&m, 1.0 / t, &spec()).unwrap();
            let pred = g_tail_ratio_expansion(&m, t, x_abs, &spec()).unwrap();
            let resid = (num - pred).abs() / (1.0 / t + m.aux(t));
            assert!(
                resid < prev,
                "criterion 3: residual not strictly decreasing at x_abs={x_abs}, t={t}: {resid:e} vs {prev:e}"
            );
            prev = resid;
        }
        lines.push(format!("x_abs={x_abs} final residual {prev:.2e}"));
    }
    budget("criterion 3", started, 30);
    println!(
        "ACCEPT criterion 3 PASS: normalized residuals strictly decreasing ({}) ({:.2?})",
        lines.join("; "),
        started.elapsed()
    );
}

/// Criterion 4: Lemma 2 normalized residual
/// |exact - expansion| / (a_n + A(a_n^{-1})) decreasing over
/// n in {1e3, 1e4, 1e5} for (qa, qb) in {(1/2,1/2), (2,3)}. Runtime < 1 min.
#[test]
fn criterion_4_lemma2_expansion() {
    let started = Instant::now();
    let m = beta_radius(2.0, 1.0).unwrap();
    let mut lines = Vec::new();
    for (qa, qb) in [(0.5, 0.5), (2.0, 3.0)] {
        let mut prev = f64::INFINITY;
        for n in [1_000u64, 10_000, 100_000] {
            let exact = lemma2_expectation_exact(&m, qa, qb, n, -1.0, &spec()).unwrap();
            let pred = lemma2_expansion(&m, qa, qb, n, -1.0, &spec()).unwrap();
            let a_n = solve_a_n(&m, n, &spec()).unwrap();
            let resid = (exact - pred).abs() / exact / (a_n + m.aux(1.0 / a_n));
            assert!(
                resid < prev,
                "criterion 4: residual not decreasing at (qa,qb)=({qa},{qb}), n={n}"
            );
            prev = resid;
        }
        lines.push(format!("(qa,qb)=({qa},{qb}) final residual {prev:.2e}"));
    }
    budget("criterion 4", started, 60);
    println!(
        "ACCEPT criterion 4 PASS: normalized residuals decreasing ({}) ({:.2?})",
        lines.join("; "),
        started.elapsed()
    );
}

/// Criterion 5: solve_a_n vs the example closed form, relative gap <= 5% at
/// n = 1e4 and <= 2% at 1e6; (lambda_n - lambda)/c_n trending to gamma with
/// shrinking gaps. Runtime < 1 min.
#[test]
fn criterion_5_norming() {
    let started = Instant::now();
    let m = beta_radius(2.0, 1.0).unwrap();
    let consts = beta_example_constants(2.0, 1.0, &spec()).unwrap();
    let gap_at = |n: u64| {
        let solved = solve_a_n(&m, n, &spec()).unwrap();
        let closed = beta_example_a_n(2.0, 1.0, n, &spec()).unwrap();
        ((closed - solved) / solved).abs()
    };
    let g4 = gap_at(10_000);
    let g6 = gap_at(1_000_000);
    assert!(g4 <= 0.05, "closed-form gap at n=1e4: {g4:e}");
    assert!(g6 <= 0.02, "closed-form gap at n=1e6: {g6:e}");
    let mut prev = f64::INFINITY;
    for n in [1_000u64, 10_000, 100_000, 1_000_000] {
        let seq = build_sequence(&m, &example_rule(), n, &spec()).unwrap();
        let score = ((seq.lambda_n - consts.lambda) / seq.c_n - consts.gamma).abs();
        assert!(
            score < prev,
            "criterion 5: (lambda_n-lambda)/c_n gap not shrinking at n={n}"
        );
        prev = score;
    }
    budget("criterion 5", started, 60);
    println!(
        "ACCEPT criterion 5 PASS: closed-form gaps {g4:.2e} (n=1e4), {g6:.2e} (n=1e6); gamma gap down to {prev:.2e} ({:.2?})",
        started.elapsed()
    );
}

/// Criterion 6: first-order limit: sup over a 4-point grid of
/// |maxima_cdf_exact - H| decreasing along n in {1e3, 1e4, 1e5, 1e6} for the
/// example sequence. Runtime < 2 min.
#[test]
fn criterion_6_first_order_limit() {
    let started = Instant::now();
    let m = beta_radius(2.0, 1.0).unwrap();
    let consts = beta_example_constants(2.0, 1.0, &spec()).unwrap();
    let lambda = Lambda::Finite(consts.lambda);
    let grid = [(-1.0, -1.0), (-2.0, -0.5), (-0.5, -0.5), (-1.5, -2.0)];
    let mut prev = f64::INFINITY;
    let mut sups = Vec::new();
    for n in [1_000u64, 10_000, 100_000, 1_000_000] {
        let mut sup: f64 = 0.0;
        for &(x, y) in &grid {
            let exact = maxima_cdf_exact(&m, &example_rule(), n, x, y, &spec()).unwrap();
            let h = h_limit(1.0, &lambda, x, y).unwrap();
            sup = sup.max((exact.maxima_cdf - h).abs());
        }
        assert!(
            sup < prev,
            "criterion 6: sup gap not decreasing at n={n}: {sup:e} vs {prev:e}"
        );
        prev = sup;
        sups.push(format!("{sup:.2e}"));
    }
    budget("criterion 6", started, 120);
    println!(
        "ACCEPT criterion 6 PASS: sup|exact - H| = [{}] decreasing ({:.2?})",
        sups.join(", "),
        started.elapsed()
    );
}

/// Criterion 7 (central claim): ratio (exact - H)/(H * bracket) within
/// [0.85, 1.15] at n = 1e5 and |ratio - 1| decreasing in n, at an interior,
/// a near-boundary (exact parametrization), a far-boundary, an exterior-both
/// point, the lambda = 0 case (rho = 1) and the lambda = inf case
/// (rho = 0.3), all with Beta(2,1). Runtime < 5 min total.
#[test]
fn criterion_7_second_order_central() {
    let started = Instant::now();
    let m = beta_radius(2.0, 1.0).unwrap();
    let consts = beta_example_constants(2.0, 1.0, &spec()).unwrap();
    let lam = consts.lambda;
    let s2l = std::f64::consts::SQRT_2 * lam;
    let cases: [(&str, RhoRule, f64, f64); 6] = [
        ("interior", example_rule(), -1.0, -1.0),
        ("boundary_near", example_rule(), -0.25, -(s2l - 0.5).powi(2)),
        ("boundary_far_y", example_rule(), -1.0, -(s2l + 1.0).powi(2)),
        ("exterior_both", example_rule(), -0.1, -0.1),
        ("lambda_zero", RhoRule::Constant(1.0), -2.0, -1.0),
        ("lambda_inf", RhoRule::Constant(0.3), -1.0, -2.0),
    ];
    let mut lines = Vec::new();
    for (name, rule, x, y) in cases {
        let mut prev = f64::INFINITY;
        let mut ratio_at_1e5 = f64::NAN;
        for n in [1_000u64, 10_000, 100_000] {
            let seq = build_sequence(&m, &rule, n, &spec()).unwrap();
            let inputs =
                ExpansionInputs::from_sequence(&m, &seq, x, y, DEFAULT_BOUNDARY_TOL, &spec())
                    .unwrap();
            assert_eq!(
                inputs.regime.label.as_str(),
                name,
                "criterion 7: regime mismatch for the {name} case"
            );
            let expansion = expansion_result(&inputs).unwrap();
            let oracle = maxima_cdf_exact(&m, &rule, n, x, y, &spec()).unwrap();
            let sum_psi = -expansion.h.ln();
            let delta_exact =
                expansion.h * (oracle.log_maxima_cdf + sum_psi).exp_m1();
            let ratio = delta_exact / expansion.delta_pred;
            assert!(
                (ratio - 1.0).abs() < prev,
                "criterion 7 [{name}]: |ratio-1| not decreasing at n={n}: ratio={ratio}"
            );
            prev = (ratio - 1.0).abs();
            if n == 100_000 {
                ratio_at_1e5 = ratio;
            }
        }
        assert!(
            (0.85..=1.15).contains(&ratio_at_1e5),
            "criterion 7 [{name}]: ratio {ratio_at_1e5} outside [0.85, 1.15] at n=1e5"
        );
        lines.push(format!("{name} {ratio_at_1e5:.4}"));
    }
    budget("criterion 7", started, 300);
    println!(
        "ACCEPT criterion 7 PASS: ratios at n=1e5 in [0.85, 1.15], |ratio-1| decreasing: {} ({:.2?})",
        lines.join(", "),
        started.elapsed()
    );
}

/// Criterion 8: Monte Carlo vs exact oracle within 4 standard errors at
/// n = 200 with 2e5 replications at two grid points; bit-identical across
/// reruns and worker counts under a fixed seed. Runtime < 1 min.
#[test]
fn criterion_8_monte_carlo() {
    let started = Instant::now();
    let m = beta_radius(2.0, 1.0).unwrap();
    let rule = example_rule();
    let mc = McConfig {
        replications: 200_000,
        seed: 20240607,
        antithetic: false,
    };
    let grid = [(-1.0, -1.0), (-2.0, -0.5)];
    let n = 200u64;
    let est = sample_maxima(&m, &rule, n, &mc, &grid, &spec()).unwrap();
    for e in &est {
        let exact = maxima_cdf_exact(&m, &rule, n, e.x, e.y, &spec()).unwrap();
        let gap = (e.p_hat - exact.maxima_cdf).abs();
        assert!(
            gap <= 4.0 * e.std_err,
            "criterion 8: MC {} vs exact {} at ({}, {}): gap {gap:e} > 4se {:e}",
            e.p_hat,
            exact.maxima_cdf,
            e.x,
            e.y,
            4.0 * e.std_err
        );
    }
    // reruns and worker counts reproduce bit-identically
    let pool1 = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let pool2 = rayon::ThreadPoolBuilder::new()
        .num_threads(2)
        .build()
        .unwrap();
    let small = McConfig {
        replications: 5_000,
        ..mc
    };
    let a = pool1
        .install(|| sample_maxima(&m, &rule, n, &small, &grid, &spec()))
        .unwrap();
    let b = pool2
        .install(|| sample_maxima(&m, &rule, n, &small, &grid, &spec()))
        .unwrap();
    let c = pool2
        .install(|| sample_maxima(&m, &rule, n, &small, &grid, &spec()))
        .unwrap();
    for ((ea, eb), ec) in a.iter().zip(&b).zip(&c) {
        assert_eq!(ea.p_hat.to_bits(), eb.p_hat.to_bits());
        assert_eq!(eb.p_hat.to_bits(), ec.p_hat.to_bits());
    }
    budget("criterion 8", started, 60);
    println!(
        "ACCEPT criterion 8 PASS: MC within 4se of exact at both points; bit-identical across workers ({:.2?})",
        started.elapsed()
    );
}

/// Criterion 9: generic expansion_result vs the example-specialized
/// evaluator agree to 1e-10 on a 5x5 grid.
#[test]
fn criterion_9_double_implementation() {
    let started = Instant::now();
    let m = beta_radius(2.0, 1.0).unwrap();
    let consts = beta_example_constants(2.0, 1.0, &spec()).unwrap();
    let n = 10_000u64;
    let an_lead = ellmax::norming::beta_example_a_n_leading(2.0, 1.0, n, &spec()).unwrap();
    let grid = [-0.3, -0.75, -1.25, -2.0, -3.0];
    let mut worst: f64 = 0.0;
    for &x in &grid {
        for &y in &grid {
            let regime = ellmax::classify_regime(
                x,
                y,
                &Lambda::Finite(consts.lambda),
                DEFAULT_BOUNDARY_TOL,
            )
            .unwrap();
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
                rate_k: ellmax::RateK::Finite(1.0),
                regime,
                quad: spec(),
                rate_regime_ok: None,
            };
            let generic = expansion_result(&inputs).unwrap().delta_pred;
            let example = example_delta_beta(2.0, 1.0, x, y, n, &spec()).unwrap();
            let scale = generic.abs().max(example.abs()).max(1e-300);
            worst = worst.max(((generic - example) / scale).abs());
        }
    }
    assert!(worst <= 1e-10, "double-implementation gap {worst:e}");
    println!(
        "ACCEPT criterion 9 PASS: generic vs example display worst gap {worst:.2e} <= 1e-10 ({:.2?})",
        started.elapsed()
    );
}

/// End-to-end check of the documented example study config, exercising
/// config parsing, the runner, report round-trips and determinism.
#[test]
fn study_pipeline_end_to_end() {
    let cfg = StudyConfig::from_toml(
        r#"
n_schedule = [10000, 100000]

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
"#,
    )
    .unwrap();
    let report = run_convergence_study(&cfg).unwrap();
    assert!(report.pass, "{:?}", report.summary);
    let csv = emit_report(&report, ReportFormat::Csv).unwrap();
    let back = parse_report_csv(&csv, report.ratio_band).unwrap();
    assert_eq!(back.rows, report.rows);
}

/// The custom-model path: a tau = -1/2 radius where the a_n = o(c_n) branch
/// of the far-boundary display is the meaningful one.
#[test]
fn custom_model_case_ii_far_boundary() {
    let m = RadialModel::custom_with_survival(
        |r| 1.0 - 2.0 * (1.0 - r) * (1.0 - 0.5 * (1.0 - r).sqrt()),
        |r| 2.0 * (1.0 - r) * (1.0 - 0.5 * (1.0 - r).sqrt()),
        1.0,
        -0.5,
        |t| 0.25 / t.sqrt(),
    )
    .unwrap();
    let lam = 0.6;
    let gamma = 0.05;
    let x = -1.0;
    let y = -(std::f64::consts::SQRT_2 * lam + 1.0).powi(2);
    let mut prev = f64::INFINITY;
    for n in [1_000u64, 10_000, 100_000] {
        let a_n = solve_a_n(&m, n, &spec()).unwrap();
        let c_n = a_n.powf(0.75); // a_n = o(c_n)
        let lam_n = lam * (1.0 + gamma / lam * c_n);
        let rho = 1.0 - 2.0 * a_n * lam_n * lam_n;
        let rule = RhoRule::Table {
            entries: vec![(n, rho)],
            declared: Some(ellmax::norming::DeclaredLimits {
                lambda: Lambda::Finite(lam),
                gamma,
                c_n: Some(vec![(n, c_n)]),
                rate_k: Some(ellmax::RateK::Infinite),
            }),
        };
        let seq = build_sequence(&m, &rule, n, &spec()).unwrap();
        assert!(matches!(seq.rate_k, ellmax::RateK::Infinite));
        let inputs =
            ExpansionInputs::from_sequence(&m, &seq, x, y, DEFAULT_BOUNDARY_TOL, &spec()).unwrap();
        assert_eq!(inputs.regime.label.as_str(), "boundary_far_y");
        let expansion = expansion_result(&inputs).unwrap();
        let oracle = maxima_cdf_exact(&m, &rule, n, x, y, &spec()).unwrap();
        let sum_psi = -expansion.h.ln();
        let delta_exact = expansion.h * (oracle.log_maxima_cdf + sum_psi).exp_m1();
        let ratio = delta_exact / expansion.delta_pred;
        assert!(
            (ratio - 1.0).abs() < prev,
            "case (ii) ratio not converging at n={n}: {ratio}"
        );
        prev = (ratio - 1.0).abs();
        if n == 100_000 {
            assert!(
                (0.85..=1.15).contains(&ratio),
                "case (ii) ratio {ratio} at n=1e5"
            );
        }
    }
}
