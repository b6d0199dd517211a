//! Configuration-driven convergence studies and their reports.
//!
//! A study walks a grid of evaluation points across an n-schedule; each row
//! records the exact maxima df, the limit H, the observed and predicted
//! second-order deltas and their ratio, optionally a Monte Carlo estimate.
//! Rows are ordered grid-first then n, and reruns with the same config and
//! seed are byte-identical.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansions::{expansion_result, ExpansionInputs, DEFAULT_BOUNDARY_TOL};
use crate::limits::{classify_regime, h_exponent, Lambda};
use crate::norming::{build_sequence, DeclaredLimits, RhoRule};
use crate::oracle::{maxima_cdf_exact, sample_maxima, McConfig};
use crate::radial::{beta_radius, RadialModel};
use crate::specfun::QuadratureSpec;

/// Radius model section of a study config.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Beta {
        a: f64,
        b: f64,
    },
    /// Declared (alpha, tau, A) plus a monotone cdf table on [0, 1];
    /// A(t) = aux_coef * t^{aux_power}, aux_power defaulting to tau.
    Custom {
        alpha: f64,
        tau: f64,
        aux_coef: f64,
        #[serde(default)]
        aux_power: Option<f64>,
        cdf_table: Vec<(f64, f64)>,
    },
}

/// An extended-real lambda in configs: a number, "zero", or "inf".
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Value(f64),
    Word(String),
}

impl LambdaSpec {
    fn to_lambda(&self) -> Result<Lambda> {
        match self {
            LambdaSpec::Value(v) => Lambda::finite(*v),
            LambdaSpec::Word(w) => match w.as_str() {
                "zero" | "0" => Ok(Lambda::Zero),
                "inf" | "infinity" => Ok(Lambda::Infinite),
                other => Err(Error::config(
                    "rho.lambda",
                    format!("expected a number, \"zero\" or \"inf\", got \"{other}\""),
                )),
            },
        }
    }
}

/// Rho rule section of a study config.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhoConfig {
    Constant {
        value: f64,
    },
    OneMinusPower {
        exponent: f64,
    },
    Table {
        entries: Vec<(u64, f64)>,
        #[serde(default)]
        lambda: Option<LambdaSpec>,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        c_n: Option<Vec<(u64, f64)>>,
        /// Declared limit of c_n / a_n: a number or "inf".
        #[serde(default)]
        rate_k: Option<LambdaSpec>,
    },
}

/// One grid entry: either explicit (x, y) or a boundary-parametrized point
/// (branch near / far_y / far_x with the free coordinate).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPointConfig {
    #[serde(default)]
    pub x: Option<f64>,
    #[serde(default)]
    pub y: Option<f64>,
    #[serde(default)]
    pub branch: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TolerancesConfig {
    pub quadrature: QuadratureSpec,
    pub ratio_band: f64,
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        TolerancesConfig {
            quadrature: QuadratureSpec::default(),
            ratio_band: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    pub format: ReportFormat,
    pub path: String,
}

/// Full study configuration (TOML on disk).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub model: ModelConfig,
    pub rho: RhoConfig,
    pub grid: Vec<GridPointConfig>,
    pub n_schedule: Vec<u64>,
    #[serde(default)]
    pub mc: Option<McConfig>,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub outputs: Option<OutputsConfig>,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text)
            .map_err(|e| Error::config("<config>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::config("grid", "grid must be nonempty"));
        }
        if self.n_schedule.is_empty() {
            return Err(Error::config("n_schedule", "n_schedule must be nonempty"));
        }
        if !self.n_schedule.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config(
                "n_schedule",
                "n_schedule must be strictly increasing",
            ));
        }
        if let Some(&n0) = self.n_schedule.first() {
            if n0 < 2 {
                return Err(Error::config("n_schedule", "entries must be >= 2"));
            }
        }
        let band = self.tolerances.ratio_band;
        if !(band > 0.0 && band < 1.0) {
            return Err(Error::config(
                "tolerances.ratio_band",
                format!("ratio_band must lie in (0, 1), got {band}"),
            ));
        }
        for (i, g) in self.grid.iter().enumerate() {
            match g.branch.as_deref() {
                None => {
                    if g.x.is_none() || g.y.is_none() {
                        return Err(Error::config(
                            format!("grid[{i}]"),
                            "plain grid points need both x and y",
                        ));
                    }
                }
                Some("near") => {
                    if g.x.is_some() == g.y.is_some() {
                        return Err(Error::config(
                            format!("grid[{i}]"),
                            "branch \"near\" needs exactly one of x, y",
                        ));
                    }
                }
                Some("far_y") => {
                    if g.x.is_none() || g.y.is_some() {
                        return Err(Error::config(
                            format!("grid[{i}]"),
                            "branch \"far_y\" needs x only",
                        ));
                    }
                }
                Some("far_x") => {
                    if g.y.is_none() || g.x.is_some() {
                        return Err(Error::config(
                            format!("grid[{i}]"),
                            "branch \"far_x\" needs y only",
                        ));
                    }
                }
                Some(other) => {
                    return Err(Error::config(
                        format!("grid[{i}].branch"),
                        format!("unknown branch \"{other}\" (near | far_y | far_x)"),
                    ));
                }
            }
            for (name, val) in [("x", g.x), ("y", g.y)] {
                if let Some(v) = val {
                    if !(v < 0.0) {
                        return Err(Error::config(
                            format!("grid[{i}].{name}"),
                            format!("coordinates must be negative, got {v}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<RadialModel> {
        match &self.model {
            ModelConfig::Beta { a, b } => beta_radius(*a, *b),
            ModelConfig::Custom {
                alpha,
                tau,
                aux_coef,
                aux_power,
                cdf_table,
            } => {
                let table = validate_cdf_table(cdf_table)?;
                let coef = *aux_coef;
                let power = aux_power.unwrap_or(*tau);
                RadialModel::custom(
                    move |t| interpolate_cdf(&table, t),
                    *alpha,
                    *tau,
                    move |t: f64| coef * t.powf(power),
                )
            }
        }
    }

    pub fn build_rule(&self) -> Result<RhoRule> {
        Ok(match &self.rho {
            RhoConfig::Constant { value } => RhoRule::Constant(*value),
            RhoConfig::OneMinusPower { exponent } => RhoRule::OneMinusPower {
                exponent: *exponent,
            },
            RhoConfig::Table {
                entries,
                lambda,
                gamma,
                c_n,
                rate_k,
            } => {
                let declared_rate = match rate_k {
                    None => None,
                    Some(spec) => Some(match spec.to_lambda()? {
                        Lambda::Infinite => crate::limits::RateK::Infinite,
                        Lambda::Finite(v) => crate::limits::RateK::Finite(v),
                        Lambda::Zero => crate::limits::RateK::Finite(0.0),
                    }),
                };
                let declared = match lambda {
                    Some(spec) => Some(DeclaredLimits {
                        lambda: spec.to_lambda()?,
                        gamma: gamma.unwrap_or(0.0),
                        c_n: c_n.clone(),
                        rate_k: declared_rate,
                    }),
                    None => None,
                };
                RhoRule::Table {
                    entries: entries.clone(),
                    declared,
                }
            }
        })
    }
}

fn validate_cdf_table(table: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if table.len() < 2 {
        return Err(Error::config(
            "model.cdf_table",
            "cdf table needs at least two knots",
        ));
    }
    let mut sorted = table.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in sorted.windows(2) {
        if w[1].1 < w[0].1 {
            return Err(Error::config("model.cdf_table", "cdf values must be nondecreasing"));
        }
    }
    let last = sorted.last().unwrap();
    if (last.0 - 1.0).abs() > 1e-12 || (last.1 - 1.0).abs() > 1e-12 {
        return Err(Error::config(
            "model.cdf_table",
            "cdf table must end at (1, 1)",
        ));
    }
    Ok(sorted)
}

fn interpolate_cdf(table: &[(f64, f64)], t: f64) -> f64 {
    if t <= table[0].0 {
        return if t <= 0.0 { 0.0 } else { table[0].1 * (t / table[0].0).max(0.0) };
    }
    if t >= 1.0 {
        return 1.0;
    }
    match table.binary_search_by(|probe| probe.0.total_cmp(&t)) {
        Ok(i) => table[i].1,
        Err(i) => {
            let (t0, f0) = table[i - 1];
            let (t1, f1) = table[i];
            f0 + (f1 - f0) * (t - t0) / (t1 - t0)
        }
    }
}

/// One study row; column order in reports is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: u64,
    pub x: f64,
    pub y: f64,
    pub regime: String,
    pub exact: f64,
    pub h: f64,
    pub delta_exact: f64,
    pub delta_pred: f64,
    pub ratio: Option<f64>,
    pub mc_estimate: Option<f64>,
    pub mc_se: Option<f64>,
    pub a_n: f64,
    pub lambda_n: f64,
    pub c_n: f64,
    pub a_val: f64,
}

/// A row that failed with a numeric error; the study continues past it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFailure {
    pub n: u64,
    pub x: f64,
    pub y: f64,
    pub message: String,
}

/// Per-point convergence verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub x: f64,
    pub y: f64,
    pub regime: String,
    pub ratio_at_max_n: Option<f64>,
    /// ratio within [1 - band, 1 + band] at the largest n.
    pub band_ok: bool,
    /// |ratio - 1| nonincreasing along the schedule.
    pub trend_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub ratio_band: f64,
    pub rows: Vec<StudyRow>,
    pub failures: Vec<RowFailure>,
    pub summary: Vec<PointSummary>,
    pub pass: bool,
}

/// Summaries are a pure function of (rows, band): grouped by grid point in
/// first-appearance order.
pub fn summarize(rows: &[StudyRow], ratio_band: f64) -> (Vec<PointSummary>, bool) {
    let mut order: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        if !order.iter().any(|&(x, y)| x == r.x && y == r.y) {
            order.push((r.x, r.y));
        }
    }
    let mut out = Vec::with_capacity(order.len());
    let mut all_ok = true;
    for (x, y) in order {
        let group: Vec<&StudyRow> = rows.iter().filter(|r| r.x == x && r.y == y).collect();
        let last = group.last().unwrap();
        let ratio_at_max_n = last.ratio;
        let band_ok = ratio_at_max_n
            .map(|r| (r - 1.0).abs() <= ratio_band)
            .unwrap_or(false);
        let scores: Vec<f64> = group
            .iter()
            .filter_map(|r| r.ratio.map(|v| (v - 1.0).abs()))
            .collect();
        let trend_ok =
            scores.len() == group.len() && scores.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        all_ok &= band_ok && trend_ok;
        out.push(PointSummary {
            x,
            y,
            regime: last.regime.clone(),
            ratio_at_max_n,
            band_ok,
            trend_ok,
        });
    }
    (out, all_ok)
}

/// Resolve the study's coupling constant from the rule (the regime every grid
/// point is classified under, and the anchor for boundary-parametrized
/// points).
fn resolve_lambda(model: &RadialModel, rule: &RhoRule, n_max: u64, quad: &QuadratureSpec) -> Result<Lambda> {
    Ok(build_sequence(model, rule, n_max, quad)?.lambda)
}

/// Expand boundary-parametrized grid entries into concrete (x, y) pairs.
fn resolve_grid(
    grid: &[GridPointConfig],
    lambda: &Lambda,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(grid.len());
    for (i, g) in grid.iter().enumerate() {
        match g.branch.as_deref() {
            None => out.push((g.x.unwrap(), g.y.unwrap())),
            Some(branch) => {
                let lam = lambda.as_finite().ok_or_else(|| {
                    Error::config(
                        format!("grid[{i}]"),
                        "boundary-parametrized points need a finite lambda",
                    )
                })?;
                let s = std::f64::consts::SQRT_2 * lam;
                match branch {
                    "near" => {
                        if let Some(x) = g.x {
                            out.push((x, -(s - (-x).sqrt()).powi(2)));
                        } else {
                            let y = g.y.unwrap();
                            out.push((-(s - (-y).sqrt()).powi(2), y));
                        }
                    }
                    "far_y" => {
                        let x = g.x.unwrap();
                        out.push((x, -(s + (-x).sqrt()).powi(2)));
                    }
                    "far_x" => {
                        let y = g.y.unwrap();
                        out.push((-(s + (-y).sqrt()).powi(2), y));
                    }
                    _ => unreachable!("validated"),
                }
            }
        }
    }
    Ok(out)
}

/// Run the full study: classify, solve norming constants, evaluate the exact
/// oracle, the limit and the expansion at every (point, n), then summarize.
pub fn run_convergence_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let model = config.build_model()?;
    let rule = config.build_rule()?;
    let quad = config.tolerances.quadrature;
    let n_max = *config.n_schedule.last().unwrap();
    let lambda = resolve_lambda(&model, &rule, n_max, &quad)?;
    let points = resolve_grid(&config.grid, &lambda)?;

    // optional MC, batched per n over the whole grid
    let mut mc_by_n: Vec<Vec<crate::oracle::McEstimate>> = Vec::new();
    if let Some(mc) = &config.mc {
        for &n in &config.n_schedule {
            mc_by_n.push(sample_maxima(&model, &rule, n, mc, &points, &quad)?);
        }
    }

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (pi, &(x, y)) in points.iter().enumerate() {
        for (ni, &n) in config.n_schedule.iter().enumerate() {
            match study_row(&model, &rule, n, x, y, &quad) {
                Ok(mut row) => {
                    if let Some(mcs) = mc_by_n.get(ni) {
                        row.mc_estimate = Some(mcs[pi].p_hat);
                        row.mc_se = Some(mcs[pi].std_err);
                    }
                    rows.push(row);
                }
                Err(e) => failures.push(RowFailure {
                    n,
                    x,
                    y,
                    message: e.to_string(),
                }),
            }
        }
    }
    let (summary, all_ok) = summarize(&rows, config.tolerances.ratio_band);
    let pass = all_ok && failures.is_empty();
    Ok(StudyReport {
        ratio_band: config.tolerances.ratio_band,
        rows,
        failures,
        summary,
        pass,
    })
}

fn study_row(
    model: &RadialModel,
    rule: &RhoRule,
    n: u64,
    x: f64,
    y: f64,
    quad: &QuadratureSpec,
) -> Result<StudyRow> {
    let seq = build_sequence(model, rule, n, quad)?;
    let inputs = ExpansionInputs::from_sequence(model, &seq, x, y, DEFAULT_BOUNDARY_TOL, quad)?;
    let expansion = expansion_result(&inputs)?;
    let oracle = maxima_cdf_exact(model, rule, n, x, y, quad)?;
    // delta in tail space: exact - H = H expm1(log exact + sum psi)
    let sum_psi = h_exponent(model.alpha(), &seq.lambda, x, y)?;
    let delta_exact = expansion.h * (oracle.log_maxima_cdf + sum_psi).exp_m1();
    let delta_pred = expansion.delta_pred;
    let ratio = if delta_pred != 0.0 {
        Some(delta_exact / delta_pred)
    } else {
        None
    };
    Ok(StudyRow {
        n,
        x,
        y,
        regime: inputs.regime.label.as_str().to_string(),
        exact: oracle.maxima_cdf,
        h: expansion.h,
        delta_exact,
        delta_pred,
        ratio,
        mc_estimate: None,
        mc_se: None,
        a_n: seq.a_n,
        lambda_n: seq.lambda_n,
        c_n: seq.c_n,
        a_val: model.aux(1.0 / seq.a_n),
    })
}

/// Re-derive each row's regime from its own (x, y) and the study lambda;
/// used by the invariant suite.
pub fn rows_match_classification(report: &StudyReport, lambda: &Lambda) -> Result<bool> {
    for row in &report.rows {
        let regime = classify_regime(row.x, row.y, lambda, DEFAULT_BOUNDARY_TOL)?;
        if regime.label.as_str() != row.regime {
            return Ok(false);
        }
    }
    Ok(true)
}

const CSV_HEADER: &str =
    "n,x,y,regime,exact,h,delta_exact,delta_pred,ratio,mc_estimate,mc_se,a_n,lambda_n,c_n,A_val";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Render a report. CSV carries the rows with the fixed column order and
/// shortest round-trip decimals; JSON mirrors the full report.
pub fn emit_report(report: &StudyReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in &report.rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.n,
                    r.x,
                    r.y,
                    r.regime,
                    r.exact,
                    r.h,
                    r.delta_exact,
                    r.delta_pred,
                    fmt_opt(r.ratio),
                    fmt_opt(r.mc_estimate),
                    fmt_opt(r.mc_se),
                    r.a_n,
                    r.lambda_n,
                    r.c_n,
                    r.a_val
                ));
            }
            Ok(out)
        }
        ReportFormat::Json => serde_json::to_string_pretty(report)
            .map_err(|e| Error::Io(e.to_string())),
    }
}

/// Parse a CSV report back; summaries are recomputed from the rows.
pub fn parse_report_csv(text: &str, ratio_band: f64) -> Result<StudyReport> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Io("empty csv report".into()))?;
    if header != CSV_HEADER {
        return Err(Error::Io(format!("unexpected csv header: {header}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 15 {
            return Err(Error::Io(format!(
                "row {i}: expected 15 columns, got {}",
                cols.len()
            )));
        }
        let f = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Io(format!("row {i}: {e}")))
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                f(s).map(Some)
            }
        };
        rows.push(StudyRow {
            n: cols[0]
                .parse::<u64>()
                .map_err(|e| Error::Io(format!("row {i}: {e}")))?,
            x: f(cols[1])?,
            y: f(cols[2])?,
            regime: cols[3].to_string(),
            exact: f(cols[4])?,
            h: f(cols[5])?,
            delta_exact: f(cols[6])?,
            delta_pred: f(cols[7])?,
            ratio: opt(cols[8])?,
            mc_estimate: opt(cols[9])?,
            mc_se: opt(cols[10])?,
            a_n: f(cols[11])?,
            lambda_n: f(cols[12])?,
            c_n: f(cols[13])?,
            a_val: f(cols[14])?,
        });
    }
    let (summary, all_ok) = summarize(&rows, ratio_band);
    Ok(StudyReport {
        ratio_band,
        rows,
        failures: Vec::new(),
        summary,
        pass: all_ok,
    })
}

pub fn parse_report_json(text: &str) -> Result<StudyReport> {
    serde_json::from_str(text).map_err(|e| Error::Io(e.to_string()))
}

/// Write a rendered report to a file.
pub fn write_report(report: &StudyReport, format: ReportFormat, path: &str) -> Result<()> {
    let rendered = emit_report(report, format)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(rendered.as_bytes())?;
    Ok(())
}
