//! Study runner CLI: `verify` (invariant suite), `study` (convergence study),
//! `tail` (marginal-tail diagnostics), `sample` (Monte Carlo).
//!
//! Exit codes: 0 pass, 1 numeric failure, 2 config error.

use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use ellmax::study::{
    emit_report, run_convergence_study, write_report, ReportFormat, StudyConfig,
};
use ellmax::{
    g_tail_ratio_expansion, lemma2_expansion, lemma2_expectation_exact, marginal_g_tail_berman,
    solve_a_n, Error, QuadratureSpec,
};

#[derive(Parser)]
#[command(name = "ellmax", version, about = "Second-order asymptotics for maxima of bivariate elliptical arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Study configuration (TOML)
    #[arg(long)]
    config: Option<String>,
    /// Write the report here instead of the config's outputs.path (or stdout)
    #[arg(long)]
    output: Option<String>,
    /// Report format override
    #[arg(long, value_parser = parse_format)]
    format: Option<ReportFormat>,
    /// Monte Carlo seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of cores)
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_format(s: &str) -> std::result::Result<ReportFormat, String> {
    match s {
        "csv" => Ok(ReportFormat::Csv),
        "json" => Ok(ReportFormat::Json),
        other => Err(format!("unknown format \"{other}\" (csv | json)")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the deterministic invariant suite
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a convergence study from a config file
    Study {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Marginal-tail diagnostics (second-order lemmas)
    Tail {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte Carlo sampling of the configured study grid
    Sample {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn install_pool(workers: Option<usize>) -> Result<()> {
    if let Some(w) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("failed to build worker pool")?;
    }
    Ok(())
}

fn load_config(common: &CommonArgs) -> Result<StudyConfig, Error> {
    let path = common.config.as_deref().ok_or_else(|| {
        Error::config("--config", "this subcommand requires a config file")
    })?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path, format!("cannot read config: {e}")))?;
    let mut cfg = StudyConfig::from_toml(&text)?;
    if let Some(seed) = common.seed {
        if let Some(mc) = &mut cfg.mc {
            mc.seed = seed;
        }
    }
    Ok(cfg)
}

fn deliver_report(
    report: &ellmax::study::StudyReport,
    cfg: &StudyConfig,
    common: &CommonArgs,
) -> Result<(), Error> {
    let format = common
        .format
        .or(cfg.outputs.as_ref().map(|o| o.format))
        .unwrap_or(ReportFormat::Csv);
    let path = common
        .output
        .clone()
        .or(cfg.outputs.as_ref().map(|o| o.path.clone()));
    match path {
        Some(p) => {
            write_report(report, format, &p)?;
            eprintln!("report written to {p}");
        }
        None => print!("{}", emit_report(report, format)?),
    }
    Ok(())
}

fn cmd_verify(common: &CommonArgs) -> Result<ExitCode> {
    install_pool(common.workers)?;
    let started = Instant::now();
    let report = ellmax::verify::run_invariant_suite();
    for c in &report.checks {
        println!(
            "{} {} ({})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    println!(
        "{}/{} checks passed in {:.1?}",
        report.checks.iter().filter(|c| c.pass).count(),
        report.checks.len(),
        started.elapsed()
    );
    Ok(if report.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_study(common: &CommonArgs) -> Result<ExitCode> {
    install_pool(common.workers)?;
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return Ok(ExitCode::from(2));
        }
    };
    let report = match run_convergence_study(&cfg) {
        Ok(r) => r,
        Err(e @ Error::InvalidConfig { .. }) => {
            eprintln!("{e}");
            return Ok(ExitCode::from(2));
        }
        Err(e) => {
            eprintln!("{e}");
            return Ok(ExitCode::from(1));
        }
    };
    deliver_report(&report, &cfg, common)?;
    for s in &report.summary {
        eprintln!(
            "point ({}, {}) [{}]: ratio@max_n = {}, band {}, trend {}",
            s.x,
            s.y,
            s.regime,
            s.ratio_at_max_n.map_or("n/a".into(), |r| format!("{r:.4}")),
            if s.band_ok { "ok" } else { "FAIL" },
            if s.trend_ok { "ok" } else { "FAIL" },
        );
    }
    for f in &report.failures {
        eprintln!("row failed at (x={}, y={}, n={}): {}", f.x, f.y, f.n, f.message);
    }
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_sample(common: &CommonArgs) -> Result<ExitCode> {
    install_pool(common.workers)?;
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return Ok(ExitCode::from(2));
        }
    };
    if cfg.mc.is_none() {
        eprintln!("invalid config at `mc`: sample requires an [mc] section");
        return Ok(ExitCode::from(2));
    }
    match run_convergence_study(&cfg) {
        Ok(report) => {
            deliver_report(&report, &cfg, common)?;
            Ok(if report.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Err(e @ Error::InvalidConfig { .. }) => {
            eprintln!("{e}");
            Ok(ExitCode::from(2))
        }
        Err(e) => {
            eprintln!("{e}");
            Ok(ExitCode::from(1))
        }
    }
}

/// Lemma 2 / Lemma 3 diagnostics for the configured model (Beta(2,1) when no
/// config is given). Emits its own small CSV.
fn cmd_tail(common: &CommonArgs) -> Result<ExitCode> {
    install_pool(common.workers)?;
    let (model, label) = match &common.config {
        Some(_) => {
            let cfg = match load_config(common) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return Ok(ExitCode::from(2));
                }
            };
            (cfg.build_model()?, "configured model".to_string())
        }
        None => (ellmax::beta_radius(2.0, 1.0)?, "beta(2,1)".to_string()),
    };
    let spec = QuadratureSpec::default();
    let mut out = String::from("kind,t,x_abs,qa,qb,n,numeric,predicted,normalized_residual\n");
    for x_abs in [0.5, 2.0] {
        for t in [1e2, 1e3, 1e4] {
            let num = marginal_g_tail_berman(&model, 1.0 / (t * x_abs), &spec)?
                / marginal_g_tail_berman(&model, 1.0 / t, &spec)?;
            let pred = g_tail_ratio_expansion(&model, t, x_abs, &spec)?;
            let resid = (num - pred).abs() / (1.0 / t + model.aux(t).abs().max(1e-300));
            out.push_str(&format!("lemma3,{t},{x_abs},,,,{num},{pred},{resid}\n"));
        }
    }
    for (qa, qb) in [(0.5, 0.5), (2.0, 3.0)] {
        for n in [1_000u64, 10_000, 100_000] {
            let exact = lemma2_expectation_exact(&model, qa, qb, n, -1.0, &spec)?;
            let pred = lemma2_expansion(&model, qa, qb, n, -1.0, &spec)?;
            let a_n = solve_a_n(&model, n, &spec)?;
            let resid = (exact - pred).abs() / exact / (a_n + model.aux(1.0 / a_n).abs());
            out.push_str(&format!("lemma2,,,{qa},{qb},{n},{exact},{pred},{resid}\n"));
        }
    }
    match &common.output {
        Some(p) => {
            std::fs::write(p, &out)?;
            eprintln!("tail diagnostics for {label} written to {p}");
        }
        None => print!("{out}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Verify { common } => cmd_verify(common),
        Command::Study { common } => cmd_study(common),
        Command::Tail { common } => cmd_tail(common),
        Command::Sample { common } => cmd_sample(common),
    }
}
