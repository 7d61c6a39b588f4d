//! Batch front end over the risk measure library: catalog evaluation on
//! P&L samples or scenario sets, sensitivity tables, Monte-Carlo
//! robustness and consistency experiments, and axiom reports.

pub mod report;

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use lossrisk::dist::{EmpiricalDistribution, QuantileFn};
use lossrisk::measures::{axiom_suite, eval, AxiomStatus, EvalInput, RiskMeasureSpec};
use lossrisk::roblab::{
    consistency_curve, parse_experiment_config, robustness_experiment, thread_cap, RNG_NAME,
    RNG_SPLIT,
};
use lossrisk::sensitivity::{
    sensitivity_ce, sensitivity_numeric, sensitivity_truncated_ce, sensitivity_var,
    DEFAULT_LADDER,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use report::{round10, write_report};

#[derive(Parser)]
#[command(
    name = "lossrisk",
    version,
    about = "Loss-based risk measures: evaluation, sensitivity, robustness experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Evaluate a measure catalog on a P&L sample and/or scenario set.
    Eval {
        /// P&L file, one value per line; blank and '#' lines are skipped.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Scenario P&L file for the scenario-margin measure.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        /// Measure catalog (JSON array).
        #[arg(long)]
        catalog: PathBuf,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sensitivity table (CSV) over a contamination-point grid.
    Sensitivity {
        /// P&L file defining the base empirical law.
        #[arg(long)]
        input: PathBuf,
        /// Measure catalog (JSON array).
        #[arg(long)]
        catalog: PathBuf,
        /// Grid "start,stop,step" of contamination points z.
        #[arg(long, value_name = "A,B,STEP", allow_hyphen_values = true)]
        z_grid: String,
        /// Also compute difference-quotient estimates, and allow measures
        /// without an analytic sensitivity formula.
        #[arg(long)]
        numeric: bool,
        /// Table path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Monte-Carlo robustness / consistency experiments of a config.
    Roblab {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the axiom suite for every catalog measure.
    Axioms {
        /// Optional P&L file prepended to the generated test inputs.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Measure catalog (JSON array).
        #[arg(long)]
        catalog: PathBuf,
        /// Seed for the generated random test inputs.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comparison tolerance for the suite.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval {
            input,
            scenarios,
            catalog,
            out,
        } => cmd_eval(input.as_deref(), scenarios.as_deref(), &catalog, out.as_deref()),
        Command::Sensitivity {
            input,
            catalog,
            z_grid,
            numeric,
            out,
        } => cmd_sensitivity(&input, &catalog, &z_grid, numeric, out.as_deref()),
        Command::Roblab { config, seed, out } => cmd_roblab(&config, seed, out.as_deref()),
        Command::Axioms {
            input,
            catalog,
            seed,
            tol,
            out,
        } => cmd_axioms(input.as_deref(), &catalog, seed, tol, out.as_deref()),
    }
}

/// Reads a P&L file: one value per line, blank lines and lines starting
/// with '#' skipped.
fn read_pnl(path: &Path) -> Result<Vec<f64>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let token = line.trim();
        if token.is_empty() || token.starts_with('#') {
            continue;
        }
        let v: f64 = token.parse().map_err(|_| {
            anyhow!("{}:{}: invalid number {:?}", path.display(), i + 1, token)
        })?;
        out.push(v);
    }
    Ok(out)
}

fn load_catalog(path: &Path) -> Result<Vec<(String, RiskMeasureSpec)>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    lossrisk::catalog::parse_catalog(&text)
        .with_context(|| format!("parsing {}", path.display()))
}

fn empirical_quantile(samples: &[f64], path: &Path) -> Result<QuantileFn> {
    let emp = EmpiricalDistribution::from_samples(samples)
        .with_context(|| format!("building empirical law from {}", path.display()))?;
    Ok(QuantileFn::empirical(emp))
}

fn cmd_eval(
    input: Option<&Path>,
    scenarios: Option<&Path>,
    catalog: &Path,
    out: Option<&Path>,
) -> Result<()> {
    let entries = load_catalog(catalog)?;
    if input.is_none() && scenarios.is_none() {
        bail!("eval needs --input and/or --scenarios");
    }
    let quantile = match input {
        Some(path) => Some(empirical_quantile(&read_pnl(path)?, path)?),
        None => None,
    };
    let scenario_pnls = match scenarios {
        Some(path) => Some(read_pnl(path)?),
        None => None,
    };
    let mut results = Map::new();
    for (label, spec) in &entries {
        let evaluated = match spec {
            RiskMeasureSpec::SpanScenarios => match &scenario_pnls {
                Some(s) => eval(spec, EvalInput::Scenarios(s)),
                None => Err(lossrisk::Error::InvalidInput(
                    "scenario margin needs --scenarios".into(),
                )),
            },
            _ => match &quantile {
                Some(q) => eval(spec, EvalInput::Quantile(q)),
                None => Err(lossrisk::Error::InvalidInput(
                    "distribution measure needs --input".into(),
                )),
            },
        };
        let cell = match evaluated {
            Ok(v) => json!(v),
            Err(e) => json!({ "error": e.to_string() }),
        };
        results.insert(label.clone(), cell);
    }
    write_report(
        out,
        json!({
            "schema_version": 1,
            "command": "eval",
            "results": Value::Object(results),
        }),
    )
}

/// Parses "start,stop,step" into an inclusive grid.
fn parse_z_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        bail!("--z-grid expects \"start,stop,step\", got {text:?}");
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("--z-grid: invalid number {p:?}"))
        })
        .collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0 && step.is_finite() && start.is_finite() && stop >= start) {
        bail!("--z-grid needs start <= stop and positive step");
    }
    let count = ((stop - start) / step).floor() as usize + 1;
    if count > 10_000 {
        bail!("--z-grid has {count} points, refusing more than 10000");
    }
    Ok((0..count)
        .map(|k| start + k as f64 * step)
        .filter(|z| *z <= stop + 1e-9 * step)
        .collect())
}

fn analytic_sensitivity(spec: &RiskMeasureSpec, g: &QuantileFn, z: f64) -> Option<lossrisk::Result<f64>> {
    match spec {
        RiskMeasureSpec::LossCe(u) => Some(sensitivity_ce(u, g, z)),
        RiskMeasureSpec::Truncated { inner, delta } => match inner.as_ref() {
            RiskMeasureSpec::LossCe(u) => Some(sensitivity_truncated_ce(u, g, *delta, z)),
            _ => None,
        },
        RiskMeasureSpec::VarLoss { alpha } => Some(sensitivity_var(g, *alpha, z)),
        _ => None,
    }
}

fn has_analytic_path(spec: &RiskMeasureSpec) -> bool {
    match spec {
        RiskMeasureSpec::LossCe(_) | RiskMeasureSpec::VarLoss { .. } => true,
        RiskMeasureSpec::Truncated { inner, .. } => {
            matches!(inner.as_ref(), RiskMeasureSpec::LossCe(_))
        }
        _ => false,
    }
}

fn cmd_sensitivity(
    input: &Path,
    catalog: &Path,
    z_grid: &str,
    numeric: bool,
    out: Option<&Path>,
) -> Result<()> {
    let entries = load_catalog(catalog)?;
    let g = empirical_quantile(&read_pnl(input)?, input)?;
    let grid = parse_z_grid(z_grid)?;
    if !numeric {
        for (label, spec) in &entries {
            if !has_analytic_path(spec) {
                bail!(
                    "measure {label} has no analytic sensitivity formula; rerun with --numeric"
                );
            }
        }
    }
    let writer: Box<dyn Write> = match out {
        Some(path) => Box::new(
            fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?,
        ),
        None => Box::new(std::io::stdout()),
    };
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["measure", "z", "s_analytic", "s_numeric", "abs_diff"])?;
    let mut warned: HashSet<String> = HashSet::new();
    let fmt = |v: Option<f64>| match v {
        Some(x) => round10(x).to_string(),
        None => "NA".into(),
    };
    for (label, spec) in &entries {
        for &z in &grid {
            let s_analytic = match analytic_sensitivity(spec, &g, z) {
                Some(Ok(v)) => Some(v),
                Some(Err(e)) => {
                    if warned.insert(format!("{label}/analytic")) {
                        eprintln!("warning: {label}: analytic sensitivity unavailable: {e}");
                    }
                    None
                }
                None => None,
            };
            let s_numeric = if numeric {
                match sensitivity_numeric(spec, &g, z, &DEFAULT_LADDER) {
                    Ok(n) => Some(n.estimate),
                    Err(e) => {
                        if warned.insert(format!("{label}/numeric")) {
                            eprintln!("warning: {label}: numeric sensitivity failed: {e}");
                        }
                        None
                    }
                }
            } else {
                None
            };
            let diff = match (s_analytic, s_numeric) {
                (Some(a), Some(n)) => Some((a - n).abs()),
                _ => None,
            };
            csv.write_record([
                label.clone(),
                fmt(Some(z)),
                fmt(s_analytic),
                fmt(s_numeric),
                fmt(diff),
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}

fn cmd_roblab(config: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let text =
        fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg = parse_experiment_config(&text)
        .with_context(|| format!("parsing {}", config.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.echo["seed"] = json!(s);
    }
    let threads = thread_cap()?;
    let mut body = Map::new();
    body.insert("schema_version".into(), json!(1));
    body.insert("command".into(), json!("roblab"));
    body.insert("crate_version".into(), json!(env!("CARGO_PKG_VERSION")));
    body.insert(
        "rng".into(),
        json!({ "name": RNG_NAME, "split": RNG_SPLIT }),
    );
    body.insert("seed".into(), json!(cfg.seed));
    body.insert("threads".into(), json!(threads));
    body.insert("config".into(), cfg.echo.clone());
    if cfg.contamination.is_some() {
        let rpt = robustness_experiment(&cfg).context("robustness experiment")?;
        let rows: Vec<Value> = rpt
            .rows
            .iter()
            .map(|r| {
                json!({
                    "z": r.z,
                    "epsilon": r.epsilon,
                    "d_p": r.d_p,
                    "median": r.median,
                    "q05": r.q05,
                    "q95": r.q95,
                })
            })
            .collect();
        body.insert(
            "robustness".into(),
            json!({
                "base": {
                    "median": rpt.base_median,
                    "q05": rpt.base_q05,
                    "q95": rpt.base_q95,
                },
                "rows": rows,
            }),
        );
    }
    if let Some(n_list) = cfg.consistency.clone() {
        let curve = consistency_curve(&cfg.spec, &cfg.base, &n_list, cfg.replications, cfg.seed)
            .context("consistency curve")?;
        let points: Vec<Value> = curve
            .iter()
            .map(|p| json!({ "n": p.n, "median_abs_error": p.median_abs_error }))
            .collect();
        body.insert("consistency".into(), json!(points));
    }
    write_report(out, Value::Object(body))
}

fn status_str(status: &AxiomStatus) -> &'static str {
    match status {
        AxiomStatus::Pass => "pass",
        AxiomStatus::Fail => "fail",
        AxiomStatus::NotAsserted => "not_asserted",
    }
}

fn cmd_axioms(
    input: Option<&Path>,
    catalog: &Path,
    seed: u64,
    tol: f64,
    out: Option<&Path>,
) -> Result<()> {
    let entries = load_catalog(catalog)?;
    let mut inputs: Vec<QuantileFn> = Vec::new();
    if let Some(path) = input {
        inputs.push(empirical_quantile(&read_pnl(path)?, path)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20 {
        let n = rng.gen_range(5..40);
        let samples: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        inputs.push(QuantileFn::empirical(
            EmpiricalDistribution::from_samples(&samples).expect("finite nonempty samples"),
        ));
    }
    let mut results = Map::new();
    for (label, spec) in &entries {
        let suite = axiom_suite(spec, &inputs, tol)
            .with_context(|| format!("axiom suite for {label}"))?;
        let checks: Vec<Value> = suite
            .checks
            .iter()
            .map(|c| {
                json!({
                    "axiom": c.axiom,
                    "status": status_str(&c.status),
                    "detail": c.detail,
                })
            })
            .collect();
        results.insert(label.clone(), json!(checks));
    }
    write_report(
        out,
        json!({
            "schema_version": 1,
            "command": "axioms",
            "seed": seed,
            "rng": { "name": RNG_NAME, "split": RNG_SPLIT },
            "tol": tol,
            "results": Value::Object(results),
        }),
    )
}
