//! Argument parsing and subcommand dispatch.

use std::path::Path;

use clap::{Parser, Subcommand};
use infotape::ssa::DEFAULT_BURN_IN;
use infotape::{compare_with_analytic, optimal_time, McComparison, McConfig, Params};
use serde::Serialize;
use serde_json::json;

use crate::commands;
use crate::config::{Format, Scale, Settings};
use crate::error::{usage, CliError, Result};
use crate::output::emit;
use crate::plot;
use crate::sweep::{par_map, Axis, AxisName, SweepSpec};
use crate::validate::validate;

#[derive(Debug, Parser)]
#[command(name = "infotape", version, about = "Finite-time thermodynamics of a demon reading a bit tape")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// All observables, performance metrics and bound margins at one point.
    Point,
    /// Observables along a tau grid.
    Curve,
    /// Mode, peak and onset data over the (delta, epsilon) plane.
    Phase,
    /// Power-efficiency trace of the eraser along a tau grid.
    Pareto,
    /// Efficiency at maximum power against the Carnot efficiency.
    Emp,
    /// Decay-rate fits of the approach to quasi-static dissipation.
    Relax,
    /// Randomised invariant checks plus the peak-criterion audit.
    Validate,
    /// Kinetic Monte Carlo against the analytic steady state.
    Mc,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Point => "point",
            Command::Curve => "curve",
            Command::Phase => "phase",
            Command::Pareto => "pareto",
            Command::Emp => "emp",
            Command::Relax => "relax",
            Command::Validate => "validate",
            Command::Mc => "mc",
        }
    }
}

pub const DEFAULT_CELL_BUDGET: u64 = 1_000_000;

fn tau_axis(s: &Settings, min: f64, max: f64, steps: usize) -> Result<Axis> {
    Axis::new(
        AxisName::Tau,
        s.tau_min.unwrap_or(min),
        s.tau_max.unwrap_or(max),
        s.tau_steps.unwrap_or(steps),
        s.scale.unwrap_or(Scale::Log),
    )
}

fn spec(s: &Settings, axes: Vec<Axis>, fixed: Vec<(AxisName, f64)>, format: Format) -> SweepSpec {
    SweepSpec {
        axes,
        fixed,
        out: s.out.clone(),
        format,
        jobs: s.jobs(),
        seed: s.seed,
    }
}

fn fixed_of(p: &Params) -> Vec<(AxisName, f64)> {
    vec![
        (AxisName::Sigma, p.sigma()),
        (AxisName::Omega, p.omega()),
        (AxisName::Gamma, p.gamma()),
        (AxisName::Delta, p.delta()),
    ]
}

struct Output {
    data: Vec<u8>,
    params: serde_json::Value,
    ok: bool,
    summary: Option<String>,
}

fn write(command: Command, s: &Settings, out: Output) -> Result<i32> {
    let plot = if s.plot {
        let Some(path) = s.out.as_deref() else {
            return usage("--plot needs --out");
        };
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        plot::script(command.name(), &name)
    } else {
        None
    };
    emit(s.out.as_deref(), command.name(), out.params, &out.data, plot)?;
    if let Some(msg) = out.summary {
        eprintln!("{msg}");
    }
    Ok(if out.ok { 0 } else { 1 })
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

#[derive(Debug, Serialize)]
pub struct McReport {
    pub replicas: Vec<McComparison>,
    pub passed: usize,
    pub pass_rate: f64,
}

/// Minimum share of passing seeds for `mc` to succeed.
pub const MC_PASS_RATE: f64 = 0.9;

pub fn mc_report(cfg: &McConfig, replicas: u64, jobs: usize) -> Result<McReport> {
    let seeds: Vec<u64> = (0..replicas).map(|k| cfg.seed.wrapping_add(k)).collect();
    let runs = par_map(jobs, &seeds, |&seed| Ok(compare_with_analytic(&McConfig { seed, ..*cfg })?))?;
    let passed = runs.iter().filter(|r| r.pass).count();
    Ok(McReport {
        pass_rate: passed as f64 / runs.len().max(1) as f64,
        passed,
        replicas: runs,
    })
}

fn execute(command: Command, s: &Settings) -> Result<Output> {
    let jobs = s.jobs();
    match command {
        Command::Point => {
            let r = s.resolve(None)?;
            let tau = s.tau()?;
            let t = commands::point_table(&r.params()?, tau)?;
            let data = match s.format.unwrap_or(Format::Json) {
                Format::Json => json_bytes(&t.records()[0])?,
                Format::Csv => t.to_csv()?,
            };
            Ok(Output {
                data,
                params: json!({"params": r, "tau": tau}),
                ok: true,
                summary: None,
            })
        }
        Command::Curve => {
            let r = s.resolve(None)?;
            let p = r.params()?;
            let axis = tau_axis(s, 0.01, 100.0, 200)?;
            let format = s.format.unwrap_or(Format::Csv);
            let t = commands::curve_table(&p, &axis.values(), jobs)?;
            Ok(Output {
                data: t.encode(format)?,
                params: json!({"params": r, "sweep": spec(s, vec![axis], fixed_of(&p), format)}),
                ok: true,
                summary: None,
            })
        }
        Command::Phase => {
            let omega = s.omega.unwrap_or(0.5);
            let gamma = s.gamma.unwrap_or(1.0);
            let tau = s.tau()?;
            if s.sigma.is_some() || s.epsilon.is_some() || s.delta.is_some() || s.p0.is_some() {
                return usage("phase sweeps delta and epsilon; do not fix them");
            }
            let n = s.grid.unwrap_or(101);
            let (da, ea) = commands::phase_axes(n)?;
            let format = s.format.unwrap_or(Format::Csv);
            let sp = spec(
                s,
                vec![da, ea],
                vec![(AxisName::Omega, omega), (AxisName::Gamma, gamma), (AxisName::Tau, tau)],
                format,
            );
            sp.check_budget(s.cell_budget.unwrap_or(DEFAULT_CELL_BUDGET))?;
            let cells = commands::phase_grid(&da.values(), &ea.values(), omega, gamma, tau, jobs)?;
            let t = commands::phase_table(&cells);
            Ok(Output {
                data: t.encode(format)?,
                params: json!({"sweep": sp}),
                ok: true,
                summary: None,
            })
        }
        Command::Pareto => {
            let r = s.resolve(None)?;
            let p = r.params()?;
            let axis = tau_axis(s, 1e-3, 100.0, 300)?;
            let format = s.format.unwrap_or(Format::Csv);
            let trace = commands::pareto_trace(&p, &axis.values(), jobs)?;
            let opt = optimal_time(&p).ok();
            Ok(Output {
                data: commands::pareto_table(&trace).encode(format)?,
                params: json!({
                    "params": r,
                    "sweep": spec(s, vec![axis], fixed_of(&p), format),
                    "interior_maximum": trace.interior,
                    "optimal_time": opt,
                }),
                ok: true,
                summary: None,
            })
        }
        Command::Emp => {
            if s.sigma.is_some() || s.epsilon.is_some() {
                return usage("emp sweeps epsilon; do not fix sigma or epsilon");
            }
            let omega = s.omega.unwrap_or(0.5);
            let gamma = s.gamma.unwrap_or(1.0);
            let delta = match (s.delta, s.p0) {
                (Some(_), Some(_)) => return usage("give either --delta or --p0, not both"),
                (Some(d), None) => d,
                (None, Some(p0)) => 2.0 * p0 - 1.0,
                (None, None) => 0.0,
            };
            if !(delta.abs() < omega) {
                return usage(format!("|delta| = {} leaves no eraser range below omega = {omega}", delta.abs()));
            }
            let n = s.grid.unwrap_or(40);
            let eps = commands::emp_epsilons(delta, omega, n);
            let format = s.format.unwrap_or(Format::Csv);
            let t = commands::emp_table(delta, omega, gamma, &eps, jobs)?;
            Ok(Output {
                data: t.encode(format)?,
                params: json!({"delta": delta, "omega": omega, "gamma": gamma, "epsilon_grid": eps}),
                ok: true,
                summary: None,
            })
        }
        Command::Relax => {
            let sets: Vec<Params> = if s.sigma.is_some() || s.epsilon.is_some() {
                vec![s.resolve(None)?.params()?]
            } else {
                commands::RELAX_SETS
                    .iter()
                    .map(|&(sg, w, g, p0)| Params::with_p0(sg, w, g, p0))
                    .collect::<infotape::Result<_>>()?
            };
            let format = s.format.unwrap_or(Format::Csv);
            let t = commands::relax_table(&sets, jobs)?;
            let ok = t.numbers("relative_error").unwrap_or_default().iter().all(|&e| e < commands::RELAX_TOL);
            let resolved: Vec<_> = sets.iter().map(crate::config::ResolvedParams::from).collect();
            Ok(Output {
                data: t.encode(format)?,
                params: json!({"sets": resolved}),
                ok,
                summary: (!ok).then(|| "relax: a fitted rate misses its eigenvalue by more than 1%".into()),
            })
        }
        Command::Validate => {
            let count = s.count.unwrap_or(10_000);
            let seed = s.seed.unwrap_or(0);
            let audit = s.audit_grid.unwrap_or(50);
            let report = validate(count, seed, audit, jobs)?;
            let mut summary = format!(
                "validate: {count} draws, {} hard violations",
                report.hard_violations
            );
            if let Some(a) = &report.audit {
                summary.push_str(&format!(
                    "; peak audit {} mismatches of {} cells ({:.2}%)",
                    a.mismatches.len() + a.failures.len(),
                    a.cells,
                    100.0 * a.mismatch_fraction
                ));
            }
            Ok(Output {
                data: json_bytes(&report)?,
                params: json!({"count": count, "seed": seed, "audit_grid": audit}),
                ok: report.passed(),
                summary: Some(summary),
            })
        }
        Command::Mc => {
            let r = s.resolve(None)?;
            let cfg = McConfig::new(
                r.params()?,
                s.tau()?,
                s.n_bits.unwrap_or(1_000_000),
                s.burn_in.unwrap_or(DEFAULT_BURN_IN),
                s.seed.unwrap_or(0),
            )?;
            let replicas = s.replicas.unwrap_or(1);
            if replicas == 0 {
                return usage("--replicas must be at least 1");
            }
            let report = mc_report(&cfg, replicas, jobs)?;
            let ok = report.pass_rate >= MC_PASS_RATE;
            Ok(Output {
                data: json_bytes(&report)?,
                params: json!({"config": cfg, "replicas": replicas, "params": r}),
                ok,
                summary: Some(format!("mc: {}/{} replicas within 4 standard errors", report.passed, replicas)),
            })
        }
    }
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let settings = cli.settings.with_config_file()?;
    let out = execute(cli.command, &settings)?;
    write(cli.command, &settings, out)
}

/// Like [`run`] but for tests and embedding: parse `args` first.
pub fn run_args<I, T>(args: I) -> Result<i32>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    run(cli)
}

/// Reads the manifest for `out` and checks every listed checksum.
pub fn manifest_ok(out: &Path) -> Result<bool> {
    crate::output::RunManifest::verify(&crate::output::manifest_path(out))
}
