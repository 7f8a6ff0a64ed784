//! Command-line options, the flat `key=value` config file, and parameter
//! resolution.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use infotape::Params;
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

/// Every option a subcommand may read. Flags override the config file.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct Settings {
    /// Flat key=value file; keys are the long flag names.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub p0: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    #[arg(long = "tau-min", global = true)]
    pub tau_min: Option<f64>,
    #[arg(long = "tau-max", global = true)]
    pub tau_max: Option<f64>,
    #[arg(long = "tau-steps", global = true)]
    pub tau_steps: Option<usize>,
    /// Spacing of the tau grid.
    #[arg(long, global = true, value_enum)]
    pub scale: Option<Scale>,
    /// Points per axis for grid sweeps.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long = "n-bits", global = true)]
    pub n_bits: Option<u64>,
    #[arg(long = "burn-in", global = true)]
    pub burn_in: Option<u64>,
    /// Random draws for `validate`.
    #[arg(long, global = true)]
    pub count: Option<u64>,
    /// Independent seeds for `mc`.
    #[arg(long, global = true)]
    pub replicas: Option<u64>,
    #[arg(long = "cell-budget", global = true)]
    pub cell_budget: Option<u64>,
    /// Side of the peak-audit grid in `validate`; 0 skips the audit.
    #[arg(long = "audit-grid", global = true)]
    pub audit_grid: Option<usize>,
    /// Also write a plotting script next to the data file.
    #[arg(long, global = true)]
    pub plot: bool,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("config: cannot parse {key}={value}")))
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T> {
    T::from_str(value, true).map_err(|_| CliError::Usage(format!("config: cannot parse {key}={value}")))
}

impl Settings {
    pub fn from_config_str(text: &str) -> Result<Settings> {
        let mut s = Settings::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return usage(format!("config line {}: expected key=value", n + 1));
            };
            let (key, value) = (key.trim().replace('_', "-"), value.trim());
            match key.as_str() {
                "sigma" => s.sigma = Some(parse(&key, value)?),
                "omega" => s.omega = Some(parse(&key, value)?),
                "gamma" => s.gamma = Some(parse(&key, value)?),
                "delta" => s.delta = Some(parse(&key, value)?),
                "p0" => s.p0 = Some(parse(&key, value)?),
                "epsilon" => s.epsilon = Some(parse(&key, value)?),
                "tau" => s.tau = Some(parse(&key, value)?),
                "tau-min" => s.tau_min = Some(parse(&key, value)?),
                "tau-max" => s.tau_max = Some(parse(&key, value)?),
                "tau-steps" => s.tau_steps = Some(parse(&key, value)?),
                "scale" => s.scale = Some(parse_enum(&key, value)?),
                "grid" => s.grid = Some(parse(&key, value)?),
                "out" => s.out = Some(PathBuf::from(value)),
                "format" => s.format = Some(parse_enum(&key, value)?),
                "jobs" => s.jobs = Some(parse(&key, value)?),
                "seed" => s.seed = Some(parse(&key, value)?),
                "n-bits" => s.n_bits = Some(parse(&key, value)?),
                "burn-in" => s.burn_in = Some(parse(&key, value)?),
                "count" => s.count = Some(parse(&key, value)?),
                "replicas" => s.replicas = Some(parse(&key, value)?),
                "cell-budget" => s.cell_budget = Some(parse(&key, value)?),
                "audit-grid" => s.audit_grid = Some(parse(&key, value)?),
                "plot" => s.plot = parse(&key, value)?,
                _ => return usage(format!("config line {}: unknown key '{key}'", n + 1)),
            }
        }
        Ok(s)
    }

    pub fn from_config_file(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        Settings::from_config_str(&text)
    }

    /// Values set in `top` win over `self`.
    pub fn overlay(self, top: Settings) -> Settings {
        macro_rules! pick {
            ($($f:ident),*) => {
                Settings { $($f: top.$f.or(self.$f),)* plot: top.plot || self.plot }
            };
        }
        pick!(
            config, sigma, omega, gamma, delta, p0, epsilon, tau, tau_min, tau_max, tau_steps,
            scale, grid, out, format, jobs, seed, n_bits, burn_in, count, replicas, cell_budget,
            audit_grid
        )
    }

    /// Flags on top of the config file named by `--config`, if any.
    pub fn with_config_file(self) -> Result<Settings> {
        match &self.config {
            Some(path) => Ok(Settings::from_config_file(path)?.overlay(self)),
            None => Ok(self),
        }
    }

    pub fn resolve(&self, omega_default: Option<f64>) -> Result<ResolvedParams> {
        let Some(omega) = self.omega.or(omega_default) else {
            return usage("--omega is required");
        };
        let gamma = self.gamma.unwrap_or(1.0);
        let delta = match (self.delta, self.p0) {
            (Some(_), Some(_)) => return usage("give either --delta or --p0, not both"),
            (Some(d), None) => d,
            (None, Some(p0)) => {
                if !(0.0..=1.0).contains(&p0) {
                    return usage(format!("--p0 must lie in [0, 1], got {p0}"));
                }
                2.0 * p0 - 1.0
            }
            (None, None) => 0.0,
        };
        let params = match (self.sigma, self.epsilon) {
            (Some(_), Some(_)) => {
                return usage("give either --sigma or --epsilon, not both (over-determined)")
            }
            (Some(s), None) => Params::new(s, omega, gamma, delta)?,
            (None, Some(e)) => Params::from_epsilon(e, omega, gamma, delta)?,
            (None, None) => return usage("one of --sigma or --epsilon is required"),
        };
        Ok(ResolvedParams::from(&params))
    }

    pub fn tau(&self) -> Result<f64> {
        let tau = self.tau.unwrap_or(1.0);
        if !(tau > 0.0 && tau.is_finite()) {
            return usage(format!("--tau must be positive, got {tau}"));
        }
        Ok(tau)
    }

    pub fn jobs(&self) -> usize {
        self.jobs.unwrap_or(0)
    }
}

/// The full parameter set after converting between conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub sigma: f64,
    pub epsilon: f64,
    pub omega: f64,
    pub gamma: f64,
    pub delta: f64,
    pub p0: f64,
    pub physical: bool,
}

impl From<&Params> for ResolvedParams {
    fn from(p: &Params) -> Self {
        ResolvedParams {
            sigma: p.sigma(),
            epsilon: p.epsilon(),
            omega: p.omega(),
            gamma: p.gamma(),
            delta: p.delta(),
            p0: p.p0_bit(),
            physical: p.is_physical(),
        }
    }
}

impl ResolvedParams {
    pub fn params(&self) -> Result<Params> {
        Ok(Params::new(self.sigma, self.omega, self.gamma, self.delta)?)
    }
}
