//! Sweep specification and the ordered parallel map over its cells.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Format, Scale};
use crate::error::{usage, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisName {
    Sigma,
    Omega,
    Gamma,
    Delta,
    Epsilon,
    Tau,
    P0,
}

impl AxisName {
    /// Closed/open bounds of each parameter domain.
    fn admits(self, x: f64) -> bool {
        match self {
            AxisName::Sigma | AxisName::Epsilon => x > -1.0 && x < 1.0,
            AxisName::Omega => (0.0..1.0).contains(&x),
            AxisName::Gamma | AxisName::Tau => x > 0.0 && x.is_finite(),
            AxisName::Delta => (-1.0..=1.0).contains(&x),
            AxisName::P0 => (0.0..=1.0).contains(&x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: Scale,
}

impl Axis {
    pub fn new(name: AxisName, min: f64, max: f64, count: usize, scale: Scale) -> Result<Axis> {
        if count == 0 {
            return usage(format!("{name:?} axis needs at least one point"));
        }
        if !(min <= max) {
            return usage(format!("{name:?} axis: min {min} exceeds max {max}"));
        }
        if !name.admits(min) || !name.admits(max) {
            return usage(format!("{name:?} axis [{min}, {max}] leaves the parameter domain"));
        }
        if scale == Scale::Log && !(min > 0.0) {
            return usage(format!("{name:?} axis: log spacing needs a positive minimum"));
        }
        Ok(Axis {
            name,
            min,
            max,
            count,
            scale,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * t,
                    Scale::Log => self.min * (self.max / self.min).powf(t),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    /// Parameters held constant, by name.
    pub fixed: Vec<(AxisName, f64)>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub jobs: usize,
    pub seed: Option<u64>,
}

impl SweepSpec {
    pub fn cells(&self) -> u64 {
        self.axes.iter().map(|a| a.count as u64).product()
    }

    pub fn check_budget(&self, budget: u64) -> Result<()> {
        let n = self.cells();
        if n > budget {
            return usage(format!("sweep has {n} cells, over the budget of {budget}"));
        }
        Ok(())
    }

    /// Cell coordinates in row-major order (first axis slowest).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for axis in &self.axes {
            let vals = axis.values();
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

/// Map `f` over `items` on `jobs` threads (0 = all cores), keeping input order.
pub fn par_map<I, T, F>(jobs: usize, items: &[I], f: F) -> Result<Vec<T>>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}
