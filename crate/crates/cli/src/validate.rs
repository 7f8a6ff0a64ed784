//! Randomised invariant checks and the peak-criterion audit.

use infotape::{
    efficiency_bounds, perf_metrics, tradeoff_bound, Machine, Mode, Observables, Params,
    PeakBasis,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::sweep::par_map;

pub const SANDWICH_SLACK: f64 = 1e-10;
pub const THETA_SLACK: f64 = 1e-12;
pub const EFFICIENCY_SLACK: f64 = 1e-9;
pub const BOUND_SLACK: f64 = 1e-10;
pub const TRADEOFF_SLACK: f64 = 1e-12;
/// Below this `|delta - epsilon|` the sign of the heat is not tested.
const SIGN_GUARD: f64 = 1e-12;

/// One random parameter draw for the invariant checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Draw {
    pub sigma: f64,
    pub omega: f64,
    pub p0: f64,
    pub tau: f64,
}

/// `p0` in [0, 1], `omega` in [0.2, 0.8], `sigma` in [0, omega), `tau` log-uniform in [0.01, 100].
pub fn draws(count: u64, seed: u64) -> Vec<Draw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let omega = rng.random_range(0.2..=0.8);
            Draw {
                sigma: rng.random_range(0.0..omega),
                omega,
                p0: rng.random_range(0.0..=1.0),
                tau: 10f64.powf(rng.random_range(-2.0..=2.0)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub checked: u64,
    pub violations: u64,
    /// Smallest slack seen; negative beyond the tolerance is a violation.
    pub worst_margin: f64,
    pub tolerance: f64,
    pub worst_draw: Option<Draw>,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Check {
        Check {
            name,
            checked: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            tolerance,
            worst_draw: None,
        }
    }

    fn record(&mut self, margin: f64, draw: &Draw) {
        self.checked += 1;
        if !(margin >= -self.tolerance) {
            self.violations += 1;
        }
        if margin < self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
            self.worst_draw = Some(*draw);
        }
    }
}

/// Margins of every check for one draw; `None` where a check does not apply.
#[derive(Debug, Clone, Copy, Default)]
struct Margins {
    sandwich_lower: f64,
    sandwich_upper: f64,
    heat_sign: Option<f64>,
    theta_range: f64,
    efficiency_range: Option<f64>,
    efficiency_bounds: Option<f64>,
    tradeoff: Option<f64>,
}

fn margins(obs: &Observables) -> Margins {
    let gap = obs.delta - obs.epsilon;
    let mut m = Margins {
        sandwich_lower: obs.sigma_tau - obs.dkl_inst,
        sandwich_upper: obs.dkl_asymp - obs.sigma_tau,
        heat_sign: (gap.abs() > SIGN_GUARD).then(|| if obs.dq.signum() == gap.signum() { 0.0 } else { -1.0 }),
        theta_range: obs.theta.min(1.0 - obs.theta),
        ..Margins::default()
    };
    if let Ok(perf) = perf_metrics(obs) {
        let eta = perf.efficiency;
        m.efficiency_range = Some(if eta > 0.0 { 1.0 - eta } else { -1.0 });
        if obs.mode == Mode::Eraser {
            if let Ok(b) = efficiency_bounds(obs) {
                let r = (1.0 - eta) / eta;
                let scale = b.upper.abs().max(1.0);
                m.efficiency_bounds = Some((r - b.lower).min(b.upper - r) / scale);
            }
            if let Ok(t) = tradeoff_bound(obs, &perf) {
                m.tradeoff = Some(t.rhs - t.lhs);
            }
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditCell {
    pub delta: f64,
    pub epsilon: f64,
    pub criterion: bool,
    pub basis: PeakBasis,
    pub series_verdict: Option<bool>,
    pub brute_force: bool,
    pub tau_best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisCount {
    pub basis: PeakBasis,
    pub cells: usize,
    pub mismatches: usize,
    /// Mismatches of the literal series inequality, where it is defined.
    pub series_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakAudit {
    pub omega: f64,
    pub grid: usize,
    pub cells: usize,
    /// `[criterion][brute force]` counts, index 1 = peak.
    pub table: [[usize; 2]; 2],
    pub mismatch_fraction: f64,
    pub by_basis: Vec<BasisCount>,
    pub mismatches: Vec<AuditCell>,
    pub failures: Vec<String>,
}

/// `n x n` cells inside the eraser wedge `|delta| < epsilon < omega`.
pub fn audit_points(omega: f64, n: usize) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        let epsilon = omega * (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let delta = epsilon * (-1.0 + (2 * j + 1) as f64 / n as f64);
            pts.push((delta, epsilon));
        }
    }
    pts
}

pub fn peak_audit(omega: f64, gamma: f64, n: usize, jobs: usize) -> Result<PeakAudit> {
    let pts = audit_points(omega, n);
    let cells = par_map(jobs, &pts, |&(delta, epsilon)| {
        let run = || -> infotape::Result<AuditCell> {
            let m = Machine::new(Params::from_epsilon(epsilon, omega, gamma, delta)?)?;
            let crit = m.peak_criterion()?;
            let scan = m.detect_peak()?;
            Ok(AuditCell {
                delta,
                epsilon,
                criterion: crit.peak_exists,
                basis: crit.basis,
                series_verdict: crit.series_verdict,
                brute_force: scan.interior,
                tau_best: scan.tau_best,
            })
        };
        Ok(run().map_err(|e| format!("delta={delta}, epsilon={epsilon}: {e}")))
    })?;
    let mut table = [[0usize; 2]; 2];
    let mut by_basis: Vec<BasisCount> = Vec::new();
    let mut mismatches = Vec::new();
    let mut failures = Vec::new();
    let mut done = 0;
    for cell in cells {
        let c = match cell {
            Ok(c) => c,
            Err(e) => {
                failures.push(e);
                continue;
            }
        };
        done += 1;
        table[c.criterion as usize][c.brute_force as usize] += 1;
        let entry = match by_basis.iter_mut().find(|b| b.basis == c.basis) {
            Some(b) => b,
            None => {
                by_basis.push(BasisCount {
                    basis: c.basis,
                    cells: 0,
                    mismatches: 0,
                    series_mismatches: 0,
                });
                by_basis.last_mut().unwrap()
            }
        };
        entry.cells += 1;
        if c.series_verdict.is_some_and(|v| v != c.brute_force) {
            entry.series_mismatches += 1;
        }
        if c.criterion != c.brute_force {
            entry.mismatches += 1;
            mismatches.push(c);
        }
    }
    let total = done + failures.len();
    Ok(PeakAudit {
        omega,
        grid: n,
        cells: total,
        table,
        mismatch_fraction: if total == 0 {
            0.0
        } else {
            (mismatches.len() + failures.len()) as f64 / total as f64
        },
        by_basis,
        mismatches,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub count: u64,
    pub seed: u64,
    pub checks: Vec<Check>,
    /// Draws where the observables themselves could not be computed.
    pub errors: Vec<String>,
    pub hard_violations: u64,
    pub audit: Option<PeakAudit>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.hard_violations == 0
    }
}

pub fn validate(count: u64, seed: u64, audit_grid: usize, jobs: usize) -> Result<ValidationReport> {
    let ds = draws(count, seed);
    let results = par_map(jobs, &ds, |d| {
        let run = || -> infotape::Result<Margins> {
            let p = Params::with_p0(d.sigma, d.omega, 1.0, d.p0)?;
            Ok(margins(&Machine::new(p)?.observables(d.tau)?))
        };
        Ok(run().map_err(|e| format!("{d:?}: {e}")))
    })?;
    let mut checks = [
        Check::new("sandwich_lower", SANDWICH_SLACK),
        Check::new("sandwich_upper", SANDWICH_SLACK),
        Check::new("heat_sign", 0.0),
        Check::new("theta_range", THETA_SLACK),
        Check::new("efficiency_range", EFFICIENCY_SLACK),
        Check::new("efficiency_bounds", BOUND_SLACK),
        Check::new("tradeoff", TRADEOFF_SLACK),
    ];
    let mut errors = Vec::new();
    for (d, r) in ds.iter().zip(results) {
        let m = match r {
            Ok(m) => m,
            Err(e) => {
                errors.push(e);
                continue;
            }
        };
        let row = [
            Some(m.sandwich_lower),
            Some(m.sandwich_upper),
            m.heat_sign,
            Some(m.theta_range),
            m.efficiency_range,
            m.efficiency_bounds,
            m.tradeoff,
        ];
        for (check, margin) in checks.iter_mut().zip(row) {
            if let Some(v) = margin {
                check.record(v, d);
            }
        }
    }
    let hard_violations = checks.iter().map(|c| c.violations).sum::<u64>() + errors.len() as u64;
    let audit = if audit_grid > 0 {
        Some(peak_audit(0.5, 1.0, audit_grid, jobs)?)
    } else {
        None
    };
    Ok(ValidationReport {
        count,
        seed,
        checks: checks.to_vec(),
        errors,
        hard_violations,
        audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_respect_ranges_and_seed() {
        let a = draws(500, 9);
        assert_eq!(a, draws(500, 9));
        assert_ne!(a, draws(500, 10));
        for d in &a {
            assert!((0.2..=0.8).contains(&d.omega) && d.sigma < d.omega && d.sigma >= 0.0);
            assert!((0.01..=100.0).contains(&d.tau) && (0.0..=1.0).contains(&d.p0));
        }
    }

    #[test]
    fn empty_validation_passes() {
        let r = validate(0, 1, 0, 1).unwrap();
        assert!(r.passed());
        assert!(r.checks.iter().all(|c| c.checked == 0));
        assert!(r.audit.is_none());
    }

    #[test]
    fn small_validation_is_clean() {
        let r = validate(300, 5, 0, 0).unwrap();
        assert!(r.passed(), "{r:#?}");
        assert_eq!(r.checks[0].checked, 300);
    }

    #[test]
    fn audit_grid_lies_in_wedge() {
        for (d, e) in audit_points(0.5, 8) {
            assert!(d.abs() < e && e < 0.5);
        }
        let a = peak_audit(0.5, 1.0, 4, 0).unwrap();
        assert_eq!(a.cells, 16);
        assert_eq!(a.table.iter().flatten().sum::<usize>() + a.failures.len(), 16);
    }
}
