//! Data generation behind each subcommand.

use infotape::{
    efficiency_bounds, emp_curve, perf_metrics, tradeoff_bound, Machine, Mode, Observables,
    Params,
};
use serde::Serialize;

use crate::config::Scale;
use crate::error::Result;
use crate::sweep::{par_map, Axis, AxisName};
use crate::table::{Cell, Table};

/// Values that only exist for a functioning machine.
struct Derived {
    power: Option<f64>,
    efficiency: Option<f64>,
    ratio_lower: Option<f64>,
    ratio_upper: Option<f64>,
    tradeoff_lhs: Option<f64>,
    tradeoff_rhs: Option<f64>,
}

fn derive(obs: &Observables) -> Derived {
    let perf = perf_metrics(obs).ok();
    let bounds = efficiency_bounds(obs).ok();
    let trade = perf.and_then(|p| tradeoff_bound(obs, &p).ok());
    Derived {
        power: perf.map(|p| p.power),
        efficiency: perf.map(|p| p.efficiency),
        ratio_lower: bounds.map(|b| b.lower),
        ratio_upper: bounds.map(|b| b.upper),
        tradeoff_lhs: trade.map(|t| t.lhs),
        tradeoff_rhs: trade.map(|t| t.rhs),
    }
}

pub const POINT_COLUMNS: &[&str] = &[
    "sigma", "omega", "gamma", "delta", "epsilon", "physical", "eta_carnot", "tau", "d_star",
    "delta_prime", "theta", "dQ", "dSB", "sigma_tau", "dkl_inst", "dkl_asymp", "mode", "power",
    "efficiency", "sandwich_lower_margin", "sandwich_upper_margin", "ratio_lower", "ratio_upper",
    "tradeoff_lhs", "tradeoff_rhs",
];

pub fn point_table(params: &Params, tau: f64) -> Result<Table> {
    let obs = Machine::new(*params)?.observables(tau)?;
    let d = derive(&obs);
    let mut t = Table::new(POINT_COLUMNS);
    t.push(vec![
        params.sigma().into(),
        params.omega().into(),
        params.gamma().into(),
        params.delta().into(),
        params.epsilon().into(),
        params.is_physical().into(),
        params.eta_carnot().into(),
        tau.into(),
        obs.d_star.into(),
        obs.delta_prime.into(),
        obs.theta.into(),
        obs.dq.into(),
        obs.dsb.into(),
        obs.sigma_tau.into(),
        obs.dkl_inst.into(),
        obs.dkl_asymp.into(),
        obs.mode.as_str().into(),
        d.power.into(),
        d.efficiency.into(),
        (obs.sigma_tau - obs.dkl_inst).into(),
        (obs.dkl_asymp - obs.sigma_tau).into(),
        d.ratio_lower.into(),
        d.ratio_upper.into(),
        d.tradeoff_lhs.into(),
        d.tradeoff_rhs.into(),
    ]);
    Ok(t)
}

pub const CURVE_COLUMNS: &[&str] = &[
    "tau", "delta_prime", "theta", "dQ", "dSB", "sigma_tau", "dkl_inst", "dkl_asymp", "power",
    "efficiency", "tradeoff_lhs", "tradeoff_rhs", "mode",
];

fn curve_row(obs: &Observables) -> Vec<Cell> {
    let d = derive(obs);
    vec![
        obs.tau.into(),
        obs.delta_prime.into(),
        obs.theta.into(),
        obs.dq.into(),
        obs.dsb.into(),
        obs.sigma_tau.into(),
        obs.dkl_inst.into(),
        obs.dkl_asymp.into(),
        d.power.into(),
        d.efficiency.into(),
        d.tradeoff_lhs.into(),
        d.tradeoff_rhs.into(),
        obs.mode.as_str().into(),
    ]
}

pub fn curve_observables(params: &Params, taus: &[f64], jobs: usize) -> Result<Vec<Observables>> {
    let machine = Machine::new(*params)?;
    par_map(jobs, taus, |&tau| Ok(machine.observables(tau)?))
}

pub fn curve_table(params: &Params, taus: &[f64], jobs: usize) -> Result<Table> {
    let mut t = Table::new(CURVE_COLUMNS);
    for obs in curve_observables(params, taus, jobs)? {
        t.push(curve_row(&obs));
    }
    Ok(t)
}

/// One cell of the `(delta, epsilon)` phase plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    pub delta: f64,
    pub epsilon: f64,
    pub sigma: f64,
    /// Mode at the reference interaction time.
    pub mode: Mode,
    pub dq: f64,
    pub dsb: f64,
    /// Mode once the outgoing bits have fully relaxed.
    pub functional_mode: Mode,
    pub peak_exists: Option<bool>,
    pub tau_m: Option<f64>,
    pub tau_star: Option<f64>,
    pub issue: Option<String>,
}

/// Relaxation time used for the long-time mode, in units of the slowest mode.
const FUNCTIONAL_DECAYS: f64 = 40.0;

pub fn phase_cell(delta: f64, epsilon: f64, omega: f64, gamma: f64, tau_ref: f64) -> Result<PhaseCell> {
    let params = Params::from_epsilon(epsilon, omega, gamma, delta)?;
    let m = Machine::new(params)?;
    let obs = m.observables(tau_ref)?;
    let tau_long = FUNCTIONAL_DECAYS / m.spectrum()?.gap().abs();
    let functional_mode = m.observables(tau_long)?.mode;
    let mut issues = Vec::new();
    let (mut peak_exists, mut tau_m, mut tau_star) = (None, None, None);
    if epsilon > delta.abs() {
        match m.optimal_time() {
            Ok(opt) => {
                peak_exists = Some(opt.peak_exists);
                tau_m = opt.peak_exists.then_some(opt.tau_m);
            }
            Err(e) => issues.push(format!("optimal time: {e}")),
        }
        if delta < 0.0 {
            match m.onset_time() {
                Ok(on) => tau_star = Some(on.tau_star),
                Err(e) => issues.push(format!("onset: {e}")),
            }
        }
    }
    Ok(PhaseCell {
        delta,
        epsilon,
        sigma: params.sigma(),
        mode: obs.mode,
        dq: obs.dq,
        dsb: obs.dsb,
        functional_mode,
        peak_exists,
        tau_m,
        tau_star,
        issue: (!issues.is_empty()).then(|| issues.join("; ")),
    })
}

/// `n` values of delta on `[-1, 1]` and `n` interior values of epsilon on `(0, 1)`.
pub fn phase_axes(n: usize) -> Result<(Axis, Axis)> {
    let h = 1.0 / (n as f64 + 1.0);
    Ok((
        Axis::new(AxisName::Delta, -1.0, 1.0, n, Scale::Linear)?,
        Axis::new(AxisName::Epsilon, h, 1.0 - h, n, Scale::Linear)?,
    ))
}

pub fn phase_grid(
    deltas: &[f64],
    epsilons: &[f64],
    omega: f64,
    gamma: f64,
    tau_ref: f64,
    jobs: usize,
) -> Result<Vec<PhaseCell>> {
    let coords: Vec<(f64, f64)> = deltas
        .iter()
        .flat_map(|&d| epsilons.iter().map(move |&e| (d, e)))
        .collect();
    par_map(jobs, &coords, |&(d, e)| phase_cell(d, e, omega, gamma, tau_ref))
}

pub fn phase_table(cells: &[PhaseCell]) -> Table {
    let mut t = Table::new(&[
        "delta", "epsilon", "sigma", "mode", "dQ", "dSB", "functional_mode", "peak_exists", "tau_m",
        "tau_star", "issue",
    ]);
    for c in cells {
        t.push(vec![
            c.delta.into(),
            c.epsilon.into(),
            c.sigma.into(),
            c.mode.as_str().into(),
            c.dq.into(),
            c.dsb.into(),
            c.functional_mode.as_str().into(),
            c.peak_exists.into(),
            c.tau_m.into(),
            c.tau_star.into(),
            c.issue.as_deref().map_or(Cell::Empty, Cell::from),
        ]);
    }
    t
}

/// Parametric power-efficiency trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoTrace {
    pub taus: Vec<f64>,
    pub power: Vec<Option<f64>>,
    pub efficiency: Vec<Option<f64>>,
    pub modes: Vec<Mode>,
    /// Grid index of the largest erasure power.
    pub max_index: Option<usize>,
    /// Whether that maximum lies strictly inside the eraser branch of the grid.
    pub interior: bool,
}

pub fn pareto_trace(params: &Params, taus: &[f64], jobs: usize) -> Result<ParetoTrace> {
    let obs = curve_observables(params, taus, jobs)?;
    let mut power = Vec::with_capacity(obs.len());
    let mut efficiency = Vec::with_capacity(obs.len());
    let mut modes = Vec::with_capacity(obs.len());
    for o in &obs {
        let perf = perf_metrics(o).ok().filter(|p| p.mode == Mode::Eraser);
        power.push(perf.map(|p| p.power));
        efficiency.push(perf.map(|p| p.efficiency));
        modes.push(o.mode);
    }
    let first = power.iter().position(Option::is_some);
    let max_index = power
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|p| (i, p)))
        .fold(None, |best: Option<(usize, f64)>, (i, p)| match best {
            Some((_, bp)) if bp >= p => best,
            _ => Some((i, p)),
        })
        .map(|(i, _)| i);
    let interior = matches!((first, max_index), (Some(f), Some(m)) if m != f && m + 1 != taus.len());
    Ok(ParetoTrace {
        taus: taus.to_vec(),
        power,
        efficiency,
        modes,
        max_index,
        interior,
    })
}

pub fn pareto_table(trace: &ParetoTrace) -> Table {
    let mut t = Table::new(&["tau", "power", "efficiency", "mode", "max_power"]);
    for i in 0..trace.taus.len() {
        t.push(vec![
            trace.taus[i].into(),
            trace.power[i].into(),
            trace.efficiency[i].into(),
            trace.modes[i].as_str().into(),
            (trace.max_index == Some(i)).into(),
        ]);
    }
    t
}

/// Thermal biases strictly above `|delta|` up to `omega`, `n` points.
pub fn emp_epsilons(delta: f64, omega: f64, n: usize) -> Vec<f64> {
    let lo = delta.abs();
    (1..=n).map(|i| lo + (omega - lo) * i as f64 / n as f64).collect()
}

pub fn emp_table(delta: f64, omega: f64, gamma: f64, epsilons: &[f64], jobs: usize) -> Result<Table> {
    let points = par_map(jobs, epsilons, |&e| Ok(emp_curve(delta, omega, gamma, &[e])?))?;
    let mut t = Table::new(&[
        "epsilon", "eta_c", "eta_c_min", "peak_exists", "tau_m", "p_max", "eta_mp", "eta_lower",
        "eta_upper",
    ]);
    for p in points.into_iter().flatten() {
        t.push(vec![
            p.epsilon.into(),
            p.eta_c.into(),
            p.eta_c_min.into(),
            p.peak_exists.into(),
            p.tau_m.into(),
            p.p_max.into(),
            p.eta_mp.into(),
            p.eta_lower.into(),
            p.eta_upper.into(),
        ]);
    }
    Ok(t)
}

/// Default `(sigma, omega, gamma, p0)` sets for relaxation fits.
pub const RELAX_SETS: [(f64, f64, f64, f64); 3] =
    [(0.1, 0.9, 0.5, 0.2), (0.2, 0.5, 1.0, 0.95), (0.2, 0.5, 2.0, 0.5)];

pub const RELAX_TOL: f64 = 0.01;
const RELAX_POINTS: usize = 41;

pub fn relax_table(sets: &[Params], jobs: usize) -> Result<Table> {
    let fits = par_map(jobs, sets, |p| {
        let m = Machine::new(*p)?;
        let grid = m.decay_window(RELAX_POINTS)?;
        Ok(m.relaxation_decay(&grid)?)
    })?;
    let mut t = Table::new(&[
        "sigma", "omega", "gamma", "p0", "tau_lo", "tau_hi", "slope", "fitted_rate",
        "eigenvalue_index", "eigenvalue", "twice_eigenvalue", "relative_error", "within_tolerance",
    ]);
    for (p, f) in sets.iter().zip(fits) {
        t.push(vec![
            p.sigma().into(),
            p.omega().into(),
            p.gamma().into(),
            p.p0_bit().into(),
            f.tau_lo.into(),
            f.tau_hi.into(),
            f.slope.into(),
            f.fitted_rate.into(),
            Cell::Int(f.matched_index as i64 + 1),
            f.eigenvalue.into(),
            (2.0 * f.eigenvalue).into(),
            f.relative_error.into(),
            (f.relative_error < RELAX_TOL).into(),
        ]);
    }
    Ok(t)
}
