//! Power and efficiency of the eraser/refrigerator, their information
//! bounds, and finite-time optimisation of the eraser.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cycle::{Machine, Mode, Observables};
use crate::error::{Error, Result};
use crate::model::Params;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfMetrics {
    pub mode: Mode,
    /// Sign of the heat flux: -1 for the eraser, +1 for the refrigerator.
    pub theta_sign: i8,
    pub power: f64,
    pub efficiency: f64,
}

pub fn perf_metrics(obs: &Observables) -> Result<PerfMetrics> {
    let work = obs.beta_delta * obs.dq;
    match obs.mode {
        Mode::Eraser => Ok(PerfMetrics {
            mode: obs.mode,
            theta_sign: -1,
            power: obs.dsb.abs() / obs.tau,
            efficiency: obs.dsb / work,
        }),
        Mode::Refrigerator => Ok(PerfMetrics {
            mode: obs.mode,
            theta_sign: 1,
            power: obs.dq / obs.tau,
            efficiency: work / obs.dsb,
        }),
        mode => Err(Error::NotFunctional { mode }),
    }
}

/// Information bounds on the eraser's `(1 - eta) / eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBounds {
    pub lower: f64,
    pub upper: f64,
}

impl EfficiencyBounds {
    /// The same bounds expressed on the efficiency itself, `(eta_lo, eta_hi)`.
    pub fn efficiency_range(&self) -> (f64, f64) {
        (1.0 / (1.0 + self.upper), 1.0 / (1.0 + self.lower))
    }
}

pub fn efficiency_bounds(obs: &Observables) -> Result<EfficiencyBounds> {
    if obs.mode != Mode::Eraser {
        return Err(Error::NotFunctional { mode: obs.mode });
    }
    let s = obs.dsb.abs();
    if !(s > 1e-13) {
        return Err(Error::VanishingEntropyChange(obs.dsb));
    }
    Ok(EfficiencyBounds {
        lower: obs.dkl_inst / s,
        upper: obs.dkl_asymp / s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffBound {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

pub fn tradeoff_bound(obs: &Observables, perf: &PerfMetrics) -> Result<TradeoffBound> {
    if perf.mode != Mode::Eraser {
        return Err(Error::NotFunctional { mode: perf.mode });
    }
    let lhs = perf.power * (1.0 - perf.efficiency) / perf.efficiency;
    let rhs = obs.dkl_asymp / obs.tau;
    Ok(TradeoffBound {
        lhs,
        rhs,
        satisfied: lhs <= rhs + 1e-12,
    })
}

/// Small-`tau` coefficients of `Theta(tau) = kappa tau + c2 tau^2 + ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesCoeffs {
    pub kappa: f64,
    pub c2: f64,
    pub kappa_rel_uncertainty: f64,
    pub c2_rel_uncertainty: f64,
    /// RMS fit residual relative to the largest fitted `Theta`.
    pub residual: f64,
}

const SERIES_TAU_MIN: f64 = 1e-4;
const SERIES_TAU_MAX: f64 = 1e-2;
const SERIES_POINTS: usize = 33;
const SERIES_RESIDUAL_TOL: f64 = 1e-7;

/// Cubic least-squares fit (no constant term) of `Theta` on `[scale*1e-4, scale*1e-2]`.
fn fit_theta(machine: &Machine, scale: f64) -> Result<(f64, f64, f64)> {
    let t_max = SERIES_TAU_MAX * scale;
    let t_min = SERIES_TAU_MIN * scale;
    let n = SERIES_POINTS;
    let mut design = DMatrix::zeros(n, 3);
    let mut rhs = DVector::zeros(n);
    let mut peak: f64 = 0.0;
    for i in 0..n {
        let tau = t_min + (t_max - t_min) * i as f64 / (n - 1) as f64;
        let u = tau / t_max;
        design[(i, 0)] = u;
        design[(i, 1)] = u * u;
        design[(i, 2)] = u * u * u;
        let theta = machine.theta(tau)?;
        rhs[i] = theta;
        peak = peak.max(theta.abs());
    }
    let svd = design.clone().svd(true, true);
    let coef = svd.solve(&rhs, 1e-14).map_err(|_| Error::FitFailed {
        residual: f64::NAN,
        tolerance: SERIES_RESIDUAL_TOL,
    })?;
    let resid = (&design * &coef - &rhs).norm() / (n as f64).sqrt();
    let rel = if peak > 0.0 { resid / peak } else { resid };
    Ok((coef[0] / t_max, coef[1] / (t_max * t_max), rel))
}

pub fn theta_series(params: &Params) -> Result<SeriesCoeffs> {
    Machine::new(*params)?.theta_series()
}

impl Machine {
    pub fn theta_series(&self) -> Result<SeriesCoeffs> {
        let (k_coarse, c_coarse, r_coarse) = fit_theta(self, 1.0)?;
        let (k_fine, c_fine, r_fine) = fit_theta(self, 0.5)?;
        let residual = r_coarse.max(r_fine);
        if !(residual <= SERIES_RESIDUAL_TOL) {
            return Err(Error::FitFailed {
                residual,
                tolerance: SERIES_RESIDUAL_TOL,
            });
        }
        // Truncation error of the cubic fit is O(h^3) in kappa and O(h^2) in c2.
        let kappa = (8.0 * k_fine - k_coarse) / 7.0;
        let c2 = (4.0 * c_fine - c_coarse) / 3.0;
        let rel = |refined: f64, fine: f64| {
            if refined != 0.0 {
                ((refined - fine) / refined).abs()
            } else {
                (refined - fine).abs()
            }
        };
        Ok(SeriesCoeffs {
            kappa,
            c2,
            kappa_rel_uncertainty: rel(kappa, k_fine),
            c2_rel_uncertainty: rel(c2, c_fine),
            residual,
        })
    }
}

fn eraser_region(params: &Params) -> Result<(f64, f64)> {
    let delta = params.delta();
    let epsilon = params.epsilon();
    if epsilon > delta.abs() {
        Ok((delta, epsilon))
    } else {
        Err(Error::OutsideRegion {
            region: "eraser",
            delta,
            epsilon,
        })
    }
}

/// How a peak verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeakBasis {
    /// `c2 / kappa^2` compared with the small-`tau` threshold.
    SeriesCriterion,
    /// `delta = 0`: the erasure power starts from zero.
    ZeroBias,
    /// `delta < 0`: erasure only starts at the onset time, again from zero power.
    DelayedOnset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakCriterion {
    pub peak_exists: bool,
    pub basis: PeakBasis,
    /// `c2 / kappa^2`.
    pub ratio: f64,
    /// `-(epsilon - delta) / (2 (1 - delta^2) atanh(delta))`; absent at `delta = 0`.
    pub threshold: Option<f64>,
    /// Literal truth value of `ratio > threshold`, whatever the basis.
    pub series_verdict: Option<bool>,
}

pub fn peak_criterion(params: &Params) -> Result<PeakCriterion> {
    Machine::new(*params)?.peak_criterion()
}

impl Machine {
    pub fn peak_criterion(&self) -> Result<PeakCriterion> {
        let (delta, epsilon) = eraser_region(self.params())?;
        let series = self.theta_series()?;
        let ratio = series.c2 / (series.kappa * series.kappa);
        let threshold = (delta != 0.0)
            .then(|| -(epsilon - delta) / (2.0 * (1.0 - delta * delta) * delta.atanh()));
        let series_verdict = threshold.map(|t| ratio > t);
        let (peak_exists, basis) = if delta > 0.0 {
            (series_verdict.unwrap_or(false), PeakBasis::SeriesCriterion)
        } else if delta == 0.0 {
            (true, PeakBasis::ZeroBias)
        } else {
            (true, PeakBasis::DelayedOnset)
        };
        Ok(PeakCriterion {
            peak_exists,
            basis,
            ratio,
            threshold,
            series_verdict,
        })
    }
}

/// Outcome of a brute-force scan of the erasure power over a log grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakScan {
    pub interior: bool,
    pub tau_best: f64,
    pub power_best: f64,
}

const SCAN_TAU_MIN: f64 = 1e-6;
const SCAN_TAU_MAX: f64 = 1e3;
const SCAN_PER_DECADE: usize = 30;

/// Brute-force peak detection: is the largest eraser-mode power on a dense
/// log grid attained strictly inside the eraser branch?
pub fn detect_peak(params: &Params) -> Result<PeakScan> {
    Machine::new(*params)?.detect_peak()
}

impl Machine {
    pub fn detect_peak(&self) -> Result<PeakScan> {
        eraser_region(self.params())?;
        let decades = (SCAN_TAU_MAX / SCAN_TAU_MIN).log10();
        let n = (decades * SCAN_PER_DECADE as f64).round() as usize + 1;
        let mut first_eraser = None;
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..n {
            let tau = SCAN_TAU_MIN * 10f64.powf(decades * i as f64 / (n - 1) as f64);
            let obs = self.observables(tau)?;
            if obs.mode != Mode::Eraser {
                continue;
            }
            first_eraser.get_or_insert(i);
            let power = obs.dsb.abs() / tau;
            if best.map_or(true, |(_, _, p)| power > p) {
                best = Some((i, tau, power));
            }
        }
        let (idx, tau_best, power_best) = best.ok_or_else(|| {
            Error::NoBracket("no eraser-mode point on the scan grid".into())
        })?;
        Ok(PeakScan {
            interior: Some(idx) != first_eraser && idx != n - 1,
            tau_best,
            power_best,
        })
    }
}

/// Onset of erasure for an adverse incoming bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Onset {
    pub tau_star: f64,
    /// `2 delta / (delta - epsilon)`.
    pub theta_target: f64,
    /// `|delta'(tau*)| - |delta|`.
    pub bias_residual: f64,
    /// Bit entropy change goes from positive to negative across `tau*`.
    pub entropy_sign_change: bool,
}

pub fn onset_time(params: &Params) -> Result<Onset> {
    Machine::new(*params)?.onset_time()
}

const ONSET_TOL: f64 = 1e-10;

impl Machine {
    pub fn onset_time(&self) -> Result<Onset> {
        let delta = self.params().delta();
        let epsilon = self.params().epsilon();
        if !(delta < 0.0 && epsilon > -delta) {
            return Err(Error::OutsideRegion {
                region: "delayed-eraser",
                delta,
                epsilon,
            });
        }
        let target = 2.0 * delta / (delta - epsilon);
        let excess = |tau: f64| -> Result<f64> { Ok(self.theta(tau)? - target) };

        let mut lo = 1e-8;
        if excess(lo)? >= 0.0 {
            return Err(Error::NoBracket(format!("Theta already above {target} at tau = {lo}")));
        }
        let mut hi = 1.0;
        while excess(hi)? < 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e7 {
                return Err(Error::NoBracket(format!("Theta never reaches {target}")));
            }
        }
        for _ in 0..300 {
            if hi - lo <= ONSET_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if excess(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tau_star = 0.5 * (lo + hi);
        let at = self.observables(tau_star)?;
        let before = self.observables(tau_star * (1.0 - 1e-3))?;
        let after = self.observables(tau_star * (1.0 + 1e-3))?;
        Ok(Onset {
            tau_star,
            theta_target: target,
            bias_residual: at.delta_prime.abs() - delta.abs(),
            entropy_sign_change: before.dsb > 0.0 && after.dsb < 0.0,
        })
    }
}

/// Maximum of the eraser power over the interaction time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalTime {
    pub peak_exists: bool,
    /// Zero when the power is largest in the `tau -> 0` limit.
    pub tau_m: f64,
    pub p_max: f64,
    pub eta_mp: f64,
    /// Central-difference `dP/dtau` at `tau_m` (zero for the boundary answer).
    pub derivative: f64,
    pub stationary: bool,
    /// Relative residual of the optimality condition written with `atanh(delta - delta')`.
    pub residual_shift_form: Option<f64>,
    /// Relative residual of the optimality condition written with `atanh(delta')`.
    pub residual_outgoing_form: Option<f64>,
}

const GOLDEN_TOL: f64 = 1e-8;
const BRACKET_START: f64 = 1e-4;
const BRACKET_CAP: f64 = 1e4;
const BRACKET_GROWTH: f64 = 1.5;

pub fn optimal_time(params: &Params) -> Result<OptimalTime> {
    Machine::new(*params)?.optimal_time()
}

impl Machine {
    pub fn optimal_time(&self) -> Result<OptimalTime> {
        let (delta, epsilon) = eraser_region(self.params())?;
        let criterion = self.peak_criterion()?;
        if !criterion.peak_exists {
            // tau -> 0: dS_B ~ atanh(delta) (delta - epsilon) kappa tau and
            // beta dQ ~ atanh(epsilon) (delta - epsilon) kappa tau.
            let kappa = self.theta_series()?.kappa;
            return Ok(OptimalTime {
                peak_exists: false,
                tau_m: 0.0,
                p_max: (kappa * (delta - epsilon) * delta.atanh()).abs(),
                eta_mp: delta.atanh() / epsilon.atanh(),
                derivative: 0.0,
                stationary: true,
                residual_shift_form: None,
                residual_outgoing_form: None,
            });
        }

        let start = if delta < 0.0 {
            self.onset_time()?.tau_star
        } else {
            BRACKET_START
        };
        let power = |tau: f64| self.erasure_rate(tau);
        let (a, b) = self.bracket_peak(start, &power)?;
        let tau_m = golden_max(a, b, &power)?;
        let p_max = power(tau_m)?;

        let h = 1e-4 * tau_m;
        let derivative = (power(tau_m + h)? - power(tau_m - h)?) / (2.0 * h);
        let stationary = derivative.abs() < 1e-6 * p_max / tau_m;

        let obs = self.observables(tau_m)?;
        let eta_mp = perf_metrics(&obs)?.efficiency;
        let theta_rate = (self.theta(tau_m + h)? - self.theta(tau_m - h)?) / (2.0 * h);
        let lhs = |arg: f64| tau_m * (delta - epsilon) * theta_rate * arg.atanh();
        let rel = |x: f64| {
            let r = (x - obs.dsb) / obs.dsb.abs();
            r.is_finite().then_some(r)
        };
        Ok(OptimalTime {
            peak_exists: true,
            tau_m,
            p_max,
            eta_mp,
            derivative,
            stationary,
            residual_shift_form: rel(lhs(delta - obs.delta_prime)),
            residual_outgoing_form: rel(lhs(obs.delta_prime)),
        })
    }

    /// Geometric bracketing: grow `tau` until the power falls twice in a row.
    fn bracket_peak(
        &self,
        start: f64,
        power: &dyn Fn(f64) -> Result<f64>,
    ) -> Result<(f64, f64)> {
        let mut taus = vec![start];
        let mut vals = vec![power(start)?];
        loop {
            let k = vals.len();
            if k >= 3 && vals[k - 1] < vals[k - 2] && vals[k - 2] < vals[k - 3] {
                break;
            }
            let next = taus[k - 1] * BRACKET_GROWTH;
            if next > BRACKET_CAP {
                return Err(Error::NoBracket(format!(
                    "power still rising at tau = {}",
                    taus[k - 1]
                )));
            }
            taus.push(next);
            vals.push(power(next)?);
        }
        let best = (0..vals.len())
            .max_by(|&i, &j| vals[i].total_cmp(&vals[j]))
            .expect("non-empty");
        if best > 0 {
            return Ok((taus[best - 1], taus[best + 1]));
        }
        // Peak below the starting point: extend downwards.
        let mut hi = taus[1];
        let mut mid = taus[0];
        let mut mid_val = vals[0];
        loop {
            let lo = mid / BRACKET_GROWTH;
            if lo < 1e-9 {
                return Err(Error::NoBracket(
                    "power decreases from the smallest interaction time".into(),
                ));
            }
            let lo_val = power(lo)?;
            if lo_val < mid_val {
                return Ok((lo, hi));
            }
            hi = mid;
            mid = lo;
            mid_val = lo_val;
        }
    }
}

fn golden_max(mut a: f64, mut b: f64, f: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a) <= GOLDEN_TOL * 0.5 * (a + b) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// One point of an efficiency-at-maximum-power curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpPoint {
    pub epsilon: f64,
    pub eta_c: f64,
    pub eta_c_min: f64,
    pub peak_exists: bool,
    pub tau_m: f64,
    pub p_max: f64,
    pub eta_mp: f64,
    /// Efficiency range implied by the information bounds at `tau_m`.
    pub eta_lower: Option<f64>,
    pub eta_upper: Option<f64>,
}

/// EMP versus Carnot efficiency at fixed incoming bias and cold-bath bias.
///
/// Thermal biases outside `|delta| < epsilon <= omega` are dropped.
pub fn emp_curve(delta: f64, omega: f64, gamma: f64, epsilon_grid: &[f64]) -> Result<Vec<EmpPoint>> {
    let eta_c_min = delta.abs().atanh() / omega.atanh();
    let mut out = Vec::new();
    for &epsilon in epsilon_grid {
        if !(epsilon > delta.abs() && epsilon <= omega) {
            continue;
        }
        let params = Params::from_epsilon(epsilon, omega, gamma, delta)?;
        let machine = Machine::new(params)?;
        let opt = machine.optimal_time()?;
        let (eta_lower, eta_upper) = if opt.peak_exists {
            let obs = machine.observables(opt.tau_m)?;
            let (lo, hi) = efficiency_bounds(&obs)?.efficiency_range();
            (Some(lo), Some(hi))
        } else {
            (None, None)
        };
        out.push(EmpPoint {
            epsilon,
            eta_c: epsilon.atanh() / omega.atanh(),
            eta_c_min,
            peak_exists: opt.peak_exists,
            tau_m: opt.tau_m,
            p_max: opt.p_max,
            eta_mp: opt.eta_mp,
            eta_lower,
            eta_upper,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::observables;
    use approx::assert_abs_diff_eq;

    fn at(delta: f64) -> Params {
        Params::from_epsilon(0.4, 0.5, 1.0, delta).unwrap()
    }

    #[test]
    fn eraser_identity() {
        let obs = observables(&at(0.1), 2.0).unwrap();
        let perf = perf_metrics(&obs).unwrap();
        assert_eq!(perf.theta_sign, -1);
        let lhs = perf.power * (1.0 - perf.efficiency) / perf.efficiency;
        assert_abs_diff_eq!(lhs, obs.sigma_tau / obs.tau, epsilon = 1e-12);
        let tb = tradeoff_bound(&obs, &perf).unwrap();
        assert!(tb.satisfied);
    }

    #[test]
    fn refrigerator_metrics() {
        let obs = observables(&at(0.8), 1.0).unwrap();
        let perf = perf_metrics(&obs).unwrap();
        assert_eq!(perf.theta_sign, 1);
        assert_abs_diff_eq!(perf.power, obs.dq, epsilon = 1e-15);
        assert!(perf.efficiency > 0.0 && perf.efficiency <= 1.0);
        assert!(tradeoff_bound(&obs, &perf).is_err());
    }

    #[test]
    fn refrigerator_boundary_power_vanishes() {
        let near = observables(&at(0.4 + 1e-6), 1.0).unwrap();
        let perf = perf_metrics(&near).unwrap();
        assert!(perf.power < 1e-6);
        assert!(perf.efficiency > 0.99, "{}", perf.efficiency);
    }

    #[test]
    fn no_metrics_outside_functional_modes() {
        let obs = observables(&at(-0.8), 1.0).unwrap();
        assert!(matches!(perf_metrics(&obs), Err(Error::NotFunctional { mode: Mode::Dissipative })));
        let neutral = observables(&at(0.4), 1.0).unwrap();
        assert!(perf_metrics(&neutral).is_err());
        assert!(efficiency_bounds(&neutral).is_err());
    }

    #[test]
    fn efficiency_bounds_sandwich_and_converge() {
        let p = at(0.1);
        let mut last_gap = f64::INFINITY;
        for &tau in &[0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
            let obs = observables(&p, tau).unwrap();
            let perf = perf_metrics(&obs).unwrap();
            let b = efficiency_bounds(&obs).unwrap();
            let r = (1.0 - perf.efficiency) / perf.efficiency;
            assert!(b.lower < r && r <= b.upper + 1e-12, "tau {tau}");
            let gap = b.upper - b.lower;
            assert!(gap < last_gap);
            last_gap = gap;
        }
        let obs = observables(&p, 200.0).unwrap();
        let perf = perf_metrics(&obs).unwrap();
        let b = efficiency_bounds(&obs).unwrap();
        assert_abs_diff_eq!((1.0 - perf.efficiency) / perf.efficiency, b.upper, epsilon = 1e-6);
    }

    #[test]
    fn series_reproduces_theta_to_third_order() {
        let p = at(0.2);
        let m = Machine::new(p).unwrap();
        let s = m.theta_series().unwrap();
        assert!(s.kappa > 0.0);
        assert!(s.kappa_rel_uncertainty < 1e-4 && s.c2_rel_uncertainty < 1e-4, "{s:?}");
        let r = |t: f64| m.theta(t).unwrap() - s.kappa * t - s.c2 * t * t;
        let order = (r(0.04) / r(0.02)).abs().log2();
        assert!(order >= 2.9, "order {order}");
    }

    #[test]
    fn short_time_power_limit() {
        let p = at(0.2);
        let m = Machine::new(p).unwrap();
        let s = m.theta_series().unwrap();
        let expected = (s.kappa * (0.2 - 0.4) * 0.2f64.atanh()).abs();
        assert_abs_diff_eq!(m.erasure_rate(1e-6).unwrap(), expected, epsilon = 1e-6 * expected.max(1.0));
    }

    #[test]
    fn peak_criterion_reference_points() {
        let c = peak_criterion(&at(-0.3)).unwrap();
        assert!(c.peak_exists);
        assert_eq!(c.basis, PeakBasis::DelayedOnset);
        let c = peak_criterion(&at(0.38)).unwrap();
        assert!(!c.peak_exists);
        assert_eq!(c.basis, PeakBasis::SeriesCriterion);
        let c = peak_criterion(&at(0.0)).unwrap();
        assert!(c.peak_exists && c.threshold.is_none());
        assert!(peak_criterion(&at(0.5)).is_err());
    }

    #[test]
    fn optimal_time_reference_points() {
        let p = Params::new(0.1, 0.8, 1.0, 0.0).unwrap();
        let m = Machine::new(p).unwrap();
        let opt = m.optimal_time().unwrap();
        assert!(opt.peak_exists && opt.tau_m > 0.0);
        assert!(opt.stationary, "{opt:?}");
        // Power never exceeds the optimum on an audit grid.
        for i in 0..200 {
            let tau = 1e-3 * 10f64.powf(5.0 * i as f64 / 199.0);
            assert!(m.erasure_rate(tau).unwrap() <= opt.p_max * (1.0 + 1e-12));
        }
        let none = optimal_time(&at(0.38)).unwrap();
        assert!(!none.peak_exists && none.tau_m == 0.0);
        assert_abs_diff_eq!(none.eta_mp, 0.38f64.atanh() / 0.4f64.atanh(), epsilon = 1e-15);
    }

    #[test]
    fn onset_reference_point() {
        let p = Params::from_epsilon(0.8, 0.9, 1.0, -0.2).unwrap();
        let on = onset_time(&p).unwrap();
        assert_abs_diff_eq!(on.theta_target, 0.4, epsilon = 1e-15);
        assert!(on.bias_residual.abs() < 1e-8);
        assert!(on.entropy_sign_change);
        let m = Machine::new(p).unwrap();
        assert_eq!(m.observables(on.tau_star * 0.99).unwrap().mode, Mode::Dissipative);
        assert_eq!(m.observables(on.tau_star * 1.01).unwrap().mode, Mode::Eraser);
        assert!(onset_time(&at(0.1)).is_err());
    }

    #[test]
    fn carnot_efficiency_reference() {
        let pts = emp_curve(0.0, 0.5, 1.0, &[0.4]).unwrap();
        assert_abs_diff_eq!(pts[0].eta_c, 0.4f64.atanh() / 0.5f64.atanh(), epsilon = 1e-15);
        assert_abs_diff_eq!(pts[0].eta_c, 0.7712, epsilon = 1e-4);
        assert!(matches!(emp_curve(0.3, 0.5, 1.0, &[0.1, 0.2]), Err(Error::EmptyGrid)));
    }
}
