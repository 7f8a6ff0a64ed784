//! Periodic steady state of the demon/tape interaction and per-interval
//! thermodynamic observables.
//!
//! Each interval starts from the product of the demon marginal and a fresh
//! incoming bit, evolves for `tau` under the joint generator, and hands the
//! demon marginal on to the next interval. The start-of-interval demon
//! probability obeys an affine map `d -> gain * d + offset`; its fixed point
//! is the periodic steady state.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{entropy_change, kl_bias};
use crate::model::{
    build_rate_matrix, eigen_spectrum, stationary_distribution, BitDist, JointDist, Params,
    Propagator, RateMatrix, Spectrum,
};

/// Classification tolerance on heat and entropy change.
pub const MODE_TOL: f64 = 1e-12;

/// Below this distance from `delta = epsilon` the relaxation degree is
/// evaluated as a difference quotient instead of a ratio.
const THETA_LIMIT_BAND: f64 = 1e-6;

/// Base step of the difference quotient used near `delta = epsilon`.
const THETA_LIMIT_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Eraser,
    Refrigerator,
    Dissipative,
    Neutral,
}

impl Mode {
    pub fn classify(dq: f64, dsb: f64) -> Mode {
        if dq.abs() <= MODE_TOL {
            Mode::Neutral
        } else if dq > MODE_TOL && dsb > MODE_TOL {
            Mode::Refrigerator
        } else if dq < -MODE_TOL && dsb < -MODE_TOL {
            Mode::Eraser
        } else {
            Mode::Dissipative
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Eraser => "Eraser",
            Mode::Refrigerator => "Refrigerator",
            Mode::Dissipative => "Dissipative",
            Mode::Neutral => "Neutral",
        }
    }

    pub fn is_functional(self) -> bool {
        matches!(self, Mode::Eraser | Mode::Refrigerator)
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The affine start-of-interval demon map `d' = gain * d + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemonMap {
    pub gain: f64,
    pub offset: f64,
}

impl DemonMap {
    pub fn apply(&self, d: f64) -> f64 {
        self.gain * d + self.offset
    }

    pub fn fixed_point(&self) -> f64 {
        self.offset / (1.0 - self.gain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleState {
    pub tau: f64,
    /// Probability of demon state `u` at the start of every interval.
    pub d_star: f64,
    pub p_start: JointDist,
    pub p_end: JointDist,
    pub bit_out: BitDist,
}

/// Everything measured over one interval of the periodic steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub tau: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// `(beta_c - beta_h) * dE = 2 atanh(epsilon)`.
    pub beta_delta: f64,
    pub d_star: f64,
    pub delta_prime: f64,
    pub theta: f64,
    /// Heat taken from the cold bath per interval.
    pub dq: f64,
    /// Bit entropy change per interval.
    pub dsb: f64,
    pub sigma_tau: f64,
    pub dkl_inst: f64,
    pub dkl_asymp: f64,
    pub mode: Mode,
}

impl Observables {
    /// `Sigma_inf - Sigma_tau`, evaluated as `D_KL(p_tau || p_inf)` which is
    /// the same quantity without the cancellation.
    pub fn entropy_gap(&self) -> f64 {
        kl_bias(self.delta_prime, self.epsilon)
    }

    /// Entropy production rebuilt from `(delta, delta', epsilon)` alone.
    pub fn sigma_from_biases(delta: f64, delta_prime: f64, epsilon: f64) -> f64 {
        let dq = (delta - delta_prime) / 2.0;
        -2.0 * epsilon.atanh() * dq + entropy_change(delta, delta_prime)
    }
}

pub fn classify_mode(obs: &Observables) -> Mode {
    Mode::classify(obs.dq, obs.dsb)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDuration(tau))
    }
}

/// Start-of-interval fixed point for one incoming bias, expressed through
/// the increment matrix `exp(R tau) - I`.
struct Interval {
    d_star: f64,
    gain: f64,
    offset: f64,
    p_start: JointDist,
    change: nalgebra::Vector4<f64>,
}

impl Interval {
    fn solve(increment: &Matrix4<f64>, bit: BitDist) -> Result<Self> {
        let up = increment * JointDist::product(1.0, bit).to_vector();
        let down = increment * JointDist::product(0.0, bit).to_vector();
        // change of the demon u-probability started from u (resp. d)
        let m1 = up[0] + up[2];
        let m0 = down[0] + down[2];
        let gain = 1.0 + (m1 - m0);
        let contraction = m0 - m1;
        if !(contraction > 0.0) {
            return Err(Error::NonContraction { gain });
        }
        let d_star = (m0 / contraction).clamp(0.0, 1.0);
        let p_start = JointDist::product(d_star, bit);
        let change = increment * p_start.to_vector();
        Ok(Interval {
            d_star,
            gain,
            offset: m0,
            p_start,
            change,
        })
    }

    fn bias_shift(&self) -> f64 {
        (self.change[0] + self.change[1]) - (self.change[2] + self.change[3])
    }
}

/// A parameter set with its generator and propagator prepared once.
#[derive(Debug, Clone)]
pub struct Machine {
    params: Params,
    rate: RateMatrix,
    propagator: Propagator,
    stationary: JointDist,
}

impl Machine {
    pub fn new(params: Params) -> Result<Self> {
        let rate = build_rate_matrix(&params);
        let propagator = Propagator::new(&rate)?;
        let stationary = stationary_distribution(&rate)?;
        Ok(Machine {
            params,
            rate,
            propagator,
            stationary,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn rate(&self) -> &RateMatrix {
        &self.rate
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn stationary(&self) -> &JointDist {
        &self.stationary
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        eigen_spectrum(&self.rate)
    }

    fn interval(&self, bias: f64, tau: f64) -> Result<Interval> {
        check_tau(tau)?;
        Interval::solve(&self.propagator.increment(tau), BitDist::from_bias(bias))
    }

    pub fn demon_update_map(&self, tau: f64) -> Result<DemonMap> {
        let iv = self.interval(self.params.delta(), tau)?;
        Ok(DemonMap {
            gain: iv.gain,
            offset: iv.offset,
        })
    }

    pub fn periodic_steady_state(&self, tau: f64) -> Result<CycleState> {
        let iv = self.interval(self.params.delta(), tau)?;
        let p_end = JointDist::from_propagated(iv.p_start.to_vector() + iv.change)?;
        Ok(CycleState {
            tau,
            d_star: iv.d_star,
            p_start: iv.p_start,
            p_end,
            bit_out: p_end.bit_marginal(),
        })
    }

    /// `delta' - delta` in the periodic steady state for an arbitrary
    /// incoming bias under this machine's rates.
    pub fn bias_shift_at(&self, bias: f64, tau: f64) -> Result<f64> {
        Ok(self.interval(bias, tau)?.bias_shift())
    }

    /// Relaxation degree `Theta(tau)` from `delta' = delta - (delta - epsilon) Theta`.
    pub fn theta(&self, tau: f64) -> Result<f64> {
        let delta = self.params.delta();
        let shift = self.bias_shift_at(delta, tau)?;
        self.theta_from_shift(shift, tau)
    }

    fn theta_from_shift(&self, shift: f64, tau: f64) -> Result<f64> {
        let delta = self.params.delta();
        let epsilon = self.params.epsilon();
        if (delta - epsilon).abs() >= THETA_LIMIT_BAND {
            return Ok(-shift / (delta - epsilon));
        }
        // -shift(x) vanishes at x = epsilon; the secant slope between epsilon
        // and delta is the derivative at the midpoint to second order.
        let centre = 0.5 * (delta + epsilon);
        let room = 1.0 - centre.abs();
        let h = THETA_LIMIT_STEP.min(0.5 * room);
        let quotient = |h: f64| -> Result<f64> {
            let hi = self.bias_shift_at(centre + h, tau)?;
            let lo = self.bias_shift_at(centre - h, tau)?;
            Ok(-(hi - lo) / (2.0 * h))
        };
        let coarse = quotient(h)?;
        let fine = quotient(h / 2.0)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }

    pub fn observables(&self, tau: f64) -> Result<Observables> {
        let delta = self.params.delta();
        let epsilon = self.params.epsilon();
        let iv = self.interval(delta, tau)?;
        let shift = iv.bias_shift();
        let delta_prime = (delta + shift).clamp(-1.0, 1.0);
        let theta = self.theta_from_shift(shift, tau)?;
        let dq = -shift / 2.0;
        let dsb = entropy_change(delta, delta_prime);
        let beta_delta = self.params.beta_delta();
        let sigma_tau = -beta_delta * dq + dsb;
        Ok(Observables {
            tau,
            delta,
            epsilon,
            beta_delta,
            d_star: iv.d_star,
            delta_prime,
            theta,
            dq,
            dsb,
            sigma_tau,
            dkl_inst: kl_bias(delta, delta_prime),
            dkl_asymp: kl_bias(delta, epsilon),
            mode: Mode::classify(dq, dsb),
        })
    }

    /// Signed erasure rate `-dS_B / tau`; equals the eraser power in eraser mode.
    pub fn erasure_rate(&self, tau: f64) -> Result<f64> {
        let delta = self.params.delta();
        let shift = self.bias_shift_at(delta, tau)?;
        Ok(-entropy_change(delta, (delta + shift).clamp(-1.0, 1.0)) / tau)
    }
}

pub fn demon_update_map(params: &Params, tau: f64) -> Result<DemonMap> {
    Machine::new(*params)?.demon_update_map(tau)
}

pub fn periodic_steady_state(params: &Params, tau: f64) -> Result<CycleState> {
    Machine::new(*params)?.periodic_steady_state(tau)
}

pub fn observables(params: &Params, tau: f64) -> Result<Observables> {
    Machine::new(*params)?.observables(tau)
}

/// Result of fitting `ln(Sigma_inf - Sigma_tau)` against `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Regression slope of the log entropy gap.
    pub slope: f64,
    /// `slope / 2`, the rate compared against the spectrum.
    pub fitted_rate: f64,
    /// Index into the descending spectrum (0 is the stationary mode).
    pub matched_index: usize,
    pub eigenvalue: f64,
    pub relative_error: f64,
    pub tau_lo: f64,
    pub tau_hi: f64,
}

/// Numerical floor for the entropy gap in a decay fit.
pub const DECAY_FLOOR: f64 = 1e-13;

pub fn relaxation_decay(params: &Params, tau_grid: &[f64]) -> Result<DecayFit> {
    Machine::new(*params)?.relaxation_decay(tau_grid)
}

impl Machine {
    pub fn relaxation_decay(&self, tau_grid: &[f64]) -> Result<DecayFit> {
        if tau_grid.len() < 3 {
            return Err(Error::DecayGridTooSmall {
                needed: 3,
                got: tau_grid.len(),
            });
        }
        let mut logs = Vec::with_capacity(tau_grid.len());
        let mut prev = f64::INFINITY;
        for (i, &tau) in tau_grid.iter().enumerate() {
            let gap = self.observables(tau)?.entropy_gap();
            if !(gap > DECAY_FLOOR) {
                return Err(Error::DecayBelowFloor { tau, gap });
            }
            if gap >= prev {
                return Err(Error::DecayNonMonotone { index: i });
            }
            prev = gap;
            logs.push(gap.ln());
        }
        let slope = ols_slope(tau_grid, &logs);
        let fitted_rate = slope / 2.0;
        let spectrum = self.spectrum()?;
        let (matched_index, eigenvalue) = (1..4)
            .map(|k| (k, spectrum.values[k]))
            .min_by(|a, b| (a.1 - fitted_rate).abs().total_cmp(&(b.1 - fitted_rate).abs()))
            .expect("three nonzero modes");
        Ok(DecayFit {
            slope,
            fitted_rate,
            matched_index,
            eigenvalue,
            relative_error: ((fitted_rate - eigenvalue) / eigenvalue).abs(),
            tau_lo: tau_grid[0],
            tau_hi: tau_grid[tau_grid.len() - 1],
        })
    }

    /// Grid over the asymptotic exponential regime: the entropy gap falls
    /// from `1e-6` to `1e-11` of its initial value (but stays above the
    /// absolute floor).
    pub fn decay_window(&self, points: usize) -> Result<Vec<f64>> {
        let sigma_inf = kl_bias(self.params.delta(), self.params.epsilon());
        if !(sigma_inf > 1e-9) {
            return Err(Error::DecayBelowFloor {
                tau: f64::INFINITY,
                gap: sigma_inf,
            });
        }
        let upper = 1e-6 * sigma_inf;
        let lower = (1e-11 * sigma_inf).max(1e3 * DECAY_FLOOR);
        let mut tau = 1e-2;
        let mut start = None;
        loop {
            let gap = self.observables(tau)?.entropy_gap();
            if start.is_none() && gap <= upper {
                start = Some(tau);
            }
            if gap <= lower {
                break;
            }
            tau *= 1.02;
            if tau > 1e6 {
                return Err(Error::DecayBelowFloor { tau, gap });
            }
        }
        let lo = start.unwrap_or(tau);
        let hi = tau;
        let n = points.max(3);
        Ok((0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect())
    }
}

pub(crate) fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference() -> Params {
        Params::new(0.3, 0.5, 1.0, 0.0).unwrap()
    }

    #[test]
    fn mode_classification_rules() {
        assert_eq!(Mode::classify(0.0, 0.3), Mode::Neutral);
        assert_eq!(Mode::classify(1e-13, -0.3), Mode::Neutral);
        assert_eq!(Mode::classify(0.1, 0.2), Mode::Refrigerator);
        assert_eq!(Mode::classify(-0.1, -0.2), Mode::Eraser);
        assert_eq!(Mode::classify(-0.1, 0.2), Mode::Dissipative);
        assert_eq!(Mode::classify(-0.1, 0.0), Mode::Dissipative);
        assert_eq!(Mode::classify(0.1, -0.2), Mode::Dissipative);
    }

    #[test]
    fn update_map_tends_to_identity_for_short_intervals() {
        let m = demon_update_map(&reference(), 1e-9).unwrap();
        assert_abs_diff_eq!(m.gain, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(m.offset, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn update_map_relaxes_fully_for_long_intervals() {
        let p = reference();
        let m = demon_update_map(&p, 1e3).unwrap();
        let pi = stationary_distribution(&build_rate_matrix(&p)).unwrap();
        assert_abs_diff_eq!(m.gain, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.offset, pi.demon_up(), epsilon = 1e-12);
    }

    #[test]
    fn update_map_matches_direct_propagation() {
        let p = Params::new(0.2, 0.6, 0.7, 0.3).unwrap();
        let tau = 0.8;
        let r = build_rate_matrix(&p);
        let run = |d: f64| {
            crate::model::propagate(&r, &JointDist::product(d, p.incoming()), tau)
                .unwrap()
                .demon_up()
        };
        let m = demon_update_map(&p, tau).unwrap();
        assert_abs_diff_eq!(m.offset, run(0.0), epsilon = 1e-14);
        assert_abs_diff_eq!(m.gain + m.offset, run(1.0), epsilon = 1e-14);
    }

    #[test]
    fn equilibrium_parameters_give_no_flux() {
        let p = Params::new(0.4, 0.4, 1.0, 0.0).unwrap();
        let cs = periodic_steady_state(&p, 0.9).unwrap();
        assert_abs_diff_eq!(cs.bit_out.bias(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cs.d_star, (1.0 - 0.4) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn long_interval_outgoing_bias_is_epsilon() {
        let cs = periodic_steady_state(&reference(), 1e3).unwrap();
        assert_abs_diff_eq!(cs.bit_out.bias(), 0.2 / 0.85, epsilon = 1e-6);
    }

    #[test]
    fn iteration_converges_to_fixed_point() {
        let p = Params::new(0.15, 0.7, 1.4, -0.4).unwrap();
        let tau = 0.6;
        let machine = Machine::new(p).unwrap();
        let cs = machine.periodic_steady_state(tau).unwrap();
        // Oracle: iterate full propagations, carrying only the demon marginal.
        let mut d = 0.93;
        for _ in 0..400 {
            let start = JointDist::product(d, p.incoming());
            d = machine.propagator().propagate(&start, tau).unwrap().demon_up();
        }
        assert_abs_diff_eq!(d, cs.d_star, epsilon = 1e-12);
        assert_abs_diff_eq!(cs.p_end.demon_up(), cs.d_star, epsilon = 1e-10);
        let start = cs.p_start.as_array();
        let b = p.incoming();
        assert_eq!(start[0], cs.d_star * b.p0);
        assert_eq!(start[3], (1.0 - cs.d_star) * b.p1);
    }

    #[test]
    fn non_positive_duration_is_rejected() {
        assert!(observables(&reference(), 0.0).is_err());
        assert!(periodic_steady_state(&reference(), -1.0).is_err());
        assert!(demon_update_map(&reference(), f64::NAN).is_err());
    }

    #[test]
    fn neutral_boundary() {
        let p = Params::from_epsilon(0.4, 0.5, 1.0, 0.4).unwrap();
        let obs = observables(&p, 1.3).unwrap();
        assert_abs_diff_eq!(obs.dq, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(obs.dsb, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(obs.sigma_tau, 0.0, epsilon = 1e-14);
        assert_eq!(obs.mode, Mode::Neutral);
        assert!(obs.theta > 0.0 && obs.theta < 1.0);
    }

    #[test]
    fn theta_limit_is_continuous_across_neutral_boundary() {
        let tau = 1.3;
        let at = Machine::new(Params::from_epsilon(0.4, 0.5, 1.0, 0.4).unwrap())
            .unwrap()
            .theta(tau)
            .unwrap();
        let below = Machine::new(Params::from_epsilon(0.4, 0.5, 1.0, 0.4 - 1e-3).unwrap())
            .unwrap()
            .theta(tau)
            .unwrap();
        let above = Machine::new(Params::from_epsilon(0.4, 0.5, 1.0, 0.4 + 1e-3).unwrap())
            .unwrap()
            .theta(tau)
            .unwrap();
        assert_abs_diff_eq!(at, 0.5 * (below + above), epsilon = 1e-6);
    }

    #[test]
    fn quasi_static_limit_is_closed_form_kl() {
        let obs = observables(&reference(), 1e3).unwrap();
        let expected = 0.5 * (0.5f64 / 0.617647058823529).ln() + 0.5 * (0.5f64 / 0.382352941176471).ln();
        assert_abs_diff_eq!(obs.dkl_asymp, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(obs.sigma_tau, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(obs.theta, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn reference_modes() {
        let mode = |d: f64| observables(&Params::from_epsilon(0.4, 0.5, 1.0, d).unwrap(), 1.0).unwrap().mode;
        assert_eq!(mode(0.8), Mode::Refrigerator);
        assert_eq!(mode(0.0), Mode::Eraser);
        assert_eq!(mode(-0.8), Mode::Dissipative);
    }

    #[test]
    fn entropy_gap_equals_difference_to_asymptote() {
        let obs = observables(&Params::new(0.2, 0.5, 1.0, 0.9).unwrap(), 2.0).unwrap();
        assert_abs_diff_eq!(obs.entropy_gap(), obs.dkl_asymp - obs.sigma_tau, epsilon = 1e-14);
    }

    #[test]
    fn decay_fit_rejects_bad_grids() {
        let p = Params::new(0.2, 0.5, 2.0, 0.0).unwrap();
        assert!(matches!(
            relaxation_decay(&p, &[1.0, 2.0]),
            Err(Error::DecayGridTooSmall { .. })
        ));
        assert!(matches!(
            relaxation_decay(&p, &[40.0, 50.0, 60.0]),
            Err(Error::DecayBelowFloor { .. })
        ));
        assert!(matches!(
            relaxation_decay(&p, &[1.0, 3.0, 2.0]),
            Err(Error::DecayNonMonotone { index: 2 })
        ));
    }
}
