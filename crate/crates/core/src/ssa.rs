//! Kinetic Monte Carlo simulation of the demon reading a tape, used as an
//! independent check of the periodic-steady-state solution.
//!
//! Each interval draws a fresh bit, keeps the demon state from the previous
//! interval, and runs exact jumps (exponential waiting times, jump chosen in
//! proportion to its rate) until the interval ends. The jump that would
//! cross the end of the interval is discarded; by memorylessness this is
//! exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cycle::Machine;
use crate::error::{Error, Result};
use crate::model::{build_rate_matrix, JointState, Params, RateMatrix};

pub const DEFAULT_BURN_IN: u64 = 1_000;

/// Intervals drawn from one RNG stream.
const BLOCK_LEN: u64 = 1 << 16;

/// Number of batches used for batch-means standard errors.
const BATCHES: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub params: Params,
    pub tau: f64,
    pub n_bits: u64,
    pub burn_in: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn new(params: Params, tau: f64, n_bits: u64, burn_in: u64, seed: u64) -> Result<Self> {
        let cfg = McConfig {
            params,
            tau,
            n_bits,
            burn_in,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {}", self.tau)));
        }
        if self.n_bits <= self.burn_in {
            return Err(Error::InvalidConfig(format!(
                "n_bits ({}) must exceed burn_in ({})",
                self.n_bits, self.burn_in
            )));
        }
        if !(self.params.gamma() > 0.0) {
            return Err(Error::InvalidConfig("gamma must be positive".into()));
        }
        Ok(())
    }

    pub fn samples(&self) -> u64 {
        self.n_bits - self.burn_in
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub intervals: u64,
    pub p0_out: f64,
    pub p1_out: f64,
    pub p1_out_stderr: f64,
    /// Net `0d -> 1u` minus `1u -> 0d` jumps per interval, in units of the gap.
    pub heat: f64,
    pub heat_stderr: f64,
    /// Frequency of the demon in `u` at the start of an interval.
    pub demon_up: f64,
    pub demon_up_stderr: f64,
    /// `p1' - p1` using the analytic incoming probability.
    pub heat_from_bits: f64,
    pub heat_from_bits_stderr: f64,
}

impl McResult {
    pub fn delta_prime(&self) -> f64 {
        self.p0_out - self.p1_out
    }

    pub fn delta_prime_stderr(&self) -> f64 {
        2.0 * self.p1_out_stderr
    }
}

/// Running sums over batches of consecutive intervals.
struct BatchMeans {
    batch_len: u64,
    filled: u64,
    current: f64,
    sum: f64,
    sum_sq: f64,
    batches: u64,
    total: f64,
    count: u64,
}

impl BatchMeans {
    fn new(samples: u64) -> Self {
        BatchMeans {
            batch_len: (samples / BATCHES).max(1),
            filled: 0,
            current: 0.0,
            sum: 0.0,
            sum_sq: 0.0,
            batches: 0,
            total: 0.0,
            count: 0,
        }
    }

    fn push(&mut self, x: f64) {
        self.total += x;
        self.count += 1;
        self.current += x;
        self.filled += 1;
        if self.filled == self.batch_len {
            let m = self.current / self.batch_len as f64;
            self.sum += m;
            self.sum_sq += m * m;
            self.batches += 1;
            self.current = 0.0;
            self.filled = 0;
        }
    }

    fn mean(&self) -> f64 {
        self.total / self.count as f64
    }

    /// Standard error of the overall mean from the spread of complete batches.
    fn stderr(&self) -> f64 {
        let b = self.batches as f64;
        if self.batches < 2 {
            return f64::INFINITY;
        }
        let mean = self.sum / b;
        let var = ((self.sum_sq - b * mean * mean) / (b - 1.0)).max(0.0);
        // Batch variance scales to the per-sample variance of all samples.
        let per_sample = var * self.batch_len as f64;
        let se = (per_sample / self.count as f64).sqrt();
        // A degenerate (constant) observable still gets a positive error.
        se.max(f64::MIN_POSITIVE)
    }
}

struct Tables {
    exit: [f64; 4],
    targets: [[(usize, f64); 2]; 4],
}

impl Tables {
    fn new(rate: &RateMatrix) -> Self {
        let mut exit = [0.0; 4];
        let mut targets = [[(0, 0.0); 2]; 4];
        for from in JointState::ALL {
            let j = from.index();
            exit[j] = rate.exit_rate(from);
            let mut k = 0;
            for to in JointState::ALL {
                if to != from {
                    let r = rate.rate(from, to);
                    if r > 0.0 {
                        targets[j][k] = (to.index(), r);
                        k += 1;
                    }
                }
            }
        }
        Tables { exit, targets }
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

pub fn simulate_tape(cfg: &McConfig) -> Result<McResult> {
    cfg.validate()?;
    let tables = Tables::new(&build_rate_matrix(&cfg.params));
    let p0_in = cfg.params.p0_bit();
    let p1_in = 1.0 - p0_in;
    let zero_down = JointState::ZeroDown.index();
    let one_up = JointState::OneUp.index();

    let samples = cfg.samples();
    let mut bits = BatchMeans::new(samples);
    let mut heat = BatchMeans::new(samples);
    let mut demon = BatchMeans::new(samples);
    let mut bit_heat = BatchMeans::new(samples);

    // Start the demon from its own equilibrium; burn-in removes the memory.
    let mut rng = block_rng(cfg.seed, 0);
    let mut demon_up = rng.random::<f64>() < (1.0 - cfg.params.sigma()) / 2.0;

    for interval in 0..cfg.n_bits {
        if interval > 0 && interval % BLOCK_LEN == 0 {
            rng = block_rng(cfg.seed, interval / BLOCK_LEN);
        }
        let bit_in: u8 = if rng.random::<f64>() < p0_in { 0 } else { 1 };
        let start_up = demon_up;
        let mut state = JointState::from_parts(bit_in, demon_up).index();
        let mut net_flips: i64 = 0;
        let mut t = 0.0;
        loop {
            let exit = tables.exit[state];
            let u: f64 = rng.random();
            t += -(1.0 - u).ln() / exit;
            if t >= cfg.tau {
                break;
            }
            let [(a, ra), (b, _)] = tables.targets[state];
            let next = if rng.random::<f64>() * exit < ra { a } else { b };
            if state == zero_down && next == one_up {
                net_flips += 1;
            } else if state == one_up && next == zero_down {
                net_flips -= 1;
            }
            state = next;
        }
        let out = JointState::from_index(state);
        demon_up = out.demon_up();
        if interval >= cfg.burn_in {
            let bit_out = out.bit() as f64;
            bits.push(bit_out);
            heat.push(net_flips as f64);
            demon.push(if start_up { 1.0 } else { 0.0 });
            bit_heat.push(bit_out - p1_in);
        }
    }

    let p1_out = bits.mean();
    Ok(McResult {
        intervals: samples,
        p0_out: 1.0 - p1_out,
        p1_out,
        p1_out_stderr: bits.stderr(),
        heat: heat.mean(),
        heat_stderr: heat.stderr(),
        demon_up: demon.mean(),
        demon_up_stderr: demon.stderr(),
        heat_from_bits: bit_heat.mean(),
        heat_from_bits_stderr: bit_heat.stderr(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZScores {
    pub delta_prime: f64,
    pub heat: f64,
    pub demon_up: f64,
}

impl ZScores {
    pub fn max_abs(&self) -> f64 {
        self.delta_prime.abs().max(self.heat.abs()).max(self.demon_up.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McComparison {
    pub config: McConfig,
    pub monte_carlo: McResult,
    pub analytic_delta_prime: f64,
    pub analytic_heat: f64,
    pub analytic_d_star: f64,
    pub z: ZScores,
    pub pass: bool,
}

/// Pass threshold on every `|z|`.
pub const Z_PASS: f64 = 4.0;

pub fn compare_with_analytic(cfg: &McConfig) -> Result<McComparison> {
    let mc = simulate_tape(cfg)?;
    let obs = Machine::new(cfg.params)?.observables(cfg.tau)?;
    let z = ZScores {
        delta_prime: (mc.delta_prime() - obs.delta_prime) / mc.delta_prime_stderr(),
        heat: (mc.heat - obs.dq) / mc.heat_stderr,
        demon_up: (mc.demon_up - obs.d_star) / mc.demon_up_stderr,
    };
    Ok(McComparison {
        config: *cfg,
        monte_carlo: mc,
        analytic_delta_prime: obs.delta_prime,
        analytic_heat: obs.dq,
        analytic_d_star: obs.d_star,
        pass: z.max_abs() < Z_PASS,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let p = Params::new(0.3, 0.5, 1.0, 0.0).unwrap();
        assert!(McConfig::new(p, 1.0, 10, 10, 0).is_err());
        assert!(McConfig::new(p, 0.0, 10, 0, 0).is_err());
        assert!(McConfig::new(p, 1.0, 10, 0, 0).is_ok());
        // gamma = 0 never reaches a configuration.
        assert!(Params::new(0.3, 0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn symmetric_machine_is_unbiased() {
        let p = Params::new(0.0, 0.0, 1.0, 0.0).unwrap();
        let cfg = McConfig::new(p, 1.0, 200_000, 1_000, 7).unwrap();
        let r = simulate_tape(&cfg).unwrap();
        assert!((r.p1_out - 0.5).abs() < 3.0 * r.p1_out_stderr);
        assert!(r.heat.abs() < 3.0 * r.heat_stderr);
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let p = Params::new(0.3, 0.5, 1.0, 0.2).unwrap();
        let cfg = McConfig::new(p, 0.7, 150_000, 100, 42).unwrap();
        let a = simulate_tape(&cfg).unwrap();
        let b = simulate_tape(&cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_tape(&McConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn heat_estimators_agree() {
        let p = Params::new(0.3, 0.5, 1.0, 0.0).unwrap();
        let cfg = McConfig::new(p, 1.0, 200_000, 1_000, 3).unwrap();
        let r = simulate_tape(&cfg).unwrap();
        let se = r.heat_stderr.max(r.heat_from_bits_stderr);
        assert!((r.heat - r.heat_from_bits).abs() < 3.0 * se);
    }

    #[test]
    fn batch_means_of_constant_series() {
        let mut b = BatchMeans::new(1000);
        for _ in 0..1000 {
            b.push(1.0);
        }
        assert_eq!(b.mean(), 1.0);
        assert!(b.stderr() > 0.0 && b.stderr() < 1e-300);
    }
}
