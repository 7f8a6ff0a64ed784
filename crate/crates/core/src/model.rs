//! Joint demon/bit generator and its exact propagator.
//!
//! The joint state space is ordered `(0u, 0d, 1u, 1d)`. The demon flips
//! `u <-> d` through contact with the hot bath at rates `gamma (1 +- sigma)`;
//! the only bit-flipping channel is the cooperative jump `0d <-> 1u` through
//! the cold bath, fast direction `1u -> 0d` at rate `1 + omega`. Energies are
//! measured in units of the demon gap and entropies in nats.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Components below `-NEGATIVE_CLAMP` after propagation are treated as errors.
pub const NEGATIVE_CLAMP: f64 = 1e-13;

/// Eigenvector condition number above which the spectral route is abandoned.
pub const SPECTRAL_CONDITION_LIMIT: f64 = 1e8;

/// One of the four joint demon/bit states, in matrix index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JointState {
    ZeroUp = 0,
    ZeroDown = 1,
    OneUp = 2,
    OneDown = 3,
}

impl JointState {
    pub const ALL: [JointState; 4] = [
        JointState::ZeroUp,
        JointState::ZeroDown,
        JointState::OneUp,
        JointState::OneDown,
    ];

    pub fn from_parts(bit: u8, demon_up: bool) -> Self {
        match (bit, demon_up) {
            (0, true) => JointState::ZeroUp,
            (0, false) => JointState::ZeroDown,
            (_, true) => JointState::OneUp,
            (_, false) => JointState::OneDown,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn bit(self) -> u8 {
        match self {
            JointState::ZeroUp | JointState::ZeroDown => 0,
            JointState::OneUp | JointState::OneDown => 1,
        }
    }

    pub fn demon_up(self) -> bool {
        matches!(self, JointState::ZeroUp | JointState::OneUp)
    }
}

/// Physical parameter set.
///
/// Stored as `{sigma, omega, gamma, delta}`; the thermal bias `epsilon` and
/// the incoming `p0` are derived. Construction from `epsilon` converts
/// through `sigma = (omega - epsilon) / (1 - omega epsilon)`.
///
/// `sigma` may be negative (a negative hot-bath temperature) so that the
/// full `(delta, epsilon)` plane can be mapped at fixed `omega`; such sets
/// are flagged by [`Params::is_physical`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    sigma: f64,
    omega: f64,
    gamma: f64,
    delta: f64,
}

fn check(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        });
    }
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

impl Params {
    pub fn new(sigma: f64, omega: f64, gamma: f64, delta: f64) -> Result<Self> {
        check("sigma", sigma, sigma > -1.0 && sigma < 1.0, "must lie in (-1, 1)")?;
        check("omega", omega, (0.0..1.0).contains(&omega), "must lie in [0, 1)")?;
        check("gamma", gamma, gamma > 0.0, "must be positive")?;
        check("delta", delta, (-1.0..=1.0).contains(&delta), "must lie in [-1, 1]")?;
        Ok(Params {
            sigma,
            omega,
            gamma,
            delta,
        })
    }

    /// Build from the `{epsilon, omega, gamma, delta}` parametrisation.
    pub fn from_epsilon(epsilon: f64, omega: f64, gamma: f64, delta: f64) -> Result<Self> {
        check(
            "epsilon",
            epsilon,
            epsilon > -1.0 && epsilon < 1.0,
            "must lie in (-1, 1)",
        )?;
        check("omega", omega, (0.0..1.0).contains(&omega), "must lie in [0, 1)")?;
        let sigma = (omega - epsilon) / (1.0 - omega * epsilon);
        Self::new(sigma, omega, gamma, delta)
    }

    /// Build with the incoming bit given as `p0` rather than the bias.
    pub fn with_p0(sigma: f64, omega: f64, gamma: f64, p0: f64) -> Result<Self> {
        check("p0", p0, (0.0..=1.0).contains(&p0), "must lie in [0, 1]")?;
        Self::new(sigma, omega, gamma, 2.0 * p0 - 1.0)
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.sigma, self.omega, self.gamma, delta)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        (self.omega - self.sigma) / (1.0 - self.omega * self.sigma)
    }

    pub fn p0_bit(&self) -> f64 {
        (1.0 + self.delta) / 2.0
    }

    pub fn incoming(&self) -> BitDist {
        BitDist::from_bias(self.delta)
    }

    /// Inverse-temperature difference times the gap, `2 atanh(epsilon)`.
    pub fn beta_delta(&self) -> f64 {
        2.0 * self.epsilon().atanh()
    }

    /// Carnot efficiency `atanh(epsilon) / atanh(omega)`; undefined at `omega = 0`.
    pub fn eta_carnot(&self) -> Option<f64> {
        if self.omega > 0.0 {
            Some(self.epsilon().atanh() / self.omega.atanh())
        } else {
            None
        }
    }

    /// `0 <= sigma < omega`, i.e. both temperatures positive and `T_c < T_h`.
    pub fn is_physical(&self) -> bool {
        self.sigma >= 0.0 && self.omega > self.sigma
    }
}

/// Probability vector over `(0u, 0d, 1u, 1d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDist([f64; 4]);

const SUM_TOL: f64 = 1e-12;

impl JointDist {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        for (i, &x) in p.iter().enumerate() {
            if !x.is_finite() || !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidDistribution(format!(
                    "component {i} = {x} outside [0, 1]"
                )));
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "components sum to {sum}"
            )));
        }
        Ok(JointDist(p))
    }

    pub fn uniform() -> Self {
        JointDist([0.25; 4])
    }

    /// Product of a demon marginal (probability of `u`) and a bit marginal.
    pub fn product(demon_up: f64, bit: BitDist) -> Self {
        let down = 1.0 - demon_up;
        JointDist([
            demon_up * bit.p0,
            down * bit.p0,
            demon_up * bit.p1,
            down * bit.p1,
        ])
    }

    /// Clamp roundoff negatives and renormalise; real negativity is an error.
    pub fn from_propagated(v: Vector4<f64>) -> Result<Self> {
        let mut p = [0.0; 4];
        for i in 0..4 {
            let x = v[i];
            if !x.is_finite() {
                return Err(Error::Propagation(format!("component {i} is {x}")));
            }
            if x < -NEGATIVE_CLAMP {
                return Err(Error::NegativeProbability {
                    component: i,
                    value: x,
                });
            }
            p[i] = x.max(0.0);
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Propagation(format!(
                "probability not conserved, sum = {sum}"
            )));
        }
        for x in &mut p {
            *x /= sum;
        }
        Ok(JointDist(p))
    }

    pub fn get(&self, s: JointState) -> f64 {
        self.0[s.index()]
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::from(self.0)
    }

    pub fn bit_marginal(&self) -> BitDist {
        let p0 = self.0[0] + self.0[1];
        let p1 = self.0[2] + self.0[3];
        BitDist { p0, p1 }
    }

    /// Probability that the demon is in `u`.
    pub fn demon_up(&self) -> f64 {
        self.0[0] + self.0[2]
    }
}

/// Marginal distribution of a single bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitDist {
    pub p0: f64,
    pub p1: f64,
}

impl BitDist {
    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) || !(0.0..=1.0).contains(&p1) {
            return Err(Error::InvalidDistribution(format!(
                "bit probabilities ({p0}, {p1}) outside [0, 1]"
            )));
        }
        if (p0 + p1 - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "bit probabilities sum to {}",
                p0 + p1
            )));
        }
        Ok(BitDist { p0, p1 })
    }

    pub fn from_bias(bias: f64) -> Self {
        BitDist {
            p0: (1.0 + bias) / 2.0,
            p1: (1.0 - bias) / 2.0,
        }
    }

    pub fn bias(&self) -> f64 {
        self.p0 - self.p1
    }
}

/// Column-convention generator: `m[(i, j)]` is the rate `j -> i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateMatrix(Matrix4<f64>);

/// Edges of the path graph `0u - 0d - 1u - 1d`.
const EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 3)];

impl RateMatrix {
    /// Validate an arbitrary matrix as a generator on this topology.
    ///
    /// Zero rates are accepted here so that degenerate (disconnected) cases
    /// can be represented; [`stationary_distribution`] rejects them.
    pub fn from_matrix(m: Matrix4<f64>) -> Result<Self> {
        for j in 0..4 {
            let mut col = 0.0;
            for i in 0..4 {
                let x = m[(i, j)];
                if !x.is_finite() {
                    return Err(Error::InvalidGenerator(format!("entry ({i}, {j}) = {x}")));
                }
                if i != j {
                    let on_edge = EDGES.iter().any(|&(a, b)| (a, b) == (i, j) || (b, a) == (i, j));
                    if x < 0.0 {
                        return Err(Error::InvalidGenerator(format!(
                            "negative rate {x} for {j} -> {i}"
                        )));
                    }
                    if !on_edge && x != 0.0 {
                        return Err(Error::InvalidGenerator(format!(
                            "forbidden transition {j} -> {i}"
                        )));
                    }
                }
                col += x;
            }
            let scale = m[(j, j)].abs().max(1.0);
            if col.abs() > 1e-14 * scale {
                return Err(Error::InvalidGenerator(format!(
                    "column {j} sums to {col:e}"
                )));
            }
        }
        Ok(RateMatrix(m))
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// Rate of the jump `from -> to`.
    pub fn rate(&self, from: JointState, to: JointState) -> f64 {
        self.0[(to.index(), from.index())]
    }

    /// Total exit rate of a state.
    pub fn exit_rate(&self, from: JointState) -> f64 {
        -self.0[(from.index(), from.index())]
    }
}

pub fn build_rate_matrix(params: &Params) -> RateMatrix {
    use JointState::*;
    let down = params.gamma * (1.0 + params.sigma);
    let up = params.gamma * (1.0 - params.sigma);
    let coop_fast = 1.0 + params.omega;
    let coop_slow = 1.0 - params.omega;

    let mut m = Matrix4::zeros();
    let mut set = |from: JointState, to: JointState, rate: f64| {
        m[(to.index(), from.index())] = rate;
    };
    set(ZeroUp, ZeroDown, down);
    set(ZeroDown, ZeroUp, up);
    set(OneUp, OneDown, down);
    set(OneDown, OneUp, up);
    set(OneUp, ZeroDown, coop_fast);
    set(ZeroDown, OneUp, coop_slow);
    for j in 0..4 {
        let out: f64 = (0..4).filter(|&i| i != j).map(|i| m[(i, j)]).sum();
        m[(j, j)] = -out;
    }
    RateMatrix(m)
}

/// Null vector of the generator, normalised.
///
/// The transition graph is a path, so the null vector follows from detailed
/// balance along consecutive edges.
pub fn stationary_distribution(rate: &RateMatrix) -> Result<JointDist> {
    let m = rate.matrix();
    let mut w = [1.0; 4];
    for &(a, b) in &EDGES {
        let forward = m[(b, a)];
        let backward = m[(a, b)];
        if forward <= 0.0 || backward <= 0.0 {
            return Err(Error::DegenerateNullSpace);
        }
        w[b] = w[a] * forward / backward;
    }
    let sum: f64 = w.iter().sum();
    JointDist::new(w.map(|x| x / sum))
}

/// Eigenvalues (descending) and right eigenvectors (columns) of a generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: [f64; 4],
    pub vectors: Matrix4<f64>,
}

impl Spectrum {
    /// Slowest nonzero relaxation rate.
    pub fn gap(&self) -> f64 {
        self.values[1]
    }
}

/// Symmetrised decomposition `R = D^{1/2} U diag(values) U^T D^{-1/2}`, `D = diag(pi)`.
#[derive(Debug, Clone)]
struct SymmetricModes {
    sqrt_pi: Vector4<f64>,
    values: [f64; 4],
    modes: Matrix4<f64>,
}

impl SymmetricModes {
    fn new(rate: &RateMatrix) -> Result<Self> {
        let pi = stationary_distribution(rate)?.to_vector();
        let sqrt_pi = pi.map(f64::sqrt);
        let m = rate.matrix();
        let mut sym = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                sym[(i, j)] = m[(i, j)] * sqrt_pi[j] / sqrt_pi[i];
            }
        }
        let sym = (sym + sym.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let mut values = [0.0; 4];
        let mut modes = Matrix4::zeros();
        for (k, &src) in order.iter().enumerate() {
            values[k] = eig.eigenvalues[src];
            modes.set_column(k, &eig.eigenvectors.column(src));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigen("non-finite eigenvalue".into()));
        }
        // The stationary mode is known exactly.
        values[0] = 0.0;
        modes.set_column(0, &sqrt_pi);
        Ok(SymmetricModes {
            sqrt_pi,
            values,
            modes,
        })
    }

    fn condition(&self) -> f64 {
        let max = self.sqrt_pi.max();
        let min = self.sqrt_pi.min();
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    }

    fn increment(&self, tau: f64) -> Matrix4<f64> {
        let mut scaled = self.modes;
        for k in 0..4 {
            let g = (self.values[k] * tau).exp_m1();
            scaled.column_mut(k).scale_mut(g);
        }
        let core = scaled * self.modes.transpose();
        let mut out = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out[(i, j)] = core[(i, j)] * self.sqrt_pi[i] / self.sqrt_pi[j];
            }
        }
        out
    }
}

pub fn eigen_spectrum(rate: &RateMatrix) -> Result<Spectrum> {
    let sm = SymmetricModes::new(rate)?;
    let mut vectors = Matrix4::zeros();
    for k in 0..4 {
        let v = sm.modes.column(k).component_mul(&sm.sqrt_pi);
        let norm = v.norm();
        vectors.set_column(k, &(v / norm));
    }
    Ok(Spectrum {
        values: sm.values,
        vectors,
    })
}

/// `exp(m) - I` by Taylor expansion with scaling and squaring.
pub fn expm_minus_identity(m: &Matrix4<f64>) -> Matrix4<f64> {
    let norm = (0..4)
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    if norm > 0.25 {
        squarings = (norm / 0.25).log2().ceil() as u32;
    }
    let a = m / 2f64.powi(squarings as i32);
    let id = Matrix4::identity();
    // a (I + a/2 (I + a/3 (...)))
    let mut acc = id;
    for k in (2..=18).rev() {
        acc = id + a * acc / k as f64;
    }
    let mut e = a * acc;
    for _ in 0..squarings {
        e = e * e + e * 2.0;
    }
    e
}

/// Which route computes `exp(R tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropagationMethod {
    Spectral,
    ScalingSquaring,
}

/// Reusable propagator for a fixed generator.
#[derive(Debug, Clone)]
pub struct Propagator {
    rate: RateMatrix,
    modes: Option<SymmetricModes>,
}

impl Propagator {
    /// Spectral route, falling back to scaling-and-squaring when the
    /// eigenvectors are ill-conditioned.
    pub fn new(rate: &RateMatrix) -> Result<Self> {
        let modes = SymmetricModes::new(rate)?;
        let modes = (modes.condition() <= SPECTRAL_CONDITION_LIMIT).then_some(modes);
        Ok(Propagator { rate: *rate, modes })
    }

    pub fn with_method(rate: &RateMatrix, method: PropagationMethod) -> Result<Self> {
        let modes = match method {
            PropagationMethod::Spectral => Some(SymmetricModes::new(rate)?),
            PropagationMethod::ScalingSquaring => None,
        };
        Ok(Propagator { rate: *rate, modes })
    }

    pub fn method(&self) -> PropagationMethod {
        if self.modes.is_some() {
            PropagationMethod::Spectral
        } else {
            PropagationMethod::ScalingSquaring
        }
    }

    pub fn rate(&self) -> &RateMatrix {
        &self.rate
    }

    /// `exp(R tau) - I`, accurate for small `tau`.
    pub fn increment(&self, tau: f64) -> Matrix4<f64> {
        match &self.modes {
            Some(sm) => sm.increment(tau),
            None => expm_minus_identity(&(self.rate.matrix() * tau)),
        }
    }

    pub fn transition(&self, tau: f64) -> Matrix4<f64> {
        self.increment(tau) + Matrix4::identity()
    }

    pub fn propagate(&self, p0: &JointDist, tau: f64) -> Result<JointDist> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidDuration(tau));
        }
        if tau == 0.0 {
            return Ok(*p0);
        }
        let v = p0.to_vector();
        JointDist::from_propagated(v + self.increment(tau) * v)
    }
}

pub fn propagate(rate: &RateMatrix, p0: &JointDist, tau: f64) -> Result<JointDist> {
    Propagator::new(rate)?.propagate(p0, tau)
}
