//! Exact finite-time thermodynamics of an autonomous demon reading a tape
//! of bits between a hot and a cold bath.
//!
//! * [`model`] builds the four-state joint generator and propagates it.
//! * [`cycle`] solves the periodic steady state and the per-interval
//!   heat, bit-entropy change and entropy production.
//! * [`perf`] turns those into eraser/refrigerator power and efficiency,
//!   bounds them, and optimises the interaction time.
//! * [`ssa`] is a kinetic Monte Carlo cross-check.
//!
//! Energies are in units of the demon gap, entropies in nats, and the
//! cooperative base rate is 1.

pub mod cycle;
pub mod error;
pub mod info;
pub mod model;
pub mod perf;
pub mod ssa;

pub use cycle::{
    classify_mode, demon_update_map, observables, periodic_steady_state, relaxation_decay,
    CycleState, DecayFit, DemonMap, Machine, Mode, Observables,
};
pub use error::{Error, Result};
pub use model::{
    build_rate_matrix, eigen_spectrum, propagate, stationary_distribution, BitDist, JointDist,
    JointState, Params, PropagationMethod, Propagator, RateMatrix, Spectrum,
};
pub use perf::{
    detect_peak, efficiency_bounds, emp_curve, onset_time, optimal_time, peak_criterion,
    perf_metrics, theta_series, tradeoff_bound, EfficiencyBounds, EmpPoint, Onset, OptimalTime,
    PeakBasis, PeakCriterion, PeakScan, PerfMetrics, SeriesCoeffs, TradeoffBound,
};
pub use ssa::{compare_with_analytic, simulate_tape, McComparison, McConfig, McResult};
