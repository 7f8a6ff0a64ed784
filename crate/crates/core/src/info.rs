//! Two-outcome entropies and divergences, in nats.

use crate::model::BitDist;

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Shannon entropy of a bit with bias `p0 - p1`.
pub fn bit_entropy(bias: f64) -> f64 {
    let d = BitDist::from_bias(bias);
    -(xlogx(d.p0) + xlogx(d.p1))
}

/// `x ln x` evaluated at `p + dp` minus at `p`, without cancellation for small `dp`.
fn xlogx_step(p: f64, dp: f64) -> f64 {
    let q = p + dp;
    if p <= 0.0 || q <= 0.0 {
        return xlogx(q) - xlogx(p);
    }
    dp * q.ln() + p * (dp / p).ln_1p()
}

/// `S(to) - S(from)` for bit biases, accurate when the biases are close.
pub fn entropy_change(from: f64, to: f64) -> f64 {
    let p = BitDist::from_bias(from);
    let dp0 = (to - from) / 2.0;
    -(xlogx_step(p.p0, dp0) + xlogx_step(p.p1, -dp0))
}

/// `D_KL(p || q)`; terms with `p_i = 0` vanish.
///
/// Written as a sum of nonnegative terms `p ln(p/q) - p + q` so that nearby
/// arguments do not cancel.
pub fn kl_divergence(p: BitDist, q: BitDist) -> f64 {
    let term = |p: f64, q: f64| -> f64 {
        if p <= 0.0 {
            q
        } else if q <= 0.0 {
            f64::INFINITY
        } else {
            let x = (p - q) / q;
            // q [(1 + x) ln(1 + x) - x]
            q * ((1.0 + x) * x.ln_1p() - x)
        }
    };
    (term(p.p0, q.p0) + term(p.p1, q.p1)).max(0.0)
}

/// KL divergence between two bits given by their biases.
pub fn kl_bias(p: f64, q: f64) -> f64 {
    kl_divergence(BitDist::from_bias(p), BitDist::from_bias(q))
}
