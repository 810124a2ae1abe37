//! Critical exponents of the Dirichlet problem (-Δ)^s u + |∇u|^p = f.
//!
//! Every threshold probed by the diagnostics is computed here once, from
//! (N, s, m, β), so scan reports can print predictions next to measurements.

use crate::error::{Error, Result};
use serde::Serialize;

/// The exponent table for data f ∈ L^m(Ω), weight δ^β, order s in dimension N.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExponentSet {
    pub n_dim: u32,
    pub s: f64,
    pub m: f64,
    pub beta: f64,
    /// Subcritical gradient threshold p_* = N/(N-2s+1).
    pub p_star: f64,
    /// Weighted-measure variant p_{*,β} = N/(N-2s+1+β).
    pub p_star_beta: f64,
    /// Gradient integrability gain mN/(N - m(2s-1)); `None` means +∞
    /// (attained once m(2s-1) >= N).
    pub sobolev_gain: Option<f64>,
    /// Optimal unweighted gradient exponent 1/(1-s).
    pub grad_blowup: f64,
    /// Upper limit s/(1-s) for the fixed-point regime 2s <= p < s/(1-s).
    pub p_upper: f64,
    /// Non-existence threshold (2s-1)N/(1-s) + 1.
    pub nonexist_threshold: f64,
}

/// Evaluate all critical exponents. Requires N >= 1, 1/2 < s < 1, m >= 1 and
/// 0 <= β < 2s - 1.
pub fn critical_exponents(n_dim: u32, s: f64, m: f64, beta: f64) -> Result<ExponentSet> {
    if n_dim < 1 {
        return Err(Error::invalid("dimension N must be >= 1"));
    }
    if !(s > 0.5 && s < 1.0) {
        return Err(Error::invalid(format!(
            "order s must lie in the open interval (1/2, 1), got {s}"
        )));
    }
    if m < 1.0 {
        return Err(Error::invalid(format!("integrability m must be >= 1, got {m}")));
    }
    if !(beta >= 0.0 && beta < 2.0 * s - 1.0) {
        return Err(Error::invalid(format!(
            "weight exponent beta must lie in [0, 2s-1) = [0, {}), got {beta}",
            2.0 * s - 1.0
        )));
    }
    let nf = n_dim as f64;
    let p_star = nf / (nf - 2.0 * s + 1.0);
    let p_star_beta = nf / (nf - 2.0 * s + 1.0 + beta);
    let sobolev_gain = if m * (2.0 * s - 1.0) >= nf {
        None
    } else {
        Some(m * nf / (nf - m * (2.0 * s - 1.0)))
    };
    Ok(ExponentSet {
        n_dim,
        s,
        m,
        beta,
        p_star,
        p_star_beta,
        sobolev_gain,
        grad_blowup: 1.0 / (1.0 - s),
        p_upper: s / (1.0 - s),
        nonexist_threshold: (2.0 * s - 1.0) * nf / (1.0 - s) + 1.0,
    })
}
