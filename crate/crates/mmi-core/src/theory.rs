//! Closed-form schedules and probability-bound calculators.
//!
//! The truncation level and sparsity penalty follow the schedules
//! `τ = (3θn / (2 log d))^(1/6)` and `λ = 10 √(θ log d / n)`, and the
//! sensitivity value is
//! `z(ε₁, ε₂, C) = 2ηC√k (ε₁ + ε₂ r) + C²k (ε₁ + ε₂ r)²`.
//!
//! The finite-sample bound combines three failure probabilities: the
//! near-net missing the target factor, the subspace stage failing (`d⁻²`),
//! and an empirical-process deviation term with an astronomically
//! conservative entropy constant. The deviation term is evaluated in log
//! space (its inner constant `2^(b/α)` overflows `f64` for small `ε₀`) and
//! every term is clamped to `[0, 1]`, which is sound for probability
//! bounds and keeps the report finite at desk scale.

use crate::model::ModelConstants;
use crate::net::cap_fraction;
use crate::{Error, Result};

/// Truncation and penalty schedules. Requires `d ≥ 2` (the formulas divide
/// by `log d`).
pub fn theory_params(theta: f64, n: usize, d: usize) -> Result<(f64, f64)> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("schedules need d >= 2, got {d}")));
    }
    if !(theta > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!("theta = {theta}, n = {n}")));
    }
    let log_d = (d as f64).ln();
    let tau = (3.0 * theta * n as f64 / (2.0 * log_d)).powf(1.0 / 6.0);
    let lambda = 10.0 * (theta * log_d / n as f64).sqrt();
    Ok((tau, lambda))
}

/// `z(ε₁, ε₂, C) = 2ηC√k (ε₁ + ε₂ r) + C²k (ε₁ + ε₂ r)²`.
pub fn z_bound(eps1: f64, eps2: f64, c: f64, eta: f64, k: usize, r: f64) -> f64 {
    let kf = k as f64;
    let mix = eps1 + eps2 * r;
    2.0 * eta * c * kf.sqrt() * mix + c * c * kf * mix * mix
}

/// The assembled bound report.
#[derive(Debug, Clone, Copy)]
pub struct TheoryReport {
    pub tau: f64,
    pub lambda: f64,
    /// Subspace error level guaranteed by the SDP stage: `4√2 s λ / ρ₀`.
    pub procrustes_bound: f64,
    /// `z(δ, procrustes_bound, C)`.
    pub z_value: f64,
    pub eps0: f64,
    pub alpha: f64,
    /// `k (1 - cap(δ/√k))^N₀`, clamped to `[0, 1]`.
    pub net_miss_term: f64,
    /// `d⁻²`.
    pub sdp_term: f64,
    /// The deviation term, clamped to `[0, 1]`.
    pub deviation_term: f64,
    /// Sum of the three terms, clamped to `[0, 1]`.
    pub theorem3_bound: f64,
}

/// `ln C(d, s)` exactly (s is tiny).
fn ln_choose(d: usize, s: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..s {
        acc += ((d - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    acc
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    let lo = a.min(b);
    hi + (1.0 + (lo - hi).exp()).ln()
}

/// Evaluates the three-term probability bound at accuracy `eps` and net
/// radius `delta`. Fails with `epsilon-too-small` when `eps` does not
/// exceed the sensitivity value the schedules force.
pub fn theorem3_bound(
    eps: f64,
    delta: f64,
    constants: &ModelConstants,
    n: usize,
    d: usize,
    n0: usize,
) -> Result<TheoryReport> {
    if !(eps > 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps}, delta = {delta}")));
    }
    if !(constants.rho_zero > 0.0) {
        return Err(Error::InvalidArgument(
            "constants.rho_zero must be positive (run make_ground_truth or set it)".into(),
        ));
    }
    let (tau, lambda) = theory_params(constants.theta, n, d)?;
    let k = constants.k;
    let s = constants.s_star;
    let b = constants.b;
    let procrustes_bound = 4.0 * 2f64.sqrt() * s as f64 * lambda / constants.rho_zero;
    let z_value = z_bound(delta, procrustes_bound, constants.c, constants.eta, k, constants.r);
    if eps <= z_value {
        return Err(Error::EpsilonTooSmall { eps, z: z_value });
    }
    let eps0 = eps - z_value;
    let alpha = eps0 / (64.0 * (b + constants.eta));

    let frac = cap_fraction(k, constants.r, delta / (k as f64).sqrt())?;
    let net_miss_term = (k as f64 * (1.0 - frac).powi(n0 as i32)).clamp(0.0, 1.0);
    let sdp_term = ((d as f64).powi(-2)).clamp(0.0, 1.0);

    // deviation term in log space:
    //   ln 4 + ln C(d,s) + k ln N0 + A n^((s-1)/s) - eps0^2 n / (2^9 b^2)
    // with A = 2 ln2 b / alpha + 2^(b/alpha) (4 p* C)^s.
    let b_over_alpha = b / alpha;
    let ln_a = log_sum_exp(
        (2.0 * std::f64::consts::LN_2 * b_over_alpha).ln(),
        b_over_alpha * std::f64::consts::LN_2
            + s as f64 * (4.0 * constants.p_star * constants.c).ln(),
    );
    let n_f = n as f64;
    let ln_growth = ln_a + (s as f64 - 1.0) / s as f64 * n_f.ln();
    let growth = if ln_growth > 700.0 { f64::INFINITY } else { ln_growth.exp() };
    let exponent = growth - eps0 * eps0 * n_f / (512.0 * b * b);
    let ln_term = 4f64.ln() + ln_choose(d, s) + k as f64 * (n0 as f64).ln() + exponent;
    let deviation_term = if ln_term > 700.0 {
        1.0
    } else {
        ln_term.exp().clamp(0.0, 1.0)
    };

    let theorem3_bound = (net_miss_term + sdp_term + deviation_term).clamp(0.0, 1.0);
    Ok(TheoryReport {
        tau,
        lambda,
        procrustes_bound,
        z_value,
        eps0,
        alpha,
        net_miss_term,
        sdp_term,
        deviation_term,
        theorem3_bound,
    })
}
