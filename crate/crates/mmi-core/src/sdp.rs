//! Fantope-constrained semidefinite program and its spectral machinery.
//!
//! The subspace stage solves
//!
//! ```text
//! max  Tr(Wᵀ Σ) - λ ||W||₁   s.t.  0 ⪯ W ⪯ I,  Tr(W) = k
//! ```
//!
//! by ADMM splitting `W = Z`: the `W`-update is the exact Euclidean
//! projection onto the Fantope (water-filling on the spectrum), the
//! `Z`-update is entrywise soft-thresholding, and `U` is the scaled dual.
//! The estimate of the index subspace is the span of the top-`k`
//! eigenvectors of the solution.
//!
//! The eigensolver is a cyclic Jacobi sweep; at the matrix sizes this crate
//! targets (d up to a few hundred) it is simple, accurate, and has no
//! external dependencies.

use ndarray::Array2;

use crate::linalg;
use crate::model::Dataset;
use crate::stein::{sigma_tilde, ScoreTable};
use crate::{Error, Result};

/// Sign handling of the sparsity penalty in the maximization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PenaltySign {
    /// Subtract `λ||W||₁` (a penalty; the default).
    Subtract,
    /// Add `λ||W||₁` as printed in some statements of the program. Retained
    /// for fidelity experiments; the resulting prox step expands magnitudes
    /// instead of shrinking them and carries no convergence guarantee.
    AddAsPrinted,
}

/// ADMM solver knobs.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SdpConfig {
    pub lambda: f64,
    pub admm_rho: f64,
    pub max_iter: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub penalty_sign: PenaltySign,
}

impl Default for SdpConfig {
    fn default() -> Self {
        SdpConfig {
            lambda: 0.0,
            admm_rho: 1.0,
            max_iter: 5000,
            primal_tol: 1e-7,
            dual_tol: 1e-7,
            penalty_sign: PenaltySign::Subtract,
        }
    }
}

impl SdpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda = {}", self.lambda)));
        }
        if !(self.admm_rho > 0.0) {
            return Err(Error::InvalidArgument(format!("admm_rho = {}", self.admm_rho)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.primal_tol > 0.0 && self.dual_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Full spectral decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Sorted descending; ties keep the original index order.
    pub eigenvalues: Vec<f64>,
    /// Columns aligned with `eigenvalues`; orthonormal. The sign of each
    /// column is fixed so its largest-magnitude entry is positive.
    pub eigenvectors: Array2<f64>,
}

/// Cyclic Jacobi eigendecomposition. Sweeps until the off-diagonal
/// Frobenius mass is below `1e-12 · ||A||`.
pub fn sym_eigen(a: &Array2<f64>) -> Result<SpectralDecomposition> {
    let (n, m) = a.dim();
    if n != m {
        return Err(Error::DimensionMismatch(format!("sym_eigen needs square, got {n} x {m}")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sym_eigen input".into()));
    }
    let mut work = linalg::symmetrize(a);
    let mut v: Array2<f64> = Array2::eye(n);
    let norm = linalg::fro_norm(&work).max(f64::MIN_POSITIVE);
    let target = 1e-12 * norm;

    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += work[[p, q]] * work[[p, q]];
            }
        }
        if (2.0 * off).sqrt() <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = work[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (work[[q, q]] - work[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // rotate rows/columns p and q of the working matrix
                for i in 0..n {
                    let aip = work[[i, p]];
                    let aiq = work[[i, q]];
                    work[[i, p]] = c * aip - s * aiq;
                    work[[i, q]] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = work[[p, i]];
                    let aqi = work[[q, i]];
                    work[[p, i]] = c * api - s * aqi;
                    work[[q, i]] = s * api + c * aqi;
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| work[[i, i]]).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap().then(i.cmp(&j)));
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(diag[src]);
        // sign convention: largest-magnitude entry positive
        let mut best = 0;
        for i in 1..n {
            if v[[i, src]].abs() > v[[best, src]].abs() {
                best = i;
            }
        }
        let flip = if v[[best, src]] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            eigenvectors[[i, dst]] = flip * v[[i, src]];
        }
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// Euclidean projection onto the Fantope `{W : 0 ⪯ W ⪯ I, Tr W = k}`:
/// eigenvalues are water-filled to `clip(λᵢ - θ*, 0, 1)` where `θ*` makes
/// the trace equal `k` (bisection, trace tolerance 1e-12).
pub fn fantope_project(a: &Array2<f64>, k: usize) -> Result<Array2<f64>> {
    let d = a.nrows();
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("k = {k} out of range for d = {d}")));
    }
    let dec = sym_eigen(a)?;
    let lam = &dec.eigenvalues;
    let trace_at = |theta: f64| -> f64 {
        lam.iter().map(|&l| (l - theta).clamp(0.0, 1.0)).sum()
    };
    let mut lo = lam[d - 1] - 1.0; // trace = d >= k
    let mut hi = lam[0]; // trace = 0 <= k
    let mut theta = 0.5 * (lo + hi);
    for _ in 0..200 {
        theta = 0.5 * (lo + hi);
        let t = trace_at(theta);
        if (t - k as f64).abs() <= 1e-12 {
            break;
        }
        if t > k as f64 {
            lo = theta;
        } else {
            hi = theta;
        }
    }
    let gamma: Vec<f64> = lam.iter().map(|&l| (l - theta).clamp(0.0, 1.0)).collect();
    let v = &dec.eigenvectors;
    let mut out = Array2::zeros((d, d));
    for i in 0..d {
        for j in i..d {
            let mut acc = 0.0;
            for (m, &g) in gamma.iter().enumerate() {
                if g != 0.0 {
                    acc += g * v[[i, m]] * v[[j, m]];
                }
            }
            out[[i, j]] = acc;
            out[[j, i]] = acc;
        }
    }
    Ok(out)
}

/// ADMM solution.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub w: Array2<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `Tr(WᵀΣ) - λ||W||₁` (or `+` under `AddAsPrinted`).
    pub objective: f64,
}

fn penalized_objective(w: &Array2<f64>, sigma: &Array2<f64>, cfg: &SdpConfig) -> f64 {
    let trace: f64 = w.iter().zip(sigma.iter()).map(|(a, b)| a * b).sum();
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    match cfg.penalty_sign {
        PenaltySign::Subtract => trace - cfg.lambda * l1,
        PenaltySign::AddAsPrinted => trace + cfg.lambda * l1,
    }
}

/// Solves the penalized Fantope program. On hitting `max_iter` the best
/// iterate is returned with `converged = false`.
pub fn solve_sdp(sigma: &Array2<f64>, k: usize, cfg: &SdpConfig) -> Result<SdpSolution> {
    cfg.validate()?;
    let d = sigma.nrows();
    if sigma.ncols() != d {
        return Err(Error::DimensionMismatch("sigma must be square".into()));
    }
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("solve_sdp input".into()));
    }
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("k = {k} out of range for d = {d}")));
    }
    let sigma = linalg::symmetrize(sigma);
    let rho = cfg.admm_rho;
    let kappa = cfg.lambda / rho;
    let sigma_over_rho = sigma.mapv(|v| v / rho);

    let mut w: Array2<f64>;
    let mut z = Array2::<f64>::zeros((d, d));
    let mut u = Array2::<f64>::zeros((d, d));
    let mut converged = false;
    let mut iterations = 0;

    loop {
        iterations += 1;
        let arg = &z - &u + &sigma_over_rho;
        w = fantope_project(&arg, k)?;
        let z_prev = z;
        let wu = &w + &u;
        z = match cfg.penalty_sign {
            PenaltySign::Subtract => wu.mapv(|v| v.signum() * (v.abs() - kappa).max(0.0)),
            PenaltySign::AddAsPrinted => {
                wu.mapv(|v| if v == 0.0 { 0.0 } else { v.signum() * (v.abs() + kappa) })
            }
        };
        u = &u + &w - &z;

        let primal = linalg::fro_dist(&w, &z);
        let dual = rho * linalg::fro_dist(&z, &z_prev);
        if primal <= cfg.primal_tol && dual <= cfg.dual_tol {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
    }

    let w = linalg::symmetrize(&w);
    let objective = penalized_objective(&w, &sigma, cfg);
    Ok(SdpSolution { w, converged, iterations, objective })
}

/// Result of the subspace stage.
#[derive(Debug, Clone)]
pub struct QEstimate {
    /// `d × k`, orthonormal columns.
    pub q: Array2<f64>,
    pub sdp_converged: bool,
}

/// Subspace stage: truncated moment matrix, penalized Fantope program, then
/// the top-`k` eigenvectors of the solution.
pub fn estimate_q(data: &Dataset, tau: f64, lambda: f64, cfg: &SdpConfig) -> Result<QEstimate> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("estimate_q needs at least one sample".into()));
    }
    let k = data.constants.k;
    let scores = ScoreTable::from_covariates(&data.x, data.constants.c)?;
    let sigma = sigma_tilde(&data.y, &scores, tau)?;
    let mut cfg = *cfg;
    cfg.lambda = lambda;
    let sol = solve_sdp(&sigma, k, &cfg)?;
    let dec = sym_eigen(&sol.w)?;
    let d = data.constants.d;
    let mut q = Array2::zeros((d, k));
    for j in 0..k {
        for i in 0..d {
            q[[i, j]] = dec.eigenvectors[[i, j]];
        }
    }
    Ok(QEstimate { q, sdp_converged: sol.converged })
}
