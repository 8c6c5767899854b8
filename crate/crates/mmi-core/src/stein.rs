//! Truncated second-order score moment estimator.
//!
//! For a sample `x` with per-coordinate score values `s` and score
//! derivatives `s'`, the moment matrix is
//!
//! ```text
//! T(x)[i][j] = s[i] * s[j]         (i != j)
//! T(x)[i][i] = s[i]^2 - s'[i]
//! ```
//!
//! Under the negative-log-density score convention (see
//! [`crate::model::Density::stein_score`]) the diagonal equals `p₀″/p₀`, and
//! the population identity `E[Y·T(X)] = B·E[∇²f(BᵀX)]·Bᵀ` holds, which is
//! what makes the top eigenvectors of the sample average recover the index
//! subspace. The robust estimator truncates the response at `τ` and the
//! matrix entries at `τ²` before averaging.

use ndarray::Array2;

use crate::par;
use crate::{Error, Result};

/// Truncation level for the robust estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteinConfig {
    pub tau: f64,
}

impl SteinConfig {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument(format!("tau = {tau} must be positive")));
        }
        Ok(SteinConfig { tau })
    }
}

/// Per-sample score values for a dataset: row `i` of each matrix holds the
/// coordinate-wise `(s, s')` pair of sample `i`, under the convention chosen
/// by the caller.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    /// `n × d` score values.
    pub s: Array2<f64>,
    /// `n × d` score derivative values.
    pub s_prime: Array2<f64>,
}

impl ScoreTable {
    /// Builds the table from covariates using the negative-log-density
    /// convention required by the moment identity. Fails on samples at or
    /// outside the support boundary.
    pub fn from_covariates(x: &Array2<f64>, c: f64) -> Result<ScoreTable> {
        let density = crate::model::Density::new(c);
        let (n, d) = x.dim();
        let mut s = Array2::zeros((n, d));
        let mut s_prime = Array2::zeros((n, d));
        for i in 0..n {
            for j in 0..d {
                let (v, vp) = density.stein_score(x[[i, j]])?;
                s[[i, j]] = v;
                s_prime[[i, j]] = vp;
            }
        }
        Ok(ScoreTable { s, s_prime })
    }
}

/// Symmetric moment matrix built from one sample's score values.
pub fn stein_matrix(s: &[f64], s_prime: &[f64]) -> Result<Array2<f64>> {
    if s.len() != s_prime.len() {
        return Err(Error::DimensionMismatch(format!(
            "score vectors have lengths {} and {}",
            s.len(),
            s_prime.len()
        )));
    }
    let d = s.len();
    let mut t = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            t[[i, j]] = if i == j { s[i] * s[i] - s_prime[i] } else { s[i] * s[j] };
        }
    }
    Ok(t)
}

/// `sign(v) · min(|v|, tau)`.
pub fn truncate(v: f64, tau: f64) -> f64 {
    v.signum() * v.abs().min(tau)
}

/// Robust average `(1/n) Σᵢ Ỹᵢ T̃(Xᵢ)`: responses truncated at `tau`,
/// matrix entries truncated at `tau²`. Exactly symmetric by construction.
///
/// Per-sample terms are independent; they are accumulated in fixed chunks so
/// the result is bit-identical in parallel and sequential builds.
pub fn sigma_tilde(y: &[f64], scores: &ScoreTable, tau: f64) -> Result<Array2<f64>> {
    let (n, d) = scores.s.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} responses for {} score rows",
            y.len(),
            n
        )));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau = {tau} must be positive")));
    }
    let tau2 = tau * tau;
    let partials = par::map_chunks(n, |lo, hi| {
        let mut acc = Array2::<f64>::zeros((d, d));
        for i in lo..hi {
            let yt = truncate(y[i], tau);
            if yt == 0.0 {
                continue;
            }
            let srow = scores.s.row(i);
            let sprow = scores.s_prime.row(i);
            // upper triangle + diagonal, mirrored afterwards
            for a in 0..d {
                let diag = truncate(srow[a] * srow[a] - sprow[a], tau2);
                acc[[a, a]] += yt * diag;
                for b in (a + 1)..d {
                    let off = truncate(srow[a] * srow[b], tau2);
                    acc[[a, b]] += yt * off;
                }
            }
        }
        acc
    });
    let mut total = Array2::<f64>::zeros((d, d));
    for p in partials {
        total += &p;
    }
    let inv_n = 1.0 / n as f64;
    for a in 0..d {
        for b in a..d {
            let v = total[[a, b]] * inv_n;
            total[[a, b]] = v;
            total[[b, a]] = v;
        }
    }
    Ok(total)
}
