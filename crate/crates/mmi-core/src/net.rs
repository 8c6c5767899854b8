//! Random near-nets on the radius-`r` sphere.
//!
//! A near-net is a random set of `N₀` sphere points whose induced set of
//! `k × k` matrices (all column tuples, `N₀ᵏ` of them) contains, with
//! prescribed probability, an element within `ε` of any fixed matrix with
//! columns of norm `r`. The coverage lower bound is
//!
//! ```text
//! 1 - k (1 - cap(ε/√k))^N₀
//! ```
//!
//! where `cap(δ)` is the relative surface measure of the spherical cap of
//! chord radius `δ` around a fixed pole.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::derive_seed;
use crate::quad::simpson_adaptive;
use crate::{Error, Result};

/// A sampled set of `N₀` points on the radius-`r` sphere in `ℝᵏ`. Matrices
/// are never materialized; they are addressed by index `k`-tuples in
/// lexicographic order.
#[derive(Debug, Clone)]
pub struct NearNet {
    vectors: Vec<Vec<f64>>,
    k: usize,
    r: f64,
}

impl NearNet {
    /// Number of stored sphere points (`N₀`).
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    /// `|R| = N₀ᵏ`, the number of induced matrices.
    pub fn matrix_count(&self) -> u128 {
        (self.vectors.len() as u128).pow(self.k as u32)
    }

    /// The matrix addressed by a column-index tuple.
    pub fn matrix(&self, tuple: &[usize]) -> Array2<f64> {
        debug_assert_eq!(tuple.len(), self.k);
        let mut m = Array2::zeros((self.k, self.k));
        for (j, &vi) in tuple.iter().enumerate() {
            for (i, &v) in self.vectors[vi].iter().enumerate() {
                m[[i, j]] = v;
            }
        }
        m
    }

    /// Lexicographic enumeration of all column-index tuples.
    pub fn tuples(&self) -> TupleIter {
        TupleIter { n0: self.vectors.len(), current: vec![0; self.k], done: self.vectors.is_empty() }
    }

    /// Smallest Frobenius distance from `target` to any induced matrix.
    /// Columns are chosen independently, so the minimum separates.
    pub fn nearest_distance(&self, target: &Array2<f64>) -> f64 {
        let mut total = 0.0;
        for j in 0..self.k {
            let mut best = f64::INFINITY;
            for u in &self.vectors {
                let d2: f64 = u
                    .iter()
                    .enumerate()
                    .map(|(i, &ui)| (ui - target[[i, j]]).powi(2))
                    .sum();
                best = best.min(d2);
            }
            total += best;
        }
        total.sqrt()
    }
}

/// Odometer over `{0..N₀}ᵏ` in lexicographic order.
pub struct TupleIter {
    n0: usize,
    current: Vec<usize>,
    done: bool,
}

impl Iterator for TupleIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        // advance
        let mut pos = self.current.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.current[pos] += 1;
            if self.current[pos] < self.n0 {
                break;
            }
            self.current[pos] = 0;
        }
        Some(out)
    }
}

/// One standard normal draw (Box-Muller).
fn standard_normal(rng: &mut impl Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        if u1 > 0.0 {
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

/// Uniform draw on the radius-`r` sphere in `ℝᵏ`: normalized Gaussian
/// vector, rescaled so the norm is exactly `r`.
pub fn sample_sphere(k: usize, r: f64, rng: &mut impl Rng) -> Vec<f64> {
    assert!(k >= 1 && r > 0.0, "sample_sphere needs k >= 1 and r > 0");
    loop {
        let z: Vec<f64> = (0..k).map(|_| standard_normal(rng)).collect();
        let norm: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return z.into_iter().map(|v| v / norm * r).collect();
        }
    }
}

/// Draws `N₀` independent sphere points.
pub fn build_net(n0: usize, k: usize, r: f64, seed: u64) -> Result<NearNet> {
    if n0 == 0 {
        return Err(Error::InvalidArgument("net size must be at least 1".into()));
    }
    if k == 0 || !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("k = {k}, r = {r} invalid for a net")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x6e65_74));
    let vectors = (0..n0).map(|_| sample_sphere(k, r, &mut rng)).collect();
    Ok(NearNet { vectors, k, r })
}

/// Relative surface measure of the spherical cap
/// `{u on the radius-r sphere in ℝᵏ : ||u - r·e₁|| ≤ δ}`.
///
/// A chord radius `δ` corresponds to the polar angle `2 asin(δ/(2r))`; the
/// measure is the normalized integral of `sin^(k-2)` up to that angle. For
/// `k = 1` the sphere is the two-point set `{±r}`.
pub fn cap_fraction(k: usize, r: f64, delta: f64) -> Result<f64> {
    if k == 0 || !(r > 0.0) || delta < 0.0 || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cap_fraction needs k >= 1, r > 0, delta >= 0; got k = {k}, r = {r}, delta = {delta}"
        )));
    }
    if delta >= 2.0 * r {
        return Ok(1.0);
    }
    if k == 1 {
        // contains +r always; -r only once delta reaches the diameter
        return Ok(0.5);
    }
    let phi = 2.0 * (delta / (2.0 * r)).asin();
    let exponent = (k - 2) as i32;
    let integrand = |t: f64| t.sin().powi(exponent);
    let partial = simpson_adaptive(&integrand, 0.0, phi, 1e-10);
    let full = simpson_adaptive(&integrand, 0.0, std::f64::consts::PI, 1e-10);
    Ok((partial / full).clamp(0.0, 1.0))
}

/// The coverage lower bound `1 - k (1 - cap(ε/√k))^N₀`, clamped to `[0, 1]`
/// for reporting.
pub fn coverage_bound(n0: usize, k: usize, r: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    let frac = cap_fraction(k, r, eps / (k as f64).sqrt())?;
    let miss = (1.0 - frac).powi(n0 as i32);
    Ok((1.0 - k as f64 * miss).clamp(0.0, 1.0))
}

/// One row of a coverage experiment.
#[derive(Debug, Clone, Copy)]
pub struct CoverageRow {
    pub eps: f64,
    pub empirical_coverage: f64,
    pub lemma_bound: f64,
    pub trials: usize,
}

/// Empirical coverage frequency against the lemma bound: a fixed random
/// target matrix with columns of norm `r`, and `trials` independently drawn
/// nets.
pub fn coverage_experiment(
    k: usize,
    r: f64,
    n0: usize,
    eps_list: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<CoverageRow>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x7467_74));
    let mut target = Array2::zeros((k, k));
    for j in 0..k {
        let col = sample_sphere(k, r, &mut rng);
        for i in 0..k {
            target[[i, j]] = col[i];
        }
    }
    let distances: Vec<f64> = (0..trials)
        .map(|t| {
            let net = build_net(n0, k, r, derive_seed(seed, 1 + t as u64)).expect("net params validated");
            net.nearest_distance(&target)
        })
        .collect();
    eps_list
        .iter()
        .map(|&eps| {
            let hits = distances.iter().filter(|&&d| d <= eps).count();
            Ok(CoverageRow {
                eps,
                empirical_coverage: hits as f64 / trials as f64,
                lemma_bound: coverage_bound(n0, k, r, eps)?,
                trials,
            })
        })
        .collect()
}
