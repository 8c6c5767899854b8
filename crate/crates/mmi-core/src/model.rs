//! Domain types and synthetic data generation.
//!
//! The generative model: covariates `X ∈ ℝᵈ` have i.i.d. coordinates with
//! density `p₀(x) ∝ (1 − (x/C)²)⁶` on `[-C, C]`; the response is
//! `Y = f(BᵀX) + Z` with `Z` uniform on `[-η, η]`. The index matrix `B ≥ 0`
//! has `s` nonzero rows and columns of 2-norm `r`, and factors as `B = QR`
//! (thin QR, `Q` orthonormal, `R` invertible with positive diagonal).
//!
//! The density choice is deliberate: it is twice differentiable, has compact
//! support, zero mean, `Var = C²/15`, and a score function
//! `s₀(x) = p₀′(x)/p₀(x) = -12x / (C² - x²)` whose sixth moment is finite
//! (the boundary factors cancel exactly).

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg;
use crate::lipschitz::LipschitzInterpolant;
use crate::sdp;
use crate::{Error, Result};

/// Mass of `(1 - u²)⁶` over `[-1, 1]`: `2^13 (6!)² / 13!` reduced.
const UNIT_MASS: f64 = 2048.0 / 3003.0;

/// Model-level constants. All are considered fixed while the ambient
/// dimension `d` grows.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelConstants {
    /// Ambient dimension.
    pub d: usize,
    /// Number of index vectors (columns of the index matrix).
    pub k: usize,
    /// Row sparsity: number of nonzero rows of the index matrix.
    #[serde(rename = "sStar")]
    pub s_star: usize,
    /// Column 2-norm of the index matrix.
    pub r: f64,
    /// Coordinate support bound: coordinates live in `[-C, C]`.
    #[serde(rename = "C")]
    pub c: f64,
    /// Range bound of the transfer function: values in `[0, b]`.
    pub b: f64,
    /// Noise bound: `|Z| ≤ η` almost surely.
    pub eta: f64,
    /// Sixth-moment bound used by the truncation/penalty schedules.
    /// Defaults to `(b + η)⁶`, the response-side bound.
    pub theta: f64,
    /// Smallest eigenvalue of the expected transfer Hessian at the projected
    /// covariates. Measured by `make_ground_truth`; 0.0 means "not measured".
    #[serde(rename = "rhoZero")]
    pub rho_zero: f64,
    /// Supremum of the coordinate density.
    #[serde(rename = "pStar")]
    pub p_star: f64,
}

impl ModelConstants {
    /// Constants with the default moment bound `θ = (b + η)⁶` and the
    /// closed-form density supremum.
    pub fn new(d: usize, k: usize, s_star: usize, r: f64, c: f64, b: f64, eta: f64) -> Self {
        ModelConstants {
            d,
            k,
            s_star,
            r,
            c,
            b,
            eta,
            theta: (b + eta).powi(6),
            rho_zero: 0.0,
            p_star: Density::new(c).sup(),
        }
    }

    /// Desk-scale defaults: `r = C = 1`, `b = 0.7`, `η = 0.1`. The range
    /// bound keeps `θ = (b + η)⁶` small enough that the truncation and
    /// penalty schedules stay informative at sample sizes in the low
    /// thousands.
    pub fn desk_default(d: usize, k: usize, s_star: usize) -> Self {
        Self::new(d, k, s_star, 1.0, 1.0, 0.7, 0.1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d >= self.s_star && self.s_star >= self.k && self.k >= 1) {
            return Err(Error::InfeasibleGroundTruth(format!(
                "need d >= sStar >= k >= 1, got d={}, sStar={}, k={}",
                self.d, self.s_star, self.k
            )));
        }
        for (name, v, strict) in [
            ("r", self.r, true),
            ("C", self.c, true),
            ("b", self.b, true),
            ("eta", self.eta, false),
            ("theta", self.theta, true),
            ("pStar", self.p_star, true),
        ] {
            if !v.is_finite() || v < 0.0 || (strict && v == 0.0) {
                return Err(Error::InfeasibleGroundTruth(format!("{name} = {v} is invalid")));
            }
        }
        Ok(())
    }
}

/// The built-in coordinate density `p₀(x) ∝ (1 - (x/C)²)⁶` on `[-C, C]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Density {
    pub c: f64,
}

impl Density {
    pub fn new(c: f64) -> Self {
        Density { c }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let u = x / self.c;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        (1.0 - u * u).powi(6) / (self.c * UNIT_MASS)
    }

    /// Density supremum, attained at the origin.
    pub fn sup(&self) -> f64 {
        1.0 / (self.c * UNIT_MASS)
    }

    /// CDF, a degree-13 polynomial in `x/C`.
    pub fn cdf(&self, x: f64) -> f64 {
        let u = (x / self.c).clamp(-1.0, 1.0);
        let u2 = u * u;
        // ∫₀ᵘ (1-t²)⁶ dt by termwise integration of the binomial expansion.
        let g = u
            * (1.0
                + u2 * (-2.0
                    + u2 * (3.0
                        + u2 * (-20.0 / 7.0
                            + u2 * (5.0 / 3.0 + u2 * (-6.0 / 11.0 + u2 / 13.0))))));
        0.5 + g / UNIT_MASS
    }

    /// Score `s₀ = p₀′/p₀` and its derivative, in closed form.
    ///
    /// `s₀(x) = -12x/(C² - x²)`, `s₀′(x) = -12(C² + x²)/(C² - x²)²`.
    pub fn score(&self, x: f64) -> Result<(f64, f64)> {
        if x.abs() >= self.c {
            return Err(Error::OutsideSupport { x: x.abs(), c: self.c });
        }
        let denom = self.c * self.c - x * x;
        let s0 = -12.0 * x / denom;
        let s0p = -12.0 * (self.c * self.c + x * x) / (denom * denom);
        Ok((s0, s0p))
    }

    /// Score pair under the negative-log-density convention,
    /// `(-s₀, -s₀′)`. This is the convention under which the second-order
    /// moment matrix of [`crate::stein`] reproduces the index subspace.
    pub fn stein_score(&self, x: f64) -> Result<(f64, f64)> {
        let (s0, s0p) = self.score(x)?;
        Ok((-s0, -s0p))
    }

    /// Inverse-CDF draw by bisection on the polynomial CDF.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        loop {
            let u: f64 = rng.gen();
            let mut lo = -self.c;
            let mut hi = self.c;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if self.cdf(mid) < u {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-12 * self.c {
                    break;
                }
            }
            let x = 0.5 * (lo + hi);
            if x.abs() < self.c {
                return x;
            }
        }
    }

    /// `E[s₀⁶]` by adaptive Simpson quadrature of `s₀⁶ p₀` (the integrand is
    /// a polynomial, so this converges fast).
    pub fn score_sixth_moment(&self) -> f64 {
        let f = |x: f64| {
            let denom = self.c * self.c - x * x;
            let s0 = -12.0 * x / denom;
            s0.powi(6) * self.pdf(x)
        };
        // The integrand vanishes to high order at the endpoints.
        let a = -self.c * (1.0 - 1e-9);
        let b = self.c * (1.0 - 1e-9);
        crate::quad::simpson_adaptive(&f, a, b, 1e-10)
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Separable soft-curve transfer `f(v) = (b/k) Σⱼ σ((vⱼ - shift)/width)`.
///
/// The logistic bend is placed in the upper tail of the projected-covariate
/// distribution and the width is floored at `b/(4√k)`, which caps the
/// gradient norm at 1 globally. Curvature is strictly positive below the
/// bend, so the expected Hessian over the data distribution is positive
/// definite.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SoftCurve {
    pub dims: usize,
    pub b: f64,
    pub shift: f64,
    pub width: f64,
}

/// Bend location in units of the projected-coordinate standard deviation.
/// Placed just above the center so the convex foot of the curve covers the
/// bulk of the data, which maximizes the expected curvature under the
/// gradient budget.
const SOFTCURVE_SHIFT_SIGMAS: f64 = 1.2;
/// Width in the same units, before the Lipschitz floor.
const SOFTCURVE_WIDTH_SIGMAS: f64 = 0.675;

impl SoftCurve {
    /// Parameters matched to the model constants: each projected coordinate
    /// `(BᵀX)ⱼ` has standard deviation `rC/√15`.
    pub fn for_constants(constants: &ModelConstants) -> Self {
        let sigma_v = constants.r * constants.c / 15f64.sqrt();
        let width_floor = constants.b / (4.0 * (constants.k as f64).sqrt());
        SoftCurve {
            dims: constants.k,
            b: constants.b,
            shift: SOFTCURVE_SHIFT_SIGMAS * sigma_v,
            width: (SOFTCURVE_WIDTH_SIGMAS * sigma_v).max(width_floor),
        }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        let scale = self.b / self.dims as f64;
        v.iter().map(|&vj| scale * sigmoid((vj - self.shift) / self.width)).sum()
    }

    /// Diagonal of the Hessian (off-diagonal entries are zero).
    pub fn hessian_diag(&self, v: &[f64]) -> Vec<f64> {
        let scale = self.b / self.dims as f64 / (self.width * self.width);
        v.iter()
            .map(|&vj| {
                let s = sigmoid((vj - self.shift) / self.width);
                scale * s * (1.0 - s) * (1.0 - 2.0 * s)
            })
            .collect()
    }
}

/// Transfer function families.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub enum Transfer {
    /// Smooth separable curve; the default for synthetic ground truths.
    SoftCurve(SoftCurve),
    /// Monotone 1-Lipschitz interpolation of a custom anchor table.
    Table { anchors: Vec<(Vec<f64>, f64)>, b: f64 },
}

impl Transfer {
    /// Builds the custom-table family, validating interpolability and range.
    pub fn table(anchors: Vec<(Vec<f64>, f64)>, b: f64) -> Result<Self> {
        LipschitzInterpolant::new(anchors.clone(), b)?;
        Ok(Transfer::Table { anchors, b })
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            Transfer::SoftCurve(sc) => sc.eval(v),
            Transfer::Table { anchors, b } => {
                let best = anchors
                    .iter()
                    .map(|(a, y)| {
                        let pos: f64 = a
                            .iter()
                            .zip(v.iter())
                            .map(|(ai, vi)| (ai - vi).max(0.0).powi(2))
                            .sum();
                        y - pos.sqrt()
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                best.max(0.0).min(*b)
            }
        }
    }

    pub fn range_bound(&self) -> f64 {
        match self {
            Transfer::SoftCurve(sc) => sc.b,
            Transfer::Table { b, .. } => *b,
        }
    }
}

/// The generative triple plus measured model constants.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub constants: ModelConstants,
    /// `d × k` nonnegative index matrix with columns of norm `r`.
    pub beta: Array2<f64>,
    /// Orthonormal factor of the thin QR of `beta`.
    pub q_star: Array2<f64>,
    /// Invertible triangular factor; its columns also have norm `r`.
    pub r_star: Array2<f64>,
    /// Sorted indices of the nonzero rows of `beta`.
    pub support: Vec<usize>,
    pub transfer: Transfer,
    /// Measured `E[s₀⁶]` of the coordinate density (quadrature).
    pub score_sixth_moment: f64,
}

impl GroundTruth {
    /// `Bᵀx`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let (d, k) = self.beta.dim();
        debug_assert_eq!(x.len(), d);
        let mut v = vec![0.0; k];
        for &i in &self.support {
            for j in 0..k {
                v[j] += self.beta[[i, j]] * x[i];
            }
        }
        v
    }

    /// The ground-truth regression function `x ↦ f(Bᵀx)`.
    pub fn truth_value(&self, x: &[f64]) -> f64 {
        self.transfer.eval(&self.project(x))
    }

    pub fn density(&self) -> Density {
        Density::new(self.constants.c)
    }
}

/// Derives an independent stream seed from a base seed and a salt
/// (splitmix64 finalizer).
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws a ground truth: a uniform size-`s` support, nonnegative columns
/// rescaled to norm `r`, the thin QR factors, and the default soft-curve
/// transfer. The stored constants get the measured `ρ₀` (Monte-Carlo minimum
/// Hessian eigenvalue); `θ` is kept from the input when positive, otherwise
/// set to `(b + η)⁶`.
pub fn make_ground_truth(constants: &ModelConstants, seed: u64) -> Result<GroundTruth> {
    constants.validate()?;
    let d = constants.d;
    let k = constants.k;
    let s = constants.s_star;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x67_74));

    // Uniform size-s subset by partial Fisher-Yates.
    let mut idx: Vec<usize> = (0..d).collect();
    for i in 0..s {
        let j = rng.gen_range(i..d);
        idx.swap(i, j);
    }
    let mut support: Vec<usize> = idx[..s].to_vec();
    support.sort_unstable();

    let mut beta = Array2::zeros((d, k));
    let mut qr = None;
    for _attempt in 0..100 {
        for &i in &support {
            for j in 0..k {
                beta[[i, j]] = rng.gen_range(0.05..1.0);
            }
        }
        for j in 0..k {
            let norm: f64 = support.iter().map(|&i| beta[[i, j]] * beta[[i, j]]).sum::<f64>().sqrt();
            for &i in &support {
                beta[[i, j]] = beta[[i, j]] / norm * constants.r;
            }
        }
        match linalg::qr_thin(&beta) {
            Ok((q, r)) if (0..k).all(|j| r[[j, j]] > 1e-6 * constants.r) => {
                qr = Some((q, r));
                break;
            }
            _ => continue,
        }
    }
    let (q_star, r_star) = qr.ok_or_else(|| {
        Error::InfeasibleGroundTruth("could not draw a rank-k nonnegative index matrix".into())
    })?;

    let mut constants = *constants;
    if constants.theta <= 0.0 {
        constants.theta = (constants.b + constants.eta).powi(6);
    }
    constants.p_star = Density::new(constants.c).sup();

    let transfer = Transfer::SoftCurve(SoftCurve::for_constants(&constants));
    let mut gt = GroundTruth {
        constants,
        beta,
        q_star,
        r_star,
        support,
        transfer,
        score_sixth_moment: Density::new(constants.c).score_sixth_moment(),
    };
    gt.constants.rho_zero = measure_rho_zero(&gt, 4096, derive_seed(seed, 0x7268_6f30));
    Ok(gt)
}

/// Monte-Carlo minimum eigenvalue of `E[∇²f(BᵀX)]` using the closed-form
/// soft-curve Hessian (diagonal in the projected coordinates).
fn measure_rho_zero(gt: &GroundTruth, n_mc: usize, seed: u64) -> f64 {
    let Transfer::SoftCurve(sc) = &gt.transfer else {
        return 0.0;
    };
    let k = gt.constants.k;
    let density = gt.density();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = vec![0.0; k];
    let mut x = vec![0.0; gt.constants.d];
    for _ in 0..n_mc {
        for &i in &gt.support {
            x[i] = density.sample(&mut rng);
        }
        let v = gt.project(&x);
        for (m, h) in mean.iter_mut().zip(sc.hessian_diag(&v)) {
            *m += h;
        }
    }
    mean.iter().map(|m| m / n_mc as f64).fold(f64::INFINITY, f64::min)
}

/// Samples of `(X, Y)` from a ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// `n × d` covariates.
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub constants: ModelConstants,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Checks the per-sample invariants `|X| ≤ C`, `Y ∈ [-η, b+η]`.
    pub fn validate(&self) -> Result<()> {
        let c = self.constants.c;
        let lo = -self.constants.eta;
        let hi = self.constants.b + self.constants.eta;
        if self.x.nrows() != self.y.len() {
            return Err(Error::DimensionMismatch("X rows != Y length".into()));
        }
        if let Some(v) = self.x.iter().find(|v| v.abs() > c) {
            return Err(Error::InvalidArgument(format!("|X| = {v} exceeds C = {c}")));
        }
        if let Some(y) = self.y.iter().find(|y| **y < lo - 1e-12 || **y > hi + 1e-12) {
            return Err(Error::InvalidArgument(format!("Y = {y} outside [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// Draws `n` i.i.d. samples from the model. Coordinates are inverse-CDF
/// draws from `p₀`, noise is uniform on `[-η, η]`.
pub fn sample_dataset(gt: &GroundTruth, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("dataset size must be at least 1".into()));
    }
    let d = gt.constants.d;
    let eta = gt.constants.eta;
    let density = gt.density();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x6461_7461));
    let mut x = Array2::zeros((n, d));
    let mut y = vec![0.0; n];
    let mut row = vec![0.0; d];
    for i in 0..n {
        for j in 0..d {
            row[j] = density.sample(&mut rng);
            x[[i, j]] = row[j];
        }
        let z = if eta > 0.0 { rng.gen_range(-eta..=eta) } else { 0.0 };
        y[i] = gt.truth_value(&row) + z;
    }
    Ok(Dataset { x, y, constants: gt.constants })
}

/// Squared-error loss `(f(x) - y)²`.
pub fn loss<F: Fn(&[f64]) -> f64>(x: &[f64], y: f64, f: &F) -> f64 {
    let e = f(x) - y;
    e * e
}

/// Score of the built-in density family at `x`; returns `(s₀, s₀′)`.
pub fn score(c: f64, x: f64) -> Result<(f64, f64)> {
    Density::new(c).score(x)
}

/// The scaling identity `f ∘ B ≡ f(l·) ∘ (B/l)`: returns the rescaled pair.
pub fn rescale_model<F>(f: F, beta: &Array2<f64>, l: f64) -> Result<(impl Fn(&[f64]) -> f64, Array2<f64>)>
where
    F: Fn(&[f64]) -> f64,
{
    if !(l > 0.0) {
        return Err(Error::InvalidArgument(format!("scale l = {l} must be positive")));
    }
    let scaled_beta = beta.mapv(|v| v / l);
    let scaled_f = move |v: &[f64]| {
        let lv: Vec<f64> = v.iter().map(|&vi| l * vi).collect();
        f(&lv)
    };
    Ok((scaled_f, scaled_beta))
}

/// Measured minimum eigenvalue of the expected composite Hessian in the
/// orthonormal coordinates, `E[∇²(f ∘ Rᵀ)(QᵀX)] = R E[∇²f(BᵀX)] Rᵀ`.
/// Used by tests of the moment identity.
pub fn sandwiched_hessian_mc(gt: &GroundTruth, n_mc: usize, seed: u64) -> Result<Array2<f64>> {
    let Transfer::SoftCurve(sc) = &gt.transfer else {
        return Err(Error::InvalidArgument("closed-form Hessian needs the soft-curve family".into()));
    };
    let k = gt.constants.k;
    let density = gt.density();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = Array2::<f64>::zeros((k, k));
    let mut x = vec![0.0; gt.constants.d];
    for _ in 0..n_mc {
        for &i in &gt.support {
            x[i] = density.sample(&mut rng);
        }
        let diag = sc.hessian_diag(&gt.project(&x));
        for a in 0..k {
            for bcol in 0..k {
                // R diag(h) Rᵀ
                let mut acc = 0.0;
                for j in 0..k {
                    acc += gt.r_star[[a, j]] * diag[j] * gt.r_star[[bcol, j]];
                }
                mean[[a, bcol]] += acc;
            }
        }
    }
    Ok(mean.mapv(|v| v / n_mc as f64))
}

/// Minimum eigenvalue after the quadrature/Monte-Carlo estimate; exposed so
/// callers can refresh `rho_zero` with more samples.
pub fn rho_zero_mc(gt: &GroundTruth, n_mc: usize, seed: u64) -> f64 {
    measure_rho_zero(gt, n_mc, seed)
}

/// Spot-checks coordinate-wise monotonicity of `f` on random ordered pairs
/// in `[-span, span]ᵏ`. Returns the number of violations.
pub fn monotonicity_violations<F: Fn(&[f64]) -> f64>(
    f: &F,
    k: usize,
    span: f64,
    trials: usize,
    seed: u64,
) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..trials {
        let lo: Vec<f64> = (0..k).map(|_| rng.gen_range(-span..span)).collect();
        let hi: Vec<f64> =
            lo.iter().map(|&v| v + rng.gen_range(0.0..span)).collect();
        if f(&lo) > f(&hi) + 1e-12 {
            violations += 1;
        }
    }
    violations
}

/// Spot-checks the 1-Lipschitz property on random pairs. Returns the number
/// of violations beyond `1e-9`.
pub fn lipschitz_violations<F: Fn(&[f64]) -> f64>(
    f: &F,
    k: usize,
    span: f64,
    trials: usize,
    seed: u64,
) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..trials {
        let a: Vec<f64> = (0..k).map(|_| rng.gen_range(-span..span)).collect();
        let b: Vec<f64> = (0..k).map(|_| rng.gen_range(-span..span)).collect();
        let dist: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        if (f(&a) - f(&b)).abs() > dist + 1e-9 {
            violations += 1;
        }
    }
    violations
}

/// Checks the `Q` factor orthonormality and the `B = QR` reconstruction,
/// used by ground-truth invariants and tests.
pub fn factorization_residuals(gt: &GroundTruth) -> (f64, f64) {
    let qtq = gt.q_star.t().dot(&gt.q_star);
    let eye = Array2::eye(gt.constants.k);
    let ortho = linalg::fro_dist(&qtq, &eye);
    let back = gt.q_star.dot(&gt.r_star);
    let recon = linalg::fro_dist(&back, &gt.beta);
    (ortho, recon)
}

/// Rank of `BᵀB` via the crate's eigensolver; counts eigenvalues above
/// `1e-8`.
pub fn beta_rank(gt: &GroundTruth) -> Result<usize> {
    let gram = gt.beta.t().dot(&gt.beta);
    let dec = sdp::sym_eigen(&gram)?;
    Ok(dec.eigenvalues.iter().filter(|&&v| v > 1e-8).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_normalizes_and_centers() {
        let density = Density::new(1.5);
        assert!((density.cdf(1.5) - 1.0).abs() < 1e-12);
        assert!((density.cdf(-1.5)).abs() < 1e-12);
        assert!((density.cdf(0.0) - 0.5).abs() < 1e-12);
        let quad = crate::quad::simpson_adaptive(&|x| density.pdf(x), -1.5, 1.5, 1e-12);
        assert!((quad - 1.0).abs() < 1e-9);
    }

    #[test]
    fn score_matches_hand_values() {
        // symmetric density: odd score, zero at the origin
        let (s0, s0p) = score(1.0, 0.0).unwrap();
        assert_eq!(s0, 0.0);
        assert!((s0p + 12.0).abs() < 1e-12);
        // d/dx [6 log(1-x²)] at x = 0.5 with C = 1
        let (s0, _) = score(1.0, 0.5).unwrap();
        assert!((s0 + 8.0).abs() < 1e-12);
    }

    #[test]
    fn score_errors_outside_support() {
        assert!(matches!(score(1.0, 1.0), Err(Error::OutsideSupport { .. })));
        assert!(matches!(score(2.0, -2.5), Err(Error::OutsideSupport { .. })));
    }

    #[test]
    fn score_is_log_derivative() {
        // finite-difference check of s0 and s0' against the pdf
        let density = Density::new(1.3);
        let h = 1e-6;
        for &x in &[-0.9, -0.3, 0.0, 0.42, 1.1] {
            let (s0, s0p) = density.score(x).unwrap();
            let num_s0 = (density.pdf(x + h).ln() - density.pdf(x - h).ln()) / (2.0 * h);
            assert!((s0 - num_s0).abs() < 1e-5, "s0 mismatch at {x}");
            let (s0_hi, _) = density.score(x + h).unwrap();
            let (s0_lo, _) = density.score(x - h).unwrap();
            let num_s0p = (s0_hi - s0_lo) / (2.0 * h);
            assert!((s0p - num_s0p).abs() < 1e-4, "s0' mismatch at {x}");
        }
    }

    #[test]
    fn sixth_moment_matches_closed_form() {
        // E[s0^6] = 12^6 * (2/7) / (C^6 * UNIT_MASS)
        for &c in &[1.0, 2.0] {
            let density = Density::new(c);
            let expected = 12f64.powi(6) * (2.0 / 7.0) / (c.powi(6) * UNIT_MASS);
            let quad = density.score_sixth_moment();
            assert!(
                (quad - expected).abs() < 1e-6 * expected,
                "quadrature {quad} vs closed form {expected}"
            );
        }
    }

    #[test]
    fn ground_truth_single_row_support() {
        let constants = ModelConstants::new(3, 1, 1, 1.0, 1.0, 1.0, 0.0);
        let gt = make_ground_truth(&constants, 7).unwrap();
        let nonzero: Vec<usize> = (0..3).filter(|&i| gt.beta[[i, 0]] != 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((gt.beta[[nonzero[0], 0]] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_truth_orthonormal_factor() {
        let constants = ModelConstants::new(2, 2, 2, 1.0, 1.0, 1.0, 0.0);
        let gt = make_ground_truth(&constants, 1).unwrap();
        let (ortho, recon) = factorization_residuals(&gt);
        assert!(ortho < 1e-10);
        assert!(recon < 1e-10);
    }

    #[test]
    fn ground_truth_full_rank() {
        let constants = ModelConstants::desk_default(10, 2, 3);
        let gt = make_ground_truth(&constants, 5).unwrap();
        assert_eq!(beta_rank(&gt).unwrap(), 2);
    }

    #[test]
    fn ground_truth_rejects_infeasible() {
        let constants = ModelConstants::new(4, 2, 1, 1.0, 1.0, 1.0, 0.0);
        assert!(matches!(
            make_ground_truth(&constants, 0),
            Err(Error::InfeasibleGroundTruth(_))
        ));
    }

    #[test]
    fn ground_truth_invariants_hold() {
        for seed in 0..5 {
            let constants = ModelConstants::desk_default(12, 2, 4);
            let gt = make_ground_truth(&constants, seed).unwrap();
            assert!(gt.beta.iter().all(|&v| v >= 0.0));
            for j in 0..2 {
                let norm: f64 = (0..12).map(|i| gt.beta[[i, j]].powi(2)).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-10);
            }
            for i in 0..12 {
                let in_support = gt.support.contains(&i);
                let zero_row = (0..2).all(|j| gt.beta[[i, j]] == 0.0);
                assert_eq!(in_support, !zero_row);
            }
            assert!(gt.constants.rho_zero > 0.0, "measured rho0 should be positive");
        }
    }

    #[test]
    fn dataset_noiseless_is_exact() {
        let constants = ModelConstants::new(5, 1, 2, 1.0, 1.0, 1.0, 0.0);
        let gt = make_ground_truth(&constants, 3).unwrap();
        let data = sample_dataset(&gt, 50, 11).unwrap();
        for i in 0..50 {
            let row: Vec<f64> = data.x.row(i).to_vec();
            assert_eq!(data.y[i], gt.truth_value(&row));
        }
    }

    #[test]
    fn dataset_coordinates_center() {
        let constants = ModelConstants::desk_default(4, 1, 1);
        let gt = make_ground_truth(&constants, 2).unwrap();
        let n = 10_000;
        let data = sample_dataset(&gt, n, 9).unwrap();
        let bound = 5.0 * constants.c / (n as f64).sqrt();
        for j in 0..4 {
            let mean: f64 = (0..n).map(|i| data.x[[i, j]]).sum::<f64>() / n as f64;
            assert!(mean.abs() < bound, "coordinate {j} mean {mean} exceeds {bound}");
        }
    }

    #[test]
    fn dataset_is_seed_deterministic() {
        let constants = ModelConstants::desk_default(6, 1, 2);
        let gt = make_ground_truth(&constants, 4).unwrap();
        let a = sample_dataset(&gt, 5, 3).unwrap();
        let b = sample_dataset(&gt, 5, 3).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        let c = sample_dataset(&gt, 5, 4).unwrap();
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn dataset_respects_bounds() {
        let constants = ModelConstants::desk_default(6, 2, 3);
        let gt = make_ground_truth(&constants, 8).unwrap();
        let data = sample_dataset(&gt, 2000, 21).unwrap();
        data.validate().unwrap();
        // sixth-moment response bound
        let limit = (constants.b + constants.eta).powi(6);
        for &y in &data.y {
            assert!(y.powi(6) <= limit + 1e-9);
        }
    }

    #[test]
    fn loss_hand_values() {
        let f = |x: &[f64]| x[0];
        assert_eq!(loss(&[2.0], 2.0, &f), 0.0);
        assert_eq!(loss(&[2.0], 0.0, &f), 4.0);
        assert!((loss(&[0.3], 0.1, &f) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn rescale_identity_at_unit_scale() {
        let constants = ModelConstants::desk_default(5, 2, 3);
        let gt = make_ground_truth(&constants, 6).unwrap();
        let transfer = gt.transfer.clone();
        let f = move |v: &[f64]| transfer.eval(v);
        let (f2, beta2) = rescale_model(f, &gt.beta, 1.0).unwrap();
        assert_eq!(beta2, gt.beta);
        assert_eq!(f2(&[0.1, 0.2]), gt.transfer.eval(&[0.1, 0.2]));
    }

    #[test]
    fn rescale_halves_column_norms() {
        let constants = ModelConstants::desk_default(5, 2, 3);
        let gt = make_ground_truth(&constants, 6).unwrap();
        let (_, beta2) = rescale_model(|v: &[f64]| v[0], &gt.beta, 2.0).unwrap();
        for j in 0..2 {
            let norm: f64 = (0..5).map(|i| beta2[[i, j]].powi(2)).sum::<f64>().sqrt();
            assert!((norm - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rescale_preserves_composite_values() {
        let constants = ModelConstants::desk_default(5, 2, 2);
        let gt = make_ground_truth(&constants, 13).unwrap();
        let transfer = gt.transfer.clone();
        let f = move |v: &[f64]| transfer.eval(v);
        let (f2, beta2) = rescale_model(f, &gt.beta, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v1: Vec<f64> = (0..2)
                .map(|j| (0..5).map(|i| gt.beta[[i, j]] * x[i]).sum())
                .collect();
            let v2: Vec<f64> = (0..2)
                .map(|j| (0..5).map(|i| beta2[[i, j]] * x[i]).sum())
                .collect();
            assert!((gt.transfer.eval(&v1) - f2(&v2)).abs() < 1e-12);
        }
    }

    #[test]
    fn rescale_rejects_bad_scale() {
        let beta = Array2::zeros((2, 1));
        assert!(rescale_model(|_: &[f64]| 0.0, &beta, 0.0).is_err());
        assert!(rescale_model(|_: &[f64]| 0.0, &beta, -1.0).is_err());
    }

    #[test]
    fn proposition_scaling_per_column() {
        // Scaling one column of beta to norm r and compensating inside the
        // transfer leaves the composite unchanged.
        let constants = ModelConstants::desk_default(6, 2, 3);
        let gt = make_ground_truth(&constants, 17).unwrap();
        let t = 0.4; // shrink column 0 to norm t < r, then compensate
        let mut beta_small = gt.beta.clone();
        for i in 0..6 {
            beta_small[[i, 0]] *= t;
        }
        let transfer = gt.transfer.clone();
        let compensated = move |v: &[f64]| {
            let adj = [v[0] / t, v[1]];
            transfer.eval(&adj)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v_small: Vec<f64> = (0..2)
                .map(|j| (0..6).map(|i| beta_small[[i, j]] * x[i]).sum())
                .collect();
            let v_full: Vec<f64> = (0..2)
                .map(|j| (0..6).map(|i| gt.beta[[i, j]] * x[i]).sum())
                .collect();
            assert!((compensated(&v_small) - gt.transfer.eval(&v_full)).abs() < 1e-10);
        }
    }

    #[test]
    fn transfer_is_monotone_and_lipschitz() {
        let constants = ModelConstants::desk_default(6, 2, 3);
        let gt = make_ground_truth(&constants, 30).unwrap();
        let transfer = gt.transfer.clone();
        let f = move |v: &[f64]| transfer.eval(v);
        assert_eq!(monotonicity_violations(&f, 2, 2.0, 5000, 1), 0);
        assert_eq!(lipschitz_violations(&f, 2, 2.0, 5000, 2), 0);
    }

    #[test]
    fn table_transfer_checks_interpolability() {
        // gap 2 over distance sqrt(2) is not 1-Lipschitz feasible
        let bad = Transfer::table(vec![(vec![0.0, 0.0], 0.0), (vec![1.0, 1.0], 2.0)], 2.0);
        assert!(bad.is_err());
        let good =
            Transfer::table(vec![(vec![0.0, 0.0], 0.0), (vec![1.0, 1.0], 1.0)], 1.0).unwrap();
        assert_eq!(good.eval(&[1.0, 1.0]), 1.0);
    }

    #[test]
    fn empirical_sixth_score_moment_is_bounded() {
        // Monte-Carlo E[s0^6] stays within 10x of the quadrature value.
        let density = Density::new(1.0);
        let bound = density.score_sixth_moment();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let x = density.sample(&mut rng);
            let (s0, _) = density.score(x).unwrap();
            acc += s0.powi(6);
        }
        let mc = acc / n as f64;
        assert!(mc.is_finite());
        assert!(mc < 10.0 * bound, "MC sixth moment {mc} vs bound {bound}");
    }

    #[test]
    fn hessian_sandwich_is_positive() {
        let constants = ModelConstants::desk_default(6, 2, 3);
        let gt = make_ground_truth(&constants, 12).unwrap();
        let m = sandwiched_hessian_mc(&gt, 2000, 77).unwrap();
        let dec = sdp::sym_eigen(&m).unwrap();
        assert!(dec.eigenvalues.iter().all(|&v| v > 0.0));
    }
}
