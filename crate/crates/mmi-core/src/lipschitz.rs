//! Monotone 1-Lipschitz fitting and interpolation.
//!
//! A point set `(xᵢ, yᵢ)` admits a coordinate-wise monotone 1-Lipschitz
//! interpolant exactly when
//!
//! ```text
//! yᵢ - yⱼ ≤ ||(xᵢ - xⱼ)⁺||₂   for every ordered pair (i, j),
//! ```
//!
//! and then `f(x) = max(0, maxᵢ {yᵢ - ||(xᵢ - x)⁺||₂})` is such an
//! interpolant. For a fixed index set the constrained least-squares fit is
//! therefore the Euclidean projection of `Y` onto the polytope
//! `{F : Fᵢ - Fⱼ ≤ cᵢⱼ} ∩ [0, b]ⁿ` with caps `cᵢⱼ = ||(M(I)ᵀ(Xᵢ-Xⱼ))⁺||₂`,
//! computed here by Dykstra's cyclic projection scheme. The sparse driver
//! mirrors [`crate::isotonic::sparse_isotonic`].

use std::collections::HashMap;

use itertools::Itertools;
use ndarray::Array2;

use crate::isotonic::{index_set_count, project_samples};
use crate::{Error, Result};

const PAIR_TOL: f64 = 1e-12;

/// Default Dykstra stopping tolerance (max coordinate change per cycle).
pub const DEFAULT_QP_TOL: f64 = 1e-10;
/// Hard cap on Dykstra cycles.
pub const MAX_QP_CYCLES: usize = 1_000_000;

/// True when every ordered pair satisfies the interpolability criterion
/// (within `1e-12`).
pub fn interpolable(points: &[(Vec<f64>, f64)]) -> bool {
    for (i, (xi, yi)) in points.iter().enumerate() {
        for (j, (xj, yj)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let cap: f64 = xi
                .iter()
                .zip(xj)
                .map(|(a, b)| (a - b).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt();
            if yi - yj > cap + PAIR_TOL {
                return false;
            }
        }
    }
    true
}

/// Cap matrix `c[i][j] = ||(M(I)ᵀXᵢ - M(I)ᵀXⱼ)⁺||₂`; zero diagonal.
pub fn pairwise_caps(m: &Array2<f64>, support: &[usize], x: &Array2<f64>) -> Result<Array2<f64>> {
    for ((i, j), &v) in m.indexed_iter() {
        if v < 0.0 {
            return Err(Error::NonnegativityViolated { row: i, col: j, value: v });
        }
    }
    let proj = project_samples(m, support, x);
    Ok(caps_of_points(&proj))
}

/// Cap matrix from precomputed projections.
pub fn caps_of_points(proj: &[Vec<f64>]) -> Array2<f64> {
    let n = proj.len();
    let mut caps = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v: f64 = proj[i]
                .iter()
                .zip(&proj[j])
                .map(|(a, b)| (a - b).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt();
            caps[[i, j]] = v;
        }
    }
    caps
}

/// Outcome of the polytope projection.
#[derive(Debug, Clone)]
pub struct PolytopeProjection {
    pub f: Vec<f64>,
    pub converged: bool,
    pub cycles: usize,
}

/// Euclidean projection of `y` onto `{F : Fᵢ - Fⱼ ≤ caps[i][j]} ∩ [0, b]ⁿ`
/// by Dykstra's algorithm over the individual halfspaces and the box.
///
/// Pair constraints with `caps ≥ 2b` can never bind inside the box and are
/// dropped. The feasible set is nonempty (any constant in `[0, b]` works),
/// so the scheme converges to the exact projection; iteration stops when a
/// full cycle moves no coordinate by more than `tol`.
pub fn project_polytope(
    y: &[f64],
    caps: &Array2<f64>,
    b: f64,
    tol: f64,
) -> Result<PolytopeProjection> {
    let n = y.len();
    if caps.dim() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "caps is {:?} for {n} responses",
            caps.dim()
        )));
    }
    if !(b > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidArgument("b and tol must be positive".into()));
    }
    if caps.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument("caps must be finite and nonnegative".into()));
    }

    // active halfspaces: F[i] - F[j] <= cap
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && caps[[i, j]] < 2.0 * b {
                pairs.push((i, j, caps[[i, j]]));
            }
        }
    }

    let mut f: Vec<f64> = y.to_vec();
    // Dykstra corrections: pair displacements always lie along (eᵢ - eⱼ),
    // so one scalar per halfspace suffices; the box needs a full vector.
    let mut pair_corr = vec![0.0f64; pairs.len()];
    let mut box_corr = vec![0.0f64; n];

    let mut cycles = 0;
    let mut converged = false;
    while cycles < MAX_QP_CYCLES {
        cycles += 1;
        let mut max_move = 0.0f64;

        for (idx, &(i, j, cap)) in pairs.iter().enumerate() {
            // add back this constraint's correction
            let ui = f[i] + pair_corr[idx];
            let uj = f[j] - pair_corr[idx];
            let violation = ui - uj - cap;
            let step = if violation > 0.0 { violation / 2.0 } else { 0.0 };
            let new_i = ui - step;
            let new_j = uj + step;
            max_move = max_move.max((new_i - f[i]).abs()).max((new_j - f[j]).abs());
            f[i] = new_i;
            f[j] = new_j;
            pair_corr[idx] = step;
        }

        for i in 0..n {
            let u = f[i] + box_corr[i];
            let clipped = u.clamp(0.0, b);
            max_move = max_move.max((clipped - f[i]).abs());
            box_corr[i] = u - clipped;
            f[i] = clipped;
        }

        if max_move <= tol {
            converged = true;
            break;
        }
    }

    // Exact feasibility polish: the Dykstra iterate can sit a hair outside
    // the polytope, which would break the interpolability handoff. Downward
    // relaxation of the difference constraints reaches an exact fixpoint
    // (cap cycles have nonnegative length), and clamping into [0, b]
    // afterwards cannot re-violate a pair because caps are nonnegative.
    loop {
        let mut changed = false;
        for &(i, j, cap) in &pairs {
            if f[i] > f[j] + cap {
                f[i] = f[j] + cap;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for v in f.iter_mut() {
        *v = v.clamp(0.0, b);
    }
    Ok(PolytopeProjection { f, converged, cycles })
}

/// Result of the sparse Lipschitz search.
#[derive(Debug, Clone)]
pub struct LipschitzFit {
    pub support: Vec<usize>,
    pub fitted: Vec<f64>,
    pub objective: f64,
    pub anchors: Vec<(Vec<f64>, f64)>,
    pub converged: bool,
}

/// Enumerates size-`s` index sets, projects `Y` onto each set's cap
/// polytope, and returns the global minimizer (lexicographic ties).
pub fn lipschitz_sparse_fit(
    x: &Array2<f64>,
    y: &[f64],
    m: &Array2<f64>,
    s: usize,
    b: f64,
    budget: u128,
    tol: f64,
) -> Result<LipschitzFit> {
    let d = x.ncols();
    if m.nrows() != d {
        return Err(Error::DimensionMismatch(format!(
            "M has {} rows for {d}-dimensional samples",
            m.nrows()
        )));
    }
    for ((i, j), &v) in m.indexed_iter() {
        if v < 0.0 {
            return Err(Error::NonnegativityViolated { row: i, col: j, value: v });
        }
    }
    if s == 0 || s > d {
        return Err(Error::InvalidArgument(format!("sparsity s = {s} out of range for d = {d}")));
    }
    let required = index_set_count(d, s);
    if required > budget {
        return Err(Error::EnumerationBudget { required, budget });
    }
    let nonzero_rows: Vec<bool> = (0..d)
        .map(|i| (0..m.ncols()).any(|j| m[[i, j]] != 0.0))
        .collect();

    let mut best: Option<LipschitzFit> = None;
    let mut seen: HashMap<Vec<usize>, f64> = HashMap::new();
    for combo in (0..d).combinations(s) {
        let key: Vec<usize> = combo.iter().copied().filter(|&i| nonzero_rows[i]).collect();
        if seen.contains_key(&key) {
            continue;
        }
        let proj = project_samples(m, &combo, x);
        let caps = caps_of_points(&proj);
        let sol = project_polytope(y, &caps, b, tol)?;
        let objective: f64 = y.iter().zip(&sol.f).map(|(a, c)| (a - c) * (a - c)).sum();
        seen.insert(key, objective);
        let better = best.as_ref().map_or(true, |cur| objective < cur.objective - 1e-15);
        if better {
            let anchors: Vec<(Vec<f64>, f64)> =
                proj.into_iter().zip(sol.f.iter().copied()).collect();
            best = Some(LipschitzFit {
                support: combo,
                fitted: sol.f,
                objective,
                anchors,
                converged: sol.converged,
            });
        }
    }
    Ok(best.expect("at least one index set was enumerated"))
}

/// The monotone 1-Lipschitz interpolant
/// `f(x) = max(0, maxᵢ {yᵢ - ||(xᵢ - x)⁺||₂})`.
#[derive(Debug, Clone)]
pub struct LipschitzInterpolant {
    anchors: Vec<(Vec<f64>, f64)>,
}

impl LipschitzInterpolant {
    /// Validates interpolability and anchor values in `[0, b]`.
    pub fn new(anchors: Vec<(Vec<f64>, f64)>, b: f64) -> Result<Self> {
        for (i, (xi, yi)) in anchors.iter().enumerate() {
            if !(0.0 - PAIR_TOL..=b + PAIR_TOL).contains(yi) {
                return Err(Error::InvalidArgument(format!(
                    "anchor value {yi} outside [0, {b}]"
                )));
            }
            for (j, (xj, yj)) in anchors.iter().enumerate() {
                if i == j {
                    continue;
                }
                let cap: f64 = xi
                    .iter()
                    .zip(xj)
                    .map(|(a, c)| (a - c).max(0.0).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let excess = (yi - yj) - cap;
                if excess > PAIR_TOL {
                    return Err(Error::NotInterpolable { i, j, excess });
                }
            }
        }
        Ok(LipschitzInterpolant { anchors })
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        let best = self
            .anchors
            .iter()
            .map(|(a, y)| {
                let pos: f64 = a
                    .iter()
                    .zip(v)
                    .map(|(ai, vi)| (ai - vi).max(0.0).powi(2))
                    .sum();
                y - pos.sqrt()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        best.max(0.0)
    }

    pub fn anchors(&self) -> &[(Vec<f64>, f64)] {
        &self.anchors
    }
}

/// Builds the interpolant from anchors, rejecting non-interpolable input.
pub fn lipschitz_interpolant(anchors: &[(Vec<f64>, f64)], b: f64) -> Result<LipschitzInterpolant> {
    LipschitzInterpolant::new(anchors.to_vec(), b)
}

/// Exhaustive grid search over assignments on `{0, b/(g-1), …, b}`
/// satisfying every pairwise cap: the independent oracle for the projection
/// path. Guarded to tiny instances.
pub fn grid_search_caps(
    y: &[f64],
    caps: &Array2<f64>,
    b: f64,
    grid_steps: usize,
) -> Result<Vec<f64>> {
    let n = y.len();
    if n > 6 {
        return Err(Error::SizeGuard(format!("cap grid search limited to n <= 6, got {n}")));
    }
    if grid_steps > 21 || grid_steps < 2 {
        return Err(Error::SizeGuard(format!("grid steps must be in 2..=21, got {grid_steps}")));
    }
    let grid: Vec<f64> = (0..grid_steps)
        .map(|i| b * i as f64 / (grid_steps - 1) as f64)
        .collect();
    let min_cost: Vec<f64> = (0..n)
        .map(|i| grid.iter().map(|g| (y[i] - g).powi(2)).fold(f64::INFINITY, f64::min))
        .collect();
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + min_cost[i];
    }

    let mut best_cost = f64::INFINITY;
    let mut best = vec![0.0; n];
    let mut current = vec![0.0; n];

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        pos: usize,
        acc: f64,
        y: &[f64],
        caps: &Array2<f64>,
        grid: &[f64],
        current: &mut Vec<f64>,
        best_cost: &mut f64,
        best: &mut Vec<f64>,
        suffix: &[f64],
    ) {
        if acc + suffix[pos] >= *best_cost - 1e-15 {
            return;
        }
        if pos == y.len() {
            *best_cost = acc;
            best.copy_from_slice(current);
            return;
        }
        for &g in grid {
            let mut ok = true;
            for prev in 0..pos {
                if current[prev] - g > caps[[prev, pos]] + PAIR_TOL
                    || g - current[prev] > caps[[pos, prev]] + PAIR_TOL
                {
                    ok = false;
                    break;
                }
            }
            if ok {
                current[pos] = g;
                dfs(pos + 1, acc + (y[pos] - g).powi(2), y, caps, grid, current, best_cost, best, suffix);
            }
        }
    }
    dfs(0, 0.0, y, caps, &grid, &mut current, &mut best_cost, &mut best, &suffix);
    if !best_cost.is_finite() {
        return Err(Error::InvalidArgument("no feasible grid assignment".into()));
    }
    Ok(best)
}
