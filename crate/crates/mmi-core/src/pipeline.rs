//! End-to-end estimation and evaluation.
//!
//! [`fit_mmi`] runs the two-stage pipeline with sample splitting: the first
//! half of the dataset feeds the subspace stage, the second half scores
//! every near-net candidate through the sparse isotonic (or Lipschitz)
//! solver, and the candidate with the smallest empirical loss wins. The
//! split is structural: the subspace stage is handed only the first half,
//! the regression stage only the second.
//!
//! Evaluation helpers: the rotation-invariant subspace distance
//! (`inf_P ||Q̂P - Q||_F` over rotations, via the SVD sign-correction), the
//! Monte-Carlo `L₂` loss against a ground truth, and the sensitivity
//! check that compares a measured loss gap against its closed-form bound.

use ndarray::{s, Array2};

use crate::isotonic::{sparse_isotonic, StepInterpolant};
use crate::linalg;
use crate::lipschitz::{lipschitz_sparse_fit, LipschitzInterpolant};
use crate::model::{derive_seed, Dataset, GroundTruth};
use crate::net::build_net;
use crate::par;
use crate::sdp::{estimate_q, SdpConfig};
use crate::theory::{theory_params, z_bound};
use crate::{Error, Result};

/// Interpolation mode of the regression stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    Step,
    Lipschitz,
}

/// Pipeline configuration: net size and seed, interpolation mode, optional
/// schedule overrides, and the stage solver knobs.
#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Number of sphere points in the near-net (`N₀`).
    pub n0: usize,
    pub net_seed: u64,
    pub mode: FitMode,
    /// Truncation level; `None` uses the `θ`-schedule.
    pub tau: Option<f64>,
    /// Sparsity penalty; `None` uses the `θ`-schedule.
    pub lambda: Option<f64>,
    pub sdp: SdpConfig,
    /// Cap on the number of index sets per candidate.
    pub enum_budget: u128,
    /// Dykstra tolerance for the Lipschitz mode.
    pub qp_tol: f64,
}

impl FitConfig {
    pub fn new(n0: usize, net_seed: u64, mode: FitMode) -> Self {
        FitConfig {
            n0,
            net_seed,
            mode,
            tau: None,
            lambda: None,
            sdp: SdpConfig::default(),
            enum_budget: crate::isotonic::DEFAULT_ENUM_BUDGET,
            qp_tol: crate::lipschitz::DEFAULT_QP_TOL,
        }
    }
}

/// The fitted estimator: `x ↦ interp((Q R̄)⁺(I)ᵀ x)`.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// `d × k` orthonormal subspace estimate.
    pub qn: Array2<f64>,
    /// Winning `k × k` net factor (columns of norm `r`).
    pub rbar: Array2<f64>,
    /// Winning index set, `|I| = s`.
    pub support: Vec<usize>,
    /// Anchor pairs `(M(I)ᵀXᵢ, Fᵢ)` over the second half.
    pub anchors: Vec<(Vec<f64>, f64)>,
    pub mode: FitMode,
    /// Mean squared loss over the second half.
    pub empirical_loss: f64,
    pub sdp_converged: bool,
    /// Schedule values actually used.
    pub tau: f64,
    pub lambda: f64,
    /// Range bound of the fitted function.
    pub b: f64,
}

/// Evaluatable form of a [`FitResult`].
pub struct Predictor {
    matrix: Array2<f64>,
    support: Vec<usize>,
    interp: InterpKind,
}

enum InterpKind {
    Step(StepInterpolant),
    Lipschitz(LipschitzInterpolant),
}

impl Predictor {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let k = self.matrix.ncols();
        let mut v = vec![0.0; k];
        for &i in &self.support {
            for (j, vj) in v.iter_mut().enumerate() {
                *vj += self.matrix[[i, j]] * x[i];
            }
        }
        match &self.interp {
            InterpKind::Step(f) => f.eval(&v),
            InterpKind::Lipschitz(f) => f.eval(&v),
        }
    }
}

impl FitResult {
    /// `(Q R̄)⁺`, the nonnegative index-matrix estimate before support
    /// restriction.
    pub fn index_matrix(&self) -> Array2<f64> {
        linalg::positive_part(&self.qn.dot(&self.rbar))
    }

    pub fn predictor(&self) -> Result<Predictor> {
        let interp = match self.mode {
            FitMode::Step => InterpKind::Step(StepInterpolant::new(self.anchors.clone())),
            FitMode::Lipschitz => {
                InterpKind::Lipschitz(LipschitzInterpolant::new(self.anchors.clone(), self.b)?)
            }
        };
        Ok(Predictor {
            matrix: self.index_matrix(),
            support: self.support.clone(),
            interp,
        })
    }
}

/// Splits a dataset into its two halves. The total size must be even.
pub fn split_dataset(data: &Dataset) -> Result<(Dataset, Dataset)> {
    let n_total = data.len();
    if n_total < 2 || n_total % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "sample split requires even N >= 2, got {n_total}"
        )));
    }
    let n = n_total / 2;
    let first = Dataset {
        x: data.x.slice(s![..n, ..]).to_owned(),
        y: data.y[..n].to_vec(),
        constants: data.constants,
    };
    let second = Dataset {
        x: data.x.slice(s![n.., ..]).to_owned(),
        y: data.y[n..].to_vec(),
        constants: data.constants,
    };
    Ok((first, second))
}

fn decode_tuple(mut index: usize, n0: usize, k: usize) -> Vec<usize> {
    let mut tuple = vec![0usize; k];
    for slot in (0..k).rev() {
        tuple[slot] = index % n0;
        index /= n0;
    }
    tuple
}

/// Runs the full pipeline. Candidates are evaluated independently (in
/// parallel when enabled) and reduced deterministically: the winner is the
/// smallest objective, ties broken by net enumeration order.
pub fn fit_mmi(data: &Dataset, cfg: &FitConfig) -> Result<FitResult> {
    let constants = data.constants;
    let (first, second) = split_dataset(data)?;
    let n = first.len();
    let (tau, lambda) = match (cfg.tau, cfg.lambda) {
        (Some(t), Some(l)) => (t, l),
        _ => {
            let (t, l) = theory_params(constants.theta, n, constants.d)?;
            (cfg.tau.unwrap_or(t), cfg.lambda.unwrap_or(l))
        }
    };

    let q_est = estimate_q(&first, tau, lambda, &cfg.sdp)?;
    let net = build_net(cfg.n0, constants.k, constants.r, cfg.net_seed)?;
    let count_u128 = net.matrix_count();
    if count_u128 > 4_000_000 {
        return Err(Error::InvalidArgument(format!(
            "net induces {count_u128} candidate matrices; reduce N0 or k"
        )));
    }
    let count = count_u128 as usize;

    // pass 1: objectives only
    let objectives: Vec<Result<f64>> = par::map_indexed(count, |idx| {
        let tuple = decode_tuple(idx, cfg.n0, constants.k);
        let m = linalg::positive_part(&q_est.q.dot(&net.matrix(&tuple)));
        match cfg.mode {
            FitMode::Step => {
                sparse_isotonic(&second.x, &second.y, &m, constants.s_star, constants.b, cfg.enum_budget)
                    .map(|r| r.objective)
            }
            FitMode::Lipschitz => lipschitz_sparse_fit(
                &second.x,
                &second.y,
                &m,
                constants.s_star,
                constants.b,
                cfg.enum_budget,
                cfg.qp_tol,
            )
            .map(|r| r.objective),
        }
    });
    let mut best_idx = 0usize;
    let mut best_obj = f64::INFINITY;
    for (idx, obj) in objectives.into_iter().enumerate() {
        let obj = obj?;
        if obj < best_obj - 1e-15 {
            best_obj = obj;
            best_idx = idx;
        }
    }

    // pass 2: rebuild the winner
    let tuple = decode_tuple(best_idx, cfg.n0, constants.k);
    let rbar = net.matrix(&tuple);
    let m = linalg::positive_part(&q_est.q.dot(&rbar));
    let (support, anchors, objective) = match cfg.mode {
        FitMode::Step => {
            let fit = sparse_isotonic(
                &second.x,
                &second.y,
                &m,
                constants.s_star,
                constants.b,
                cfg.enum_budget,
            )?;
            (fit.support, fit.anchors, fit.objective)
        }
        FitMode::Lipschitz => {
            let fit = lipschitz_sparse_fit(
                &second.x,
                &second.y,
                &m,
                constants.s_star,
                constants.b,
                cfg.enum_budget,
                cfg.qp_tol,
            )?;
            (fit.support, fit.anchors, fit.objective)
        }
    };
    debug_assert!((objective - best_obj).abs() <= 1e-9 * (1.0 + best_obj));

    Ok(FitResult {
        qn: q_est.q,
        rbar,
        support,
        anchors,
        mode: cfg.mode,
        empirical_loss: objective / second.len() as f64,
        sdp_converged: q_est.sdp_converged,
        tau,
        lambda,
        b: constants.b,
    })
}

fn check_orthonormal(q: &Array2<f64>, tol: f64) -> Result<()> {
    let k = q.ncols();
    let gram = q.t().dot(q);
    let dist = linalg::fro_dist(&gram, &Array2::eye(k));
    if dist > tol {
        return Err(Error::InvalidArgument(format!(
            "matrix is not orthonormal: ||QᵀQ - I|| = {dist:.3e}"
        )));
    }
    Ok(())
}

/// Rotation-restricted alignment `argmin_P ||Q̂P - Q||_F` over `det P = 1`,
/// and the attained distance.
pub fn procrustes_align(qhat: &Array2<f64>, qstar: &Array2<f64>) -> Result<(Array2<f64>, f64)> {
    if qhat.dim() != qstar.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            qhat.dim(),
            qstar.dim()
        )));
    }
    check_orthonormal(qhat, 1e-6)?;
    check_orthonormal(qstar, 1e-6)?;
    let k = qhat.ncols();
    let cross = qhat.t().dot(qstar);
    let (u, _sigma, v) = linalg::svd_small(&cross)?;
    let sign = (linalg::det_small(&u) * linalg::det_small(&v)).signum();
    // P = U diag(1,...,1,sign) Vᵀ maximizes Tr(Pᵀ Q̂ᵀ Q) over rotations;
    // the singular values are descending, so the sign correction lands on
    // the smallest one. Evaluating the residual directly avoids the
    // cancellation the trace formula suffers near zero.
    let mut d = Array2::eye(k);
    d[[k - 1, k - 1]] = sign;
    let p = u.dot(&d).dot(&v.t());
    let dist = linalg::fro_dist(&qhat.dot(&p), qstar);
    Ok((p, dist))
}

/// `inf_P ||Q̂P - Q||_F` over rotation matrices.
pub fn procrustes_dist(qhat: &Array2<f64>, qstar: &Array2<f64>) -> Result<f64> {
    procrustes_align(qhat, qstar).map(|(_, d)| d)
}

/// Monte-Carlo gap estimates between a candidate function and the ground
/// truth, over fresh model draws.
#[derive(Debug, Clone, Copy)]
pub struct McGap {
    /// Mean of `L(x, y, g) - L(x, y, truth)`.
    pub loss_gap: f64,
    pub loss_gap_sigma: f64,
    /// Mean of `(g(x) - truth(x))²`.
    pub l2_sq: f64,
    pub l2_sq_sigma: f64,
    pub n_mc: usize,
}

/// Estimates both the loss gap and the squared `L₂` distance on the same
/// draw stream. Deterministic given the seed; per-chunk generator streams
/// keep parallel and sequential builds bit-identical.
pub fn mc_gap<F>(g: &F, gt: &GroundTruth, n_mc: usize, seed: u64) -> Result<McGap>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n_mc == 0 {
        return Err(Error::InvalidArgument("n_mc must be at least 1".into()));
    }
    let d = gt.constants.d;
    let eta = gt.constants.eta;
    let density = gt.density();
    let stats = par::map_chunks(n_mc, |lo, hi| {
        use rand::{Rng, SeedableRng};
        let chunk_id = lo / par::SUM_CHUNK;
        let mut rng =
            rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x6d63 + chunk_id as u64));
        let mut x = vec![0.0; d];
        let mut sum_gap = 0.0;
        let mut sum_gap2 = 0.0;
        let mut sum_l2 = 0.0;
        let mut sum_l22 = 0.0;
        for _ in lo..hi {
            for xj in x.iter_mut() {
                *xj = density.sample(&mut rng);
            }
            let truth = gt.truth_value(&x);
            let z = if eta > 0.0 { rng.gen_range(-eta..=eta) } else { 0.0 };
            let y = truth + z;
            let gx = g(&x);
            let gap = (gx - y) * (gx - y) - (truth - y) * (truth - y);
            let l2 = (gx - truth) * (gx - truth);
            sum_gap += gap;
            sum_gap2 += gap * gap;
            sum_l2 += l2;
            sum_l22 += l2 * l2;
        }
        (sum_gap, sum_gap2, sum_l2, sum_l22)
    });
    let mut gap_sum = 0.0;
    let mut gap_sq = 0.0;
    let mut l2_sum = 0.0;
    let mut l2_sq_sum = 0.0;
    for (a, b, c, d2) in stats {
        gap_sum += a;
        gap_sq += b;
        l2_sum += c;
        l2_sq_sum += d2;
    }
    let nf = n_mc as f64;
    let gap_mean = gap_sum / nf;
    let l2_mean = l2_sum / nf;
    let gap_var = (gap_sq / nf - gap_mean * gap_mean).max(0.0);
    let l2_var = (l2_sq_sum / nf - l2_mean * l2_mean).max(0.0);
    Ok(McGap {
        loss_gap: gap_mean,
        loss_gap_sigma: (gap_var / nf).sqrt(),
        l2_sq: l2_mean,
        l2_sq_sigma: (l2_var / nf).sqrt(),
        n_mc,
    })
}

/// Monte-Carlo `E[(g(X) - truth(X))²]` with fresh covariate draws.
pub fn l2_loss_mc<F>(g: &F, gt: &GroundTruth, n_mc: usize, seed: u64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    mc_gap(g, gt, n_mc, seed).map(|m| m.l2_sq)
}

/// Outcome of the sensitivity comparison.
#[derive(Debug, Clone, Copy)]
pub struct SensitivityReport {
    /// Measured loss gap of `f ∘ (Q_n R)⁺(I*)` against the truth.
    pub lhs: f64,
    /// `z(ε₁, ε₂, C)` at the measured alignment errors.
    pub rhs: f64,
    pub mc_sigma: f64,
    pub eps1: f64,
    pub eps2: f64,
}

/// Measures the loss gap of the perturbed model `f ∘ (Q_n R)⁺(I*)` and the
/// closed-form bound `z(ε₁, ε₂, C)`, where `P` aligns `Q_n` to the true
/// factor, `ε₁ = ||P R* - R||_F`, `ε₂ = ||Q_n P - Q*||_F`.
pub fn sensitivity_check(
    gt: &GroundTruth,
    qn: &Array2<f64>,
    r: &Array2<f64>,
    n_mc: usize,
    seed: u64,
) -> Result<SensitivityReport> {
    let (p, eps2) = procrustes_align(qn, &gt.q_star)?;
    let pr = p.dot(&gt.r_star);
    let eps1 = linalg::fro_dist(&pr, r);
    let m = linalg::positive_part(&qn.dot(r));
    let m_restricted = linalg::restrict_rows(&m, &gt.support);
    let transfer = gt.transfer.clone();
    let k = gt.constants.k;
    let g = move |x: &[f64]| {
        let mut v = vec![0.0; k];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (j, vj) in v.iter_mut().enumerate() {
                    *vj += m_restricted[[i, j]] * xi;
                }
            }
        }
        transfer.eval(&v)
    };
    let mc = mc_gap(&g, gt, n_mc, seed)?;
    let rhs = z_bound(eps1, eps2, gt.constants.c, gt.constants.eta, gt.constants.k, gt.constants.r);
    Ok(SensitivityReport {
        lhs: mc.loss_gap,
        rhs,
        mc_sigma: mc.loss_gap_sigma,
        eps1,
        eps2,
    })
}
