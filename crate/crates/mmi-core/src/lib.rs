//! Estimation of monotone multi-index models `Y = f(BᵀX) + Z`.
//!
//! The model: `B` is a nonnegative `d × k` index matrix with `s` nonzero rows
//! and columns of 2-norm `r`, and `f : ℝᵏ → [0, b]` is coordinate-wise
//! monotone and 1-Lipschitz. This crate implements the full two-stage
//! estimation pipeline:
//!
//! 1. **Subspace stage** — a truncated second-order score moment matrix is
//!    assembled from half the samples ([`stein`]) and fed to a
//!    Fantope-constrained semidefinite program solved by ADMM ([`sdp`]); the
//!    top-`k` eigenvectors estimate the column space of `B` up to rotation.
//! 2. **Regression stage** — a random near-net of candidate `k × k` factors
//!    ([`net`]) is scanned; for each candidate the optimal support set and
//!    monotone fit are computed by exact sparse matrix isotonic regression
//!    ([`isotonic`]), or by its 1-Lipschitz variant ([`lipschitz`]); the
//!    candidate with the smallest empirical loss on the held-out half wins
//!    ([`pipeline`]).
//!
//! [`model`] provides synthetic ground truths and datasets for benchmarking,
//! [`theory`] the closed-form schedules and probability-bound calculators,
//! and [`io`] the on-disk CSV/JSON formats used by the CLI.
//!
//! All operations are deterministic given their seeds. With the default
//! `parallel` feature the embarrassingly parallel loops (net-candidate scans,
//! Monte-Carlo sums, per-sample moment terms) run on rayon; results are
//! bit-identical to the sequential fallback because every reduction happens
//! in a fixed order.

pub mod io;
pub mod isotonic;
pub mod linalg;
pub mod lipschitz;
pub mod model;
pub mod net;
pub mod par;
pub mod pipeline;
pub(crate) mod quad;
pub mod sdp;
pub mod stein;
pub mod theory;

use thiserror::Error;

/// Errors shared across the crate. Display strings begin with the stable
/// kebab-case tag callers can match on.
#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible-ground-truth: {0}")]
    InfeasibleGroundTruth(String),

    #[error("outside-support: |x| = {x:.6} is not inside (-C, C) with C = {c:.6}")]
    OutsideSupport { x: f64, c: f64 },

    #[error("nonnegativity-violated: M[{row}][{col}] = {value:.6}")]
    NonnegativityViolated { row: usize, col: usize, value: f64 },

    #[error("inconsistent-order: cycle among strict relations")]
    InconsistentOrder,

    #[error("enumeration-budget: {required} index sets exceed the budget of {budget}")]
    EnumerationBudget { required: u128, budget: u128 },

    #[error("not-interpolable: pair ({i}, {j}) exceeds its cap by {excess:.3e}")]
    NotInterpolable { i: usize, j: usize, excess: f64 },

    #[error("epsilon-too-small: eps = {eps:.6} must exceed z = {z:.6}")]
    EpsilonTooSmall { eps: f64, z: f64 },

    #[error("dimension-mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid-argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite: {0}")]
    NonFinite(String),

    #[error("no-convergence: {0}")]
    NoConvergence(String),

    #[error("size-guard: {0}")]
    SizeGuard(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
