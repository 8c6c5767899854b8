//! Small dense linear-algebra utilities shared across the crate.
//!
//! Everything here operates on desk-scale matrices (`d` up to a few hundred,
//! `k` single digits), so simple classical algorithms are used throughout:
//! modified Gram-Schmidt for thin QR and a one-sided Jacobi sweep for the
//! SVD of small square matrices.

use ndarray::Array2;

use crate::{Error, Result};

/// Frobenius norm.
pub fn fro_norm(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Frobenius norm of `a - b`.
pub fn fro_dist(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            s[[i, j]] = 0.5 * (a[[i, j]] + a[[j, i]]);
        }
    }
    s
}

/// Entrywise positive part `max(A, 0)`.
pub fn positive_part(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|v| v.max(0.0))
}

/// Zeroes all rows of `a` whose index is not in `support`.
pub fn restrict_rows(a: &Array2<f64>, support: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros(a.dim());
    for &i in support {
        for j in 0..a.ncols() {
            out[[i, j]] = a[[i, j]];
        }
    }
    out
}

/// Thin QR of a `d × k` matrix with full column rank, via modified
/// Gram-Schmidt with a second orthogonalization pass. `R` has positive
/// diagonal. Fails when a column is (numerically) dependent.
pub fn qr_thin(a: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let (d, k) = a.dim();
    if d < k {
        return Err(Error::DimensionMismatch(format!(
            "thin QR needs at least as many rows as columns, got {d} x {k}"
        )));
    }
    let mut q = a.clone();
    let mut r = Array2::zeros((k, k));
    for j in 0..k {
        // two MGS passes for numerical orthogonality
        for _ in 0..2 {
            for i in 0..j {
                let mut dot = 0.0;
                for row in 0..d {
                    dot += q[[row, i]] * q[[row, j]];
                }
                r[[i, j]] += dot;
                for row in 0..d {
                    q[[row, j]] -= dot * q[[row, i]];
                }
            }
        }
        let norm = (0..d).map(|row| q[[row, j]] * q[[row, j]]).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "column {j} is numerically rank deficient in QR"
            )));
        }
        r[[j, j]] = norm;
        for row in 0..d {
            q[[row, j]] /= norm;
        }
    }
    Ok((q, r))
}

/// Singular value decomposition `A = U Σ Vᵀ` of a small square matrix by
/// one-sided Jacobi rotations on the columns. Singular values are sorted
/// descending. Zero singular values get orthonormal completion columns in
/// `U`, so `U` and `V` are always orthogonal.
pub fn svd_small(a: &Array2<f64>) -> Result<(Array2<f64>, Vec<f64>, Array2<f64>)> {
    let (n, m) = a.dim();
    if n != m {
        return Err(Error::DimensionMismatch(format!(
            "svd_small expects a square matrix, got {n} x {m}"
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("svd_small input".into()));
    }
    let mut u = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    let scale = fro_norm(a).max(1.0);
    // Orthogonalize column pairs until all inner products are negligible.
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for r in 0..n {
                    app += u[[r, p]] * u[[r, p]];
                    aqq += u[[r, q]] * u[[r, q]];
                    apq += u[[r, p]] * u[[r, q]];
                }
                off = off.max(apq.abs());
                if apq.abs() <= 1e-15 * scale * scale {
                    continue;
                }
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..n {
                    let up = u[[r, p]];
                    let uq = u[[r, q]];
                    u[[r, p]] = c * up - s * uq;
                    u[[r, q]] = s * up + c * uq;
                    let vp = v[[r, p]];
                    let vq = v[[r, q]];
                    v[[r, p]] = c * vp - s * vq;
                    v[[r, q]] = s * vp + c * vq;
                }
            }
        }
        if off <= 1e-15 * scale * scale {
            break;
        }
    }
    // Column norms are the singular values.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|r| u[[r, j]] * u[[r, j]]).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));
    let mut u_sorted = Array2::zeros((n, n));
    let mut v_sorted = Array2::zeros((n, n));
    let mut sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        sigma.push(norms[src]);
        for r in 0..n {
            u_sorted[[r, dst]] = u[[r, src]];
            v_sorted[[r, dst]] = v[[r, src]];
        }
    }
    // Normalize U columns; complete zero columns to an orthonormal basis.
    for j in 0..n {
        if sigma[j] > 1e-300 {
            for r in 0..n {
                u_sorted[[r, j]] /= sigma[j];
            }
        } else {
            // Gram-Schmidt a coordinate direction against earlier columns.
            for basis in 0..n {
                for r in 0..n {
                    u_sorted[[r, j]] = if r == basis { 1.0 } else { 0.0 };
                }
                for prev in 0..j {
                    let dot: f64 = (0..n).map(|r| u_sorted[[r, prev]] * u_sorted[[r, j]]).sum();
                    for r in 0..n {
                        let sub = dot * u_sorted[[r, prev]];
                        u_sorted[[r, j]] -= sub;
                    }
                }
                let norm: f64 = (0..n).map(|r| u_sorted[[r, j]] * u_sorted[[r, j]]).sum::<f64>().sqrt();
                if norm > 1e-6 {
                    for r in 0..n {
                        u_sorted[[r, j]] /= norm;
                    }
                    break;
                }
            }
        }
    }
    Ok((u_sorted, sigma, v_sorted))
}

/// Determinant of a small square matrix by LU with partial pivoting.
pub fn det_small(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut m = a.clone();
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if m[[row, col]].abs() > m[[pivot, col]].abs() {
                pivot = row;
            }
        }
        if m[[pivot, col]] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m[[col, j]];
                m[[col, j]] = m[[pivot, j]];
                m[[pivot, j]] = tmp;
            }
            det = -det;
        }
        det *= m[[col, col]];
        for row in (col + 1)..n {
            let factor = m[[row, col]] / m[[col, col]];
            for j in col..n {
                let sub = factor * m[[col, j]];
                m[[row, j]] -= sub;
            }
        }
    }
    det
}
