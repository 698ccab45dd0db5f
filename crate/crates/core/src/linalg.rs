//! Small dense kernels used by the solvers.

use nalgebra::{DMatrix, DVector};

/// Thin singular value decomposition `A = U diag(s) Vᵀ` with `s` sorted descending.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// `m × r` left singular vectors.
    pub u: DMatrix<f64>,
    /// `r = min(m, c)` singular values, descending.
    pub s: DVector<f64>,
    /// `c × r` right singular vectors.
    pub v: DMatrix<f64>,
}

impl ThinSvd {
    pub fn sigma_max(&self) -> f64 {
        self.s.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest of the `min(m, c)` singular values.
    pub fn sigma_min(&self) -> f64 {
        self.s.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD of an `m × c` matrix with `m ≥ c`.
///
/// Returns `(W, V)` with `A V = W`, columns of `W` mutually orthogonal.
fn hestenes(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (m, c) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(c, c);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..c {
            for j in i + 1..c {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..m {
                    let (wi, wj) = (w[(r, i)], w[(r, j)]);
                    alpha += wi * wi;
                    beta += wj * wj;
                    gamma += wi * wj;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for r in 0..m {
                    let (wi, wj) = (w[(r, i)], w[(r, j)]);
                    w[(r, i)] = cs * wi - sn * wj;
                    w[(r, j)] = sn * wi + cs * wj;
                }
                for r in 0..c {
                    let (vi, vj) = (v[(r, i)], v[(r, j)]);
                    v[(r, i)] = cs * vi - sn * vj;
                    v[(r, j)] = sn * vi + cs * vj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

/// Thin SVD by one-sided Jacobi rotations; deterministic for a given input.
pub fn jacobi_svd(a: &DMatrix<f64>) -> ThinSvd {
    let (m, c) = a.shape();
    let transposed = m < c;
    let work = if transposed { a.transpose() } else { a.clone() };
    let (w, v) = hestenes(&work);
    let r = w.ncols();
    let mut order: Vec<usize> = (0..r).collect();
    let norms: Vec<f64> = (0..r).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let rows = w.nrows();
    let mut left = DMatrix::zeros(rows, r);
    let mut right = DMatrix::zeros(v.nrows(), r);
    let mut s = DVector::zeros(r);
    for (k, &j) in order.iter().enumerate() {
        s[k] = norms[j];
        if norms[j] > 0.0 {
            left.set_column(k, &(w.column(j) / norms[j]));
        }
        right.set_column(k, &v.column(j));
    }
    if transposed {
        ThinSvd { u: right, s, v: left }
    } else {
        ThinSvd { u: left, s, v: right }
    }
}

/// Gershgorin upper bound on `max |λ|` of a symmetric matrix.
pub fn gershgorin_radius(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Smallest eigenvalue and a unit eigenvector of a symmetric matrix (dense, nalgebra).
pub fn min_eigenpair(a: &DMatrix<f64>) -> Option<(f64, DVector<f64>)> {
    if a.nrows() == 0 {
        return None;
    }
    let eig = a.clone().symmetric_eigen();
    let i = eig.eigenvalues.argmin().0;
    Some((eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
}
