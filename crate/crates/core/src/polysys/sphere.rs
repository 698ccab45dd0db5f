use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default tolerance on `| ‖x‖ − 1 |` for points on the sphere.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// A point of the unit sphere `S^{d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint(DVector<f64>);

impl SpherePoint {
    /// Wraps `coords` after checking that it has unit norm within `tol`.
    pub fn new(coords: DVector<f64>, tol: f64) -> Result<Self> {
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sphere point"));
        }
        let norm = coords.norm();
        if (norm - 1.0).abs() > tol {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self(coords))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords), UNIT_NORM_TOL)
    }

    /// Radial projection `v / ‖v‖`.
    pub fn normalize(v: DVector<f64>) -> Result<Self> {
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("sphere point"));
        }
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Self(v / norm))
    }

    /// The basis vector `e_1 = (1, 0, …, 0)`.
    pub fn north(d: usize) -> Self {
        let mut v = DVector::zeros(d);
        v[0] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn distance(&self, other: &SpherePoint) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

/// Orthonormal basis `U_x` of the tangent space at `x`, stored as a `d×(d−1)` matrix.
#[derive(Debug, Clone)]
pub struct TangentBasis(DMatrix<f64>);

impl TangentBasis {
    pub fn columns(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Columns `2..d` of the Householder reflector that exchanges `e_1` and `±x`.
///
/// The reflector uses `w = x + sign(x_1) e_1` (with `sign(0) = 1`), so `wᵀw ≥ 2`
/// and no cancellation occurs. At `x = e_1` the basis is `e_2, …, e_d`.
pub fn tangent_basis(x: &SpherePoint) -> TangentBasis {
    let d = x.dim();
    let xs = x.coords();
    let s = if xs[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = xs.clone();
    w[0] += s;
    let denom = 1.0 + xs[0].abs();
    let mut u = DMatrix::zeros(d, d.saturating_sub(1));
    for j in 1..d {
        let coef = w[j] / denom;
        for i in 0..d {
            u[(i, j - 1)] = -coef * w[i];
        }
        u[(j, j - 1)] += 1.0;
    }
    TangentBasis(u)
}
