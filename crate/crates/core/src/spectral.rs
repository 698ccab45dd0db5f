//! Repeated-squaring spectral routines: the descent-direction finder and the
//! top/bottom singular value estimators.
//!
//! Every power `B^k` is carried as `s · C` with `C` normalized to unit max row
//! norm and `ln s` tracked separately, so `k` may exceed anything representable
//! by the raw entries. Once `C` stops changing, the remaining squarings are
//! applied in closed form.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::gershgorin_radius;
use crate::polysys::{PolynomialSystem, SpherePoint};

/// Normalized columns below this are treated as vanished.
pub const COLUMN_FLOOR: f64 = 1e-300;

/// Max entrywise change per squaring regarded as converged.
const STAGNATION_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PowerIterConfig {
    /// Loop cap constant: squaring stops once `k ≥ e^{c(d + ln p)}`.
    pub c: f64,
    pub max_squarings: u32,
    pub normalize_each_squaring: bool,
}

impl Default for PowerIterConfig {
    fn default() -> Self {
        Self { c: 2.0, max_squarings: 64, normalize_each_squaring: true }
    }
}

/// `B^k = s · C` in log-scale form.
#[derive(Debug, Clone)]
struct Powered {
    c: DMatrix<f64>,
    /// `ln s / k`.
    log_scale_per_k: f64,
    /// `k` as a float (may be astronomically large after extrapolation).
    k: f64,
    squarings: u32,
    extrapolated: bool,
}

impl Powered {
    /// `ln ‖B^k e_i‖ / k`, or `None` for a vanished column.
    fn log_root(&self, i: usize) -> Option<f64> {
        let norm = self.c.column(i).norm();
        (norm > COLUMN_FLOOR).then(|| self.log_scale_per_k + norm.ln() / self.k)
    }

    fn max_root(&self) -> f64 {
        (0..self.c.ncols()).filter_map(|i| self.log_root(i)).fold(f64::NEG_INFINITY, f64::max).exp()
    }
}

fn max_row_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

/// Computes `B^{2^m}` by `m` normalized squarings, exiting early on stagnation.
fn power_by_squaring(b: &DMatrix<f64>, m: u32, normalize: bool) -> Powered {
    let r0 = if normalize { max_row_norm(b) } else { 1.0 };
    if r0 == 0.0 {
        return Powered { c: b.clone(), log_scale_per_k: 0.0, k: 1.0, squarings: 0, extrapolated: false };
    }
    let mut c = b / r0;
    let mut log_s = r0.ln();
    let mut k = 1.0f64;
    let mut done = 0u32;
    while done < m {
        let sq = &c * &c;
        let r = if normalize { max_row_norm(&sq) } else { 1.0 };
        if r == 0.0 {
            return Powered { c: sq, log_scale_per_k: 0.0, k: 1.0, squarings: done + 1, extrapolated: false };
        }
        let next = sq / r;
        let change = (&next - &c).amax();
        c = next;
        log_s = 2.0 * log_s + r.ln();
        k *= 2.0;
        done += 1;
        if normalize && change <= STAGNATION_TOL && done < m {
            // C² = r C from here on, so t more squarings give
            // ln s_t = 2^t (ln s + ln r) − ln r.
            let t = (m - done) as i32;
            let k_final = k * 2f64.powi(t);
            let lr = r.ln();
            return Powered {
                c,
                log_scale_per_k: (log_s + lr) / k - lr / k_final,
                k: k_final,
                squarings: done,
                extrapolated: true,
            };
        }
    }
    Powered { c, log_scale_per_k: log_s / k, k, squarings: done, extrapolated: false }
}

/// Number of squarings needed for the doubling counter to reach `e^{c(d + ln p)}`, capped.
pub fn squaring_cap(d: usize, p_max: u32, cfg: &PowerIterConfig) -> u32 {
    let log2_target = cfg.c * (d as f64 + (p_max as f64).ln()) / std::f64::consts::LN_2;
    if !log2_target.is_finite() || log2_target >= cfg.max_squarings as f64 {
        cfg.max_squarings
    } else {
        log2_target.max(0.0).ceil() as u32
    }
}

/// `μ = 9 C₁ d p² ln p`, raised to the Gershgorin bound of `∇²H` when that is larger.
pub fn shift_mu(c1: f64, d: usize, p_max: u32, hessian: &DMatrix<f64>) -> f64 {
    let p = p_max as f64;
    (9.0 * c1 * d as f64 * p * p * p.ln()).max(gershgorin_radius(hessian))
}

#[derive(Debug, Clone)]
pub struct DescentDirection {
    /// Unit vector orthogonal to `x`.
    pub v: DVector<f64>,
    /// `⟨∇²H(x), v⊗v⟩`.
    pub rayleigh: f64,
    pub mu: f64,
    pub squarings: u32,
    pub extrapolated: bool,
}

/// Direction search on a given Hessian: powers `A = P(μI − ∇²H)P` and keeps the
/// column with the smallest Rayleigh quotient.
pub fn descent_direction_from_hessian(
    hessian: &DMatrix<f64>,
    x: &SpherePoint,
    mu: f64,
    squarings: u32,
    cfg: &PowerIterConfig,
) -> Result<DescentDirection> {
    let d = x.dim();
    if hessian.shape() != (d, d) {
        return Err(Error::DimensionMismatch { expected: d, got: hessian.nrows() });
    }
    let xs = x.coords();
    let proj = DMatrix::<f64>::identity(d, d) - xs * xs.transpose();
    let shifted = DMatrix::<f64>::identity(d, d) * mu - hessian;
    let a = &proj * shifted * &proj;
    let powered = power_by_squaring(&a, squarings, cfg.normalize_each_squaring);

    let mut best: Option<(f64, DVector<f64>)> = None;
    for i in 0..d {
        let col = powered.c.column(i);
        let norm = col.norm();
        if !(norm > COLUMN_FLOOR) {
            continue;
        }
        let mut v: DVector<f64> = col / norm;
        v -= xs * xs.dot(&v);
        let nv = v.norm();
        if !(nv > 0.0) {
            continue;
        }
        v /= nv;
        let rq = v.dot(&(hessian * &v));
        if best.as_ref().is_none_or(|(b, _)| rq < *b) {
            best = Some((rq, v));
        }
    }
    let (rayleigh, v) = best.ok_or(Error::DegenerateDirection)?;
    Ok(DescentDirection { v, rayleigh, mu, squarings: powered.squarings, extrapolated: powered.extrapolated })
}

/// Unit tangent direction of (approximately) most negative curvature of `H` at `x`.
pub fn find_descent_direction(
    sys: &PolynomialSystem,
    x: &SpherePoint,
    c1: f64,
    cfg: &PowerIterConfig,
) -> Result<DescentDirection> {
    let hessian = sys.energy_hessian(x.as_slice())?;
    let mu = shift_mu(c1, x.dim(), sys.p_max(), &hessian);
    let m = squaring_cap(x.dim(), sys.p_max(), cfg);
    descent_direction_from_hessian(&hessian, x, mu, m, cfg)
}

fn check_finite(a: &DMatrix<f64>) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("matrix entry"))
    }
}

/// Estimate `ŝ` of `λ_max(AAᵀ)` (the *squared* top singular value) with
/// `λ_max / M^{1/(2k)} ≤ ŝ ≤ λ_max`.
pub fn s_max_sq(a: &DMatrix<f64>) -> Result<f64> {
    check_finite(a)?;
    let b = a * a.transpose();
    Ok(s_max_sym(&b))
}

fn s_max_sym(b: &DMatrix<f64>) -> f64 {
    let m = b.nrows().max(2) as f64;
    let squarings = m.log2().log2().ceil().max(0.0) as u32;
    power_by_squaring(b, squarings, true).max_root()
}

/// `√ŝ`, an estimate of `σ_max(A)`.
pub fn sigma_max_est(a: &DMatrix<f64>) -> Result<f64> {
    Ok(s_max_sq(a)?.sqrt())
}

/// Upper-biased estimate of `σ_min(A)` for `A` with rows ≤ columns.
///
/// Larger `κ` tightens the estimate; the excess is at most
/// `√(2 λ_max(AAᵀ)(1 − M^{−1/(2κ)}))`.
pub fn s_min(a: &DMatrix<f64>, kappa: f64) -> Result<f64> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa must be a finite value ≥ 1, got {kappa}")));
    }
    let (m, l) = a.shape();
    if m > l {
        return Err(Error::InvalidParameter(format!("s_min needs rows ≤ columns, got {m}×{l}")));
    }
    check_finite(a)?;
    let b = a * a.transpose();
    let s_hat = s_max_sym(&b);
    if s_hat == 0.0 {
        return Ok(0.0);
    }
    let d = DMatrix::<f64>::identity(m, m) * (2.0 * s_hat) - &b;
    let squarings = kappa.log2().ceil().max(0.0) as u32;
    let s = power_by_squaring(&d, squarings, true).max_root();
    Ok((2.0 * s_hat - s).max(0.0).sqrt())
}
