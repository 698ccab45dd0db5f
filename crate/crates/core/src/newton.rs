//! Projected Newton iteration on the sphere and approximate-solution certificates.
//!
//! One step solves `F(x) + DF(x) v = 0` for the minimum-norm `v ⊥ x` through the
//! SVD of `DF(x) U_x`, then maps `x + v` back onto the sphere. A point is an
//! approximate solution when the iterates approach a root `z` at the doubly
//! exponential rate `‖x^i − z‖ ≤ 2^{1−2^i} ‖x^0 − z‖`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::jacobi_svd;
use crate::polysys::{tangent_basis, PolynomialSystem, SpherePoint};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NewtonConfig {
    /// Singular values below `rank_tol · σ_max` are dropped from the pseudo-inverse.
    pub rank_tol: f64,
    /// A step is degenerate when `σ_min(DF U_x) ≤ sigma_floor_rel · ‖DF(x)‖_F`.
    pub sigma_floor_rel: f64,
    /// `newton_iterate` stops once `‖F‖` falls to this value.
    pub residual_floor: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { rank_tol: 1e-10, sigma_floor_rel: 1e3 * f64::EPSILON, residual_floor: 1e-15 }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonStepResult {
    pub next: SpherePoint,
    pub step: DVector<f64>,
    pub sigma_min_tangent: f64,
    pub degenerate: bool,
}

/// One projected Newton step `Φ(x) = (x + v) / ‖x + v‖`.
pub fn newton_step(sys: &PolynomialSystem, x: &SpherePoint, cfg: &NewtonConfig) -> Result<NewtonStepResult> {
    let (f, jac) = sys.evaluate_with_jacobian(x.as_slice())?;
    let u = tangent_basis(x).into_inner();
    let m = &jac * &u;
    let svd = jacobi_svd(&m);
    let sigma_min = svd.sigma_min();
    let sigma_max = svd.sigma_max();
    let floor = (cfg.sigma_floor_rel * jac.norm()).max(f64::MIN_POSITIVE);
    if !(sigma_min > floor) {
        return Ok(NewtonStepResult {
            next: x.clone(),
            step: DVector::zeros(x.dim()),
            sigma_min_tangent: sigma_min,
            degenerate: true,
        });
    }
    // w = M⁺ (−F) in tangent coordinates.
    let cutoff = cfg.rank_tol * sigma_max;
    let rhs = svd.u.tr_mul(&f);
    let mut w = DVector::zeros(u.ncols());
    for k in 0..svd.s.len() {
        if svd.s[k] > cutoff {
            w -= svd.v.column(k) * (rhs[k] / svd.s[k]);
        }
    }
    let step = &u * w;
    let next = SpherePoint::normalize(x.coords() + &step)?;
    Ok(NewtonStepResult { next, step, sigma_min_tangent: sigma_min, degenerate: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonStop {
    ResidualFloor,
    Degenerate,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct NewtonTrajectory {
    /// `x^0, x^1, …` including the start.
    pub points: Vec<SpherePoint>,
    /// `‖F(x^i)‖` for each point.
    pub residuals: Vec<f64>,
    pub stop: NewtonStop,
}

impl NewtonTrajectory {
    pub fn last(&self) -> &SpherePoint {
        self.points.last().expect("trajectory always holds the start point")
    }
}

/// Repeats [`newton_step`] up to `max_iters` times.
pub fn newton_iterate(
    sys: &PolynomialSystem,
    x0: &SpherePoint,
    max_iters: usize,
    cfg: &NewtonConfig,
) -> Result<NewtonTrajectory> {
    let mut points = vec![x0.clone()];
    let mut residuals = vec![sys.evaluate(x0.as_slice())?.norm()];
    let mut stop = NewtonStop::MaxIterations;
    for _ in 0..max_iters {
        if residuals.last().copied().unwrap_or(0.0) <= cfg.residual_floor {
            stop = NewtonStop::ResidualFloor;
            break;
        }
        let res = newton_step(sys, points.last().unwrap(), cfg)?;
        if res.degenerate {
            stop = NewtonStop::Degenerate;
            break;
        }
        residuals.push(sys.evaluate(res.next.as_slice())?.norm());
        points.push(res.next);
    }
    if stop == NewtonStop::MaxIterations && residuals.last().copied().unwrap_or(0.0) <= cfg.residual_floor {
        stop = NewtonStop::ResidualFloor;
    }
    Ok(NewtonTrajectory { points, residuals, stop })
}

/// `log‖F(x^{i+1})‖ / log‖F(x^i)‖` for consecutive residuals in `(0, 1)`.
pub fn contraction_exponents(residuals: &[f64]) -> Vec<f64> {
    residuals.windows(2).filter(|w| w[0] > 0.0 && w[0] < 1.0 && w[1] > 0.0).map(|w| w[1].ln() / w[0].ln()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertMode {
    /// Closed-form sufficient condition with surrogate constants.
    Analytic,
    /// Run Newton and check the doubly exponential contraction directly.
    Empirical,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CertConfig {
    pub mode: CertMode,
    pub newton: NewtonConfig,
    /// Newton steps taken in empirical mode.
    pub empirical_steps: usize,
    /// Multiplicative slack on the `2^{1−2^i}` envelope.
    pub slack: f64,
    /// Distances below this are treated as converged.
    pub distance_floor: f64,
    /// The trajectory limit must satisfy `‖F‖ ≤ root_tol`.
    pub root_tol: f64,
    /// Lipschitz constant of `DF` on the sphere; `None` uses `c0 · p² √(d ln p)`.
    pub lipschitz: Option<f64>,
    pub c0: f64,
}

impl Default for CertConfig {
    fn default() -> Self {
        Self {
            mode: CertMode::Empirical,
            newton: NewtonConfig::default(),
            empirical_steps: 8,
            slack: 2.0,
            distance_floor: 1e-13,
            root_tol: 1e-10,
            lipschitz: None,
            c0: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CertReport {
    pub certified: bool,
    pub mode: CertMode,
    /// `"heuristic-analytic"` or `"empirical"`.
    pub label: String,
    /// `B = 3 + (8L + 4M)/T` (analytic mode).
    pub b_bound: Option<f64>,
    /// `T = σ_min − 5 L dist`, with `dist` the surrogate `2‖F‖/σ_min`.
    pub t_surrogate: Option<f64>,
    pub distance_surrogate: Option<f64>,
    pub sigma_min_tangent: f64,
    /// `H(x^i) = ½‖F(x^i)‖²` along the Newton trajectory (empirical mode).
    pub residual_trace: Vec<f64>,
    pub contraction_exponents: Vec<f64>,
    /// Approximated limit `x^∞` (empirical mode).
    pub limit: Option<Vec<f64>>,
    pub reason: Option<String>,
}

/// Decides whether `x` is an approximate solution, in the mode selected by `cfg`.
pub fn certify(sys: &PolynomialSystem, x: &SpherePoint, cfg: &CertConfig) -> Result<CertReport> {
    match cfg.mode {
        CertMode::Analytic => certify_analytic(sys, x, cfg),
        CertMode::Empirical => certify_empirical(sys, x, cfg),
    }
}

fn default_lipschitz(sys: &PolynomialSystem, c0: f64) -> f64 {
    let p = sys.p_max() as f64;
    let d = sys.dim() as f64;
    c0 * p * p * (d * p.ln()).sqrt()
}

fn certify_analytic(sys: &PolynomialSystem, x: &SpherePoint, cfg: &CertConfig) -> Result<CertReport> {
    let (f, jac) = sys.evaluate_with_jacobian(x.as_slice())?;
    let u = tangent_basis(x).into_inner();
    let sigma = jacobi_svd(&(&jac * &u)).sigma_min();
    let resid = f.norm();
    let mut report = CertReport {
        certified: false,
        mode: CertMode::Analytic,
        label: "heuristic-analytic".into(),
        b_bound: None,
        t_surrogate: None,
        distance_surrogate: None,
        sigma_min_tangent: sigma,
        residual_trace: vec![0.5 * resid * resid],
        contraction_exponents: Vec::new(),
        limit: None,
        reason: None,
    };
    let floor = (cfg.newton.sigma_floor_rel * jac.norm()).max(f64::MIN_POSITIVE);
    if !(sigma > floor) {
        report.reason = Some("degenerate Jacobian on the tangent space".into());
        return Ok(report);
    }
    let lip = cfg.lipschitz.unwrap_or_else(|| default_lipschitz(sys, cfg.c0));
    let m_bound = sys.p_max() as f64 * resid;
    let dist = 2.0 * resid / sigma;
    let t = sigma - 5.0 * lip * dist;
    report.distance_surrogate = Some(dist);
    report.t_surrogate = Some(t);
    if t <= 0.0 {
        report.reason = Some("T surrogate is not positive".into());
        return Ok(report);
    }
    let b = 3.0 + (8.0 * lip + 4.0 * m_bound) / t;
    report.b_bound = Some(b);
    report.certified = dist <= 1.0 / (4.0 * b);
    if !report.certified {
        report.reason = Some(format!("distance surrogate {dist:.3e} exceeds 1/(4B) = {:.3e}", 0.25 / b));
    }
    Ok(report)
}

fn certify_empirical(sys: &PolynomialSystem, x: &SpherePoint, cfg: &CertConfig) -> Result<CertReport> {
    let first = newton_step(sys, x, &cfg.newton)?;
    let traj = newton_iterate(sys, x, cfg.empirical_steps, &cfg.newton)?;
    let mut report = CertReport {
        certified: false,
        mode: CertMode::Empirical,
        label: "empirical".into(),
        b_bound: None,
        t_surrogate: None,
        distance_surrogate: None,
        sigma_min_tangent: first.sigma_min_tangent,
        residual_trace: traj.residuals.iter().map(|r| 0.5 * r * r).collect(),
        contraction_exponents: contraction_exponents(&traj.residuals),
        limit: Some(traj.last().as_slice().to_vec()),
        reason: None,
    };
    if first.degenerate {
        report.reason = Some("degenerate Jacobian on the tangent space".into());
        return Ok(report);
    }
    let limit = traj.last();
    let limit_resid = *traj.residuals.last().unwrap();
    if traj.stop == NewtonStop::Degenerate {
        report.reason = Some("Newton iteration hit a degenerate point".into());
        return Ok(report);
    }
    if !(limit_resid <= cfg.root_tol) {
        report.reason = Some(format!("trajectory limit is not a root (‖F‖ = {limit_resid:.3e})"));
        return Ok(report);
    }
    let d0 = x.distance(limit);
    for (i, p) in traj.points.iter().enumerate() {
        let envelope = cfg.slack * 2f64.powf(1.0 - 2f64.powi(i as i32)) * d0;
        let di = p.distance(limit);
        if di > envelope.max(cfg.distance_floor) {
            report.reason = Some(format!("iterate {i} at distance {di:.3e} exceeds envelope {envelope:.3e}"));
            return Ok(report);
        }
    }
    report.certified = true;
    Ok(report)
}
