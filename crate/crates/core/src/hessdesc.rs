//! Hessian Descent: walk from `e_1` along directions of negative curvature of
//! `H = ½‖F‖²` with an energy-adaptive step, projecting back to the sphere.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::min_eigenpair;
use crate::newton::{certify, CertConfig, CertReport};
use crate::polysys::{tangent_basis, PolynomialSystem, SpherePoint};
use crate::spectral::{find_descent_direction, PowerIterConfig};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HDConfig {
    /// Step-size constant `C₁`; also scales the curvature shift `μ`.
    pub c1: f64,
    /// Energy threshold exponent: the floor is `p_max^{−c0·d}`.
    pub c0: f64,
    /// Iteration budget constant `C₀′`.
    pub c0_prime: f64,
    pub max_iters: Option<u64>,
    /// Overrides `max(p_max^{−c0·d}, 1e-24)`.
    pub energy_floor: Option<f64>,
    pub seed: u64,
    pub power: PowerIterConfig,
    pub cert: CertConfig,
}

/// Machine floor under the energy threshold.
pub const ENERGY_FLOOR_MIN: f64 = 1e-24;

impl Default for HDConfig {
    fn default() -> Self {
        Self {
            c1: DEFAULT_C1,
            c0: 6.0,
            c0_prime: 4.0,
            max_iters: None,
            energy_floor: None,
            seed: 0,
            power: PowerIterConfig::default(),
            cert: CertConfig::default(),
        }
    }
}

/// Calibrated step constant (see the README for the calibration run).
pub const DEFAULT_C1: f64 = 1e-3;

impl HDConfig {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c0", self.c0), ("c0_prime", self.c0_prime)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(f) = self.energy_floor {
            if !(f > 0.0) {
                return Err(Error::InvalidParameter(format!("energy_floor must be positive, got {f}")));
            }
        }
        Ok(())
    }

    pub fn energy_floor_for(&self, sys: &PolynomialSystem) -> f64 {
        self.energy_floor.unwrap_or_else(|| {
            let p = sys.p_max() as f64;
            p.powf(-self.c0 * sys.dim() as f64).max(ENERGY_FLOOR_MIN)
        })
    }

    /// `⌈C₀′ d^{3/2} p⁴ (ln p)²⌉` unless overridden.
    pub fn budget_for(&self, sys: &PolynomialSystem) -> u64 {
        self.max_iters.unwrap_or_else(|| {
            let d = sys.dim() as f64;
            let p = sys.p_max() as f64;
            let lp = p.ln();
            (self.c0_prime * d.powf(1.5) * p.powi(4) * lp * lp).ceil() as u64
        })
    }
}

/// `⌊d − A√(d ln d)⌋`, clamped to `[1, d − 1]`.
pub fn theorem_n(d: usize, a: f64) -> Result<usize> {
    if d < 2 {
        return Err(Error::InvalidParameter("need d ≥ 2 for a square-free system".into()));
    }
    let df = d as f64;
    let n = (df - a * (df * df.ln()).sqrt()).floor();
    Ok((n.max(1.0) as usize).min(d - 1))
}

/// `δ = √min{ (1/(30C₁)) (1/(p⁴ ln p)) √((d−n)H)/d, 1/p }`.
pub fn step_size(d: usize, n: usize, p_max: u32, energy: f64, c1: f64) -> f64 {
    let p = p_max as f64;
    let df = d as f64;
    let codim = df - n as f64;
    let inner = (1.0 / (30.0 * c1)) * (1.0 / (p.powi(4) * p.ln())) * (codim * energy).sqrt() / df;
    inner.min(1.0 / p).sqrt()
}

/// One Hessian Descent step.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HDStep {
    pub delta: f64,
    /// `+1` or `−1`; the step is `y = x − s δ v`.
    pub sign: i8,
    /// `⟨∇²H(x), v⊗v⟩`.
    pub rayleigh: f64,
    /// True if the dense eigenvector replaced the power-iteration direction.
    pub fallback: bool,
    pub energy_y: f64,
    pub energy_next: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HDTermination {
    EnergyFloor,
    BudgetExhausted,
    NoNegativeCurvature,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HDResult {
    /// The point found, or `None` for FALSE.
    pub point: Option<Vec<f64>>,
    pub termination: HDTermination,
    pub iterations: u64,
    pub budget: u64,
    pub energy_floor: f64,
    /// `H(x_0), H(x_1), …`.
    pub energy_trace: Vec<f64>,
    pub steps: Vec<HDStep>,
    pub certification: Option<CertReport>,
}

impl HDResult {
    pub fn step_sizes(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.delta)
    }

    pub fn certified(&self) -> bool {
        self.certification.as_ref().is_some_and(|c| c.certified)
    }
}

/// Outcome of [`hd_step`]: the next iterate, or no tangent direction of negative curvature.
#[derive(Debug, Clone)]
pub enum StepOutcome {
    Moved { next: SpherePoint, step: HDStep },
    Stuck { lambda_min: f64 },
}

/// `½ Σ F_i(y)² ‖y‖^{−2p_i}` with each factor clamped to ≤ 1, so the
/// projection can never raise the computed energy.
fn projected_energy(fy: &DVector<f64>, degrees: &[u32], ny: f64) -> f64 {
    0.5 * fy
        .iter()
        .zip(degrees)
        .map(|(f, &p)| {
            let v = f * ny.powi(-(p as i32)).min(1.0);
            v * v
        })
        .sum::<f64>()
}

/// One step from `x` with current energy `energy`.
pub fn hd_step(sys: &PolynomialSystem, x: &SpherePoint, energy: f64, cfg: &HDConfig) -> Result<StepOutcome> {
    let d = sys.dim();
    let delta = step_size(d, sys.n(), sys.p_max(), energy, cfg.c1);

    let (v, rayleigh, fallback) = match find_descent_direction(sys, x, cfg.c1, &cfg.power) {
        Ok(dir) if dir.rayleigh < 0.0 => (dir.v, dir.rayleigh, false),
        Ok(_) | Err(Error::DegenerateDirection) => {
            let u = tangent_basis(x).into_inner();
            let restricted = sys.restricted_hessian(x)?;
            match min_eigenpair(&restricted) {
                Some((lambda, w)) if lambda < 0.0 => {
                    let mut v = &u * w;
                    v /= v.norm();
                    (v, lambda, true)
                }
                Some((lambda, _)) => return Ok(StepOutcome::Stuck { lambda_min: lambda }),
                None => return Ok(StepOutcome::Stuck { lambda_min: 0.0 }),
            }
        }
        Err(e) => return Err(e),
    };

    let xs = x.coords();
    let h_plus = sys.energy((xs + &v * delta).as_slice())?;
    let h_minus = sys.energy((xs - &v * delta).as_slice())?;
    let sign: i8 = if h_plus - h_minus >= 0.0 { 1 } else { -1 };
    let y = xs - &v * (sign as f64 * delta);
    let fy = sys.evaluate(y.as_slice())?;
    let ny = y.norm();
    let energy_y = projected_energy(&fy, &sys.degrees(), 1.0);
    let energy_next = projected_energy(&fy, &sys.degrees(), ny);
    let next = SpherePoint::normalize(y)?;
    Ok(StepOutcome::Moved { next, step: HDStep { delta, sign, rayleigh, fallback, energy_y, energy_next } })
}

/// Runs Hessian Descent from `e_1` until the energy floor, the iteration
/// budget, or a point without negative tangent curvature.
pub fn hd_run(sys: &PolynomialSystem, cfg: &HDConfig) -> Result<HDResult> {
    cfg.validate()?;
    let d = sys.dim();
    if sys.n() >= d {
        return Err(Error::IncompatibleSystem(format!(
            "Hessian descent needs n ≤ d − 1, got n = {}, d = {d}",
            sys.n()
        )));
    }
    let floor = cfg.energy_floor_for(sys);
    let budget = cfg.budget_for(sys);
    let mut x = SpherePoint::north(d);
    let mut energy = sys.energy(x.as_slice())?;
    let mut trace = vec![energy];
    let mut steps = Vec::new();
    let mut termination = HDTermination::BudgetExhausted;

    if energy <= floor {
        termination = HDTermination::EnergyFloor;
    } else {
        for _ in 0..budget {
            match hd_step(sys, &x, energy, cfg)? {
                StepOutcome::Stuck { .. } => {
                    termination = HDTermination::NoNegativeCurvature;
                    break;
                }
                StepOutcome::Moved { next, step } => {
                    energy = step.energy_next;
                    trace.push(energy);
                    steps.push(step);
                    x = next;
                    if energy <= floor {
                        termination = HDTermination::EnergyFloor;
                        break;
                    }
                }
            }
        }
    }

    let (point, certification) = if termination == HDTermination::EnergyFloor {
        let rep = certify(sys, &x, &cfg.cert)?;
        (Some(x.into_inner().as_slice().to_vec()), Some(rep))
    } else {
        (None, None)
    };
    Ok(HDResult {
        point,
        termination,
        iterations: steps.len() as u64,
        budget,
        energy_floor: floor,
        energy_trace: trace,
        steps,
        certification,
    })
}
