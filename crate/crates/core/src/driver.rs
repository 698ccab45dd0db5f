//! Regime selection and the top-level solve entry point.
//!
//! The `(d, p_max, δ)` plane splits into four regimes. Large `d` with moderate
//! degree goes to Hessian Descent on an under-determined system; everything
//! else goes to Multi-Scale Search on a square system (`n = d − 1`) with
//! regime-specific `u` parameters.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hessdesc::{hd_run, theorem_n, HDConfig, HDResult, HDTermination, DEFAULT_C1};
use crate::mss::{mss_params, mss_run, MSSConfig, MSSParams, MSSResult, VisitStats};
use crate::newton::{CertConfig, CertReport};
use crate::polysys::{PolynomialSystem, SCHEMA_VERSION};
use crate::spectral::PowerIterConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `p < d²` and `C e^{−d/C} < δ`: Hessian Descent.
    #[serde(rename = "L1")]
    L1,
    /// `p < d²`, otherwise: finite set, Multi-Scale Search.
    #[serde(rename = "L2")]
    L2,
    /// `p ≥ d²` and `p^{−d} < δ`: Multi-Scale Search with degree-adapted `u`'s.
    #[serde(rename = "L3")]
    L3,
    /// `p ≥ d²`, otherwise: finite set, Multi-Scale Search.
    #[serde(rename = "L4")]
    L4,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::L1 => "L1",
            Regime::L2 => "L2",
            Regime::L3 => "L3",
            Regime::L4 => "L4",
        };
        f.write_str(s)
    }
}

/// Classifies `(d, p_max, δ)` with regime constant `c`.
pub fn regime(d: usize, p_max: u32, delta: f64, c: f64) -> Regime {
    let (df, p) = (d as f64, p_max as f64);
    if p < df * df {
        if c * (-df / c).exp() < delta {
            Regime::L1
        } else {
            Regime::L2
        }
    } else if (-df * p.ln()).exp() < delta {
        Regime::L3
    } else {
        Regime::L4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Auto,
    Hd,
    Mss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    HessianDescent,
    MultiScaleSearch,
}

/// `u` overrides for Multi-Scale Search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UOverrides {
    pub u1: Option<f64>,
    pub u2: Option<f64>,
    pub u3: Option<f64>,
}

/// Every tunable constant, tolerance and cap of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Failure probability target, in `(0, delta0)`.
    pub delta: f64,
    pub delta0: f64,
    /// Complexity exponent slack; recorded only.
    pub delta_prime: f64,
    pub mode: Mode,
    /// `A` in `n = ⌊d − A√(d ln d)⌋`.
    pub a: f64,
    /// Regime constant `C`.
    pub c: f64,
    /// `C₀` for Multi-Scale Search parameters.
    pub c0_mss: f64,
    /// `C″` in the large-degree `u3`.
    pub c_double_prime: f64,
    /// `δ` fed to the Multi-Scale Search level formula.
    pub mss_delta: f64,
    /// `u`'s for the finite regimes.
    pub finite_u: (f64, f64, f64),
    pub u_overrides: UOverrides,
    pub k0_override: Option<u32>,
    pub mss_visit_budget: Option<u64>,
    pub mss_parallel: bool,
    pub c1: f64,
    pub c0: f64,
    pub c0_prime: f64,
    pub hd_max_iters: Option<u64>,
    pub energy_floor: Option<f64>,
    pub power: PowerIterConfig,
    pub cert: CertConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            delta0: 0.2,
            delta_prime: 1.0,
            mode: Mode::Auto,
            a: 1.0,
            c: 1.0,
            c0_mss: DEFAULT_C0_MSS,
            c_double_prime: 1.0,
            mss_delta: 0.1,
            finite_u: (2.0, 0.25, 1e3),
            u_overrides: UOverrides::default(),
            k0_override: None,
            mss_visit_budget: None,
            mss_parallel: false,
            c1: DEFAULT_C1,
            c0: 6.0,
            c0_prime: 4.0,
            hd_max_iters: None,
            energy_floor: None,
            power: PowerIterConfig::default(),
            cert: CertConfig::default(),
        }
    }
}

/// Default `C₀` for Multi-Scale Search, sized so `L` exceeds sampled Lipschitz constants at desk scale.
pub const DEFAULT_C0_MSS: f64 = 2.0;

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0 <= 1.0) {
            return Err(Error::InvalidParameter(format!("delta0 must lie in (0, 1], got {}", self.delta0)));
        }
        if !(self.delta > 0.0 && self.delta < self.delta0) {
            return Err(Error::InvalidParameter(format!("delta must lie in (0, {}), got {}", self.delta0, self.delta)));
        }
        let named = [
            ("delta_prime", self.delta_prime),
            ("A", self.a),
            ("C", self.c),
            ("C0", self.c0_mss),
            ("C''", self.c_double_prime),
            ("C1", self.c1),
            ("c0", self.c0),
            ("C0'", self.c0_prime),
            ("c", self.power.c),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn hd_config(&self, seed: u64) -> HDConfig {
        HDConfig {
            c1: self.c1,
            c0: self.c0,
            c0_prime: self.c0_prime,
            max_iters: self.hd_max_iters,
            energy_floor: self.energy_floor,
            seed,
            power: self.power,
            cert: self.cert,
        }
    }

    /// `(u1, u2, u3)` for a Multi-Scale Search run in `regime`.
    pub fn mss_u(&self, regime: Regime, d: usize, p_max: u32) -> (f64, f64, f64) {
        let (df, p) = (d as f64, p_max as f64);
        let (mut u1, mut u2, mut u3) = match regime {
            Regime::L3 => {
                let c = self.c;
                let u1 = 1.0 + (c * (6f64.ln() / df + p.ln())).sqrt();
                let u2 = (-df * p.ln()).exp() / (3.0 * c);
                let u3 = c * p.powf(df) * (df * p.ln() + self.c_double_prime) / 3.0;
                (u1, u2, u3)
            }
            _ => self.finite_u,
        };
        if let Some(v) = self.u_overrides.u1 {
            u1 = v;
        }
        if let Some(v) = self.u_overrides.u2 {
            u2 = v;
        }
        if let Some(v) = self.u_overrides.u3 {
            u3 = v;
        }
        (u1, u2, u3)
    }

    pub fn mss_params_for(&self, regime: Regime, d: usize, p_max: u32) -> Result<MSSParams> {
        let (u1, u2, u3) = self.mss_u(regime, d, p_max);
        let mut params = mss_params(d, p_max, u1, u2, u3, self.mss_delta, self.c0_mss)?;
        if let Some(k0) = self.k0_override {
            if k0 > crate::mss::MAX_LEVEL {
                return Err(Error::ParametersOutOfRange(format!("k0 override {k0} too large")));
            }
            params.k0 = k0;
        }
        Ok(params)
    }

    pub fn mss_config(&self) -> MSSConfig {
        MSSConfig {
            parallel: self.mss_parallel,
            visit_budget: self.mss_visit_budget,
            use_u3_budget: true,
            cert: self.cert,
        }
    }
}

/// What was solved.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputDescriptor {
    /// Sampled by the driver; `n` follows the regime.
    Generated {
        d: usize,
        degree: u32,
        seed: u64,
    },
    Given {
        d: usize,
        degrees: Vec<u32>,
        source: Option<String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Point(Vec<f64>),
    False,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HDSummary {
    pub termination: HDTermination,
    pub iterations: u64,
    pub budget: u64,
    pub energy_floor: f64,
    pub final_energy: f64,
    pub energy_trace: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub fallback_steps: u64,
}

impl From<&HDResult> for HDSummary {
    fn from(r: &HDResult) -> Self {
        Self {
            termination: r.termination,
            iterations: r.iterations,
            budget: r.budget,
            energy_floor: r.energy_floor,
            final_energy: *r.energy_trace.last().unwrap_or(&f64::NAN),
            energy_trace: r.energy_trace.clone(),
            step_sizes: r.step_sizes().collect(),
            fallback_steps: r.steps.iter().filter(|s| s.fallback).count() as u64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MSSSummary {
    pub params: MSSParams,
    pub stats: VisitStats,
    pub visit_budget: Option<u64>,
    pub budget_exhausted: bool,
    pub s_min_at_point: Option<f64>,
}

impl From<&MSSResult> for MSSSummary {
    fn from(r: &MSSResult) -> Self {
        Self {
            params: r.params,
            stats: r.stats,
            visit_budget: r.visit_budget,
            budget_exhausted: r.budget_exhausted,
            s_min_at_point: r.s_min_at_point,
        }
    }
}

/// Wall-clock timings; the only fields allowed to differ between identical runs.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
pub struct Timings {
    pub sample_ms: f64,
    pub solve_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub descriptor: InputDescriptor,
    pub regime: Regime,
    pub n: usize,
    pub algorithm: Algorithm,
    pub outcome: Outcome,
    pub certified: bool,
    pub certification: Option<CertReport>,
    pub hd: Option<HDSummary>,
    pub mss: Option<MSSSummary>,
    pub parameters: SolverConfig,
    pub warnings: Vec<String>,
    pub timings: Timings,
}

impl RunReport {
    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the timing block removed, for reproducibility comparisons.
    pub fn to_json_without_timings(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(o) = v.as_object_mut() {
            o.remove("timings");
        }
        Ok(serde_json::to_string(&v)?)
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn choose_algorithm(regime: Regime, mode: Mode) -> Algorithm {
    match (mode, regime) {
        (Mode::Hd, _) => Algorithm::HessianDescent,
        (Mode::Mss, _) => Algorithm::MultiScaleSearch,
        (Mode::Auto, Regime::L1) => Algorithm::HessianDescent,
        (Mode::Auto, _) => Algorithm::MultiScaleSearch,
    }
}

/// Samples a system of degree-`degree` equations sized for the regime, then solves it.
pub fn solve_generated(d: usize, degree: u32, seed: u64, cfg: &SolverConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let reg = regime(d, degree, cfg.delta, cfg.c);
    let alg = choose_algorithm(reg, cfg.mode);
    let n = match alg {
        Algorithm::HessianDescent => theorem_n(d, cfg.a)?,
        Algorithm::MultiScaleSearch => {
            if d < 2 {
                return Err(Error::InvalidParameter("need d ≥ 2".into()));
            }
            d - 1
        }
    };
    let sys = PolynomialSystem::sample(d, &vec![degree; n], seed)?;
    let sample_ms = ms(start);
    let descriptor = InputDescriptor::Generated { d, degree, seed };
    run(&sys, descriptor, reg, alg, seed, Vec::new(), cfg, start, sample_ms)
}

/// Solves a caller-supplied system, checking that its shape fits the chosen algorithm.
pub fn solve_given(sys: &PolynomialSystem, source: Option<String>, seed: u64, cfg: &SolverConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let (d, n) = (sys.dim(), sys.n());
    if n >= d {
        return Err(Error::IncompatibleSystem(format!("need n ≤ d − 1, got n = {n}, d = {d}")));
    }
    let reg = regime(d, sys.p_max(), cfg.delta, cfg.c);
    let mut warnings = Vec::new();
    let alg = match cfg.mode {
        Mode::Mss if n != d - 1 => {
            return Err(Error::IncompatibleSystem(format!("multi-scale search needs n = d − 1, got n = {n}, d = {d}")));
        }
        Mode::Auto if n + 2 <= d => {
            if reg != Regime::L1 {
                warnings.push(format!("n = {n} ≤ d − 2: using Hessian descent although the regime is {reg}"));
            }
            Algorithm::HessianDescent
        }
        // A square system only fits the grid search, whatever the regime.
        Mode::Auto => Algorithm::MultiScaleSearch,
        mode => choose_algorithm(reg, mode),
    };
    let descriptor = InputDescriptor::Given { d, degrees: sys.degrees(), source };
    run(sys, descriptor, reg, alg, seed, warnings, cfg, start, 0.0)
}

#[allow(clippy::too_many_arguments)]
fn run(
    sys: &PolynomialSystem,
    descriptor: InputDescriptor,
    reg: Regime,
    alg: Algorithm,
    seed: u64,
    warnings: Vec<String>,
    cfg: &SolverConfig,
    start: Instant,
    sample_ms: f64,
) -> Result<RunReport> {
    let solve_start = Instant::now();
    let (outcome, certification, hd, mss) = match alg {
        Algorithm::HessianDescent => {
            let r = hd_run(sys, &cfg.hd_config(seed))?;
            let outcome = r.point.clone().map_or(Outcome::False, Outcome::Point);
            (outcome, r.certification.clone(), Some(HDSummary::from(&r)), None)
        }
        Algorithm::MultiScaleSearch => {
            let params = cfg.mss_params_for(reg, sys.dim(), sys.p_max())?;
            let r = mss_run(sys, &params, &cfg.mss_config())?;
            let outcome = r.point.clone().map_or(Outcome::False, Outcome::Point);
            (outcome, r.certification.clone(), None, Some(MSSSummary::from(&r)))
        }
    };
    let solve_ms = ms(solve_start);
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        descriptor,
        regime: reg,
        n: sys.n(),
        algorithm: alg,
        outcome,
        certified: certification.as_ref().is_some_and(|c| c.certified),
        certification,
        hd,
        mss,
        parameters: cfg.clone(),
        warnings,
        timings: Timings { sample_ms, solve_ms, total_ms: ms(start) },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_examples() {
        assert_eq!(regime(50, 3, 0.1, 1.0), Regime::L1);
        assert_eq!(theorem_n(50, 1.0).unwrap(), (50.0 - (50.0 * 50f64.ln()).sqrt()).floor() as usize);
        assert_eq!(regime(2, 16, 0.1, 1.0), Regime::L3);
        assert_eq!(regime(3, 2, 0.01, 1.0), Regime::L2);
        assert_eq!(regime(2, 4, 0.01, 1.0), Regime::L4);
    }

    #[test]
    fn large_degree_u_formulas() {
        let cfg = SolverConfig::default();
        let (u1, u2, u3) = cfg.mss_u(Regime::L3, 2, 16);
        assert!((u1 - (1.0 + (6f64.ln() / 2.0 + 16f64.ln()).sqrt())).abs() < 1e-12);
        assert!((u2 - 1.0 / (256.0 * 3.0)).abs() < 1e-15);
        assert!((u3 - 256.0 * (2.0 * 16f64.ln() + 1.0) / 3.0).abs() < 1e-9);
        assert_eq!(cfg.mss_u(Regime::L2, 3, 2), (2.0, 0.25, 1e3));
    }

    #[test]
    fn delta_validated() {
        let cfg = SolverConfig { delta: 0.3, ..Default::default() };
        assert!(solve_generated(3, 2, 1, &cfg).is_err());
    }

    #[test]
    fn given_system_shape_rules() {
        let cfg = SolverConfig::default();
        let square = PolynomialSystem::sample(3, &[2, 2, 2], 1).unwrap();
        assert!(matches!(solve_given(&square, None, 0, &cfg), Err(Error::IncompatibleSystem(_))));
        let under = PolynomialSystem::sample(4, &[2, 2], 1).unwrap();
        let mss = SolverConfig { mode: Mode::Mss, ..Default::default() };
        assert!(matches!(solve_given(&under, None, 0, &mss), Err(Error::IncompatibleSystem(_))));
        let rep = solve_given(&under, None, 0, &cfg).unwrap();
        assert_eq!(rep.regime, Regime::L1);
        assert!(rep.warnings.is_empty());
        // C e^{−4} ≈ 0.018 ≥ 0.01: finite regime, HD anyway with a warning.
        let strict = SolverConfig { delta: 0.01, ..Default::default() };
        let rep = solve_given(&under, None, 0, &strict).unwrap();
        assert_eq!(rep.regime, Regime::L2);
        assert_eq!(rep.algorithm, Algorithm::HessianDescent);
        assert_eq!(rep.warnings.len(), 1);
    }

    #[test]
    fn small_square_goes_to_mss() {
        let rep = solve_generated(2, 3, 5, &SolverConfig::default()).unwrap();
        assert_eq!(rep.algorithm, Algorithm::MultiScaleSearch);
        assert_eq!(rep.n, 1);
        // Odd degree on the circle: a root always exists.
        assert!(matches!(rep.outcome, Outcome::Point(_)));
        assert!(rep.certified);
    }
}
