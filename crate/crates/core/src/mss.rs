//! Multi-Scale Search: depth-first subdivision of `[−1, 1]^d` into dyadic
//! blocks, pruning every block whose projected center point is provably too far
//! from a root, and testing conditioning at the finest level.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::newton::{certify, CertConfig, CertReport};
use crate::polysys::{tangent_basis, PolynomialSystem, SpherePoint};
use crate::spectral::s_min;

/// Finest level for which block corners stay exact in `f64`.
pub const MAX_LEVEL: u32 = 52;

/// Smallest `S` or terminal threshold `D·L` accepted.
pub const PARAM_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MSSParams {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub k0: u32,
    pub kappa: f64,
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub delta: f64,
    pub c0: f64,
}

impl MSSParams {
    /// Visit budget `(k0 + 2) 2^d u3 (u1 C0 p √(d ln p))^{d−1}`, saturating.
    pub fn visit_budget(&self, d: usize, p_max: u32) -> u64 {
        let p = p_max as f64;
        let df = d as f64;
        let log_b = ((self.k0 + 2) as f64).ln()
            + df * std::f64::consts::LN_2
            + self.u3.ln()
            + (df - 1.0) * (self.u1 * self.c0 * p * (df * p.ln()).sqrt()).ln();
        if log_b >= (u64::MAX as f64).ln() {
            u64::MAX
        } else {
            log_b.exp().ceil() as u64
        }
    }
}

/// Evaluates the level, Lipschitz, conditioning and squaring parameters in log space.
pub fn mss_params(d: usize, p_max: u32, u1: f64, u2: f64, u3: f64, delta: f64, c0: f64) -> Result<MSSParams> {
    if d < 2 {
        return Err(Error::InvalidParameter("multi-scale search needs d ≥ 2".into()));
    }
    if p_max < 2 {
        return Err(Error::InvalidDegree(p_max));
    }
    if !(u2 > 0.0 && u2 <= 1.0 && u1 >= 1.0 && u1.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 0 < u2 ≤ 1 ≤ u1, got u1 = {u1}, u2 = {u2}")));
    }
    if !(u3 > 0.0) {
        return Err(Error::InvalidParameter(format!("u3 must be positive, got {u3}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::InvalidParameter(format!("C0 must be positive, got {c0}")));
    }
    let df = d as f64;
    let lp = (p_max as f64).ln();
    let llp = lp.ln();

    let log_k0_arg = 2.0 * u1.ln() - delta.ln() - u2.ln() + c0.ln() + (df / 2.0 + 3.0) * lp + 4.5 * df.ln() + llp;
    let k0 = (log_k0_arg / std::f64::consts::LN_2).ceil().max(0.0);
    if k0 > MAX_LEVEL as f64 {
        return Err(Error::ParametersOutOfRange(format!("finest level k0 = {k0} exceeds {MAX_LEVEL}")));
    }
    let k0 = k0 as u32;

    let l = u1 * c0 * (p_max as f64) * (df * lp).sqrt();
    let log_s = -std::f64::consts::LN_2 + 0.5 * u2.ln() - 1.5 * df.ln() - df / 4.0 * lp;
    let s = log_s.exp();
    let log_kappa =
        (16.0f64).ln() + u1.ln() - u2.ln() + c0.ln() + 3.5 * df.ln() + df.ln().ln() + (df / 2.0 + 1.0) * lp + 0.5 * llp;
    let kappa = log_kappa.exp().max(1.0);

    let log_terminal = 0.5 * df.ln() - k0 as f64 * std::f64::consts::LN_2 + l.ln();
    if log_s < PARAM_FLOOR.ln() || log_terminal < PARAM_FLOOR.ln() {
        return Err(Error::ParametersOutOfRange("S or the terminal threshold underflows".into()));
    }
    if !kappa.is_finite() {
        return Err(Error::ParametersOutOfRange("kappa overflows".into()));
    }
    Ok(MSSParams { l, s, k0, kappa, u1, u2, u3, delta, c0 })
}

/// `corner + [0, 2^{−k}]^d`; level `−1` is the root block `[−1, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBlock {
    pub level: i32,
    pub corner: Vec<f64>,
}

impl GridBlock {
    pub fn root(d: usize) -> Self {
        Self { level: -1, corner: vec![-1.0; d] }
    }

    pub fn side(&self) -> f64 {
        2f64.powi(-self.level)
    }

    /// The `2^d` children in lexicographic order of their `{0,1}^d` offsets.
    pub fn children(&self) -> impl Iterator<Item = GridBlock> + '_ {
        let d = self.corner.len();
        let h = self.side() / 2.0;
        (0..1usize << d).map(move |bits| {
            let corner = (0..d)
                .map(|i| if bits >> (d - 1 - i) & 1 == 1 { self.corner[i] + h } else { self.corner[i] })
                .collect();
            GridBlock { level: self.level + 1, corner }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockGeometry {
    pub intersects_sphere: bool,
    pub nearest_corner: Vec<f64>,
    pub farthest_corner: Vec<f64>,
    /// `x̃ / ‖x̃‖`, or the farthest-corner direction when `x̃ = 0`.
    pub projected: Option<SpherePoint>,
    pub diameter: f64,
}

pub fn block_geometry(b: &GridBlock) -> BlockGeometry {
    let h = b.side();
    let d = b.corner.len();
    let mut near = Vec::with_capacity(d);
    let mut far = Vec::with_capacity(d);
    for &a in &b.corner {
        let e = a + h;
        if a < 0.0 && e > 0.0 {
            near.push(0.0);
        } else {
            near.push(if e.abs() < a.abs() { e } else { a });
        }
        far.push(if e.abs() > a.abs() { e } else { a });
    }
    let sq = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>();
    let (n2, f2) = (sq(&near), sq(&far));
    let intersects = n2 <= 1.0 && 1.0 <= f2;
    let dir = if n2 > 0.0 { &near } else { &far };
    let projected =
        if intersects { SpherePoint::normalize(nalgebra::DVector::from_column_slice(dir)).ok() } else { None };
    BlockGeometry {
        intersects_sphere: intersects,
        nearest_corner: near,
        farthest_corner: far,
        projected,
        diameter: (d as f64).sqrt() * h,
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MSSConfig {
    /// Split the level-0 subtrees across the rayon pool.
    pub parallel: bool,
    /// Overrides the `u3`-derived visit budget.
    pub visit_budget: Option<u64>,
    /// Apply the `u3`-derived budget when no override is given.
    pub use_u3_budget: bool,
    pub cert: CertConfig,
}

impl Default for MSSConfig {
    fn default() -> Self {
        Self { parallel: false, visit_budget: None, use_u3_budget: true, cert: CertConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitStats {
    pub blocks_visited: u64,
    pub blocks_outside: u64,
    pub blocks_pruned: u64,
    pub terminal_checks: u64,
    /// Terminal blocks that passed the residual test but failed `s_min ≥ S`.
    pub terminal_rejected_conditioning: u64,
}

impl VisitStats {
    fn add(&mut self, o: &VisitStats) {
        self.blocks_visited += o.blocks_visited;
        self.blocks_outside += o.blocks_outside;
        self.blocks_pruned += o.blocks_pruned;
        self.terminal_checks += o.terminal_checks;
        self.terminal_rejected_conditioning += o.terminal_rejected_conditioning;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MSSResult {
    pub point: Option<Vec<f64>>,
    pub params: MSSParams,
    pub stats: VisitStats,
    pub visit_budget: Option<u64>,
    pub budget_exhausted: bool,
    /// `s_min` estimate at the returned point.
    pub s_min_at_point: Option<f64>,
    pub certification: Option<CertReport>,
}

struct Search<'a> {
    sys: &'a PolynomialSystem,
    params: &'a MSSParams,
    budget: Option<u64>,
    stats: VisitStats,
}

enum Found {
    Point(SpherePoint, f64),
    Exhausted,
    None,
}

impl Search<'_> {
    /// DFS from `start`; the first block passing the terminal test wins.
    fn run(&mut self, start: GridBlock) -> Result<Found> {
        let k0 = self.params.k0 as i32;
        let mut stack = vec![start];
        while let Some(block) = stack.pop() {
            if self.budget.is_some_and(|b| self.stats.blocks_visited >= b) {
                return Ok(Found::Exhausted);
            }
            self.stats.blocks_visited += 1;
            let geo = block_geometry(&block);
            let Some(xh) = geo.projected else {
                self.stats.blocks_outside += 1;
                continue;
            };
            let resid = self.sys.evaluate(xh.as_slice())?.norm();
            let within = resid <= geo.diameter * self.params.l;
            if block.level < k0 {
                if !within {
                    self.stats.blocks_pruned += 1;
                    continue;
                }
                let children: Vec<_> = block.children().collect();
                stack.extend(children.into_iter().rev());
                continue;
            }
            self.stats.terminal_checks += 1;
            if !within {
                continue;
            }
            let m = self.sys.jacobian(xh.as_slice())? * tangent_basis(&xh).into_inner();
            let sm = s_min(&m, self.params.kappa)?;
            if sm >= self.params.s {
                return Ok(Found::Point(xh, sm));
            }
            self.stats.terminal_rejected_conditioning += 1;
        }
        Ok(Found::None)
    }
}

/// Runs the search; `FALSE` (no point) is a legal outcome.
pub fn mss_run(sys: &PolynomialSystem, params: &MSSParams, cfg: &MSSConfig) -> Result<MSSResult> {
    let d = sys.dim();
    if d < 2 || sys.n() != d - 1 {
        return Err(Error::IncompatibleSystem(format!(
            "multi-scale search needs n = d − 1, got n = {}, d = {d}",
            sys.n()
        )));
    }
    let budget = cfg.visit_budget.or(cfg.use_u3_budget.then(|| params.visit_budget(d, sys.p_max())));
    let mut stats = VisitStats::default();
    let mut exhausted = false;
    let mut found = None;

    if cfg.parallel {
        // Root block by hand, then one independent search per level-0 child;
        // the visit budget applies to each subtree separately.
        let root = GridBlock::root(d);
        let geo = block_geometry(&root);
        let xh = geo.projected.ok_or(Error::ZeroVector)?;
        let resid = sys.evaluate(xh.as_slice())?.norm();
        stats.blocks_visited = 1;
        if resid > geo.diameter * params.l {
            stats.blocks_pruned += 1;
        } else {
            let subtrees: Vec<GridBlock> = root.children().collect();
            let results: Vec<Result<(Found, VisitStats)>> = subtrees
                .into_par_iter()
                .map(|b| {
                    let mut s = Search { sys, params, budget, stats: VisitStats::default() };
                    let f = s.run(b)?;
                    Ok((f, s.stats))
                })
                .collect();
            for r in results {
                let (f, s) = r?;
                stats.add(&s);
                match f {
                    Found::Point(p, sm) if found.is_none() => found = Some((p, sm)),
                    Found::Exhausted if found.is_none() => exhausted = true,
                    _ => {}
                }
            }
            if found.is_some() {
                exhausted = false;
            }
        }
    } else {
        let mut search = Search { sys, params, budget, stats: VisitStats::default() };
        match search.run(GridBlock::root(d))? {
            Found::Point(p, sm) => found = Some((p, sm)),
            Found::Exhausted => exhausted = true,
            Found::None => {}
        }
        stats = search.stats;
    }

    let (point, s_min_at_point, certification) = match found {
        Some((p, sm)) => {
            let rep = certify(sys, &p, &cfg.cert)?;
            (Some(p.as_slice().to_vec()), Some(sm), Some(rep))
        }
        None => (None, None, None),
    };
    Ok(MSSResult {
        point,
        params: *params,
        stats,
        visit_budget: budget,
        budget_exhausted: exhausted,
        s_min_at_point,
        certification,
    })
}
