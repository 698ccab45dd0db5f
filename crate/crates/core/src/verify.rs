//! Brute-force oracles and Monte Carlo checks, independent of the solvers.
//!
//! Root-set oracles work at desk scale only (`d ≤ 3`) and refuse larger
//! inputs. Dense decompositions here are nalgebra's, not the crate's own Jacobi
//! SVD, so they can serve as references for it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polysys::{tangent_basis, MultiIndex, PolynomialSystem, SpherePoint};

/// Largest matrix side accepted by the dense oracles.
pub const MAX_ORACLE_SIZE: usize = 200;

/// `‖F‖` a polished root must reach.
pub const ORACLE_ROOT_TOL: f64 = 1e-10;

/// Per-item seed derived from a master seed (SplitMix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    AngleScan,
    SphereScan,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OracleRootSet {
    pub roots: Vec<Vec<f64>>,
    pub method: OracleMethod,
    /// Grid spacing in radians.
    pub resolution: f64,
    /// Smallest angular gap between consecutive roots (circle scan only).
    pub min_gap: Option<f64>,
    /// Distinct roots closer than the grid spacing: the scan may be too coarse.
    pub clustered: bool,
    /// Candidates whose polishing did not reach [`ORACLE_ROOT_TOL`].
    pub polish_failures: usize,
}

impl OracleRootSet {
    pub fn has_root(&self) -> bool {
        !self.roots.is_empty()
    }
}

fn circle_value(sys: &PolynomialSystem, t: f64) -> f64 {
    sys.polys()[0].eval(&[t.cos(), t.sin()])
}

/// All roots of a single equation on the circle, by sign changes of
/// `θ ↦ F(cos θ, sin θ)` on a uniform grid and bisection to `1e-13`.
pub fn circle_roots(sys: &PolynomialSystem, grid_size: usize) -> Result<OracleRootSet> {
    if sys.dim() != 2 || sys.n() != 1 {
        return Err(Error::OracleRefused("angle scan needs d = 2, n = 1".into()));
    }
    if grid_size < 8 {
        return Err(Error::OracleRefused("grid too coarse".into()));
    }
    let h = 2.0 * PI / grid_size as f64;
    let mut angles = Vec::new();
    let mut prev = circle_value(sys, 0.0);
    for j in 0..grid_size {
        let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
        let next = circle_value(sys, b);
        if prev == 0.0 {
            angles.push(a);
        } else if prev.signum() != next.signum() && next != 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, prev);
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                let fm = circle_value(sys, mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            angles.push(0.5 * (lo + hi));
        }
        prev = next;
    }
    // Dedupe, including across the 0 / 2π seam.
    angles.sort_by(f64::total_cmp);
    let mut uniq: Vec<f64> = Vec::new();
    for a in angles {
        if uniq.last().is_none_or(|&u| a - u > 1e-9) {
            uniq.push(a);
        }
    }
    if uniq.len() > 1 && uniq[0] + 2.0 * PI - uniq[uniq.len() - 1] <= 1e-9 {
        uniq.pop();
    }
    let min_gap = (uniq.len() > 1).then(|| {
        let mut g = uniq[0] + 2.0 * PI - uniq[uniq.len() - 1];
        for w in uniq.windows(2) {
            g = g.min(w[1] - w[0]);
        }
        g
    });
    Ok(OracleRootSet {
        roots: uniq.iter().map(|t| vec![t.cos(), t.sin()]).collect(),
        method: OracleMethod::AngleScan,
        resolution: h,
        clustered: min_gap.is_some_and(|g| g < h),
        min_gap,
        polish_failures: 0,
    })
}

fn sphere_point(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Newton on `(F_1, F_2, ½(‖x‖² − 1))` in `R^3`, dense LU.
fn polish3(sys: &PolynomialSystem, start: [f64; 3]) -> Option<[f64; 3]> {
    let mut x = Vector3::from(start);
    for _ in 0..60 {
        let (f, j) = sys.evaluate_with_jacobian(x.as_slice()).ok()?;
        let g = Vector3::new(f[0], f[1], 0.5 * (x.norm_squared() - 1.0));
        #[rustfmt::skip]
        let jm = Matrix3::new(
            j[(0, 0)], j[(0, 1)], j[(0, 2)],
            j[(1, 0)], j[(1, 1)], j[(1, 2)],
            x[0], x[1], x[2],
        );
        let step = jm.lu().solve(&(-g))?;
        x += step;
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        if step.norm() < 1e-15 {
            break;
        }
    }
    let x = x / x.norm();
    let r = sys.evaluate(x.as_slice()).ok()?.norm();
    (r <= ORACLE_ROOT_TOL).then(|| [x[0], x[1], x[2]])
}

/// Roots of a `d = 3, n = 2` system: latitude–longitude scan of `‖F‖`,
/// Newton polishing of every local minimum, deduplication.
pub fn sphere_scan_roots(sys: &PolynomialSystem, resolution: usize) -> Result<OracleRootSet> {
    if sys.dim() != 3 || sys.n() != 2 {
        return Err(Error::OracleRefused("sphere scan needs d = 3, n = 2".into()));
    }
    if !(8..=4000).contains(&resolution) {
        return Err(Error::OracleRefused("resolution must lie in 8..=4000".into()));
    }
    let (nt, np) = (resolution, 2 * resolution);
    let (ht, hp) = (PI / nt as f64, 2.0 * PI / np as f64);
    let mut vals = vec![0.0; nt * np];
    for i in 0..nt {
        for j in 0..np {
            let x = sphere_point((i as f64 + 0.5) * ht, j as f64 * hp);
            vals[i * np + j] = sys.evaluate(&x)?.norm();
        }
    }
    let mut roots: Vec<[f64; 3]> = Vec::new();
    let mut failures = 0;
    let mut clustered = false;
    for i in 0..nt {
        for j in 0..np {
            let v = vals[i * np + j];
            let mut is_min = true;
            'nb: for di in -1i64..=1 {
                let ii = i as i64 + di;
                if ii < 0 || ii >= nt as i64 {
                    continue;
                }
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let jj = (j as i64 + dj).rem_euclid(np as i64) as usize;
                    if vals[ii as usize * np + jj] < v {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if !is_min {
                continue;
            }
            match polish3(sys, sphere_point((i as f64 + 0.5) * ht, j as f64 * hp)) {
                Some(r) => {
                    let dist =
                        |a: &[f64; 3]| ((a[0] - r[0]).powi(2) + (a[1] - r[1]).powi(2) + (a[2] - r[2]).powi(2)).sqrt();
                    let nearest = roots.iter().map(dist).fold(f64::INFINITY, f64::min);
                    if nearest > 1e-8 {
                        clustered |= nearest < ht;
                        roots.push(r);
                    }
                }
                None => failures += 1,
            }
        }
    }
    Ok(OracleRootSet {
        roots: roots.into_iter().map(|r| r.to_vec()).collect(),
        method: OracleMethod::SphereScan,
        resolution: ht,
        min_gap: None,
        clustered,
        polish_failures: failures,
    })
}

fn check_oracle_matrix(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() > MAX_ORACLE_SIZE || a.ncols() > MAX_ORACLE_SIZE {
        return Err(Error::OracleRefused(format!("matrix larger than {MAX_ORACLE_SIZE}")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("oracle matrix"));
    }
    Ok(())
}

/// Eigenvalues ascending with matching eigenvector columns.
pub fn dense_symmetric_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_oracle_matrix(m)?;
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vecs = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    Ok((vals, vecs))
}

/// Singular triplets `(U, s descending, V)` with `A = U diag(s) Vᵀ`.
pub fn dense_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    check_oracle_matrix(a)?;
    let svd = a.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s = DVector::from_iterator(order.len(), order.iter().map(|&i| svd.singular_values[i]));
    let uu = DMatrix::from_columns(&order.iter().map(|&i| u.column(i)).collect::<Vec<_>>());
    let vv = DMatrix::from_columns(&order.iter().map(|&i| vt.row(i).transpose()).collect::<Vec<_>>());
    Ok((uu, s, vv))
}

/// Smallest eigenvalue of the restricted Hessian `U_xᵀ ∇²H U_x`.
pub fn restricted_lambda_min(sys: &PolynomialSystem, x: &SpherePoint) -> Result<f64> {
    let (vals, _) = dense_symmetric_eigen(&sys.restricted_hessian(x)?)?;
    Ok(vals[0])
}

/// `E|χ_k| = √2 Γ((k+1)/2) / Γ(k/2)`, from `r_k r_{k+1} = k/2`, `r_1 = 1/√π`.
pub fn chi_mean(k: usize) -> f64 {
    assert!(k >= 1);
    let mut r = 1.0 / PI.sqrt();
    for j in 1..k {
        r = j as f64 / 2.0 / r;
    }
    std::f64::consts::SQRT_2 * r
}

/// `Vol(S^{d−1}) = 2π^{d/2} / Γ(d/2)`.
pub fn sphere_volume(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    // Γ(d/2) by recursion from Γ(1) or Γ(1/2).
    let (mut g, mut x) = if d.is_multiple_of(2) { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while x < half {
        g *= x;
        x += 1.0;
    }
    2.0 * PI.powf(half) / g
}

/// Expected number of real roots on `S^{d−1}` of a square (`n = d − 1`)
/// Gaussian system, evaluated directly:
/// `Vol(S^{d−1}) (2π)^{−n/2} Π √p_i · E|det Z_{n×n}|`, which simplifies to `2 √(Π p_i)`.
pub fn kac_rice_expected_roots(d: usize, degrees: &[u32]) -> Result<f64> {
    if d < 2 || degrees.len() != d - 1 {
        return Err(Error::InvalidParameter("expected count needs n = d − 1 ≥ 1".into()));
    }
    let n = d - 1;
    let e_det: f64 = (1..=n).map(chi_mean).product();
    let prod_sqrt_p: f64 = degrees.iter().map(|&p| (p as f64).sqrt()).product();
    Ok(sphere_volume(d) * (2.0 * PI).powf(-(n as f64) / 2.0) * prod_sqrt_p * e_det)
}

/// Bézout-style value `Π p_i`, recorded beside the direct evaluation for comparison.
pub fn bezout_number(degrees: &[u32]) -> f64 {
    degrees.iter().map(|&p| p as f64).product()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RootCountStats {
    pub d: usize,
    pub degrees: Vec<u32>,
    pub trials: usize,
    pub mean: f64,
    pub std_err: f64,
    pub kac_rice: f64,
    pub bezout: f64,
    /// Trials whose scan reported clustered roots.
    pub clustered_trials: usize,
}

/// Mean circle-root count over `trials` seeded `d = 2, n = 1` systems.
pub fn circle_root_count_stats(p: u32, trials: usize, seed: u64, grid_size: usize) -> Result<RootCountStats> {
    if trials < 2 {
        return Err(Error::InvalidParameter("need at least 2 trials".into()));
    }
    let counts: Vec<Result<(usize, bool)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let sys = PolynomialSystem::sample(2, &[p], derive_seed(seed, t))?;
            let set = circle_roots(&sys, grid_size)?;
            Ok((set.roots.len(), set.clustered))
        })
        .collect();
    let mut xs = Vec::with_capacity(trials);
    let mut clustered = 0;
    for c in counts {
        let (k, cl) = c?;
        xs.push(k as f64);
        clustered += cl as usize;
    }
    let (mean, se) = mean_and_se(&xs);
    Ok(RootCountStats {
        d: 2,
        degrees: vec![p],
        trials,
        mean,
        std_err: se,
        kac_rice: kac_rice_expected_roots(2, &[p])?,
        bezout: p as f64,
        clustered_trials: clustered,
    })
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub const MIN_SAMPLES: usize = 100;
const CHUNK: usize = 10_000;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CovarianceEntry {
    pub overlap: f64,
    pub target: f64,
    pub mean: f64,
    pub std_err: f64,
    /// Empirical `E[F_1(x¹) F_2(x²)]` for an independent second polynomial (target 0).
    pub cross_mean: f64,
    pub cross_std_err: f64,
}

impl CovarianceEntry {
    pub fn within(&self, k_se: f64) -> bool {
        (self.mean - self.target).abs() <= k_se * self.std_err && self.cross_mean.abs() <= k_se * self.cross_std_err
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CovarianceReport {
    pub d: usize,
    pub p: u32,
    pub samples: usize,
    pub entries: Vec<CovarianceEntry>,
}

/// Draws fresh systems `(F_1, F_2)` of degree `p` and compares
/// `E[F_1(x¹) F_1(x²)]` to `⟨x¹, x²⟩^p` at each requested overlap.
pub fn mc_covariance(d: usize, p: u32, overlaps: &[f64], samples: usize, seed: u64) -> Result<CovarianceReport> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_SAMPLES} samples")));
    }
    if d < 2 {
        return Err(Error::InvalidParameter("covariance check needs d ≥ 2".into()));
    }
    if overlaps.iter().any(|t| !(-1.0..=1.0).contains(t)) {
        return Err(Error::InvalidParameter("overlaps must lie in [−1, 1]".into()));
    }
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = overlaps
        .iter()
        .map(|&t| {
            let mut a = vec![0.0; d];
            let mut b = vec![0.0; d];
            a[0] = 1.0;
            b[0] = t;
            b[1] = (1.0 - t * t).max(0.0).sqrt();
            (a, b)
        })
        .collect();
    let template = PolynomialSystem::zeros(d, &[p, p])?;
    let chunks = samples.div_ceil(CHUNK);
    // Per chunk: for each overlap, sums of (same, same², cross, cross²).
    let partial: Vec<Result<Vec<[f64; 4]>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, c as u64));
            let mut sys = template.clone();
            let mut acc = vec![[0.0; 4]; pairs.len()];
            let count = CHUNK.min(samples - c * CHUNK);
            for _ in 0..count {
                sys.resample(&mut rng);
                for (k, (a, b)) in pairs.iter().enumerate() {
                    let fa = sys.evaluate(a)?;
                    let fb = sys.evaluate(b)?;
                    let same = fa[0] * fb[0];
                    let cross = fa[0] * fb[1];
                    acc[k][0] += same;
                    acc[k][1] += same * same;
                    acc[k][2] += cross;
                    acc[k][3] += cross * cross;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut tot = vec![[0.0; 4]; pairs.len()];
    for part in partial {
        for (t, a) in tot.iter_mut().zip(part?) {
            for i in 0..4 {
                t[i] += a[i];
            }
        }
    }
    let n = samples as f64;
    let se = |s: f64, s2: f64| ((s2 / n - (s / n).powi(2)).max(0.0) / (n - 1.0)).sqrt();
    let entries = overlaps
        .iter()
        .zip(&tot)
        .map(|(&t, a)| CovarianceEntry {
            overlap: t,
            target: t.powi(p as i32),
            mean: a[0] / n,
            std_err: se(a[0], a[1]),
            cross_mean: a[2] / n,
            cross_std_err: se(a[2], a[3]),
        })
        .collect();
    Ok(CovarianceReport { d, p, samples, entries })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LipschitzReport {
    pub samples: usize,
    /// Sampled `sup ‖F(x)‖` on the sphere.
    pub sup_f: f64,
    /// Sampled `sup ‖DF(x)‖_op`; by homogeneity also bounds `F`'s Lipschitz constant on the ball.
    pub sup_df_op: f64,
    /// Max of `‖F(x) − F(y)‖ / ‖x − y‖` over sampled nearby pairs.
    pub lip_f: f64,
    /// Max of `‖DF(x) − DF(y)‖_op / ‖x − y‖` over sampled nearby pairs.
    pub lip_df: f64,
}

fn op_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// Sampled lower bounds on the sup-norms and Lipschitz constants of `F` and `DF`.
pub fn mc_lipschitz(sys: &PolynomialSystem, samples: usize, seed: u64) -> Result<LipschitzReport> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_SAMPLES} samples")));
    }
    let d = sys.dim();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rep = LipschitzReport { samples, sup_f: 0.0, sup_df_op: 0.0, lip_f: 0.0, lip_df: 0.0 };
    for _ in 0..samples {
        let x = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
        let x = &x / x.norm();
        let e = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal)) * 1e-3;
        let y = &x + e;
        let y = &y / y.norm();
        let (fx, jx) = sys.evaluate_with_jacobian(x.as_slice())?;
        let (fy, jy) = sys.evaluate_with_jacobian(y.as_slice())?;
        let dist = (&x - &y).norm();
        rep.sup_f = rep.sup_f.max(fx.norm());
        rep.sup_df_op = rep.sup_df_op.max(op_norm(&jx));
        if dist > 0.0 {
            rep.lip_f = rep.lip_f.max((fx - fy).norm() / dist);
            rep.lip_df = rep.lip_df.max(op_norm(&(jx - jy)) / dist);
        }
    }
    Ok(rep)
}

/// Statistic and 1%-level decision of the two-sample Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub reject: bool,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut dmax) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        dmax = dmax.max((i as f64 / n - j as f64 / m).abs());
    }
    let critical = 1.628 * ((n + m) / (n * m)).sqrt();
    Ok(KsResult { statistic: dmax, critical, reject: dmax > critical })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TangentLawReport {
    pub samples: usize,
    /// Per equation: `(p_i, empirical variance of the entries of row i of DF·U_x, its standard error)`.
    pub rows: Vec<(u32, f64, f64)>,
    /// Largest `|E[entry]|` in units of its standard error.
    pub max_mean_z: f64,
}

/// Law of `DF(x)·U_x` at a fixed `x` over fresh systems: entries of row `i`
/// should be independent `N(0, p_i)`.
pub fn tangent_jacobian_law(
    d: usize,
    degrees: &[u32],
    x: &SpherePoint,
    samples: usize,
    seed: u64,
) -> Result<TangentLawReport> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_SAMPLES} samples")));
    }
    let mut sys = PolynomialSystem::zeros(d, degrees)?;
    let u = tangent_basis(x).into_inner();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = degrees.len();
    let mut s1 = DMatrix::<f64>::zeros(n, d - 1);
    let mut s2 = DMatrix::<f64>::zeros(n, d - 1);
    for _ in 0..samples {
        sys.resample(&mut rng);
        let m = sys.jacobian(x.as_slice())? * &u;
        s1 += &m;
        s2 += m.map(|v| v * v);
    }
    let ns = samples as f64;
    let mut rows = Vec::new();
    let mut max_mean_z: f64 = 0.0;
    for i in 0..n {
        let mut var_sum = 0.0;
        for j in 0..d - 1 {
            let mean = s1[(i, j)] / ns;
            let var = s2[(i, j)] / ns - mean * mean;
            max_mean_z = max_mean_z.max(mean.abs() / (var / ns).sqrt());
            var_sum += var;
        }
        let k = (d - 1) as f64;
        let avg = var_sum / k;
        // Standard error of a Gaussian variance estimate: σ² √(2/(N−1)), pooled over k entries.
        let se = avg * (2.0 / (ns - 1.0)).sqrt() / k.sqrt();
        rows.push((degrees[i], avg, se));
    }
    Ok(TangentLawReport { samples, rows, max_mean_z })
}

/// A system with strictly positive values on the sphere: positive coefficients
/// on all-even-exponent monomials only (each including the pure powers).
pub fn positive_even_system(d: usize, degrees: &[u32], seed: u64) -> Result<PolynomialSystem> {
    if degrees.iter().any(|p| p % 2 != 0) {
        return Err(Error::InvalidParameter("positive system needs even degrees".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let sys = PolynomialSystem::zeros(d, degrees)?;
    let terms: Vec<Vec<(Vec<u32>, f64)>> = sys
        .polys()
        .iter()
        .map(|poly| {
            poly.terms()
                .filter(|(k, _)| k.exponents().iter().all(|e| e % 2 == 0))
                .map(|(k, _)| {
                    let g: f64 = rng.sample(StandardNormal);
                    (k.exponents().to_vec(), 0.1 + g.abs())
                })
                .collect()
        })
        .collect();
    PolynomialSystem::from_terms(d, degrees, &terms)
}

/// A seeded system with `F(e_d) = 0`: the coefficient of `x_d^{p_i}` is zeroed in every equation.
pub fn planted_root_system(d: usize, degrees: &[u32], seed: u64) -> Result<PolynomialSystem> {
    let sys = PolynomialSystem::sample(d, degrees, seed)?;
    let terms: Vec<Vec<(Vec<u32>, f64)>> = sys
        .polys()
        .iter()
        .map(|poly| {
            let pure = {
                let mut e = vec![0; d];
                e[d - 1] = poly.degree();
                MultiIndex::new(e).expect("valid exponent vector")
            };
            poly.terms().filter(|(k, _)| *k != pure).map(|(k, c)| (k.exponents().to_vec(), c)).collect()
        })
        .collect();
    PolynomialSystem::from_terms(d, degrees, &terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_examples() {
        let xy = PolynomialSystem::from_terms(2, &[2], &[vec![(vec![1, 1], 1.0)]]).unwrap();
        let set = circle_roots(&xy, 1000).unwrap();
        assert_eq!(set.roots.len(), 4);
        for r in &set.roots {
            assert!(r.iter().filter(|v| v.abs() < 1e-12).count() == 1, "{r:?}");
        }
        let pos = PolynomialSystem::from_terms(2, &[2], &[vec![(vec![2, 0], 1.0), (vec![0, 2], 1.0)]]).unwrap();
        assert!(circle_roots(&pos, 1000).unwrap().roots.is_empty());
        let bad = PolynomialSystem::sample(3, &[2], 1).unwrap();
        assert!(matches!(circle_roots(&bad, 100), Err(Error::OracleRefused(_))));
    }

    #[test]
    fn odd_degree_counts_are_even() {
        for s in 0..30 {
            let sys = PolynomialSystem::sample(2, &[3], s).unwrap();
            assert_eq!(circle_roots(&sys, 20_000).unwrap().roots.len() % 2, 0);
        }
    }

    #[test]
    fn kac_rice_closed_form() {
        for p in [2u32, 3, 5] {
            assert!((kac_rice_expected_roots(2, &[p]).unwrap() - 2.0 * (p as f64).sqrt()).abs() < 1e-12);
        }
        let v = kac_rice_expected_roots(4, &[2, 3, 4]).unwrap();
        assert!((v - 2.0 * 24f64.sqrt()).abs() < 1e-10);
        assert!((sphere_volume(3) - 4.0 * PI).abs() < 1e-12);
        assert!((chi_mean(1) - (2.0 / PI).sqrt()).abs() < 1e-15);
        assert!((chi_mean(2) - (PI / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn planted_and_positive_systems() {
        let sys = planted_root_system(3, &[2, 3], 5).unwrap();
        assert_eq!(sys.evaluate(&[0.0, 0.0, 1.0]).unwrap().norm(), 0.0);
        let set = sphere_scan_roots(&sys, 60).unwrap();
        assert!(set.roots.iter().any(|r| (r[2].abs() - 1.0).abs() < 1e-9));

        let pos = positive_even_system(3, &[2, 4], 2).unwrap();
        assert!(sphere_scan_roots(&pos, 60).unwrap().roots.is_empty());
        assert!(positive_even_system(3, &[2, 3], 2).is_err());
    }

    #[test]
    fn dense_oracles() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 2.0]));
        let (vals, _) = dense_symmetric_eigen(&m).unwrap();
        assert_eq!(vals.as_slice(), &[-1.0, 2.0, 3.0]);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = DMatrix::from_fn(50, 60, |_, _| rng.sample::<f64, _>(StandardNormal));
        let (u, s, v) = dense_svd(&a).unwrap();
        assert!((&u * DMatrix::from_diagonal(&s) * v.transpose() - &a).amax() < 1e-10);
        let (ev, _) = dense_symmetric_eigen(&(&a * a.transpose())).unwrap();
        assert!((ev[49] - s[0] * s[0]).abs() < 1e-9 * s[0] * s[0]);
        assert!(dense_svd(&DMatrix::zeros(201, 2)).is_err());
    }

    #[test]
    fn covariance_small_run() {
        let rep = mc_covariance(3, 3, &[-1.0, 0.0], 4000, 3).unwrap();
        assert!(rep.entries.iter().all(|e| e.within(4.0)), "{rep:?}");
        assert_eq!(rep.entries[0].target, -1.0);
        assert!(mc_covariance(3, 3, &[0.0], 50, 3).is_err());
    }

    #[test]
    fn ks_detects_shift() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let a: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let c: Vec<f64> = b.iter().map(|v| v + 0.3).collect();
        assert!(!ks_two_sample(&a, &b).unwrap().reject);
        assert!(ks_two_sample(&a, &c).unwrap().reject);
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
