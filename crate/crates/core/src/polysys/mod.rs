//! Random homogeneous polynomial systems in the Kostlan–Shub–Smale ensemble.
//!
//! A system is `n` homogeneous polynomials `F_1, …, F_n` in `d` variables. Each
//! polynomial stores a dense vector of *scaled* coefficients, one per monomial of
//! its degree, so that `F(x) = Σ coeff[k] · x^k` in the plain monomial basis. When
//! sampled, `coeff[k] = (p! / (k_1! ⋯ k_d!))^{1/2} · a_k` with `a_k` i.i.d. standard
//! normal, which makes every `F_i` rotationally invariant in law with covariance
//! `E[F_i(x) F_i(y)] = ⟨x, y⟩^{p_i}`.
//!
//! Monomials are enumerated once per `(d, p)` in a canonical colex order and shared
//! between polynomials of equal degree. Internally a monomial is kept as its sorted
//! factor list (`x_1² x_3` is `[0, 0, 2]`), which makes evaluation and both levels
//! of derivatives a product over at most `p` factors.

mod io;
mod sphere;

pub use io::{GenerationRecord, SystemFile, RNG_ALGORITHM_ID, SCHEMA_VERSION};
pub use sphere::{tangent_basis, SpherePoint, TangentBasis, UNIT_NORM_TOL};

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Exponent tuple `(k_1, …, k_d)` of a monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidDimension);
        }
        Ok(Self { exponents })
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    fn from_factors(d: usize, factors: &[u32]) -> Self {
        let mut exponents = vec![0u32; d];
        for &f in factors {
            exponents[f as usize] += 1;
        }
        Self { exponents }
    }

    fn to_factors(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.degree() as usize);
        for (j, &k) in self.exponents.iter().enumerate() {
            out.extend(std::iter::repeat_n(j as u32, k as usize));
        }
        out
    }

    /// `p! / (k_1! ⋯ k_d!)` as a float; exact whenever it fits in 53 bits.
    pub fn multinomial(&self) -> f64 {
        let mut acc: u128 = 1;
        let mut running: u128 = 0;
        let mut exact = true;
        'outer: for &k in &self.exponents {
            for i in 1..=k as u128 {
                running += 1;
                // acc * running / i stays integral: it is a product of binomials.
                match acc.checked_mul(running) {
                    Some(v) => acc = v / i,
                    None => {
                        exact = false;
                        break 'outer;
                    }
                }
            }
        }
        if exact {
            return acc as f64;
        }
        let ln_fact = |m: u32| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
        let ln = ln_fact(self.degree()) - self.exponents.iter().map(|&k| ln_fact(k)).sum::<f64>();
        ln.exp()
    }
}

/// Number of monomials of degree `p` in `d` variables, `C(d+p-1, p)`, or `None` on overflow.
pub fn monomial_count(d: usize, p: u32) -> Option<usize> {
    // C(d+p-1, p) = Π_{i=1..p} (d-1+i)/i, each partial product is a binomial coefficient.
    let mut acc: u128 = 1;
    for i in 1..=p as u128 {
        acc = acc.checked_mul(d as u128 - 1 + i)? / i;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    usize::try_from(acc).ok()
}

/// All monomials of a fixed degree in `d` variables, in canonical colex order.
#[derive(Debug)]
pub struct MonomialTable {
    d: usize,
    degree: u32,
    factors: Vec<u32>,
    scales: Vec<f64>,
    len: usize,
}

impl MonomialTable {
    pub fn new(d: usize, degree: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension);
        }
        let overflow = || Error::CoefficientOverflow { d, degree };
        let len = monomial_count(d, degree).ok_or_else(overflow)?;
        let total = len.checked_mul(degree as usize).ok_or_else(overflow)?;
        // Refuse absurd allocations instead of aborting the process.
        if total > (isize::MAX as usize) / 8 {
            return Err(overflow());
        }
        let p = degree as usize;
        let mut factors = Vec::with_capacity(total);
        // Colex order of sorted factor lists == lex order of the reversed (non-increasing) lists.
        let mut rev = vec![0u32; p];
        fn rec(pos: usize, upper: u32, rev: &mut [u32], out: &mut Vec<u32>) {
            if pos == rev.len() {
                out.extend(rev.iter().rev());
                return;
            }
            for v in 0..=upper {
                rev[pos] = v;
                rec(pos + 1, v, rev, out);
            }
        }
        if p == 0 {
            return Ok(Self { d, degree, factors, scales: vec![1.0], len: 1 });
        }
        for top in 0..d as u32 {
            rev[0] = top;
            rec(1, top, &mut rev, &mut factors);
        }
        debug_assert_eq!(factors.len(), total);
        let scales = factors.chunks_exact(p).map(|f| MultiIndex::from_factors(d, f).multinomial().sqrt()).collect();
        Ok(Self { d, degree, factors, scales, len })
    }

    /// `(p! / (k_1! ⋯ k_d!))^{1/2}` for monomial `m`.
    pub fn scale(&self, m: usize) -> f64 {
        self.scales[m]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    #[inline]
    fn factors_of(&self, m: usize) -> &[u32] {
        let p = self.degree as usize;
        &self.factors[m * p..(m + 1) * p]
    }

    pub fn multi_index(&self, m: usize) -> MultiIndex {
        MultiIndex::from_factors(self.d, self.factors_of(m))
    }

    /// Position of a multi-index in the canonical order.
    pub fn position(&self, k: &MultiIndex) -> Option<usize> {
        if k.dim() != self.d || k.degree() != self.degree {
            return None;
        }
        let target = k.to_factors();
        // Colex order: compare from the last factor.
        let cmp = |m: usize| self.factors_of(m).iter().rev().cmp(target.iter().rev());
        let (mut lo, mut hi) = (0usize, self.len);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match cmp(mid) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }
}

/// One homogeneous polynomial with scaled monomial coefficients.
#[derive(Debug, Clone)]
pub struct HomogeneousPoly {
    table: Arc<MonomialTable>,
    coeffs: Vec<f64>,
}

impl HomogeneousPoly {
    /// Builds a polynomial from a dense coefficient vector in canonical order.
    pub fn from_dense(table: Arc<MonomialTable>, coeffs: Vec<f64>) -> Result<Self> {
        if table.degree < 2 {
            return Err(Error::InvalidDegree(table.degree));
        }
        if coeffs.len() != table.len() {
            return Err(Error::DimensionMismatch { expected: table.len(), got: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("polynomial coefficient"));
        }
        Ok(Self { table, coeffs })
    }

    /// Builds a polynomial from `(exponents, scaled coefficient)` pairs; absent monomials are zero.
    pub fn from_terms(d: usize, degree: u32, terms: &[(Vec<u32>, f64)]) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidDegree(degree));
        }
        let table = Arc::new(MonomialTable::new(d, degree)?);
        Self::from_terms_in(table, terms)
    }

    fn from_terms_in(table: Arc<MonomialTable>, terms: &[(Vec<u32>, f64)]) -> Result<Self> {
        let mut coeffs = vec![0.0; table.len()];
        let mut seen = vec![false; table.len()];
        for (exps, c) in terms {
            let k = MultiIndex::new(exps.clone())?;
            if k.dim() != table.d {
                return Err(Error::DimensionMismatch { expected: table.d, got: k.dim() });
            }
            let pos = table
                .position(&k)
                .ok_or_else(|| Error::InvalidMonomial(format!("{exps:?} does not have degree {}", table.degree)))?;
            if seen[pos] {
                return Err(Error::InvalidMonomial(format!("{exps:?} listed twice")));
            }
            seen[pos] = true;
            coeffs[pos] = *c;
        }
        Self::from_dense(table, coeffs)
    }

    pub fn degree(&self) -> u32 {
        self.table.degree
    }

    pub fn dim(&self) -> usize {
        self.table.d
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn table(&self) -> &Arc<MonomialTable> {
        &self.table
    }

    /// `(exponents, scaled coefficient)` for every monomial in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        (0..self.table.len()).map(move |m| (self.table.multi_index(m), self.coeffs[m]))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let p = self.table.degree as usize;
        let mut acc = 0.0;
        for (m, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let f = &self.table.factors[m * p..(m + 1) * p];
            let mut prod = c;
            for &j in f {
                prod *= x[j as usize];
            }
            acc += prod;
        }
        acc
    }

    /// Value and gradient; `grad` must be zeroed by the caller.
    fn eval_with_gradient(&self, x: &[f64], grad: &mut [f64], scratch: &mut Scratch) -> f64 {
        let p = self.table.degree as usize;
        scratch.ensure(p);
        let (prefix, suffix) = (&mut scratch.prefix, &mut scratch.suffix);
        let mut value = 0.0;
        for (m, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let f = &self.table.factors[m * p..(m + 1) * p];
            fill_prefix_suffix(f, x, prefix, suffix);
            value += c * prefix[p];
            for t in 0..p {
                grad[f[t] as usize] += c * prefix[t] * suffix[t + 1];
            }
        }
        value
    }

    /// Adds `weight · ∇²F` into the row-major `d×d` buffer `hess`.
    fn accumulate_hessian(&self, x: &[f64], weight: f64, hess: &mut [f64], scratch: &mut Scratch) {
        if weight == 0.0 {
            return;
        }
        let d = self.table.d;
        let p = self.table.degree as usize;
        scratch.ensure(p);
        let (prefix, suffix) = (&mut scratch.prefix, &mut scratch.suffix);
        for (m, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let f = &self.table.factors[m * p..(m + 1) * p];
            fill_prefix_suffix(f, x, prefix, suffix);
            let cw = c * weight;
            for s in 0..p {
                let left = cw * prefix[s];
                let mut mid = 1.0;
                for t in s + 1..p {
                    let term = left * mid * suffix[t + 1];
                    let (a, b) = (f[s] as usize, f[t] as usize);
                    hess[a * d + b] += term;
                    hess[b * d + a] += term;
                    mid *= x[f[t] as usize];
                }
            }
        }
    }
}

#[derive(Default)]
struct Scratch {
    prefix: Vec<f64>,
    suffix: Vec<f64>,
}

impl Scratch {
    fn ensure(&mut self, p: usize) {
        if self.prefix.len() < p + 1 {
            self.prefix.resize(p + 1, 0.0);
            self.suffix.resize(p + 1, 0.0);
        }
    }
}

#[inline]
fn fill_prefix_suffix(f: &[u32], x: &[f64], prefix: &mut [f64], suffix: &mut [f64]) {
    let p = f.len();
    prefix[0] = 1.0;
    for t in 0..p {
        prefix[t + 1] = prefix[t] * x[f[t] as usize];
    }
    suffix[p] = 1.0;
    for t in (0..p).rev() {
        suffix[t] = suffix[t + 1] * x[f[t] as usize];
    }
}

/// First and second derivatives of the energy `H = ½‖F‖²` at one point.
#[derive(Debug, Clone)]
pub struct EnergyDerivatives {
    pub values: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub energy: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// `F = (F_1, …, F_n)`, all polynomials in the same `d` variables.
#[derive(Debug, Clone)]
pub struct PolynomialSystem {
    d: usize,
    polys: Vec<HomogeneousPoly>,
}

impl PolynomialSystem {
    pub fn new(d: usize, polys: Vec<HomogeneousPoly>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension);
        }
        for p in &polys {
            if p.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
            }
        }
        Ok(Self { d, polys })
    }

    /// A system of zero polynomials with the monomial tables for `degrees` allocated.
    pub fn zeros(d: usize, degrees: &[u32]) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension);
        }
        let mut tables: HashMap<u32, Arc<MonomialTable>> = HashMap::new();
        let mut polys = Vec::with_capacity(degrees.len());
        for &p in degrees {
            if p < 2 {
                return Err(Error::InvalidDegree(p));
            }
            let table = match tables.get(&p) {
                Some(t) => t.clone(),
                None => {
                    let t = Arc::new(MonomialTable::new(d, p)?);
                    tables.insert(p, t.clone());
                    t
                }
            };
            let len = table.len();
            polys.push(HomogeneousPoly { table, coeffs: vec![0.0; len] });
        }
        Self::num_coefficients_checked(d, degrees)?;
        Ok(Self { d, polys })
    }

    fn num_coefficients_checked(d: usize, degrees: &[u32]) -> Result<usize> {
        degrees.iter().try_fold(0usize, |acc, &p| {
            monomial_count(d, p).and_then(|c| acc.checked_add(c)).ok_or(Error::CoefficientOverflow { d, degree: p })
        })
    }

    /// Builds from sparse `(exponents, coefficient)` lists, one list per polynomial.
    pub fn from_terms(d: usize, degrees: &[u32], terms: &[Vec<(Vec<u32>, f64)>]) -> Result<Self> {
        if degrees.len() != terms.len() {
            return Err(Error::DimensionMismatch { expected: degrees.len(), got: terms.len() });
        }
        let skeleton = Self::zeros(d, degrees)?;
        let polys = skeleton
            .polys
            .iter()
            .zip(terms)
            .map(|(p, t)| HomogeneousPoly::from_terms_in(p.table.clone(), t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { d, polys })
    }

    /// Draws a system with the given seed (ChaCha20 stream, coefficients in canonical order).
    pub fn sample(d: usize, degrees: &[u32], seed: u64) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut sys = Self::zeros(d, degrees)?;
        sys.resample(&mut rng);
        Ok(sys)
    }

    /// Redraws every coefficient from `rng`, reusing the monomial tables.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for poly in &mut self.polys {
            let table = poly.table.clone();
            for (c, &w) in poly.coeffs.iter_mut().zip(&table.scales) {
                let z: f64 = rng.sample(StandardNormal);
                *c = w * z;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.polys.len()
    }

    pub fn polys(&self) -> &[HomogeneousPoly] {
        &self.polys
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.polys.iter().map(|p| p.degree()).collect()
    }

    pub fn p_max(&self) -> u32 {
        self.polys.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    /// Total coefficient count `N = Σ C(d+p_i-1, p_i)`.
    pub fn num_coefficients(&self) -> usize {
        self.polys.iter().map(|p| p.coeffs.len()).sum()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("evaluation point"));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(DVector::from_iterator(self.n(), self.polys.iter().map(|p| p.eval(x))))
    }

    /// Values and the `n×d` Jacobian in one pass.
    pub fn evaluate_with_jacobian(&self, x: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.check_dim(x)?;
        let (n, d) = (self.n(), self.d);
        let mut values = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, d);
        let mut grad = vec![0.0; d];
        let mut scratch = Scratch::default();
        for (i, poly) in self.polys.iter().enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            values[i] = poly.eval_with_gradient(x, &mut grad, &mut scratch);
            for j in 0..d {
                jac[(i, j)] = grad[j];
            }
        }
        Ok((values, jac))
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.evaluate_with_jacobian(x)?.1)
    }

    /// Hessian of the single polynomial `F_i`.
    pub fn poly_hessian(&self, i: usize, x: &[f64]) -> Result<DMatrix<f64>> {
        let poly = self.polys.get(i).ok_or(Error::IndexOutOfRange { index: i, n: self.n() })?;
        self.check_dim(x)?;
        let d = self.d;
        let mut buf = vec![0.0; d * d];
        poly.accumulate_hessian(x, 1.0, &mut buf, &mut Scratch::default());
        Ok(DMatrix::from_row_slice(d, d, &buf))
    }

    /// `Σ_ℓ w_ℓ ∇²F_ℓ(x)`.
    pub fn weighted_hessian(&self, weights: &[f64], x: &[f64]) -> Result<DMatrix<f64>> {
        if weights.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: weights.len() });
        }
        self.check_dim(x)?;
        let d = self.d;
        let mut buf = vec![0.0; d * d];
        let mut scratch = Scratch::default();
        for (poly, &w) in self.polys.iter().zip(weights) {
            poly.accumulate_hessian(x, w, &mut buf, &mut scratch);
        }
        Ok(DMatrix::from_row_slice(d, d, &buf))
    }

    /// `H(x) = ½‖F(x)‖²`.
    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        Ok(0.5 * self.evaluate(x)?.norm_squared())
    }

    /// `∇H = DFᵀ F`.
    pub fn energy_gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        let (f, j) = self.evaluate_with_jacobian(x)?;
        Ok(j.tr_mul(&f))
    }

    /// `∇²H = Σ F_ℓ ∇²F_ℓ + DFᵀ DF`.
    pub fn energy_hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.energy_derivatives(x)?.hessian)
    }

    pub fn energy_derivatives(&self, x: &[f64]) -> Result<EnergyDerivatives> {
        let (values, jacobian) = self.evaluate_with_jacobian(x)?;
        let mut hessian = self.weighted_hessian(values.as_slice(), x)?;
        hessian += jacobian.tr_mul(&jacobian);
        let gradient = jacobian.tr_mul(&values);
        let energy = 0.5 * values.norm_squared();
        Ok(EnergyDerivatives { values, jacobian, energy, gradient, hessian })
    }

    /// `U_xᵀ ∇²H(x) U_x` for the canonical tangent basis at `x`.
    pub fn restricted_hessian(&self, x: &SpherePoint) -> Result<DMatrix<f64>> {
        let u = tangent_basis(x);
        let h = self.energy_hessian(x.as_slice())?;
        Ok(u.columns().transpose() * h * u.columns())
    }
}

/// Draws a system from a seeded generator; `degrees` must all be ≥ 2.
pub fn sample_system(d: usize, degrees: &[u32], seed: u64) -> Result<PolynomialSystem> {
    PolynomialSystem::sample(d, degrees, seed)
}
