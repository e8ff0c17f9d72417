//! Sparse multivariate polynomials with real coefficients, Gaussian moments
//! by Wick pairings, and conversion to the probabilists' Hermite basis.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Multi-index of exponents, one entry per variable.
pub type MultiIndex = Vec<u32>;

/// Default maximal total degree for user-specified polynomial observables.
pub const DEFAULT_MAX_DEGREE: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T: Real> {
    dim: usize,
    terms: BTreeMap<MultiIndex, T>,
}

impl<T: Real> Polynomial<T> {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: T) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    /// `c·x^α`.
    pub fn monomial(alpha: MultiIndex, c: T) -> Self {
        let mut p = Self::zero(alpha.len());
        p.add_term(alpha, c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn variable(dim: usize, i: usize) -> Self {
        let mut alpha = vec![0; dim];
        alpha[i] = 1;
        Self::monomial(alpha, T::one())
    }

    /// `⟨c, x⟩ + c0`.
    pub fn affine(c: &DVector<T>, c0: T) -> Self {
        let dim = c.len();
        let mut p = Self::constant(dim, c0);
        for i in 0..dim {
            p.add_term(unit(dim, i), c[i]);
        }
        p
    }

    /// Builds a polynomial from `(multi-index, coefficient)` pairs.
    pub fn from_terms(
        dim: usize,
        terms: impl IntoIterator<Item = (MultiIndex, T)>,
    ) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (alpha, c) in terms {
            if alpha.len() != dim {
                return Err(Error::Usage(format!(
                    "multi-index {alpha:?} does not have {dim} entries"
                )));
            }
            if !crate::scalar::is_finite(c) {
                return Err(Error::Domain(
                    "polynomial coefficients must be finite".into(),
                ));
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &T)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, alpha: &[u32]) -> T {
        self.terms.get(alpha).copied().unwrap_or_else(T::zero)
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: T) {
        debug_assert_eq!(alpha.len(), self.dim);
        if c == T::zero() {
            return;
        }
        let sum = self.coefficient(&alpha) + c;
        // Exact cancellation removes the entry; near-cancellation is kept.
        if sum == T::zero() {
            self.terms.remove(&alpha);
        } else {
            self.terms.insert(alpha, sum);
        }
    }

    /// Total degree; `0` for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|a| a.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &DVector<T>) -> T {
        let mut out = T::zero();
        for (alpha, &c) in &self.terms {
            let mut v = c;
            for (i, &e) in alpha.iter().enumerate() {
                if e > 0 {
                    v *= x[i].powi(e as i32);
                }
            }
            out += v;
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        let mut p = Self::zero(self.dim);
        for (a, &c) in &self.terms {
            p.add_term(a.clone(), c * s);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (a, &c) in &other.terms {
            p.add_term(a.clone(), c);
        }
        p
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut acc: BTreeMap<MultiIndex, T> = BTreeMap::new();
        for (a, &c) in &self.terms {
            for (b, &d) in &other.terms {
                let key: MultiIndex = a.iter().zip(b).map(|(x, y)| x + y).collect();
                *acc.entry(key).or_insert_with(T::zero) += c * d;
            }
        }
        acc.retain(|_, v| *v != T::zero());
        Self {
            dim: self.dim,
            terms: acc,
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::constant(self.dim, T::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// `∂φ/∂x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut p = Self::zero(self.dim);
        for (a, &c) in &self.terms {
            if a[i] > 0 {
                let mut b = a.clone();
                b[i] -= 1;
                p.add_term(b, c * lit::<T>(a[i] as f64));
            }
        }
        p
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.dim).map(|i| self.derivative(i)).collect()
    }

    /// Largest coefficient difference in absolute value.
    pub fn max_coefficient_diff(&self, other: &Self) -> T {
        let mut m = T::zero();
        for (a, &c) in &self.terms {
            m = m.max((c - other.coefficient(a)).abs());
        }
        for (a, &c) in &other.terms {
            if !self.terms.contains_key(a) {
                m = m.max(c.abs());
            }
        }
        m
    }

    pub fn max_abs_coefficient(&self) -> T {
        self.terms.values().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    /// `x ↦ E[φ(Ux + g + ξ)]` with `ξ ~ N(0, Q)`: substitution of the affine
    /// map followed by Wick moments of the noise.
    pub fn gaussian_transform(&self, u: &DMatrix<T>, g: &DVector<T>, q: &DMatrix<T>) -> Self {
        let n = self.dim;
        // Variables (x_1..x_n, ξ_1..ξ_n).
        let forms: Vec<Self> = (0..n)
            .map(|i| {
                let mut p = Self::constant(2 * n, g[i]);
                for j in 0..n {
                    p.add_term(unit(2 * n, j), u[(i, j)]);
                }
                p.add_term(unit(2 * n, n + i), T::one());
                p
            })
            .collect();
        let mut powers: Vec<Vec<Self>> = forms
            .iter()
            .map(|f| vec![Self::constant(2 * n, T::one()), f.clone()])
            .collect();
        let mut wick = WickMoments::new(q.clone());
        let mut out = Self::zero(n);
        for (alpha, &c) in &self.terms {
            let mut prod = Self::constant(2 * n, c);
            for i in 0..n {
                let e = alpha[i] as usize;
                while powers[i].len() <= e {
                    let next = powers[i].last().expect("non-empty").mul(&forms[i]);
                    powers[i].push(next);
                }
                if e > 0 {
                    prod = prod.mul(&powers[i][e]);
                }
            }
            for (key, &v) in &prod.terms {
                let m = wick.moment(&key[n..]);
                if m != T::zero() {
                    out.add_term(key[..n].to_vec(), v * m);
                }
            }
        }
        out
    }

    /// `E[φ(X)]` for `X ~ N(mean, cov)`.
    pub fn gaussian_mean(&self, mean: &DVector<T>, cov: &DMatrix<T>) -> T {
        let n = self.dim;
        let p = self.gaussian_transform(&DMatrix::identity(n, n), mean, cov);
        p.coefficient(&vec![0; n])
    }

    /// `φ(Mx + c)` as a polynomial in `x`.
    pub fn substitute_affine(&self, m: &DMatrix<T>, c: &DVector<T>) -> Self {
        let n = self.dim;
        self.gaussian_transform(m, c, &DMatrix::zeros(n, n))
    }

    /// Coefficients in the orthonormal Hermite basis `h_α = Π He_{α_i}/√α_i!`.
    pub fn to_hermite(&self) -> BTreeMap<MultiIndex, T> {
        let mut out: BTreeMap<MultiIndex, T> = BTreeMap::new();
        for (alpha, &c) in &self.terms {
            // x^α = Π_i Σ_j a(α_i, j) He_{α_i - 2j}
            let mut partial: Vec<(MultiIndex, T)> = vec![(vec![], c)];
            for &m in alpha {
                let mut next = vec![];
                for (idx, v) in &partial {
                    for j in 0..=(m / 2) {
                        let deg = m - 2 * j;
                        let coef = factorial::<T>(m)
                            / (factorial::<T>(j)
                                * factorial::<T>(deg)
                                * lit::<T>(2f64.powi(j as i32)));
                        let mut key = idx.clone();
                        key.push(deg);
                        // He_k = √k!·h_k.
                        next.push((key, *v * coef * factorial::<T>(deg).sqrt()));
                    }
                }
                partial = next;
            }
            for (k, v) in partial {
                *out.entry(k).or_insert_with(T::zero) += v;
            }
        }
        out.retain(|_, v| *v != T::zero());
        out
    }

    /// Inverse of [`Polynomial::to_hermite`].
    pub fn from_hermite(dim: usize, coeffs: &BTreeMap<MultiIndex, T>) -> Self {
        let mut out = Self::zero(dim);
        for (alpha, &c) in coeffs {
            let mut term = Self::constant(dim, c);
            for (i, &m) in alpha.iter().enumerate() {
                term = term.mul(&hermite_normalized(dim, i, m));
            }
            out = out.add(&term);
        }
        out
    }
}

fn unit(dim: usize, i: usize) -> MultiIndex {
    let mut a = vec![0; dim];
    a[i] = 1;
    a
}

pub(crate) fn factorial<T: Real>(m: u32) -> T {
    (1..=m).fold(T::one(), |a, k| a * lit::<T>(k as f64))
}

/// `h_m(x_i) = He_m(x_i)/√m!` as a polynomial in `dim` variables, with
/// `He_m(x) = Σ_j (-1)^j m!/(j!(m-2j)!2^j) x^{m-2j}`.
pub fn hermite_normalized<T: Real>(dim: usize, i: usize, m: u32) -> Polynomial<T> {
    let mut p = Polynomial::zero(dim);
    let norm = factorial::<T>(m).sqrt();
    for j in 0..=(m / 2) {
        let deg = m - 2 * j;
        let sign: T = if j % 2 == 0 { T::one() } else { -T::one() };
        let c = sign * factorial::<T>(m)
            / (factorial::<T>(j) * factorial::<T>(deg) * lit::<T>(2f64.powi(j as i32)));
        let mut alpha = vec![0; dim];
        alpha[i] = deg;
        p.add_term(alpha, c / norm);
    }
    p
}

/// Memoized moments `E[ξ^γ]` of `ξ ~ N(0, Q)` via the Isserlis recursion
/// `E[ξ_i ξ^β] = Σ_j Q_ij β_j E[ξ^{β - e_j}]`.
pub struct WickMoments<T: Real> {
    q: DMatrix<T>,
    memo: HashMap<Vec<u32>, T>,
}

impl<T: Real> WickMoments<T> {
    pub fn new(q: DMatrix<T>) -> Self {
        Self {
            q,
            memo: HashMap::new(),
        }
    }

    pub fn moment(&mut self, gamma: &[u32]) -> T {
        let total: u32 = gamma.iter().sum();
        if total == 0 {
            return T::one();
        }
        if total % 2 == 1 {
            return T::zero();
        }
        if let Some(&v) = self.memo.get(gamma) {
            return v;
        }
        let i = gamma.iter().position(|&e| e > 0).expect("non-zero total");
        let mut beta = gamma.to_vec();
        beta[i] -= 1;
        let mut acc = T::zero();
        for j in 0..beta.len() {
            if beta[j] == 0 {
                continue;
            }
            let qij = self.q[(i, j)];
            if qij == T::zero() {
                continue;
            }
            let mut rest = beta.clone();
            rest[j] -= 1;
            acc += qij * lit::<T>(beta[j] as f64) * self.moment(&rest);
        }
        self.memo.insert(gamma.to_vec(), acc);
        acc
    }
}

/// All multi-indices of `dim` entries with total degree `≤ max_degree`,
/// ordered by degree then lexicographically descending.
pub fn multi_indices(dim: usize, max_degree: u32) -> Vec<MultiIndex> {
    let mut out = vec![];
    for d in 0..=max_degree {
        let mut level = vec![];
        fill(dim, d, &mut vec![], &mut level);
        out.extend(level);
    }
    out
}

fn fill(dim: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if prefix.len() + 1 == dim {
        let mut v = prefix.clone();
        v.push(remaining);
        out.push(v);
        return;
    }
    for e in (0..=remaining).rev() {
        prefix.push(e);
        fill(dim, remaining - e, prefix, out);
        prefix.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wick_scalar_moments_are_double_factorials() {
        let mut w = WickMoments::new(DMatrix::from_element(1, 1, 2.0));
        assert_eq!(w.moment(&[2]), 2.0);
        assert_eq!(w.moment(&[4]), 12.0);
        assert_eq!(w.moment(&[6]), 120.0);
        assert_eq!(w.moment(&[3]), 0.0);
    }

    #[test]
    fn wick_cross_moment() {
        // E[ξ1² ξ2²] = Q11 Q22 + 2 Q12².
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        let mut w = WickMoments::<f64>::new(q);
        assert!((w.moment(&[2, 2]) - 2.5).abs() < 1e-15);
        assert!((w.moment(&[1, 1]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn transform_of_square() {
        let x2 = Polynomial::monomial(vec![2], 1.0);
        let u = (-1.0f64).exp();
        let q = 1.0 - (-2.0f64).exp();
        let p = x2.gaussian_transform(
            &DMatrix::from_element(1, 1, u),
            &DVector::zeros(1),
            &DMatrix::from_element(1, 1, q),
        );
        assert!((p.coefficient(&[2]) - u * u).abs() < 1e-15);
        assert!((p.coefficient(&[0]) - q).abs() < 1e-15);
        assert_eq!(p.coefficient(&[1]), 0.0);
    }

    #[test]
    fn hermite_round_trip() {
        let p = Polynomial::from_terms(
            2,
            vec![
                (vec![3, 1], 2.0),
                (vec![0, 2], -1.0),
                (vec![0, 0], 0.5),
                (vec![1, 0], 3.0),
            ],
        )
        .unwrap();
        let h = p.to_hermite();
        let back = Polynomial::from_hermite(2, &h);
        assert!(p.max_coefficient_diff(&back) < 1e-13);
    }

    #[test]
    fn hermite_of_square() {
        // x² = He_2 + 1 = √2·h_2 + h_0.
        let h = Polynomial::monomial(vec![2], 1.0).to_hermite();
        assert!((h[&vec![2]] - 2f64.sqrt()).abs() < 1e-15);
        assert!((h[&vec![0]] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn multi_index_count() {
        assert_eq!(multi_indices(2, 3).len(), 10);
        assert_eq!(multi_indices(3, 2).len(), 10);
        assert_eq!(
            multi_indices(1, 4),
            vec![vec![0], vec![1], vec![2], vec![3], vec![4]]
        );
    }

    #[test]
    fn derivative_and_degree() {
        let p = Polynomial::from_terms(2, vec![(vec![2, 1], 3.0), (vec![0, 1], 1.0)]).unwrap();
        assert_eq!(p.degree(), 3);
        let d = p.derivative(0);
        assert_eq!(d.coefficient(&[1, 1]), 6.0);
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn gaussian_mean_of_fourth_power() {
        let p = Polynomial::<f64>::monomial(vec![4], 1.0);
        let v = p.gaussian_mean(
            &DVector::from_element(1, 1.0),
            &DMatrix::from_element(1, 1, 2.0),
        );
        // E(1+ξ)^4 = 1 + 6·2 + 3·4 = 25.
        assert!((v - 25.0).abs() < 1e-13);
    }
}
