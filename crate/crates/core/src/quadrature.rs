//! Gauss–Hermite (standard normal weight) and Gauss–Legendre rules, plus
//! tensorized Gaussian expectations in whitened coordinates.
//!
//! Nodes come from the Golub–Welsch eigenproblem and are polished by Newton
//! iterations on the orthonormal three-term recurrence; weights use the
//! Christoffel function `w_i = 1 / Σ_k p_k(x_i)²`, which stays accurate for
//! the tiny tail weights.

use std::ops::{Add, Mul};

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// One-dimensional quadrature rule.
#[derive(Debug, Clone)]
pub struct Rule<T: Real> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> Rule<T> {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

fn jacobi_nodes<T: Real>(offdiag: &[T]) -> Vec<T> {
    let n = offdiag.len() + 1;
    let mut j = DMatrix::<T>::zeros(n, n);
    for (k, &b) in offdiag.iter().enumerate() {
        j[(k, k + 1)] = b;
        j[(k + 1, k)] = b;
    }
    let mut nodes: Vec<T> = j.symmetric_eigen().eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes
}

/// Orthonormal probabilists' Hermite values `h_0..h_{n}` at `x`.
fn hermite_orthonormal<T: Real>(x: T, n: usize) -> Vec<T> {
    let mut h = Vec::with_capacity(n + 1);
    h.push(T::one());
    if n >= 1 {
        h.push(x);
    }
    for k in 1..n {
        let kf = lit::<T>(k as f64);
        let next = (x * h[k] - kf.sqrt() * h[k - 1]) / (kf + T::one()).sqrt();
        h.push(next);
    }
    h
}

/// Gauss–Hermite rule for `E[f(Z)]`, `Z ~ N(0,1)`; weights sum to one.
pub fn gauss_hermite<T: Real>(order: usize) -> Result<Rule<T>> {
    if order < 1 {
        return Err(Error::Usage("quadrature order must be at least 1".into()));
    }
    let off: Vec<T> = (1..order).map(|k| lit::<T>(k as f64).sqrt()).collect();
    let mut nodes = jacobi_nodes(&off);
    let nf = lit::<T>(order as f64);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let h = hermite_orthonormal(*x, order);
            let deriv = nf.sqrt() * h[order - 1];
            if deriv != T::zero() {
                *x -= h[order] / deriv;
            }
        }
    }
    let mut weights: Vec<T> = nodes
        .iter()
        .map(|&x| {
            let h = hermite_orthonormal(x, order - 1);
            T::one() / h.iter().fold(T::zero(), |a, &v| a + v * v)
        })
        .collect();
    let total = weights.iter().fold(T::zero(), |a, &w| a + w);
    for w in weights.iter_mut() {
        *w /= total;
    }
    symmetrize_rule(&mut nodes, &mut weights);
    Ok(Rule { nodes, weights })
}

/// Gauss–Legendre rule on `[-1, 1]`; weights sum to two.
pub fn gauss_legendre<T: Real>(order: usize) -> Result<Rule<T>> {
    if order < 1 {
        return Err(Error::Usage("quadrature order must be at least 1".into()));
    }
    let off: Vec<T> = (1..order)
        .map(|k| {
            let kf = lit::<T>(k as f64);
            kf / (lit::<T>(4.0) * kf * kf - T::one()).sqrt()
        })
        .collect();
    let mut nodes = jacobi_nodes(&off);
    let legendre = |x: T, n: usize| -> Vec<T> {
        let mut p = vec![T::one()];
        if n >= 1 {
            p.push(x);
        }
        for k in 1..n {
            let kf = lit::<T>(k as f64);
            let next = ((kf + kf + T::one()) * x * p[k] - kf * p[k - 1]) / (kf + T::one());
            p.push(next);
        }
        p
    };
    let nf = lit::<T>(order as f64);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let p = legendre(*x, order);
            let denom = *x * *x - T::one();
            if denom == T::zero() {
                break;
            }
            let deriv = nf * (*x * p[order] - p[order - 1]) / denom;
            if deriv != T::zero() {
                *x -= p[order] / deriv;
            }
        }
    }
    let half = lit::<T>(0.5);
    let mut weights: Vec<T> = nodes
        .iter()
        .map(|&x| {
            let p = legendre(x, order - 1);
            let s = p.iter().enumerate().fold(T::zero(), |a, (k, &v)| {
                a + (lit::<T>(2.0 * k as f64) + T::one()) * half * v * v
            });
            T::one() / s
        })
        .collect();
    symmetrize_rule(&mut nodes, &mut weights);
    Ok(Rule { nodes, weights })
}

/// Enforces exact symmetry of a rule about the origin.
fn symmetrize_rule<T: Real>(nodes: &mut [T], weights: &mut [T]) {
    let n = nodes.len();
    let half = lit::<T>(0.5);
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = (nodes[j] - nodes[i]) * half;
        nodes[i] = -x;
        nodes[j] = x;
        let w = (weights[i] + weights[j]) * half;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
}

/// `∫_a^b f(r) dr` by composite Gauss–Legendre with `panels` equal panels.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    rule: &Rule<T>,
    a: T,
    b: T,
    panels: usize,
    mut f: F,
) -> T {
    let panels = panels.max(1);
    let width = (b - a) / lit::<T>(panels as f64);
    let half = width * lit::<T>(0.5);
    let mut total = T::zero();
    for p in 0..panels {
        let mid = a + width * (lit::<T>(p as f64) + lit::<T>(0.5));
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            total += *w * f(mid + half * *x);
        }
    }
    total * half
}

/// `E[f(m + S z)]`, `z ~ N(0, I_n)`, by the tensor-product Gauss–Hermite
/// rule. `S` is a square root of the covariance.
pub fn gaussian_expectation<T, V, F>(
    rule: &Rule<T>,
    mean: &DVector<T>,
    sqrt_cov: &DMatrix<T>,
    mut f: F,
) -> V
where
    T: Real,
    V: Copy + Zero + Add<Output = V> + Mul<T, Output = V>,
    F: FnMut(&DVector<T>) -> V,
{
    let n = mean.len();
    let q = rule.order();
    let mut idx = vec![0usize; n];
    let mut z = DVector::<T>::zeros(n);
    let mut total = V::zero();
    loop {
        let mut w = T::one();
        for d in 0..n {
            z[d] = rule.nodes[idx[d]];
            w *= rule.weights[idx[d]];
        }
        let x = mean + sqrt_cov * &z;
        total = total + f(&x) * w;
        // odometer increment
        let mut d = 0;
        loop {
            if d == n {
                return total;
            }
            idx[d] += 1;
            if idx[d] < q {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}
