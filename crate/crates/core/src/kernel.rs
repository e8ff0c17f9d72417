//! Observables and the action of `P_{s,t}` and `L(t)` on them, with `L^p`
//! norms under Gaussian measures.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};

use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::linalg::sym_sqrt;
use crate::measures::{GaussianMeasure, TransitionKernel};
use crate::polynomial::Polynomial;
use crate::quadrature::{gauss_hermite, gaussian_expectation};
use crate::scalar::{cabs, cexp, is_finite, lit, Real};

/// Default Gauss–Hermite order per axis.
pub const DEFAULT_QUAD_ORDER: usize = 40;

/// Largest dimension supported by tensor quadrature.
pub const MAX_QUAD_DIM: usize = 3;

type ScalarFn<T> = dyn Fn(&DVector<T>) -> T + Send + Sync;

/// A numeric function of `x` without closed-form kernel action.
#[derive(Clone)]
pub struct GenericFn<T: Real> {
    pub dim: usize,
    pub f: Arc<ScalarFn<T>>,
    /// Whether finite differences of `f` are meaningful.
    pub smooth: bool,
}

impl<T: Real> fmt::Debug for GenericFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericFn")
            .field("dim", &self.dim)
            .field("smooth", &self.smooth)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum Observable<T: Real> {
    Polynomial(Polynomial<T>),
    /// `scale·e^{i⟨k,x⟩}`.
    ComplexExponential {
        k: DVector<T>,
        scale: Complex<T>,
    },
    /// `scale·e^{⟨k,x⟩}`.
    RealExponential {
        k: DVector<T>,
        scale: T,
    },
    Generic(GenericFn<T>),
}

impl<T: Real> Observable<T> {
    pub fn constant(dim: usize, c: T) -> Self {
        Observable::Polynomial(Polynomial::constant(dim, c))
    }

    pub fn complex_exp(k: DVector<T>) -> Result<Self> {
        check_finite(&k)?;
        Ok(Observable::ComplexExponential {
            k,
            scale: Complex::new(T::one(), T::zero()),
        })
    }

    pub fn real_exp(k: DVector<T>) -> Result<Self> {
        check_finite(&k)?;
        Ok(Observable::RealExponential { k, scale: T::one() })
    }

    pub fn generic<F>(dim: usize, smooth: bool, f: F) -> Self
    where
        F: Fn(&DVector<T>) -> T + Send + Sync + 'static,
    {
        Observable::Generic(GenericFn {
            dim,
            f: Arc::new(f),
            smooth,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Observable::Polynomial(p) => p.dim(),
            Observable::ComplexExponential { k, .. } | Observable::RealExponential { k, .. } => {
                k.len()
            }
            Observable::Generic(g) => g.dim,
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, Observable::Generic(_))
    }

    pub fn is_real(&self) -> bool {
        !matches!(self, Observable::ComplexExponential { .. })
    }

    pub fn eval(&self, x: &DVector<T>) -> Complex<T> {
        match self {
            Observable::Polynomial(p) => Complex::new(p.eval(x), T::zero()),
            Observable::ComplexExponential { k, scale } => {
                *scale * cexp(Complex::new(T::zero(), k.dot(x)))
            }
            Observable::RealExponential { k, scale } => {
                Complex::new(*scale * k.dot(x).exp(), T::zero())
            }
            Observable::Generic(g) => Complex::new((g.f)(x), T::zero()),
        }
    }

    /// Real part of the value (the value itself for real observables).
    pub fn eval_real(&self, x: &DVector<T>) -> T {
        self.eval(x).re
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial<T>> {
        match self {
            Observable::Polynomial(p) => Some(p),
            _ => None,
        }
    }
}

fn check_finite<T: Real>(k: &DVector<T>) -> Result<()> {
    if k.iter().all(|v| is_finite(*v)) {
        Ok(())
    } else {
        Err(Error::Domain("frequency vector must be finite".into()))
    }
}

fn check_dim<T: Real>(phi: &Observable<T>, n: usize) -> Result<()> {
    if phi.dim() != n {
        return Err(Error::Usage(format!(
            "observable has dimension {} but the state space has dimension {n}",
            phi.dim()
        )));
    }
    Ok(())
}

/// `P_{s,t}φ` as an observable, for the closed-form variants.
pub fn apply_kernel<T: Real>(
    kern: &TransitionKernel<T>,
    phi: &Observable<T>,
) -> Result<Observable<T>> {
    check_dim(phi, kern.dim())?;
    let half: T = lit(0.5);
    match phi {
        Observable::Polynomial(p) => Ok(Observable::Polynomial(
            p.gaussian_transform(&kern.u, &kern.g, &kern.q),
        )),
        Observable::ComplexExponential { k, scale } => {
            let qkk = (&kern.q * k).dot(k);
            let factor = cexp(Complex::new(-half * qkk, kern.g.dot(k)));
            Ok(Observable::ComplexExponential {
                k: kern.u.transpose() * k,
                scale: *scale * factor,
            })
        }
        Observable::RealExponential { k, scale } => {
            let qkk = (&kern.q * k).dot(k);
            Ok(Observable::RealExponential {
                k: kern.u.transpose() * k,
                scale: *scale * (kern.g.dot(k) + half * qkk).exp(),
            })
        }
        Observable::Generic(_) => Err(Error::Unsupported(
            "generic observables have no closed-form kernel action; use kernel_expectation".into(),
        )),
    }
}

/// Largest coefficient difference between two closed-form observables of the
/// same kind (polynomial coefficients, or frequency and scale of exponentials).
pub fn coefficient_distance<T: Real>(a: &Observable<T>, b: &Observable<T>) -> Result<T> {
    let vec_diff =
        |x: &DVector<T>, y: &DVector<T>| (x - y).iter().fold(T::zero(), |m, v| m.max(v.abs()));
    match (a, b) {
        (Observable::Polynomial(p), Observable::Polynomial(q)) => Ok(p.max_coefficient_diff(q)),
        (
            Observable::ComplexExponential { k: k1, scale: s1 },
            Observable::ComplexExponential { k: k2, scale: s2 },
        ) => Ok(vec_diff(k1, k2).max(cabs(*s1 - *s2))),
        (
            Observable::RealExponential { k: k1, scale: s1 },
            Observable::RealExponential { k: k2, scale: s2 },
        ) => Ok(vec_diff(k1, k2).max((*s1 - *s2).abs())),
        _ => Err(Error::Usage(
            "observables are not of the same closed-form kind".into(),
        )),
    }
}

/// `E[φ(Y)]`, `Y ~ law`, by tensor Gauss–Hermite quadrature in coordinates
/// whitened by the symmetric square root of the covariance.
pub fn quadrature_expectation<T: Real>(
    law: &GaussianMeasure<T>,
    phi: &Observable<T>,
    order: usize,
) -> Result<Complex<T>> {
    check_dim(phi, law.dim())?;
    if law.dim() > MAX_QUAD_DIM {
        return Err(Error::Unsupported(format!(
            "tensor quadrature supports n <= {MAX_QUAD_DIM}"
        )));
    }
    let rule = gauss_hermite::<T>(order)?;
    let s = law.sqrt_cov()?;
    Ok(gaussian_expectation(&rule, &law.mean, &s, |y| phi.eval(y)))
}

/// `P_{s,t}φ(x)`: closed form when available, quadrature for generic `φ`.
pub fn kernel_expectation<T: Real>(
    kern: &TransitionKernel<T>,
    phi: &Observable<T>,
    x: &DVector<T>,
    quad_order: usize,
) -> Result<Complex<T>> {
    if quad_order < 1 {
        return Err(Error::Usage("quadrature order must be at least 1".into()));
    }
    if x.len() != kern.dim() {
        return Err(Error::Usage(
            "point dimension does not match the kernel".into(),
        ));
    }
    if phi.is_closed_form() {
        return Ok(apply_kernel(kern, phi)?.eval(x));
    }
    if kern.q.clone().cholesky().is_none() {
        return Err(Error::Singular(
            "transition covariance is singular; generic observables need Q > 0".into(),
        ));
    }
    quadrature_expectation(&kern.law_from(x), phi, quad_order)
}

/// `∫φ dm` (the mean functional `M_t` when `m = ν_t`).
pub fn mean_functional<T: Real>(
    m: &GaussianMeasure<T>,
    phi: &Observable<T>,
    quad_order: usize,
) -> Result<Complex<T>> {
    check_dim(phi, m.dim())?;
    let half: T = lit(0.5);
    match phi {
        Observable::Polynomial(p) => Ok(Complex::new(p.gaussian_mean(&m.mean, &m.cov), T::zero())),
        Observable::ComplexExponential { k, scale } => {
            let ckk = (&m.cov * k).dot(k);
            Ok(*scale * cexp(Complex::new(-half * ckk, m.mean.dot(k))))
        }
        Observable::RealExponential { k, scale } => {
            let ckk = (&m.cov * k).dot(k);
            Ok(Complex::new(
                *scale * (m.mean.dot(k) + half * ckk).exp(),
                T::zero(),
            ))
        }
        Observable::Generic(_) => {
            if quad_order < 1 {
                return Err(Error::Usage("quadrature order must be at least 1".into()));
            }
            quadrature_expectation(m, phi, quad_order)
        }
    }
}

/// `L(t)φ` as a polynomial: `½tr(BB* D²φ) + ⟨A x + f, ∇φ⟩`.
pub fn generator_polynomial<T: Real>(
    field: &CoefficientField<T>,
    t: T,
    p: &Polynomial<T>,
) -> Result<Polynomial<T>> {
    let (a, b, f) = field.eval(t)?;
    let n = field.dim;
    if p.dim() != n {
        return Err(Error::Usage(
            "polynomial dimension does not match the field".into(),
        ));
    }
    let bb = &b * b.transpose();
    let grad = p.gradient();
    let mut out = Polynomial::zero(n);
    for i in 0..n {
        // Drift component (Ax + f)_i as an affine polynomial.
        let drift = Polynomial::affine(&a.row(i).transpose(), f[i]);
        out = out.add(&drift.mul(&grad[i]));
        for j in 0..n {
            if bb[(i, j)] != T::zero() {
                out = out.add(&grad[i].derivative(j).scale(bb[(i, j)] * lit(0.5)));
            }
        }
    }
    Ok(out)
}

/// Relative step of the central differences used for generic observables.
pub const FD_STEP: f64 = 1e-5;

/// `L(t)φ(x)`.
pub fn apply_generator<T: Real>(
    field: &CoefficientField<T>,
    t: T,
    phi: &Observable<T>,
    x: &DVector<T>,
) -> Result<Complex<T>> {
    let n = field.dim;
    check_dim(phi, n)?;
    if x.len() != n {
        return Err(Error::Usage(
            "point dimension does not match the field".into(),
        ));
    }
    let (a, b, f) = field.eval(t)?;
    let bb = &b * b.transpose();
    let drift = &a * x + &f;
    let half: T = lit(0.5);
    match phi {
        Observable::Polynomial(p) => Ok(Complex::new(
            generator_polynomial(field, t, p)?.eval(x),
            T::zero(),
        )),
        Observable::ComplexExponential { k, .. } => {
            let v = phi.eval(x);
            let factor = Complex::new(-half * (&bb * k).dot(k), drift.dot(k));
            Ok(v * factor)
        }
        Observable::RealExponential { k, .. } => {
            let v = phi.eval(x).re;
            Ok(Complex::new(
                v * (half * (&bb * k).dot(k) + drift.dot(k)),
                T::zero(),
            ))
        }
        Observable::Generic(g) => {
            if !g.smooth {
                return Err(Error::Unsupported(
                    "generator of a non-smooth generic observable".into(),
                ));
            }
            let h = lit::<T>(FD_STEP) * (T::one() + x.norm());
            let fx = (g.f)(x);
            let shifted = |d: &[(usize, T)]| {
                let mut y = x.clone();
                for &(i, v) in d {
                    y[i] += v;
                }
                (g.f)(&y)
            };
            let mut out = T::zero();
            for i in 0..n {
                let fp = shifted(&[(i, h)]);
                let fm = shifted(&[(i, -h)]);
                out += drift[i] * (fp - fm) / (h + h);
                out += half * bb[(i, i)] * (fp - fx - fx + fm) / (h * h);
                for j in (i + 1)..n {
                    if bb[(i, j)] == T::zero() {
                        continue;
                    }
                    let d2 = (shifted(&[(i, h), (j, h)])
                        - shifted(&[(i, h), (j, -h)])
                        - shifted(&[(i, -h), (j, h)])
                        + shifted(&[(i, -h), (j, -h)]))
                        / (lit::<T>(4.0) * h * h);
                    // Off-diagonal pair counted twice in the trace.
                    out += bb[(i, j)] * d2;
                }
            }
            Ok(Complex::new(out, T::zero()))
        }
    }
}

/// `(∫|φ|^p dm)^{1/p}`: closed forms for exponentials and for polynomials
/// with even integer `p`, quadrature otherwise.
pub fn lp_norm<T: Real>(
    m: &GaussianMeasure<T>,
    phi: &Observable<T>,
    p: T,
    quad_order: usize,
) -> Result<T> {
    if !(p >= T::one()) || !is_finite(p) {
        return Err(Error::Usage("p must be a finite real >= 1".into()));
    }
    check_dim(phi, m.dim())?;
    let half: T = lit(0.5);
    match phi {
        Observable::ComplexExponential { scale, .. } => Ok(cabs(*scale)),
        Observable::RealExponential { k, scale } => {
            let ckk = (&m.cov * k).dot(k);
            Ok(scale.abs() * (m.mean.dot(k) + half * p * ckk).exp())
        }
        Observable::Polynomial(poly) if is_even_integer(p) => {
            let e = crate::scalar::to_f64(p) as u32;
            let v = poly.pow(e).gaussian_mean(&m.mean, &m.cov).max(T::zero());
            Ok(v.powf(T::one() / p))
        }
        _ => {
            if quad_order < 1 {
                return Err(Error::Usage("quadrature order must be at least 1".into()));
            }
            // Scale by the largest node value so `|φ|^p` cannot overflow
            // for large exponents: ‖φ‖_p = peak·(E|φ/peak|^p)^{1/p}.
            let rule = gauss_hermite::<T>(quad_order)?;
            let s = sym_sqrt(&m.cov)?;
            let mut peak = T::zero();
            let _: T = gaussian_expectation(&rule, &m.mean, &s, |x| {
                peak = peak.max(cabs(phi.eval(x)));
                T::zero()
            });
            if !(peak > T::zero()) {
                return Ok(T::zero());
            }
            if !is_finite(peak) {
                return Err(Error::Domain(
                    "observable is not finite on the quadrature nodes".into(),
                ));
            }
            let v =
                gaussian_expectation(&rule, &m.mean, &s, |x| (cabs(phi.eval(x)) / peak).powf(p));
            Ok(peak * v.max(T::zero()).powf(T::one() / p))
        }
    }
}

fn is_even_integer<T: Real>(p: T) -> bool {
    let v = crate::scalar::to_f64(p);
    v.fract() == 0.0 && (v as i64) % 2 == 0 && v <= 16.0
}

/// `Var_m(φ) = ∫|φ - ∫φ dm|² dm` for a real observable, computed without
/// forming `∫φ²` so no cancellation occurs when the variance is tiny.
pub fn variance<T: Real>(
    m: &GaussianMeasure<T>,
    phi: &Observable<T>,
    quad_order: usize,
) -> Result<T> {
    check_dim(phi, m.dim())?;
    match phi {
        Observable::Polynomial(p) => {
            // Centre the measure: φ(mean + S z), subtract its mean, square.
            let n = m.dim();
            let s = sym_sqrt(&m.cov)?;
            let centered = p.substitute_affine(&s, &m.mean);
            let mean0 = centered.gaussian_mean(&DVector::zeros(n), &DMatrix::identity(n, n));
            let dev = centered.sub(&Polynomial::constant(n, mean0));
            Ok(dev
                .mul(&dev)
                .gaussian_mean(&DVector::zeros(n), &DMatrix::identity(n, n))
                .max(T::zero()))
        }
        Observable::RealExponential { k, scale } => {
            // Var = scale² e^{2⟨k,m⟩ + ⟨Ck,k⟩}(e^{⟨Ck,k⟩} - 1).
            let ckk = (&m.cov * k).dot(k);
            Ok(scale.powi(2) * (lit::<T>(2.0) * m.mean.dot(k) + ckk).exp() * ckk.exp_m1())
        }
        Observable::ComplexExponential { k, scale } => {
            // E|φ|² - |Eφ|² = |scale|²(1 - e^{-⟨Ck,k⟩}).
            let ckk = (&m.cov * k).dot(k);
            Ok(cabs(*scale).powi(2) * -(-ckk).exp_m1())
        }
        Observable::Generic(_) => {
            let mu = mean_functional(m, phi, quad_order)?.re;
            let dev = Observable::generic(m.dim(), false, {
                let phi = phi.clone();
                move |x: &DVector<T>| {
                    let d = phi.eval(x).re - mu;
                    d * d
                }
            });
            Ok(quadrature_expectation(m, &dev, quad_order)?
                .re
                .max(T::zero()))
        }
    }
}
