//! Gaussian transition kernels, the distinguished evolution system of
//! measures `ν_t = N(g(t,-∞), Q(t,-∞))` and the time derivative of its
//! density.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, spd_inverse, spectral_norm, sym_sqrt, symmetrize};
use crate::propagator::Propagator;
use crate::quadrature::gauss_legendre;
use crate::scalar::{cabs, is_finite, lit, to_f64, Real};

/// Absolute symmetry tolerance for covariance matrices (scaled by `max(1,‖C‖)`).
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure<T: Real> {
    pub mean: DVector<T>,
    pub cov: DMatrix<T>,
}

impl<T: Real> GaussianMeasure<T> {
    /// Validates shape, symmetry and positive semidefiniteness.
    pub fn new(mean: DVector<T>, cov: DMatrix<T>) -> Result<Self> {
        let n = mean.len();
        if cov.shape() != (n, n) || n == 0 {
            return Err(Error::Usage("mean and covariance shapes disagree".into()));
        }
        let scale = T::one().max(spectral_norm(&cov));
        if asymmetry(&cov) > lit::<T>(SYMMETRY_TOL) * scale {
            return Err(Error::Domain("covariance is not symmetric".into()));
        }
        let mut cov = cov;
        symmetrize(&mut cov);
        // Rejects covariances with clearly negative eigenvalues.
        sym_sqrt(&cov)?;
        Ok(Self { mean, cov })
    }

    pub fn standard(n: usize) -> Self {
        Self {
            mean: DVector::zeros(n),
            cov: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Symmetric square root of the covariance.
    pub fn sqrt_cov(&self) -> Result<DMatrix<T>> {
        sym_sqrt(&self.cov)
    }

    /// `E|X|² = tr C + |m|²`.
    pub fn second_moment(&self) -> T {
        self.cov.trace() + self.mean.norm_squared()
    }

    pub fn log_density(&self, x: &DVector<T>) -> Result<T> {
        if x.len() != self.dim() {
            return Err(Error::Usage(
                "point dimension does not match the measure".into(),
            ));
        }
        let chol = self
            .cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("covariance is not positive definite".into()))?;
        let d = x - &self.mean;
        let z = chol.solve(&d);
        let quad = d.dot(&z);
        let log_det = chol
            .l_dirty()
            .diagonal()
            .iter()
            .fold(T::zero(), |a, &v| a + v.ln())
            * lit(2.0);
        let n: T = lit(self.dim() as f64);
        Ok(-(n * T::two_pi().ln() + log_det + quad) / lit(2.0))
    }
}

/// The triple `(U(t,s), g(t,s), Q(t,s))`: the law of the process at `t`
/// started from `x` at `s` is `N(Ux + g, Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel<T: Real> {
    pub s: T,
    pub t: T,
    pub u: DMatrix<T>,
    pub g: DVector<T>,
    pub q: DMatrix<T>,
}

impl<T: Real> TransitionKernel<T> {
    pub fn identity(n: usize, s: T) -> Self {
        Self {
            s,
            t: s,
            u: DMatrix::identity(n, n),
            g: DVector::zeros(n),
            q: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// Composition `self ∘ earlier`: first `earlier` (from `earlier.s` to
    /// `earlier.t`), then `self`. Gives `(U₂U₁, U₂g₁ + g₂, U₂Q₁U₂* + Q₂)`.
    pub fn after(&self, earlier: &Self) -> Self {
        let u = &self.u * &earlier.u;
        if self.g.is_empty() || earlier.g.is_empty() {
            return Self {
                s: earlier.s,
                t: self.t,
                u,
                g: DVector::zeros(0),
                q: DMatrix::zeros(0, 0),
            };
        }
        let g = &self.u * &earlier.g + &self.g;
        let mut q = &self.u * &earlier.q * self.u.transpose() + &self.q;
        symmetrize(&mut q);
        Self {
            s: earlier.s,
            t: self.t,
            u,
            g,
            q,
        }
    }

    /// Transition law from the starting point `x`.
    pub fn law_from(&self, x: &DVector<T>) -> GaussianMeasure<T> {
        GaussianMeasure {
            mean: &self.u * x + &self.g,
            cov: self.q.clone(),
        }
    }

    /// Pushes a Gaussian law at time `s` forward to time `t`.
    pub fn push(&self, law: &GaussianMeasure<T>) -> GaussianMeasure<T> {
        let mut cov = &self.u * &law.cov * self.u.transpose() + &self.q;
        symmetrize(&mut cov);
        GaussianMeasure {
            mean: &self.u * &law.mean + &self.g,
            cov,
        }
    }
}

/// `(U(t,s), g(t,s), Q(t,s))` by the joint RK4 sweep.
pub fn transition_kernel<T: Real>(p: &Propagator<T>, s: T, t: T) -> Result<TransitionKernel<T>> {
    p.kernel(s, t)
}

/// `g(t,s) = ∫_s^t U(t,r)f(r)dr` and `Q(t,s) = ∫_s^t U(t,r)B(r)B(r)*U(t,r)*dr`
/// by composite Gauss–Legendre quadrature, with `U(t,r)` from the propagator.
/// An integral-form counterpart of [`transition_kernel`].
pub fn quadrature_kernel<T: Real>(
    p: &Propagator<T>,
    s: T,
    t: T,
    panels: usize,
    order: usize,
) -> Result<TransitionKernel<T>> {
    if s > t {
        return Err(Error::Usage("quadrature kernel needs s ≤ t".into()));
    }
    let n = p.field().dim;
    let rule = gauss_legendre::<T>(order)?;
    let panels = panels.max(1);
    let width = (t - s) / lit::<T>(panels as f64);
    let half: T = lit(0.5);
    let mut g = DVector::zeros(n);
    let mut q = DMatrix::zeros(n, n);
    for k in 0..panels {
        let mid = s + width * (lit::<T>(k as f64) + half);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let r = mid + half * width * *x;
            let u = p.propagate(r, t)?;
            let (_, b, f) = p.field().eval(r)?;
            let ub = &u * b;
            let wt = *w * half * width;
            g += (&u * f) * wt;
            q += (&ub * ub.transpose()) * wt;
        }
    }
    symmetrize(&mut q);
    Ok(TransitionKernel {
        s,
        t,
        u: p.propagate(s, t)?,
        g,
        q,
    })
}

/// How an entrance law was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// Discrete Stein fixed point over one period.
    PeriodicFixedPoint,
    /// Integration from a finite past time `t - L`.
    Truncation,
}

/// Which construction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Route {
    /// Stein series for periodic fields, truncation otherwise.
    #[default]
    Auto,
    Stein,
    Truncation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntranceLaw<T: Real> {
    pub t: T,
    pub law: GaussianMeasure<T>,
    pub construction: Construction,
    /// Norm of the last series term, or the tail bound of the truncation.
    pub truncation_error: f64,
    /// Series terms summed, or the truncation length `L`.
    pub work: f64,
}

const MAX_STEIN_TERMS: usize = 1_000_000;

/// `ν_t` for the field of `p`.
pub fn entrance_law<T: Real>(
    p: &Propagator<T>,
    t: T,
    tol: T,
    route: Route,
) -> Result<EntranceLaw<T>> {
    if !is_finite(t) {
        return Err(Error::Domain("time must be finite".into()));
    }
    if !(tol > T::zero()) {
        return Err(Error::Usage("tolerance must be positive".into()));
    }
    let periodic = p.field().period.is_some();
    match route {
        Route::Auto if periodic => stein_route(p, t, tol),
        Route::Stein => stein_route(p, t, tol),
        _ => truncation_route(p, t, tol, past_growth_bound(p, t)?),
    }
}

/// Growth bound of the past of `t`: the Floquet exponent for periodic
/// fields, otherwise a sampled estimate over `s ∈ [t - 55, t - 20]`.
fn past_growth_bound<T: Real>(p: &Propagator<T>, t: T) -> Result<T> {
    if p.field().period.is_some() {
        return Ok(p.floquet()?.omega0);
    }
    let grid: Vec<T> = (0..8)
        .map(|i| t - lit::<T>(5.0 * i as f64 + 20.0))
        .collect();
    p.estimate_growth_bound(lit(20.0), &grid)
}

fn stein_route<T: Real>(p: &Propagator<T>, t: T, tol: T) -> Result<EntranceLaw<T>> {
    let period = p.field().require_period()?;
    let k = p.kernel(t - period, t)?;
    let m = &k.u;
    let r0 = m
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| cabs(*z))
        .fold(T::zero(), |a, b| a.max(b));
    if r0 >= T::one() {
        return Err(Error::NoEntranceLaw {
            omega0: to_f64(r0.ln() / period),
        });
    }
    let n = p.field().dim;
    let mut sum = k.q.clone();
    let mut term = k.q.clone();
    let mt = m.transpose();
    let mut terms = 1usize;
    let mut last = spectral_norm(&term);
    while last >= tol {
        if terms >= MAX_STEIN_TERMS {
            return Err(Error::IllConditioned(format!(
                "Stein series did not reach {} after {terms} terms",
                to_f64(tol)
            )));
        }
        term = m * &term * &mt;
        sum += &term;
        terms += 1;
        last = spectral_norm(&term);
    }
    symmetrize(&mut sum);
    let i_minus_m = DMatrix::<T>::identity(n, n) - m;
    let mean = i_minus_m
        .lu()
        .solve(&k.g)
        .ok_or_else(|| Error::Internal("I - M is singular although r0 < 1".into()))?;
    Ok(EntranceLaw {
        t,
        law: GaussianMeasure::new(mean, sum)?,
        construction: Construction::PeriodicFixedPoint,
        truncation_error: to_f64(last),
        work: terms as f64,
    })
}

/// Truncation from `t - L`; `omega0` only gates existence and caps `L`.
fn truncation_route<T: Real>(p: &Propagator<T>, t: T, tol: T, omega0: T) -> Result<EntranceLaw<T>> {
    let slow = p.with_fast_path(false);
    let chunk = p.field().period.unwrap_or_else(T::one);
    if omega0 >= T::zero() {
        return Err(Error::NoEntranceLaw {
            omega0: to_f64(omega0),
        });
    }
    // Extend the window backward one chunk at a time:
    // K(t, t-L-c) = K(t, t-L) ∘ K(t-L, t-L-c).
    let mut acc = TransitionKernel::identity(p.field().dim, t);
    let mut len = T::zero();
    let max_len = lit::<T>(1e4).max(lit::<T>(200.0) / (-omega0));
    loop {
        let seg = slow.kernel(t - len - chunk, t - len)?;
        acc = acc.after(&seg);
        len += chunk;
        // Tail bound: the law at t-L has covariance and mean of the same
        // size as the accumulated ones, damped by U(t,t-L).
        let un = spectral_norm(&acc.u);
        let bound = un * un * spectral_norm(&acc.q).max(T::one()) + un * acc.g.norm().max(T::one());
        if bound < tol {
            return Ok(EntranceLaw {
                t,
                law: GaussianMeasure::new(acc.g.clone(), acc.q.clone())?,
                construction: Construction::Truncation,
                truncation_error: to_f64(bound),
                work: to_f64(len),
            });
        }
        if len > max_len {
            return Err(Error::IllConditioned(
                "truncation length exceeded its limit before reaching the tolerance".into(),
            ));
        }
    }
}

/// The distinguished evolution system `{ν_t}` with a memo table keyed by
/// quantized time.
#[derive(Debug)]
pub struct EvolutionSystem<T: Real> {
    prop: Propagator<T>,
    tol: T,
    route: Route,
    memo: Mutex<HashMap<i64, EntranceLaw<T>>>,
    /// Growth bound gating the truncation route, estimated once per system
    /// (over the past of `t = 0` for aperiodic fields).
    growth: OnceLock<T>,
}

/// Default tolerance of the entrance-law constructions.
pub const DEFAULT_LAW_TOL: f64 = 1e-14;

impl<T: Real> Clone for EvolutionSystem<T> {
    fn clone(&self) -> Self {
        Self::with_settings(self.prop.clone(), self.tol, self.route)
    }
}

impl<T: Real> EvolutionSystem<T> {
    pub fn new(prop: Propagator<T>) -> Self {
        Self::with_settings(prop, lit(DEFAULT_LAW_TOL), Route::Auto)
    }

    pub fn with_settings(prop: Propagator<T>, tol: T, route: Route) -> Self {
        Self {
            prop,
            tol,
            route,
            memo: Mutex::new(HashMap::new()),
            growth: OnceLock::new(),
        }
    }

    pub fn propagator(&self) -> &Propagator<T> {
        &self.prop
    }

    fn key(t: T) -> i64 {
        (to_f64(t) * (1u64 << 32) as f64).round() as i64
    }

    pub fn entrance_law(&self, t: T) -> Result<EntranceLaw<T>> {
        let key = Self::key(t);
        if let Some(hit) = self.memo.lock().expect("memo poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let periodic = self.prop.field().period.is_some();
        let law = match self.route {
            Route::Stein => entrance_law(&self.prop, t, self.tol, Route::Stein)?,
            Route::Auto if periodic => entrance_law(&self.prop, t, self.tol, Route::Stein)?,
            _ => {
                if !is_finite(t) {
                    return Err(Error::Domain("time must be finite".into()));
                }
                if !(self.tol > T::zero()) {
                    return Err(Error::Usage("tolerance must be positive".into()));
                }
                let omega0 = match self.growth.get() {
                    Some(w) => *w,
                    None => {
                        let w = past_growth_bound(&self.prop, T::zero())?;
                        *self.growth.get_or_init(|| w)
                    }
                };
                truncation_route(&self.prop, t, self.tol, omega0)?
            }
        };
        self.memo
            .lock()
            .expect("memo poisoned")
            .insert(key, law.clone());
        Ok(law)
    }

    /// `ν_t` as a Gaussian measure.
    pub fn nu(&self, t: T) -> Result<GaussianMeasure<T>> {
        Ok(self.entrance_law(t)?.law)
    }

    /// `(ġ∞, Q̇∞)` from the mean and Lyapunov equations.
    pub fn law_derivative(&self, t: T) -> Result<(DVector<T>, DMatrix<T>)> {
        let law = self.nu(t)?;
        let (a, b, f) = self.prop.field().eval(t)?;
        let gdot = &a * &law.mean + f;
        let aq = &a * &law.cov;
        let qdot = &aq + aq.transpose() + &b * b.transpose();
        Ok((gdot, qdot))
    }

    /// `∂_t log ρ(x,t)` for the density `ρ(·,t)` of `ν_t`.
    pub fn density_time_logderivative(&self, t: T, x: &DVector<T>) -> Result<T> {
        let law = self.nu(t)?;
        let (gdot, qdot) = self.law_derivative(t)?;
        logderivative_from(&law, &gdot, &qdot, x)
    }
}

/// `∂_t log ρ = -½tr(Q⁻¹Q̇) + ⟨Q⁻¹ġ, x-g⟩ + ½⟨Q⁻¹Q̇Q⁻¹(x-g), x-g⟩`.
pub fn logderivative_from<T: Real>(
    law: &GaussianMeasure<T>,
    gdot: &DVector<T>,
    qdot: &DMatrix<T>,
    x: &DVector<T>,
) -> Result<T> {
    let qi = spd_inverse(&law.cov)?;
    let d = x - &law.mean;
    let half: T = lit(0.5);
    let qiq = &qi * qdot;
    let w = &qiq * &qi * &d;
    Ok(-half * qiq.trace() + (&qi * gdot).dot(&d) + half * w.dot(&d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::builtin;
    use std::f64::consts::PI;

    fn scalar(a: f64, b: f64, f: f64) -> Propagator<f64> {
        Propagator::new(builtin::autonomous(a, b, f, 1, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn log_density_examples() {
        let n01 = GaussianMeasure::standard(1);
        let v = n01.log_density(&DVector::from_vec(vec![0.0])).unwrap();
        assert!((v + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        let n2 = GaussianMeasure::<f64>::standard(2);
        let v = n2.log_density(&DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert!((v + (2.0 * PI).ln() + 1.0).abs() < 1e-14);
        let m = GaussianMeasure::new(
            DVector::from_vec(vec![1.0]),
            DMatrix::from_element(1, 1, 4.0),
        )
        .unwrap();
        let v = m.log_density(&DVector::from_vec(vec![3.0])).unwrap();
        assert!((v + 0.5 * (8.0 * PI).ln() + 0.5).abs() < 1e-14);
    }

    #[test]
    fn singular_covariance_has_no_density() {
        let m = GaussianMeasure::<f64>::new(DVector::zeros(1), DMatrix::zeros(1, 1)).unwrap();
        assert!(m.log_density(&DVector::zeros(1)).is_err());
    }

    #[test]
    fn asymmetric_covariance_is_rejected() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(GaussianMeasure::new(DVector::zeros(2), c).is_err());
    }

    #[test]
    fn scalar_kernel_closed_form() {
        let p = scalar(-1.0, 2f64.sqrt(), 0.0);
        let k = transition_kernel(&p, 0.0, 1.0).unwrap();
        assert!((k.u[(0, 0)] - (-1.0f64).exp()).abs() < 1e-10);
        assert_eq!(k.g[0], 0.0);
        assert!((k.q[(0, 0)] - (1.0 - (-2.0f64).exp())).abs() < 1e-10);
        let id = transition_kernel(&p, 2.0, 2.0).unwrap();
        assert_eq!(id.q, DMatrix::zeros(1, 1));
    }

    #[test]
    fn forced_mean_tends_to_one() {
        let p = scalar(-1.0, 1.0, 1.0);
        let k = transition_kernel(&p, 0.0, 40.0).unwrap();
        assert!((k.g[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn stationary_entrance_laws() {
        let law = entrance_law(&scalar(-1.0, 2f64.sqrt(), 0.0), 0.3, 1e-15, Route::Auto).unwrap();
        assert!((law.law.cov[(0, 0)] - 1.0).abs() < 1e-10);
        assert!(law.law.mean[0].abs() < 1e-14);
        let law = entrance_law(&scalar(-1.0, 2f64.sqrt(), 1.0), 0.3, 1e-15, Route::Auto).unwrap();
        assert!((law.law.mean[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unstable_field_has_no_entrance_law() {
        let p = scalar(0.5, 1.0, 0.0);
        assert!(matches!(
            entrance_law(&p, 0.0, 1e-12, Route::Auto),
            Err(Error::NoEntranceLaw { .. })
        ));
        assert!(matches!(
            entrance_law(&p, 0.0, 1e-12, Route::Truncation),
            Err(Error::NoEntranceLaw { .. })
        ));
    }

    #[test]
    fn stationary_logderivative_vanishes() {
        let sys = EvolutionSystem::new(scalar(-1.0, 2f64.sqrt(), 0.0));
        for x in [-2.0, 0.0, 1.5] {
            let v = sys
                .density_time_logderivative(0.4, &DVector::from_vec(vec![x]))
                .unwrap();
            assert!(v.abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn memo_returns_identical_laws() {
        let sys = EvolutionSystem::new(Propagator::new(builtin::scalar_periodic::<f64>()).unwrap());
        let a = sys.entrance_law(1.0).unwrap();
        let b = sys.entrance_law(1.0).unwrap();
        assert_eq!(a, b);
    }
}
