//! Logarithmic Sobolev inequalities for `ν_t`, the quadratic-form identity
//! of `L(t)`, the hypercontractivity exponent `p(s,t)` and the derivative of
//! `α(s) = ‖P_{s,t}φ‖_{L^{p(s)}(ν_s)}`.

use std::path::Path;

use nalgebra::{Complex, DMatrix, DVector, Vector3, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{
    apply_generator, apply_kernel, generator_polynomial, lp_norm, Observable, DEFAULT_QUAD_ORDER,
};
use crate::linalg::{spd_inverse, spectral_norm, sym_sqrt};
use crate::measures::{logderivative_from, EvolutionSystem, GaussianMeasure, TransitionKernel};
use crate::polynomial::Polynomial;
use crate::quadrature::{gauss_hermite, gauss_legendre, gaussian_expectation, integrate};
use crate::scalar::{cabs, lit, to_f64, Real};

/// `κ(r) = ‖Q(r,-∞)^{1/2} B(r)^{*-1}‖²` (spectral norm).
pub fn kappa<T: Real>(sys: &EvolutionSystem<T>, r: T) -> Result<T> {
    let law = sys.nu(r)?;
    let b = sys.propagator().field().eval(r)?.1;
    kappa_from(&law, &b)
}

fn kappa_from<T: Real>(law: &GaussianMeasure<T>, b: &DMatrix<T>) -> Result<T> {
    let bt_inv = b
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::Singular("B(t) is not invertible".into()))?;
    let k = spectral_norm(&(sym_sqrt(&law.cov)? * bt_inv));
    let k2 = k * k;
    if !(k2 > T::zero()) {
        return Err(Error::Internal(
            "κ must be positive for an elliptic field".into(),
        ));
    }
    Ok(k2)
}

/// `c(p,t) = p/(p-1)·κ(t)`.
pub fn log_sobolev_constant<T: Real>(sys: &EvolutionSystem<T>, t: T, p: T) -> Result<T> {
    if !(p > T::one()) {
        return Err(Error::Usage(
            "the log-Sobolev exponent must exceed 1".into(),
        ));
    }
    Ok(p / (p - T::one()) * kappa(sys, t)?)
}

/// `∂_t log ρ(·,t)` as a quadratic polynomial.
pub fn logderivative_polynomial<T: Real>(sys: &EvolutionSystem<T>, t: T) -> Result<Polynomial<T>> {
    let law = sys.nu(t)?;
    let (gdot, qdot) = sys.law_derivative(t)?;
    logderivative_poly_from(&law, &gdot, &qdot)
}

fn logderivative_poly_from<T: Real>(
    law: &GaussianMeasure<T>,
    gdot: &DVector<T>,
    qdot: &DMatrix<T>,
) -> Result<Polynomial<T>> {
    let n = law.dim();
    let qi = spd_inverse(&law.cov)?;
    let half: T = lit(0.5);
    let qiq = &qi * qdot;
    let quad = &qiq * &qi;
    // In y = x - g: c0 + ⟨b, y⟩ + ½⟨W y, y⟩, then substitute y = x - g.
    let b = &qi * gdot;
    let mut p = Polynomial::constant(n, -half * qiq.trace());
    for i in 0..n {
        let mut a = vec![0; n];
        a[i] = 1;
        p.add_term(a, b[i]);
        for j in 0..n {
            let mut a = vec![0; n];
            a[i] += 1;
            a[j] += 1;
            p.add_term(a, half * quad[(i, j)]);
        }
    }
    Ok(p.substitute_affine(&DMatrix::identity(n, n), &(-&law.mean)))
}

/// Terms of the quadratic-form identity
/// `∫φLφ dν_t = -½∫|B*∇φ|² dν_t + ½∫φ² ∂_tρ dx`.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticFormReport {
    pub t: f64,
    pub phi_l_phi: f64,
    pub dirichlet: f64,
    /// `∫φ² ∂_tρ dx`.
    pub density_term: f64,
    /// `∫φLφ + ½∫|B*∇φ|² - ½∫φ²∂_tρ` by Gauss–Hermite quadrature.
    pub residual: f64,
    /// Same residual with every integral evaluated exactly by Gaussian moments.
    pub residual_exact: f64,
    /// `∫φLφ + ½∫|B*∇φ|² + ½∫φ²∂_tρ`, i.e. the identity with the opposite
    /// sign on the density term; nonzero whenever `ν_t` is not stationary.
    pub opposite_sign_residual: f64,
}

pub fn verify_quadratic_form<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
    phi: &Polynomial<T>,
    quad_order: usize,
) -> Result<QuadraticFormReport> {
    let field = sys.propagator().field();
    let law = sys.nu(t)?;
    let (gdot, qdot) = sys.law_derivative(t)?;
    let b = field.eval(t)?.1;
    let lphi = generator_polynomial(field, t, phi)?;
    let grad = phi.gradient();
    let n = field.dim;
    let bt = b.transpose();
    // Components of B*∇φ as polynomials.
    let bgrad: Vec<Polynomial<T>> = (0..n)
        .map(|i| {
            (0..n).fold(Polynomial::zero(n), |acc, j| {
                acc.add(&grad[j].scale(bt[(i, j)]))
            })
        })
        .collect();
    let dlog = logderivative_poly_from(&law, &gdot, &qdot)?;
    let half: T = lit(0.5);

    // Exact route.
    let e_phi_l = phi.mul(&lphi).gaussian_mean(&law.mean, &law.cov);
    let e_dir = bgrad.iter().fold(T::zero(), |a, g| {
        a + g.mul(g).gaussian_mean(&law.mean, &law.cov)
    });
    let e_rho = phi.mul(phi).mul(&dlog).gaussian_mean(&law.mean, &law.cov);
    let residual_exact = e_phi_l + half * e_dir - half * e_rho;

    // Quadrature route, with the density derivative in closed form.
    let rule = gauss_hermite::<T>(quad_order)?;
    let s = law.sqrt_cov()?;
    let v = gaussian_expectation(&rule, &law.mean, &s, |x| {
        let f = phi.eval(x);
        let lf = lphi.eval(x);
        let dir = bgrad.iter().fold(T::zero(), |a, g| {
            let v = g.eval(x);
            a + v * v
        });
        let d = logderivative_from(&law, &gdot, &qdot, x).unwrap_or_else(|_| T::zero());
        Vector3::new(f * lf, dir, f * f * d)
    });
    let (q_phi_l, q_dir, q_rho) = (v[0], v[1], v[2]);
    Ok(QuadraticFormReport {
        t: to_f64(t),
        phi_l_phi: to_f64(q_phi_l),
        dirichlet: to_f64(q_dir),
        density_term: to_f64(q_rho),
        residual: to_f64(q_phi_l + half * q_dir - half * q_rho),
        residual_exact: to_f64(residual_exact),
        opposite_sign_residual: to_f64(q_phi_l + half * q_dir + half * q_rho),
    })
}

/// Terms of the log-Sobolev inequality
/// `∫|φ|^p log|φ| dν_t ≤ ‖φ‖_p^p log‖φ‖_p + c(p,t)(Re⟨-Lφ, φ_p⟩ + (1/p)∫|φ|^p ∂_tρ)`.
#[derive(Debug, Clone, Serialize)]
pub struct LogSobolevReport {
    pub t: f64,
    pub p: f64,
    pub c: f64,
    pub entropy: f64,
    pub norm_term: f64,
    pub dirichlet: f64,
    pub density_term: f64,
    pub rhs: f64,
    pub margin: f64,
    pub quad_order: usize,
    /// Largest change of any integral when the order is doubled.
    pub max_shift: f64,
}

/// Relative change tolerated when doubling the quadrature order.
pub const QUAD_SHIFT_TOL: f64 = 1e-7;

/// Largest per-axis Gauss–Hermite order used by the log-Sobolev refinement.
pub const MAX_LOG_SOBOLEV_ORDER: usize = 320;

/// Absolute values below this are treated as zeros of `φ`.
const ZERO_FLOOR: f64 = 1e-300;

fn log_sobolev_integrals<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
    p: T,
    phi: &Observable<T>,
    order: usize,
) -> Result<[T; 4]> {
    let field = sys.propagator().field();
    let law = sys.nu(t)?;
    let (gdot, qdot) = sys.law_derivative(t)?;
    let rule = gauss_hermite::<T>(order)?;
    let s = law.sqrt_cov()?;
    let floor: T = lit(ZERO_FLOOR);
    let mut failure = None;
    let v = gaussian_expectation(&rule, &law.mean, &s, |x| {
        let f = phi.eval(x);
        let a = cabs(f);
        if a < floor {
            return Vector4::zeros();
        }
        let ap = a.powf(p);
        let lf = match apply_generator(field, t, phi, x) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                Complex::new(T::zero(), T::zero())
            }
        };
        // Re(-Lφ · conj(|φ|^{p-2} φ)).
        let weight = a.powf(p - lit(2.0));
        let dir = -(lf * f.conj()).re * weight;
        let d = logderivative_from(&law, &gdot, &qdot, x).unwrap_or_else(|_| T::zero());
        Vector4::new(ap * a.ln(), ap, dir, ap * d)
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok([v[0], v[1], v[2], v[3]])
}

/// Evaluates both sides of the inequality by Gauss–Hermite quadrature,
/// doubling the order from `quad_order` until no integral moves by more
/// than [`QUAD_SHIFT_TOL`].
pub fn verify_log_sobolev<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
    p: T,
    phi: &Observable<T>,
    quad_order: usize,
) -> Result<LogSobolevReport> {
    let c = log_sobolev_constant(sys, t, p)?;
    if quad_order < 1 {
        return Err(Error::Usage("quadrature order must be at least 1".into()));
    }
    let mut order = quad_order;
    let mut base = log_sobolev_integrals(sys, t, p, phi, order)?;
    let (doubled, max_shift) = loop {
        let doubled = log_sobolev_integrals(sys, t, p, phi, 2 * order)?;
        let mut max_shift: f64 = 0.0;
        for (a, b) in base.iter().zip(&doubled) {
            let (a, b) = (to_f64(*a), to_f64(*b));
            max_shift = max_shift.max((a - b).abs() / a.abs().max(1.0));
        }
        if max_shift <= QUAD_SHIFT_TOL {
            break (doubled, max_shift);
        }
        if 4 * order > MAX_LOG_SOBOLEV_ORDER {
            return Err(Error::Quadrature(format!(
                "doubling the order from {order} moved an integral by {max_shift:.3e}"
            )));
        }
        order *= 2;
        base = doubled;
    };
    let [entropy, mass, dir, dt] = doubled;
    if !(mass > T::zero()) {
        return Err(Error::Domain("φ vanishes identically".into()));
    }
    let norm = mass.powf(T::one() / p);
    let norm_term = mass * norm.ln();
    let density_term = dt / p;
    let rhs = norm_term + c * (dir + density_term);
    Ok(LogSobolevReport {
        t: to_f64(t),
        p: to_f64(p),
        c: to_f64(c),
        entropy: to_f64(entropy),
        norm_term: to_f64(norm_term),
        dirichlet: to_f64(dir),
        density_term: to_f64(density_term),
        rhs: to_f64(rhs),
        margin: to_f64(rhs - entropy),
        quad_order: 2 * order,
        max_shift,
    })
}

/// `∫_a^b 1/κ(r) dr` by composite Gauss–Legendre.
fn inverse_kappa_integral<T: Real>(sys: &EvolutionSystem<T>, a: T, b: T) -> Result<T> {
    if b <= a {
        return Ok(T::zero());
    }
    let rule = gauss_legendre::<T>(8)?;
    let panels = to_f64(((b - a) / lit(0.25)).ceil()).max(1.0) as usize;
    let mut failure = None;
    let v = integrate(&rule, a, b, panels, |r| match kappa(sys, r) {
        Ok(k) => T::one() / k,
        Err(e) => {
            failure = Some(e);
            T::zero()
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Exponent path `p(s,t)` with `p(t,t) = q` and `p' = -(p-1)/κ`.
#[derive(Debug, Clone, Serialize)]
pub struct HyperPlan {
    pub t: f64,
    pub q: f64,
    pub s_grid: Vec<f64>,
    pub kappa: Vec<f64>,
    /// `1 + (q-1)exp(∫_s^t 1/κ)`.
    pub p_closed: Vec<f64>,
    /// Backward RK4 (with Richardson extrapolation) on `p' = -(p-1)/κ(s)`.
    pub p_ode: Vec<f64>,
    pub max_route_diff: f64,
    /// `1 + (q-1)e^{2c₀(s-t)}` when `c₀` was supplied.
    pub lower_bound: Option<Vec<f64>>,
    pub c0: Option<f64>,
}

impl HyperPlan {
    /// `c(p,s) = p/(p-1)·κ(s)` along the path.
    pub fn c_path(&self) -> Vec<f64> {
        self.p_closed
            .iter()
            .zip(&self.kappa)
            .map(|(p, k)| p / (p - 1.0) * k)
            .collect()
    }

    pub fn p_at(&self, i: usize) -> f64 {
        self.p_closed[i]
    }

    pub fn lower_bound_holds(&self) -> bool {
        match &self.lower_bound {
            Some(lb) => self.p_closed.iter().zip(lb).all(|(p, l)| *p >= *l),
            None => true,
        }
    }
}

/// RK4 step of the exponent ODE for `p` from `s0` to `s0 - h`.
fn exponent_ode<T: Real>(sys: &EvolutionSystem<T>, t: T, s: T, q: T, steps: usize) -> Result<T> {
    if s >= t {
        return Ok(q);
    }
    let h = (t - s) / lit::<T>(steps as f64);
    let rhs = |r: T, p: T| -> Result<T> { Ok(-(p - T::one()) / kappa(sys, r)?) };
    let mut p = q;
    let two: T = lit(2.0);
    for i in 0..steps {
        let r = t - h * lit::<T>(i as f64);
        // Integrating backward: dp/d(-r) = -rhs.
        let k1 = -rhs(r, p)?;
        let k2 = -rhs(r - h / two, p + h / two * k1)?;
        let k3 = -rhs(r - h / two, p + h / two * k2)?;
        let k4 = -rhs(r - h, p + h * k3)?;
        p += h / lit(6.0) * (k1 + k2 * two + k3 * two + k4);
    }
    Ok(p)
}

/// Base RK4 step for the exponent ODE.
pub const EXPONENT_STEP: f64 = 0.025;

pub fn exponent_path<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
    q: T,
    s_grid: &[T],
    c0: Option<f64>,
) -> Result<HyperPlan> {
    if !(q > T::one()) {
        return Err(Error::Usage("q must exceed 1".into()));
    }
    if s_grid.iter().any(|&s| s > t) {
        return Err(Error::Usage("exponent grid must lie in (-∞, t]".into()));
    }
    let mut kap = vec![];
    let mut closed = vec![];
    let mut ode = vec![];
    for &s in s_grid {
        kap.push(to_f64(kappa(sys, s)?));
        let integral = inverse_kappa_integral(sys, s, t)?;
        closed.push(to_f64(T::one() + (q - T::one()) * integral.exp()));
        let steps = to_f64(((t - s) / lit(EXPONENT_STEP)).ceil()).max(1.0) as usize;
        let coarse = exponent_ode(sys, t, s, q, steps)?;
        let fine = exponent_ode(sys, t, s, q, 2 * steps)?;
        ode.push(to_f64(fine + (fine - coarse) / lit(15.0)));
    }
    let max_route_diff = closed
        .iter()
        .zip(&ode)
        .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max);
    let lower_bound = c0.map(|c| {
        s_grid
            .iter()
            .map(|&s| 1.0 + (to_f64(q) - 1.0) * (2.0 * c * to_f64(s - t)).exp())
            .collect()
    });
    Ok(HyperPlan {
        t: to_f64(t),
        q: to_f64(q),
        s_grid: s_grid.iter().map(|&s| to_f64(s)).collect(),
        kappa: kap,
        p_closed: closed,
        p_ode: ode,
        max_route_diff,
        lower_bound,
        c0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormRoute {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Serialize)]
pub struct HyperRow {
    pub s: f64,
    pub p: f64,
    pub observable: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub route: NormRoute,
}

#[derive(Debug, Clone, Serialize)]
pub struct HyperReport {
    pub rows: Vec<HyperRow>,
    pub min_closed_form_margin: f64,
    pub min_quadrature_margin: f64,
}

/// Margins `‖φ‖_{L^q(ν_t)} - ‖P_{s,t}φ‖_{L^{p(s,t)}(ν_s)}` along a plan.
pub fn verify_hypercontractivity<T: Real>(
    sys: &EvolutionSystem<T>,
    plan: &HyperPlan,
    family: &[Observable<T>],
    quad_order: usize,
) -> Result<HyperReport> {
    let t: T = lit(plan.t);
    let nu_t = sys.nu(t)?;
    let q: T = lit(plan.q);
    let mut rows = vec![];
    for (i, phi) in family.iter().enumerate() {
        let route = match phi {
            Observable::RealExponential { .. } | Observable::ComplexExponential { .. } => {
                NormRoute::ClosedForm
            }
            _ => NormRoute::Quadrature,
        };
        let rhs = to_f64(lp_norm(&nu_t, phi, q, quad_order)?);
        for (j, &s) in plan.s_grid.iter().enumerate() {
            let s_t: T = lit(s);
            let k = sys.propagator().kernel(s_t, t)?;
            let image = apply_kernel(&k, phi)?;
            let p = plan.p_closed[j];
            let lhs = to_f64(lp_norm(&sys.nu(s_t)?, &image, lit(p), quad_order)?);
            rows.push(HyperRow {
                s,
                p,
                observable: i,
                lhs,
                rhs,
                margin: rhs - lhs,
                route,
            });
        }
    }
    let min_of = |r: NormRoute| {
        rows.iter()
            .filter(|x| x.route == r)
            .map(|x| x.margin)
            .fold(f64::INFINITY, f64::min)
    };
    Ok(HyperReport {
        min_closed_form_margin: min_of(NormRoute::ClosedForm),
        min_quadrature_margin: min_of(NormRoute::Quadrature),
        rows,
    })
}

/// How `p(s)` is chosen when differentiating `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExponentChoice {
    /// `p(t) = q`, `p' = -(p-1)/κ`.
    Theorem { q: f64 },
    /// `p ≡ p0`.
    Constant { p: f64 },
}

/// The three terms of `α'(s)` (each already multiplied by `α^{1-p}`) and
/// the derivative itself.
#[derive(Debug, Clone, Serialize)]
pub struct AlphaDerivative {
    pub s: f64,
    pub p: f64,
    pub dp: f64,
    pub alpha: f64,
    pub time_term: f64,
    pub density_term: f64,
    pub entropy_term: f64,
    pub analytic: f64,
    pub finite_difference: f64,
}

/// Step of the central difference of `α`.
pub const ALPHA_FD_STEP: f64 = 1e-4;

struct ExpState<T: Real> {
    /// `u(s,x) = scale·e^{⟨k,x⟩}`.
    k: DVector<T>,
    scale: T,
    law: GaussianMeasure<T>,
}

fn exp_state<T: Real>(
    k_t: &TransitionKernel<T>,
    k0: &DVector<T>,
    scale0: T,
    law: GaussianMeasure<T>,
) -> ExpState<T> {
    let half: T = lit(0.5);
    ExpState {
        k: k_t.u.transpose() * k0,
        scale: scale0 * (k_t.g.dot(k0) + half * (&k_t.q * k0).dot(k0)).exp(),
        law,
    }
}

/// `‖scale·e^{⟨k,x⟩}‖_{L^p(N(m,S))}`.
fn exp_norm<T: Real>(st: &ExpState<T>, p: T) -> T {
    let half: T = lit(0.5);
    st.scale.abs() * (st.law.mean.dot(&st.k) + half * p * (&st.law.cov * &st.k).dot(&st.k)).exp()
}

/// `α'(s)` for `φ = scale·e^{⟨k,x⟩}` by the three-term formula (integrals
/// evaluated exactly under the exponentially tilted Gaussian) and by a
/// central difference of the closed-form `α`.
pub fn alpha_derivative<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
    s: T,
    phi: &Observable<T>,
    choice: ExponentChoice,
) -> Result<AlphaDerivative> {
    let (k0, scale0) = match phi {
        Observable::RealExponential { k, scale } => (k.clone(), *scale),
        Observable::Polynomial(p) if p.degree() == 0 => {
            (DVector::zeros(p.dim()), p.coefficient(&vec![0; p.dim()]))
        }
        _ => {
            return Err(Error::Unsupported(
                "α' is available for real exponentials and constants".into(),
            ))
        }
    };
    let h: T = lit(ALPHA_FD_STEP);
    if s + h > t {
        return Err(Error::Usage(
            "s must lie at least one difference step before t".into(),
        ));
    }
    let prop = sys.propagator();
    let field = prop.field();
    // Every quantity is referenced to K(s+h, t) and ν_{s-h} so the
    // difference quotient sees no integrator noise.
    let k_top = prop.kernel(s + h, t)?;
    let k_mid = prop.kernel(s, s + h)?;
    let k_low = prop.kernel(s - h, s)?;
    let nu_low = sys.nu(s - h)?;
    let nu_mid = k_low.push(&nu_low);
    let nu_top = k_mid.push(&nu_mid);
    let at_top = exp_state(&k_top, &k0, scale0, nu_top);
    let at_mid = exp_state(&k_top.after(&k_mid), &k0, scale0, nu_mid);
    let at_low = exp_state(&k_top.after(&k_mid).after(&k_low), &k0, scale0, nu_low);

    let (p_low, p_mid, p_top, dp) = match choice {
        ExponentChoice::Constant { p } => {
            if !(p > 1.0) {
                return Err(Error::Usage("p must exceed 1".into()));
            }
            (lit(p), lit(p), lit(p), T::zero())
        }
        ExponentChoice::Theorem { q } => {
            if !(q > 1.0) {
                return Err(Error::Usage("q must exceed 1".into()));
            }
            let q: T = lit(q);
            let top = T::one() + (q - T::one()) * inverse_kappa_integral(sys, s + h, t)?.exp();
            let mid = T::one() + (top - T::one()) * inverse_kappa_integral(sys, s, s + h)?.exp();
            let low = T::one() + (mid - T::one()) * inverse_kappa_integral(sys, s - h, s)?.exp();
            let b = field.eval(s)?.1;
            let dp = -(mid - T::one()) / kappa_from(&at_mid.law, &b)?;
            (low, mid, top, dp)
        }
    };
    let alpha = exp_norm(&at_mid, p_mid);
    if !(alpha > T::zero()) {
        return Err(Error::Domain("α(s) = 0".into()));
    }
    let fd = (exp_norm(&at_top, p_top) - exp_norm(&at_low, p_low)) / (h + h);

    // ∂_s u = u·∂_sE with ∂_sE(x) = -⟨U f(s), k⟩ - ½⟨U BB* U* k, k⟩ - ⟨A(s)* U* k, x⟩.
    let (a, b, f) = field.eval(s)?;
    let k_t = k_top.after(&k_mid);
    let uk = k_t.u.transpose() * &k0;
    let half: T = lit(0.5);
    let bb = &b * b.transpose();
    let de = Polynomial::affine(
        &(-(a.transpose() * &uk)),
        -(f.dot(&uk)) - half * (&bb * &uk).dot(&uk),
    );
    let law = &at_mid.law;
    let p = p_mid;
    // Tilted measure: E_ν[e^{p⟨k,x⟩}h] = e^{p⟨k,m⟩ + ½p²⟨Sk,k⟩}·E_{N(m + pSk, S)}[h].
    let tilted_mean = &law.mean + &law.cov * &uk * p;
    let tilted = |h: &Polynomial<T>| h.gaussian_mean(&tilted_mean, &law.cov);
    // With α^p = ∫|u|^p dν = |scale|^p·mgf, every term of α' = α^{1-p}(…)
    // reduces to α times a tilted moment, which stays finite for large p.
    // ⟨∂_s u, |u|^{p-2}u⟩ term; the sign of scale cancels.
    let time_term = alpha * tilted(&de);
    let gdot = &a * &law.mean + &f;
    let aq = &a * &law.cov;
    let qdot = &aq + aq.transpose() + &bb;
    let dlog = logderivative_poly_from(law, &gdot, &qdot)?;
    let density_term = alpha * tilted(&dlog) / p;
    // log|u| = log|scale| + ⟨k,x⟩.
    let log_u = Polynomial::affine(&uk, at_mid.scale.abs().ln());
    let entropy_term = alpha * dp / p * (tilted(&log_u) - alpha.ln());
    let analytic = time_term + density_term + entropy_term;
    Ok(AlphaDerivative {
        s: to_f64(s),
        p: to_f64(p),
        dp: to_f64(dp),
        alpha: to_f64(alpha),
        time_term: to_f64(time_term),
        density_term: to_f64(density_term),
        entropy_term: to_f64(entropy_term),
        analytic: to_f64(analytic),
        finite_difference: to_f64(fd),
    })
}

/// Writes `s, p, margin_0, margin_1, …` for a hypercontractivity report.
pub fn write_hyper_csv(plan: &HyperPlan, report: &HyperReport, path: &Path) -> Result<()> {
    let count = report
        .rows
        .iter()
        .map(|r| r.observable + 1)
        .max()
        .unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["s".to_string(), "p".to_string()];
    header.extend((0..count).map(|i| format!("margin_{i}")));
    w.write_record(&header)?;
    for (j, s) in plan.s_grid.iter().enumerate() {
        let mut rec = vec![format!("{:.16e}", s), format!("{:.16e}", plan.p_closed[j])];
        for i in 0..count {
            let m = report
                .rows
                .iter()
                .find(|r| r.observable == i && r.s == *s)
                .map(|r| format!("{:.16e}", r.margin))
                .unwrap_or_default();
            rec.push(m);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Default Gauss–Hermite order of the hypercontractivity and log-Sobolev checks.
pub const HYPER_QUAD_ORDER: usize = DEFAULT_QUAD_ORDER;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::builtin;
    use crate::propagator::Propagator;

    fn system(field: crate::coefficients::CoefficientField<f64>) -> EvolutionSystem<f64> {
        EvolutionSystem::new(Propagator::new(field).unwrap())
    }

    #[test]
    fn constants_of_the_stationary_ou() {
        let sys = system(builtin::scalar_autonomous());
        assert!((kappa(&sys, 0.0).unwrap() - 0.5).abs() < 1e-10);
        assert!((log_sobolev_constant(&sys, 0.0, 2.0).unwrap() - 1.0).abs() < 1e-10);
        assert!((log_sobolev_constant(&sys, 0.0, 4.0).unwrap() - 2.0 / 3.0).abs() < 1e-10);
        assert!(log_sobolev_constant(&sys, 0.0, 1.0).is_err());
        let scaled = system(builtin::autonomous(-1.0, 3.0 * 2f64.sqrt(), 0.0, 1, 1.0).unwrap());
        assert!((kappa(&scaled, 0.0).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn quadratic_form_examples() {
        let sys = system(builtin::scalar_autonomous());
        let x = Polynomial::variable(1, 0);
        let r = verify_quadratic_form(&sys, 0.0, &x, 40).unwrap();
        assert!((r.phi_l_phi + 1.0).abs() < 1e-9);
        assert!(r.residual.abs() < 1e-9);
        let one = Polynomial::constant(1, 1.0);
        let r = verify_quadratic_form(&sys, 0.0, &one, 40).unwrap();
        assert!(r.residual.abs() < 1e-12);
        let sys = system(builtin::scalar_periodic());
        let x2 = Polynomial::monomial(vec![2], 1.0);
        let r = verify_quadratic_form(&sys, 0.7, &x2, 40).unwrap();
        assert!(
            r.residual.abs() <= 1e-7 && r.residual_exact.abs() <= 1e-9,
            "{r:?}"
        );
        assert!(r.opposite_sign_residual.abs() > 1e-3, "{r:?}");
    }

    #[test]
    fn log_sobolev_classical_and_constant() {
        let sys = system(builtin::scalar_autonomous());
        let phi = Observable::Polynomial(
            Polynomial::from_terms(1, vec![(vec![0], 1.0), (vec![2], 1.0)]).unwrap(),
        );
        let r = verify_log_sobolev(&sys, 0.0, 2.0, &phi, 40).unwrap();
        assert!(
            r.density_term.abs() < 1e-9 && (r.c - 1.0).abs() < 1e-10,
            "{r:?}"
        );
        assert!(r.margin >= 0.0);
        let r = verify_log_sobolev(&sys, 0.0, 3.0, &Observable::constant(1, 2.5), 40).unwrap();
        assert!(r.margin.abs() < 1e-12);
    }

    #[test]
    fn exponent_path_of_the_stationary_ou() {
        let sys = system(builtin::scalar_autonomous());
        let grid = [-2.0, -1.0, -0.5, 0.0];
        let plan = exponent_path(&sys, 0.0, 2.0, &grid, Some(-1.0)).unwrap();
        for (s, p) in grid.iter().zip(&plan.p_closed) {
            let expect = 1.0 + (2.0 * (0.0 - s)).exp();
            assert!((p - expect).abs() < 1e-8 * expect, "{s}: {p} vs {expect}");
        }
        assert_eq!(plan.p_closed[3], 2.0);
        assert!(plan.max_route_diff < 1e-8);
        assert!(plan.lower_bound_holds());
    }

    #[test]
    fn hypercontractivity_is_sharp_on_exponentials() {
        let sys = system(builtin::scalar_autonomous());
        let plan = exponent_path(&sys, 0.0, 2.0, &[-1.0], None).unwrap();
        let fam = vec![
            Observable::real_exp(DVector::from_element(1, 1.0)).unwrap(),
            Observable::constant(1, 3.0),
        ];
        let rep = verify_hypercontractivity(&sys, &plan, &fam, 40).unwrap();
        assert!(rep.min_closed_form_margin >= -1e-9);
        assert!(rep.rows[0].margin.abs() < 1e-8, "{:?}", rep.rows[0]);
        assert!(rep.rows[1].margin.abs() < 1e-12);
    }

    #[test]
    fn alpha_derivative_routes_agree() {
        let sys = system(builtin::scalar_periodic());
        let phi = Observable::real_exp(DVector::from_element(1, 0.8)).unwrap();
        for choice in [
            ExponentChoice::Theorem { q: 2.0 },
            ExponentChoice::Constant { p: 3.0 },
        ] {
            let d = alpha_derivative(&sys, 1.0, 0.2, &phi, choice).unwrap();
            assert!(
                (d.analytic - d.finite_difference).abs()
                    <= 1e-4 * d.finite_difference.abs() + 1e-9 * d.alpha,
                "{d:?}"
            );
        }
        let d = alpha_derivative(&sys, 1.0, 0.2, &phi, ExponentChoice::Theorem { q: 2.0 }).unwrap();
        assert!(d.analytic >= -1e-9);
    }
}
