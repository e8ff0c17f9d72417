//! Exponential decay of `P_{s,t}(I - M_t)`: measured decay curves, Floquet
//! sharpness, the constant `c₀`, the global decay bound, the Poincaré
//! inequality on separable functions and the projection `Π`.

use std::path::Path;

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{
    apply_kernel, mean_functional, quadrature_expectation, variance, Observable, FD_STEP,
};
use crate::linalg::{null_vectors, spectral_norm, to_complex};
use crate::measures::{EvolutionSystem, GaussianMeasure};
use crate::polynomial::Polynomial;
use crate::propagator::{
    analyze_monodromy, MEstimate, Propagator, MULTIPLIER_CLUSTER_TOL, SEMISIMPLE_RANK_TOL,
};
use crate::scalar::{cabs, creal, lit, to_f64, Real};
use crate::spectral::{linear_eigenpairs, poincare_kernel, ComplexPolynomial, ComplexValue};

/// `‖P_{s,t}(φ - M_tφ)‖_{L²(ν_s)}`.
///
/// Invariance gives `∫P_{s,t}φ dν_s = M_tφ`, so the norm equals the standard
/// deviation of `P_{s,t}φ` under `ν_s`; that form is evaluated because it
/// stays accurate when the norm is many orders below `|M_tφ|`.
pub fn decay_norm<T: Real>(sys: &EvolutionSystem<T>, s: T, t: T, phi: &Observable<T>) -> Result<T> {
    if !phi.is_closed_form() {
        return Err(Error::Unsupported(
            "decay curves need polynomial or exponential observables".into(),
        ));
    }
    let k = sys.propagator().kernel(s, t)?;
    let image = apply_kernel(&k, phi)?;
    Ok(variance(&sys.nu(s)?, &image, 0)?.sqrt())
}

/// Complex-polynomial variant of [`decay_norm`].
pub fn decay_norm_complex<T: Real>(
    sys: &EvolutionSystem<T>,
    s: T,
    t: T,
    phi: &ComplexPolynomial<T>,
) -> Result<T> {
    let k = sys.propagator().kernel(s, t)?;
    let image = phi.apply_kernel(&k);
    let nu = sys.nu(s)?;
    let v = variance(&nu, &Observable::Polynomial(image.re), 0)?
        + variance(&nu, &Observable::Polynomial(image.im), 0)?;
    Ok(v.sqrt())
}

/// `‖φ‖_{L²(m)}` for closed-form observables (exact), quadrature otherwise.
pub fn l2_norm<T: Real>(m: &GaussianMeasure<T>, phi: &Observable<T>) -> Result<T> {
    crate::kernel::lp_norm(m, phi, lit(2.0), crate::kernel::DEFAULT_QUAD_ORDER)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayCurve {
    pub t: f64,
    pub lags: Vec<f64>,
    pub norms: Vec<f64>,
    /// `‖φ‖_{L²(ν_t)}`.
    pub phi_norm: f64,
    /// Least-squares slope of `log norm` against lag over the tail half.
    pub fitted_rate: Option<f64>,
    /// Set when every norm vanishes (constant observable).
    pub degenerate: bool,
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

fn fit_tail(lags: &[f64], norms: &[f64]) -> Option<f64> {
    let start = lags.len() / 2;
    let (x, y): (Vec<f64>, Vec<f64>) = lags[start..]
        .iter()
        .zip(&norms[start..])
        .filter(|(_, n)| **n > 0.0)
        .map(|(l, n)| (*l, n.ln()))
        .unzip();
    ls_slope(&x, &y)
}

pub fn decay_curve<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
    phi: &Observable<T>,
    lags: &[T],
) -> Result<DecayCurve> {
    if lags.is_empty() {
        return Err(Error::Usage("lag grid is empty".into()));
    }
    if lags.iter().any(|&l| l < T::zero()) {
        return Err(Error::Usage("lags must be non-negative".into()));
    }
    let norms: Vec<f64> = lags
        .iter()
        .map(|&l| decay_norm(sys, t - l, t, phi).map(to_f64))
        .collect::<Result<_>>()?;
    let lags_f: Vec<f64> = lags.iter().map(|&l| to_f64(l)).collect();
    let degenerate = norms.iter().all(|&n| n == 0.0);
    Ok(DecayCurve {
        t: to_f64(t),
        phi_norm: to_f64(l2_norm(&sys.nu(t)?, phi)?),
        fitted_rate: if degenerate {
            None
        } else {
            fit_tail(&lags_f, &norms)
        },
        lags: lags_f,
        norms,
        degenerate,
    })
}

/// One peripheral eigenfunction tracked over whole periods.
#[derive(Debug, Clone, Serialize)]
pub struct PeripheralCurve {
    pub lambda: ComplexValue,
    /// `norm(k)/‖φ‖` for `k = 1..=k_max`.
    pub ratios: Vec<f64>,
    /// `max_k |ratio(k)/r₀^k - 1|`.
    pub max_rel_error: f64,
}

/// Growth of a generalized eigenfunction of a non-semisimple peripheral
/// multiplier.
#[derive(Debug, Clone, Serialize)]
pub struct JordanGrowth {
    pub lambda: ComplexValue,
    /// `norm(k)/r₀^k` for `k = 1..=k_max`.
    pub ratios: Vec<f64>,
    /// Least-squares slope of the ratios over `k ∈ [k_max/2, k_max]`.
    pub slope: f64,
    /// `0.9·‖(λ - V)φ₁‖/r₀`.
    pub slope_bound: f64,
    pub increasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SharpnessReport {
    pub t: f64,
    pub r0: f64,
    pub omega0: f64,
    pub k_max: u32,
    pub peripheral_semisimple: bool,
    pub curves: Vec<PeripheralCurve>,
    pub jordan: Vec<JordanGrowth>,
}

impl SharpnessReport {
    pub fn passed(&self, tol: f64) -> bool {
        let exact = self.curves.iter().all(|c| c.max_rel_error <= tol);
        let growth = self
            .jordan
            .iter()
            .all(|j| j.increasing && j.slope >= j.slope_bound);
        if self.peripheral_semisimple {
            exact && !self.curves.is_empty()
        } else {
            growth && !self.jordan.is_empty()
        }
    }
}

/// Exact-rate decay of the peripheral degree-one eigenfunctions at
/// `s = t - kT`, and linear-in-`k` growth of `norm(k)/r₀^k` for generalized
/// eigenfunctions of non-semisimple peripheral multipliers.
pub fn verify_sharpness<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
    k_max: u32,
) -> Result<SharpnessReport> {
    let period = sys.propagator().field().require_period()?;
    if k_max < 2 {
        return Err(Error::Usage("k_max must be at least 2".into()));
    }
    let v = poincare_kernel(sys, t)?;
    let fl = analyze_monodromy(&v.u, period)?;
    let r0 = to_f64(fl.r0);
    let nu = sys.nu(t)?;
    let peripheral =
        |lambda: Complex<T>| (to_f64(cabs(lambda)) - r0).abs() <= MULTIPLIER_CLUSTER_TOL * r0;
    let mut curves = vec![];
    let mut jordan = vec![];
    for pair in linear_eigenpairs(sys, t)? {
        if !peripheral(pair.lambda) {
            continue;
        }
        let base = decay_norm_complex(sys, t, t, &pair.phi)?;
        let mut ratios = vec![];
        let mut max_rel_error: f64 = 0.0;
        for k in 1..=k_max {
            let s = t - period * lit::<T>(k as f64);
            let r = to_f64(decay_norm_complex(sys, s, t, &pair.phi)? / base);
            max_rel_error = max_rel_error.max((r / r0.powi(k as i32) - 1.0).abs());
            ratios.push(r);
        }
        curves.push(PeripheralCurve {
            lambda: ComplexValue::from(pair.lambda),
            ratios,
            max_rel_error,
        });
    }
    let n = v.dim();
    let mt = to_complex(&v.u.transpose());
    let tol = lit::<T>(SEMISIMPLE_RANK_TOL) * spectral_norm(&v.u);
    for (lambda, mult, semisimple) in fl.distinct_multipliers() {
        if semisimple || !peripheral(lambda) || mult < 2 {
            continue;
        }
        let shifted = DMatrix::<Complex<T>>::identity(n, n) * lambda - &mt;
        let kernel1 = null_vectors(&shifted, tol);
        let kernel2 = null_vectors(&(&shifted * &shifted), tol * spectral_norm(&v.u));
        // Generalized vector: the element of Ker² farthest from Ker.
        let c1 = kernel2
            .iter()
            .map(|w| {
                let mut r = w.clone();
                for e in &kernel1 {
                    let proj = e.adjoint() * &r;
                    r -= e * proj[(0, 0)];
                }
                r
            })
            .max_by(|a, b| {
                a.norm()
                    .partial_cmp(&b.norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .ok_or_else(|| Error::Internal("no generalized eigenvector".into()))?;
        let c1 = &c1 / creal(c1.norm());
        let phi1 = linear_form(&c1);
        let base = decay_norm_complex(sys, t, t, &phi1)?;
        let psi0 = phi1.scale(lambda).sub(&phi1.apply_kernel(&v));
        let psi0_norm = to_f64(
            variance(&nu, &Observable::Polynomial(psi0.re.clone()), 0)?
                + variance(&nu, &Observable::Polynomial(psi0.im.clone()), 0)?,
        )
        .sqrt();
        let mut ratios = vec![];
        for k in 1..=k_max {
            let s = t - period * lit::<T>(k as f64);
            let norm = to_f64(decay_norm_complex(sys, s, t, &phi1)?);
            ratios.push(norm / to_f64(base) / r0.powi(k as i32));
        }
        let half = (k_max / 2) as usize;
        let ks: Vec<f64> = (half..=k_max as usize).map(|k| k as f64).collect();
        let tail: Vec<f64> = ratios[half - 1..].to_vec();
        let slope = ls_slope(&ks, &tail).unwrap_or(0.0);
        jordan.push(JordanGrowth {
            lambda: ComplexValue::from(lambda),
            increasing: ratios.windows(2).all(|w| w[1] > w[0]),
            slope,
            slope_bound: 0.9 * psi0_norm / to_f64(base) / r0,
            ratios,
        });
    }
    Ok(SharpnessReport {
        t: to_f64(t),
        r0,
        omega0: to_f64(fl.omega0),
        k_max,
        peripheral_semisimple: fl.peripheral_semisimple(),
        curves,
        jordan,
    })
}

fn linear_form<T: Real>(c: &DVector<Complex<T>>) -> ComplexPolynomial<T> {
    let n = c.len();
    let mut re = Polynomial::zero(n);
    let mut im = Polynomial::zero(n);
    for i in 0..n {
        let mut a = vec![0; n];
        a[i] = 1;
        re.add_term(a.clone(), c[i].re);
        im.add_term(a, c[i].im);
    }
    ComplexPolynomial { re, im }
}

/// Ratio `M_req(lag_b)/M_req(lag_a)` of the constants an exponent `ω`
/// would need at two lags: `M_req(lag) = norm(lag)/(e^{ω·lag}‖φ‖)`.
pub fn required_m_growth<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
    phi: &Observable<T>,
    omega: f64,
    lag_a: T,
    lag_b: T,
) -> Result<f64> {
    let na = to_f64(decay_norm(sys, t - lag_a, t, phi)?);
    let nb = to_f64(decay_norm(sys, t - lag_b, t, phi)?);
    let da = (-omega * to_f64(lag_a)).exp();
    let db = (-omega * to_f64(lag_b)).exp();
    Ok((nb * db) / (na * da))
}

/// Decay constants and `c₀ = min_ω ω μ₀²/(M(ω)² C²)` over a grid.
#[derive(Debug, Clone, Serialize)]
pub struct DecayProfile {
    pub omega0: f64,
    pub r0: Option<f64>,
    pub m_table: Vec<MEstimate>,
    pub mu0: f64,
    pub norm_c: f64,
    pub c0: f64,
    /// Grid value of `ω` attaining `c₀`.
    pub argmin_omega: f64,
    pub omega_grid: Vec<f64>,
}

/// `ω = ω₀ + δ|ω₀|` with `δ` log-spaced on `[1e-9, 0.99]`, clustered near
/// `ω₀` where the normal-case infimum sits.
pub fn default_c0_grid(omega0: f64, points: usize) -> Vec<f64> {
    let (lo, hi) = (1e-9f64.ln(), 0.99f64.ln());
    (0..points)
        .map(|i| {
            let frac = if points == 1 {
                0.0
            } else {
                i as f64 / (points - 1) as f64
            };
            omega0 + (lo + (hi - lo) * frac).exp() * omega0.abs()
        })
        .collect()
}

pub fn compute_c0<T: Real>(
    prop: &Propagator<T>,
    omega_grid: &[f64],
    s_grid: &[T],
    gap_grid: &[T],
) -> Result<DecayProfile> {
    if omega_grid.is_empty() {
        return Err(Error::Usage("ω grid is empty".into()));
    }
    let field = prop.field();
    let table = prop.growth_table(s_grid, gap_grid)?;
    let omega0 = table.omega0;
    let r0 = match field.period {
        Some(_) => Some(to_f64(prop.floquet()?.r0)),
        None => None,
    };
    if omega0 >= 0.0 {
        return Err(Error::NoEntranceLaw { omega0 });
    }
    let mu0 = to_f64(field.mu0);
    let c = to_f64(field.norm_c);
    let mut table_out = vec![];
    let mut c0 = f64::INFINITY;
    let mut argmin = f64::NAN;
    for &w in omega_grid {
        if !(w > omega0 && w < 0.0) {
            return Err(Error::Usage(format!(
                "ω = {w} is outside (ω₀, 0) = ({omega0}, 0)"
            )));
        }
        let m = table.m_estimate(w)?;
        let v = w * mu0 * mu0 / (m.value * m.value * c * c);
        if v < c0 {
            c0 = v;
            argmin = w;
        }
        table_out.push(m);
    }
    Ok(DecayProfile {
        omega0,
        r0,
        m_table: table_out,
        mu0,
        norm_c: c,
        c0,
        argmin_omega: argmin,
        omega_grid: omega_grid.to_vec(),
    })
}

/// One row of a decay-bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub observable: usize,
    pub lag: f64,
    pub norm: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginReport {
    pub rows: Vec<DecayRow>,
    pub min_margin: f64,
}

impl MarginReport {
    fn from_rows(rows: Vec<DecayRow>) -> Self {
        let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
        Self { rows, min_margin }
    }

    pub fn passed(&self, slack: f64) -> bool {
        self.min_margin >= -slack
    }
}

/// Margins `e^{c₀·lag}‖φ‖_{L²(ν_t)} - ‖P_{t-lag,t}(φ - M_tφ)‖_{L²(ν_{t-lag})}`.
pub fn verify_global_decay<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
    c0: f64,
    family: &[Observable<T>],
    lags: &[T],
) -> Result<MarginReport> {
    let nu_t = sys.nu(t)?;
    let mut rows = vec![];
    for (i, phi) in family.iter().enumerate() {
        let phi_norm = to_f64(l2_norm(&nu_t, phi)?);
        for &lag in lags {
            let norm = to_f64(decay_norm(sys, t - lag, t, phi)?);
            let bound = (c0 * to_f64(lag)).exp() * phi_norm;
            rows.push(DecayRow {
                observable: i,
                lag: to_f64(lag),
                norm,
                bound,
                margin: bound - norm,
            });
        }
    }
    Ok(MarginReport::from_rows(rows))
}

/// Margins of `‖P_{t-lag,t}(φ - M_tφ)‖ ≤ M(ω)e^{ω·lag}‖φ‖`.
pub fn verify_decay_bound<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
    omega: f64,
    m_omega: f64,
    family: &[Observable<T>],
    lags: &[T],
) -> Result<MarginReport> {
    let nu_t = sys.nu(t)?;
    let mut rows = vec![];
    for (i, phi) in family.iter().enumerate() {
        let phi_norm = to_f64(l2_norm(&nu_t, phi)?);
        for &lag in lags {
            let norm = to_f64(decay_norm(sys, t - lag, t, phi)?);
            let bound = m_omega * (omega * to_f64(lag)).exp() * phi_norm;
            rows.push(DecayRow {
                observable: i,
                lag: to_f64(lag),
                norm,
                bound,
                margin: bound - norm,
            });
        }
    }
    Ok(MarginReport::from_rows(rows))
}

/// `∫|∇φ|² dm`: exact for closed-form observables, central differences
/// under quadrature for smooth generic ones.
pub fn gradient_energy<T: Real>(
    m: &GaussianMeasure<T>,
    phi: &Observable<T>,
    quad_order: usize,
) -> Result<T> {
    let n = m.dim();
    match phi {
        Observable::Polynomial(p) => Ok(p
            .gradient()
            .iter()
            .map(|d| d.mul(d).gaussian_mean(&m.mean, &m.cov))
            .fold(T::zero(), |a, b| a + b)),
        Observable::RealExponential { k, scale } => {
            let doubled = Observable::RealExponential {
                k: k * lit::<T>(2.0),
                scale: *scale * *scale,
            };
            Ok(k.norm_squared() * mean_functional(m, &doubled, quad_order)?.re)
        }
        Observable::ComplexExponential { k, scale } => Ok(k.norm_squared() * scale.norm_sqr()),
        Observable::Generic(g) => {
            if !g.smooth {
                return Err(Error::Unsupported(
                    "gradient of a non-smooth observable".into(),
                ));
            }
            let g = g.clone();
            let energy = Observable::generic(n, false, move |x: &DVector<T>| {
                let h = lit::<T>(FD_STEP) * (T::one() + x.norm());
                let mut acc = T::zero();
                for i in 0..x.len() {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let d = ((g.f)(&xp) - (g.f)(&xm)) / (h + h);
                    acc += d * d;
                }
                acc
            });
            Ok(quadrature_expectation(m, &energy, quad_order)?.re)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareRow {
    pub t: f64,
    pub observable: usize,
    pub variance: f64,
    pub gradient_energy: f64,
    pub constant: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoincareReport {
    pub omega: f64,
    pub m_omega: f64,
    pub constant: f64,
    pub rows: Vec<PoincareRow>,
    pub min_margin: f64,
}

/// `Var_{ν_t}(φ) ≤ M(ω)²C²/(2|ω|)·∫|∇φ|²dν_t` on each time slice.
pub fn verify_poincare<T: Real>(
    sys: &EvolutionSystem<T>,
    t_grid: &[T],
    family: &[Observable<T>],
    omega: f64,
    m_omega: f64,
) -> Result<PoincareReport> {
    if !(omega < 0.0) {
        return Err(Error::Usage("ω must be negative".into()));
    }
    let c = to_f64(sys.propagator().field().norm_c);
    let constant = m_omega * m_omega * c * c / (2.0 * omega.abs());
    let mut rows = vec![];
    for &t in t_grid {
        let nu = sys.nu(t)?;
        for (i, phi) in family.iter().enumerate() {
            let var = to_f64(variance(&nu, phi, crate::kernel::DEFAULT_QUAD_ORDER)?);
            let energy = to_f64(gradient_energy(
                &nu,
                phi,
                crate::kernel::DEFAULT_QUAD_ORDER,
            )?);
            rows.push(PoincareRow {
                t: to_f64(t),
                observable: i,
                variance: var,
                gradient_energy: energy,
                constant,
                margin: constant * energy - var,
            });
        }
    }
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(PoincareReport {
        omega,
        m_omega,
        constant,
        rows,
        min_margin,
    })
}

/// `(Πu)(t) = M_t u(t,·)` on a time grid (real parts).
pub fn project_pi<T, F>(sys: &EvolutionSystem<T>, t_grid: &[T], u: F) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(T) -> Observable<T>,
{
    t_grid
        .iter()
        .map(|&t| {
            let nu = sys.nu(t)?;
            Ok(mean_functional(&nu, &u(t), crate::kernel::DEFAULT_QUAD_ORDER)?.re)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceTimeRow {
    pub tau: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// Discretized space-time form of the global decay bound for the separable
/// function `u(s,x) = ξ(s)φ(x)` with `(P_τ u)(s,·) = P_{s,s+τ}u(s+τ,·)`:
/// `(Σ_s w_s ξ(s+τ)²‖P_{s,s+τ}(φ - M_{s+τ}φ)‖²_{ν_s})^{1/2}` against
/// `e^{c₀τ}(Σ_s w_s ξ(s+τ)²‖φ‖²_{ν_{s+τ}})^{1/2}`. Holds whenever each slice
/// satisfies the global bound.
pub fn space_time_decay<T, F>(
    sys: &EvolutionSystem<T>,
    c0: f64,
    phi: &Observable<T>,
    xi: F,
    s_grid: &[T],
    taus: &[T],
) -> Result<Vec<SpaceTimeRow>>
where
    T: Real,
    F: Fn(T) -> T,
{
    if s_grid.len() < 2 {
        return Err(Error::Usage(
            "space-time grid needs at least two points".into(),
        ));
    }
    // Trapezoid weights on the (sorted) grid.
    let w: Vec<f64> = (0..s_grid.len())
        .map(|i| {
            let left = if i > 0 {
                to_f64(s_grid[i] - s_grid[i - 1])
            } else {
                0.0
            };
            let right = if i + 1 < s_grid.len() {
                to_f64(s_grid[i + 1] - s_grid[i])
            } else {
                0.0
            };
            0.5 * (left + right)
        })
        .collect();
    let mut rows = vec![];
    for &tau in taus {
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for (i, &s) in s_grid.iter().enumerate() {
            let weight = to_f64(xi(s + tau)).powi(2) * w[i];
            if weight == 0.0 {
                continue;
            }
            let norm = to_f64(decay_norm(sys, s, s + tau, phi)?);
            let phi_norm = to_f64(l2_norm(&sys.nu(s + tau)?, phi)?);
            lhs += weight * norm * norm;
            rhs += weight * phi_norm * phi_norm;
        }
        let lhs = lhs.sqrt();
        let rhs = (c0 * to_f64(tau)).exp() * rhs.sqrt();
        rows.push(SpaceTimeRow {
            tau: to_f64(tau),
            lhs,
            rhs,
            margin: rhs - lhs,
        });
    }
    Ok(rows)
}

/// Writes decay rows as `lag, norm, bound, margin`.
pub fn write_decay_csv(rows: &[DecayRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["lag", "norm", "bound", "margin"])?;
    for r in rows {
        w.write_record([
            format!("{:e}", r.lag),
            format!("{:e}", r.norm),
            format!("{:e}", r.bound),
            format!("{:e}", r.margin),
        ])?;
    }
    w.flush()?;
    Ok(())
}
