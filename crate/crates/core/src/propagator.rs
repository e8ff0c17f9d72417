//! Evolution operator `U(t,s)` of `ξ' = A(t)ξ`, the Floquet monodromy and
//! the exponential-decay constants `ω₀(U)` and `M(ω)`.
//!
//! The integrator is classical fourth-order Runge–Kutta on a uniform mesh.
//! The mesh width is fixed at construction by halving a base step until two
//! successive resolutions of a probe interval agree to `ode_tol`.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::linalg::{
    cluster_eigenvalues, numerical_rank, sort_by_modulus_desc, spectral_norm, symmetrize,
    to_complex,
};
use crate::measures::TransitionKernel;
use crate::scalar::{cabs, is_finite, lit, to_f64, Real};

/// Default local accuracy target of the integrator.
pub const DEFAULT_ODE_TOL: f64 = 1e-10;

/// Relative tolerance used to merge numerically split multipliers.
pub const MULTIPLIER_CLUSTER_TOL: f64 = 1e-5;

/// Relative singular-value threshold of the semisimplicity rank test.
pub const SEMISIMPLE_RANK_TOL: f64 = 1e-7;

const MAX_HALVINGS: usize = 24;

/// Which parts of the transition kernel to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Components {
    UOnly,
    Full,
}

#[derive(Debug, Clone)]
pub struct Propagator<T: Real> {
    field: CoefficientField<T>,
    ode_tol: T,
    step: T,
    fast_path: bool,
}

impl<T: Real> Propagator<T> {
    /// Propagator with the default tolerance and an automatically tuned step.
    pub fn new(field: CoefficientField<T>) -> Result<Self> {
        Self::with_settings(field, lit(DEFAULT_ODE_TOL), None)
    }

    /// Propagator with explicit tolerance and optional base step. The base
    /// step defaults to `0.1 / max‖A‖`; it is then halved until two
    /// successive mesh widths agree to `ode_tol` on a probe interval.
    pub fn with_settings(field: CoefficientField<T>, ode_tol: T, step: Option<T>) -> Result<Self> {
        if !(ode_tol > T::zero()) || !is_finite(ode_tol) {
            return Err(Error::Usage("ode_tol must be positive".into()));
        }
        let max_a = field
            .default_grid()
            .iter()
            .map(|&t| to_f64(spectral_norm(&field.a_at(t))))
            .fold(0.0, f64::max)
            .max(1e-3);
        let base = match step {
            Some(h) if h > T::zero() && is_finite(h) => h.min(lit(0.1 / max_a)),
            Some(_) => return Err(Error::Usage("step must be positive".into())),
            None => lit(0.1 / max_a),
        };
        let mut p = Self {
            field,
            ode_tol,
            step: base,
            fast_path: true,
        };
        p.tune_step();
        Ok(p)
    }

    fn tune_step(&mut self) {
        let s = T::zero();
        let len = self.field.period.unwrap_or_else(T::one);
        let t = s + len;
        let diff_at = |p: &Self, h: T| -> (T, T) {
            let coarse = p.integrate(s, t, h, Components::Full);
            let fine = p.integrate(s, t, h / lit(2.0), Components::Full);
            (kernel_distance(&coarse, &fine), h / lit(2.0))
        };
        let mut h = self.step;
        let mut last = T::max_value().unwrap_or_else(|| lit(f64::MAX));
        for _ in 0..MAX_HALVINGS {
            let (d, finer) = diff_at(self, h);
            if d <= self.ode_tol {
                h = finer;
                break;
            }
            // Stop once rounding dominates: halving no longer shrinks the gap.
            if d > last / lit(4.0) {
                break;
            }
            last = d;
            h = finer;
        }
        self.step = h;
    }

    pub fn field(&self) -> &CoefficientField<T> {
        &self.field
    }

    pub fn ode_tol(&self) -> T {
        self.ode_tol
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn fast_path(&self) -> bool {
        self.fast_path
    }

    /// Copy of this propagator with the periodic fast path switched on or off.
    pub fn with_fast_path(&self, enabled: bool) -> Self {
        let mut p = self.clone();
        p.fast_path = enabled;
        p
    }

    fn check_interval(s: T, t: T) -> Result<()> {
        if !is_finite(s) || !is_finite(t) {
            return Err(Error::Domain("times must be finite".into()));
        }
        if s > t {
            return Err(Error::Usage(format!(
                "propagation requires s <= t (got s={}, t={})",
                to_f64(s),
                to_f64(t)
            )));
        }
        Ok(())
    }

    /// `U(t,s)`.
    pub fn propagate(&self, s: T, t: T) -> Result<DMatrix<T>> {
        Self::check_interval(s, t)?;
        Ok(self.assemble(s, t, Components::UOnly).u)
    }

    /// The transition kernel `(U(t,s), g(t,s), Q(t,s))`.
    pub fn kernel(&self, s: T, t: T) -> Result<TransitionKernel<T>> {
        Self::check_interval(s, t)?;
        Ok(self.assemble(s, t, Components::Full))
    }

    fn assemble(&self, s: T, t: T, what: Components) -> TransitionKernel<T> {
        if let (true, Some(period)) = (self.fast_path, self.field.period) {
            let periods = ((t - s) / period).floor();
            if periods >= T::one() {
                let k = to_f64(periods) as u64;
                let one = self.integrate(s, s + period, self.step, what);
                let mut powered = kernel_power(&one, k);
                let rem = (t - s) - period * periods;
                let rest = if rem > T::zero() {
                    self.integrate(s, s + rem, self.step, what)
                } else {
                    TransitionKernel::identity(self.field.dim, s)
                };
                powered = rest.after(&powered);
                powered.s = s;
                powered.t = t;
                return powered;
            }
        }
        self.integrate(s, t, self.step, what)
    }

    /// Joint RK4 for `U' = AU`, `g' = Ag + f`, `Q' = AQ + QA* + BB*` from
    /// `(I, 0, 0)` at `s`, with mesh width at most `h`.
    fn integrate(&self, s: T, t: T, h: T, what: Components) -> TransitionKernel<T> {
        let n = self.field.dim;
        let mut k = TransitionKernel::identity(n, s);
        k.t = t;
        if t <= s {
            return k;
        }
        let steps = to_f64(((t - s) / h).ceil()).max(1.0) as usize;
        let dt = (t - s) / lit::<T>(steps as f64);
        let half = dt / lit(2.0);
        let sixth = dt / lit(6.0);
        let two: T = lit(2.0);
        let full = what == Components::Full;

        let rhs = |a: &DMatrix<T>,
                   bb: &DMatrix<T>,
                   f: &DVector<T>,
                   u: &DMatrix<T>,
                   g: &DVector<T>,
                   q: &DMatrix<T>|
         -> (DMatrix<T>, DVector<T>, DMatrix<T>) {
            let du = a * u;
            if full {
                let aq = a * q;
                let dq = &aq + aq.transpose() + bb;
                (du, a * g + f, dq)
            } else {
                (du, DVector::zeros(0), DMatrix::zeros(0, 0))
            }
        };
        let coeffs = |r: T| -> (DMatrix<T>, DMatrix<T>, DVector<T>) {
            let (a, b, f) = self.field.eval_unchecked(r);
            let bb = if full {
                &b * b.transpose()
            } else {
                DMatrix::zeros(0, 0)
            };
            (a, bb, f)
        };

        let (mut u, mut g, mut q) = if full {
            (k.u.clone(), k.g.clone(), k.q.clone())
        } else {
            (k.u.clone(), DVector::zeros(0), DMatrix::zeros(0, 0))
        };
        let mut c0 = coeffs(s);
        for i in 0..steps {
            let r = s + dt * lit::<T>(i as f64);
            let cm = coeffs(r + half);
            let c1 = coeffs(r + dt);
            let (u1, g1, q1) = rhs(&c0.0, &c0.1, &c0.2, &u, &g, &q);
            let (u2, g2, q2) = rhs(
                &cm.0,
                &cm.1,
                &cm.2,
                &(&u + &u1 * half),
                &(&g + &g1 * half),
                &(&q + &q1 * half),
            );
            let (u3, g3, q3) = rhs(
                &cm.0,
                &cm.1,
                &cm.2,
                &(&u + &u2 * half),
                &(&g + &g2 * half),
                &(&q + &q2 * half),
            );
            let (u4, g4, q4) = rhs(
                &c1.0,
                &c1.1,
                &c1.2,
                &(&u + &u3 * dt),
                &(&g + &g3 * dt),
                &(&q + &q3 * dt),
            );
            u += (u1 + u2 * two + u3 * two + u4) * sixth;
            if full {
                g += (g1 + g2 * two + g3 * two + g4) * sixth;
                q += (q1 + q2 * two + q3 * two + q4) * sixth;
                symmetrize(&mut q);
            }
            c0 = c1;
        }
        k.u = u;
        if full {
            k.g = g;
            k.q = q;
        }
        k
    }

    /// Monodromy `U(s+T, s)`.
    pub fn monodromy_at(&self, s: T) -> Result<DMatrix<T>> {
        let period = self.field.require_period()?;
        Self::check_interval(s, s + period)?;
        Ok(self
            .integrate(s, s + period, self.step, Components::UOnly)
            .u)
    }

    pub fn floquet(&self) -> Result<FloquetData<T>> {
        let period = self.field.require_period()?;
        let monodromy = self.monodromy_at(T::zero())?;
        let analysis = analyze_monodromy(&monodromy, period)?;
        Ok(FloquetData {
            monodromy,
            period,
            ..analysis
        })
    }

    /// Exact Floquet `ω₀` for periodic fields; otherwise the grid estimate
    /// `max_s log‖U(s+horizon,s)‖ / horizon`.
    pub fn estimate_growth_bound(&self, horizon: T, grid: &[T]) -> Result<T> {
        if self.field.period.is_some() {
            return Ok(self.floquet()?.omega0);
        }
        if grid.is_empty() {
            return Err(Error::Usage("growth-bound grid is empty".into()));
        }
        if !(horizon > T::zero()) || !is_finite(horizon) {
            return Err(Error::Usage("horizon must be positive".into()));
        }
        let mut best = T::min_value().unwrap_or_else(|| lit(f64::MIN));
        for &s in grid {
            let u = self.propagate(s, s + horizon)?;
            best = best.max(spectral_norm(&u).ln() / horizon);
        }
        Ok(best)
    }

    /// Grid lower estimate of `M(ω) = sup_{s≤t} ‖U(t,s)‖ e^{-ω(t-s)}`.
    pub fn estimate_m(&self, omega: T, s_grid: &[T], gap_grid: &[T]) -> Result<MEstimate> {
        self.growth_table(s_grid, gap_grid)?
            .m_estimate(to_f64(omega))
    }

    /// `max_s log‖U(s+τ, s)‖` over the lags `τ` of the grid, from which
    /// `M(ω)` follows for any `ω` without further propagation.
    ///
    /// Periodic fields additionally scan lags `kT + r` for geometrically
    /// spaced `k` through `U(s+kT+r, s) = U(s+r, s) M_s^k`, with the powers
    /// of the monodromy `M_s` carried in log scale so nothing overflows.
    pub fn growth_table(&self, s_grid: &[T], gap_grid: &[T]) -> Result<GrowthTable> {
        if s_grid.is_empty() || gap_grid.is_empty() {
            return Err(Error::Usage("M(ω) grids must be non-empty".into()));
        }
        if gap_grid.iter().any(|&g| g < T::zero() || !is_finite(g)) {
            return Err(Error::Usage("lags must be non-negative and finite".into()));
        }
        let max_gap = gap_grid.iter().copied().fold(T::zero(), |a, b| a.max(b));
        let omega0 = if self.field.period.is_some() {
            self.floquet()?.omega0
        } else {
            let horizon = if max_gap > T::zero() {
                max_gap
            } else {
                T::one()
            };
            self.estimate_growth_bound(horizon, s_grid)?
        };
        let mut gaps: Vec<T> = gap_grid.to_vec();
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let mut entries: Vec<(f64, f64)> = gaps
            .iter()
            .map(|&g| (to_f64(g), f64::NEG_INFINITY))
            .collect();
        for &s in s_grid {
            // March along the sorted lags, reusing the previous segment.
            let mut u = DMatrix::<T>::identity(self.field.dim, self.field.dim);
            let mut prev = T::zero();
            for (i, &gap) in gaps.iter().enumerate() {
                if gap > prev {
                    let seg = self.propagate(s + prev, s + gap)?;
                    u = seg * u;
                    prev = gap;
                }
                let l = to_f64(spectral_norm(&u)).ln();
                entries[i].1 = entries[i].1.max(l);
            }
        }
        let mut tail_max_periods = 0u64;
        if let Some(period) = self.field.period {
            let pf = to_f64(period);
            let rates: Vec<T> = gaps.iter().copied().filter(|&g| g < period).collect();
            let counts = geometric_counts(tail_limit(self.field.dim), 1.1);
            tail_max_periods = *counts.last().unwrap_or(&0);
            let base = entries.len();
            for &r in &rates {
                for &k in &counts {
                    entries.push((k as f64 * pf + to_f64(r), f64::NEG_INFINITY));
                }
            }
            for &s in s_grid {
                let powers = log_scaled_powers(&self.monodromy_at(s)?, &counts);
                for (j, &r) in rates.iter().enumerate() {
                    let head = self.propagate(s, s + r)?;
                    for (i, (x, log_scale)) in powers.iter().enumerate() {
                        let nrm = to_f64(spectral_norm(&(&head * x)));
                        if !(nrm > 0.0) || !log_scale.is_finite() {
                            continue;
                        }
                        let e = &mut entries[base + j * counts.len() + i];
                        e.1 = e.1.max(nrm.ln() + log_scale);
                    }
                }
            }
        }
        let resolution = |g: &[T]| -> f64 {
            let mut v: Vec<f64> = g.iter().map(|&x| to_f64(x)).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
        };
        Ok(GrowthTable {
            omega0: to_f64(omega0),
            entries,
            s_points: s_grid.len(),
            gap_points: gap_grid.len(),
            s_resolution: resolution(s_grid),
            gap_resolution: resolution(&gaps),
            max_gap: to_f64(max_gap),
            tail_max_periods,
        })
    }
}

/// Lags `τ` with `max_s log‖U(s+τ, s)‖`, plus the grid description.
#[derive(Debug, Clone)]
pub struct GrowthTable {
    /// Growth bound `ω₀` (Floquet exponent, or grid estimate if aperiodic).
    pub omega0: f64,
    /// `(τ, max_s log‖U(s+τ, s)‖)`.
    pub entries: Vec<(f64, f64)>,
    pub s_points: usize,
    pub gap_points: usize,
    pub s_resolution: f64,
    pub gap_resolution: f64,
    pub max_gap: f64,
    pub tail_max_periods: u64,
}

impl GrowthTable {
    /// `max_τ ‖U‖e^{-ωτ}` over the table; `ω ≤ ω₀` is rejected since `M(ω)`
    /// diverges there.
    pub fn m_estimate(&self, omega: f64) -> Result<MEstimate> {
        if omega <= self.omega0 {
            return Err(Error::Usage(format!(
                "ω = {omega} does not exceed the growth bound estimate {}; M(ω) diverges",
                self.omega0
            )));
        }
        let mut best = 0.0f64;
        let mut argmax_gap = 0.0f64;
        for &(lag, log_norm) in &self.entries {
            let v = (log_norm - omega * lag).exp();
            if v > best {
                best = v;
                argmax_gap = lag;
            }
        }
        Ok(MEstimate {
            omega,
            value: best,
            argmax_gap,
            s_points: self.s_points,
            gap_points: self.gap_points,
            s_resolution: self.s_resolution,
            gap_resolution: self.gap_resolution,
            max_gap: self.max_gap,
            tail_max_periods: self.tail_max_periods,
        })
    }
}

/// Largest period count of the `M(ω)` tail: beyond `k·n·ε ≈ 1e-3` the
/// rounding accumulated by repeated squaring of the monodromy would
/// dominate its growth rate.
fn tail_limit(dim: usize) -> u64 {
    let k = 1e-3 / (dim.max(1) as f64 * f64::EPSILON);
    k.min((1u64 << 62) as f64) as u64
}

/// `M^k = e^{ℓ}·X` for each `k` of the increasing list, by binary powering
/// with renormalization so neither overflow nor underflow occurs.
fn log_scaled_powers<T: Real>(m: &DMatrix<T>, counts: &[u64]) -> Vec<(DMatrix<T>, f64)> {
    let n = m.nrows();
    let renorm = |x: DMatrix<T>, l: f64| -> (DMatrix<T>, f64) {
        let c = x.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        if c > T::zero() {
            (x / c, l + to_f64(c).ln())
        } else {
            (x, f64::NEG_INFINITY)
        }
    };
    counts
        .iter()
        .map(|&k| {
            let mut result = (DMatrix::<T>::identity(n, n), 0.0);
            let mut base = renorm(m.clone(), 0.0);
            let mut e = k;
            while e > 0 {
                if e & 1 == 1 {
                    result = renorm(&base.0 * &result.0, base.1 + result.1);
                }
                e >>= 1;
                if e > 0 {
                    base = renorm(&base.0 * &base.0, 2.0 * base.1);
                }
            }
            result
        })
        .collect()
}

/// Geometric integer sequence `1, 2, …` with ratio about `ratio`, up to `limit`.
fn geometric_counts(limit: u64, ratio: f64) -> Vec<u64> {
    let mut out = vec![];
    let mut k = 1u64;
    while k <= limit {
        out.push(k);
        let next = ((k as f64) * ratio).ceil();
        let next = if next >= limit as f64 {
            limit
        } else {
            next as u64
        };
        if next <= k {
            if k == limit {
                break;
            }
            k += 1;
        } else {
            k = next;
        }
    }
    out
}

fn kernel_distance<T: Real>(a: &TransitionKernel<T>, b: &TransitionKernel<T>) -> T {
    let du = spectral_norm(&(&a.u - &b.u));
    if a.g.is_empty() {
        return du;
    }
    du.max((&a.g - &b.g).norm())
        .max(spectral_norm(&(&a.q - &b.q)))
}

/// `K^k` by binary powering of kernel composition.
pub(crate) fn kernel_power<T: Real>(k: &TransitionKernel<T>, mut e: u64) -> TransitionKernel<T> {
    let n = k.u.nrows();
    let mut result = TransitionKernel::identity(n, k.s);
    if k.g.is_empty() {
        result.g = DVector::zeros(0);
        result.q = DMatrix::zeros(0, 0);
    }
    let mut base = k.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = base.after(&result);
        }
        e >>= 1;
        if e > 0 {
            base = base.after(&base);
        }
    }
    result
}

/// Floquet data of a periodic field.
#[derive(Debug, Clone)]
pub struct FloquetData<T: Real> {
    pub monodromy: DMatrix<T>,
    pub period: T,
    /// Sorted by decreasing modulus, repeated according to algebraic
    /// multiplicity; numerically split clusters are replaced by their mean.
    pub multipliers: Vec<Complex<T>>,
    pub r0: T,
    pub omega0: T,
    pub semisimple_flags: Vec<bool>,
}

impl<T: Real> FloquetData<T> {
    /// Distinct multipliers with their algebraic multiplicities.
    pub fn distinct_multipliers(&self) -> Vec<(Complex<T>, usize, bool)> {
        let mut out: Vec<(Complex<T>, usize, bool)> = vec![];
        for (mu, flag) in self.multipliers.iter().zip(&self.semisimple_flags) {
            if let Some(e) = out.iter_mut().find(|e| e.0 == *mu) {
                e.1 += 1;
            } else {
                out.push((*mu, 1, *flag));
            }
        }
        out
    }

    /// True when every multiplier of maximal modulus is semisimple.
    pub fn peripheral_semisimple(&self) -> bool {
        let tol = lit::<T>(MULTIPLIER_CLUSTER_TOL) * self.r0;
        self.multipliers
            .iter()
            .zip(&self.semisimple_flags)
            .filter(|(m, _)| (cabs(**m) - self.r0).abs() <= tol)
            .all(|(_, f)| *f)
    }
}

/// Multipliers, spectral radius and semisimplicity flags of a monodromy.
pub fn analyze_monodromy<T: Real>(m: &DMatrix<T>, period: T) -> Result<FloquetData<T>> {
    if m.iter().any(|v| !is_finite(*v)) {
        return Err(Error::Internal(
            "monodromy contains non-finite entries".into(),
        ));
    }
    let raw: Vec<Complex<T>> = m.clone().complex_eigenvalues().iter().copied().collect();
    let mut multipliers = cluster_eigenvalues(&raw, lit(MULTIPLIER_CLUSTER_TOL));
    sort_by_modulus_desc(&mut multipliers);
    let r0 = multipliers
        .iter()
        .map(|z| cabs(*z))
        .fold(T::zero(), |a, b| a.max(b));
    if !(r0 > T::zero()) {
        return Err(Error::Singular("monodromy has zero spectral radius".into()));
    }
    let omega0 = r0.ln() / period;
    let semisimple_flags = multipliers.iter().map(|&mu| is_semisimple(m, mu)).collect();
    Ok(FloquetData {
        monodromy: m.clone(),
        period,
        multipliers,
        r0,
        omega0,
        semisimple_flags,
    })
}

/// `rank(μI − M) == rank((μI − M)²)` with thresholds relative to `‖M‖`.
pub fn is_semisimple<T: Real>(m: &DMatrix<T>, mu: Complex<T>) -> bool {
    let n = m.nrows();
    let scale = spectral_norm(m)
        .max(cabs(mu))
        .max(T::min_value().unwrap_or_else(T::zero));
    let tol: T = lit(SEMISIMPLE_RANK_TOL);
    let shifted = DMatrix::<Complex<T>>::identity(n, n) * mu - to_complex(m);
    let sq = &shifted * &shifted;
    numerical_rank(&shifted, tol * scale) == numerical_rank(&sq, tol * scale * scale)
}

/// Grid estimate of `M(ω)` with the resolution of the grids that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct MEstimate {
    pub omega: f64,
    pub value: f64,
    /// Lag at which the maximum was attained.
    pub argmax_gap: f64,
    pub s_points: usize,
    pub gap_points: usize,
    pub s_resolution: f64,
    pub gap_resolution: f64,
    pub max_gap: f64,
    /// Largest number of periods scanned by the periodic tail (0 if aperiodic).
    pub tail_max_periods: u64,
}
