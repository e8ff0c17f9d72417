//! Time-dependent coefficient data `A(t)`, `B(t)`, `f(t)` of the
//! Ornstein–Uhlenbeck family, the built-in test fields, and grid
//! certification of the standing assumptions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{min_singular_value, spectral_norm};
use crate::scalar::{is_finite, lit, to_f64, Real};

/// A matrix-valued function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile<T: Real> {
    Constant(DMatrix<T>),
    /// `mean + Σ_k cos_k·cos(2πkt/period) + sin_k·sin(2πkt/period)`, `k ≥ 1`.
    Fourier {
        period: T,
        mean: DMatrix<T>,
        cos: Vec<DMatrix<T>>,
        sin: Vec<DMatrix<T>>,
    },
    /// `base + bump / (1 + ((t - center)/width)²)`; aperiodic.
    Lorentzian {
        base: DMatrix<T>,
        bump: DMatrix<T>,
        center: T,
        width: T,
    },
}

impl<T: Real> Profile<T> {
    pub fn eval(&self, t: T) -> DMatrix<T> {
        match self {
            Profile::Constant(m) => m.clone(),
            Profile::Fourier {
                period,
                mean,
                cos,
                sin,
            } => {
                let mut out = mean.clone();
                let base = T::two_pi() * t / *period;
                for (k, c) in cos.iter().enumerate() {
                    let arg = base * lit::<T>((k + 1) as f64);
                    out += c * arg.cos();
                }
                for (k, s) in sin.iter().enumerate() {
                    let arg = base * lit::<T>((k + 1) as f64);
                    out += s * arg.sin();
                }
                out
            }
            Profile::Lorentzian {
                base,
                bump,
                center,
                width,
            } => {
                let u = (t - *center) / *width;
                base + bump * (T::one() / (T::one() + u * u))
            }
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Profile::Constant(m) => m.shape(),
            Profile::Fourier { mean, .. } => mean.shape(),
            Profile::Lorentzian { base, .. } => base.shape(),
        }
    }

    /// The profile's own period, `None` if constant (any period) or aperiodic.
    fn own_period(&self) -> Option<T> {
        match self {
            Profile::Fourier { period, .. } => Some(*period),
            _ => None,
        }
    }

    fn is_aperiodic(&self) -> bool {
        matches!(self, Profile::Lorentzian { .. })
    }

    fn validate(&self, rows: usize, cols: usize, what: &str) -> Result<()> {
        let bad = |m: &DMatrix<T>| m.shape() != (rows, cols);
        let ok = match self {
            Profile::Constant(m) => !bad(m),
            Profile::Fourier {
                period,
                mean,
                cos,
                sin,
            } => {
                if !(*period > T::zero()) || !is_finite(*period) {
                    return Err(Error::Usage(format!(
                        "{what}: Fourier period must be positive"
                    )));
                }
                !bad(mean) && cos.iter().all(|m| !bad(m)) && sin.iter().all(|m| !bad(m))
            }
            Profile::Lorentzian {
                base, bump, width, ..
            } => {
                if !(*width > T::zero()) {
                    return Err(Error::Usage(format!("{what}: width must be positive")));
                }
                !bad(base) && !bad(bump)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "{what}: expected a {rows}×{cols} profile"
            )))
        }
    }
}

/// Coefficients of the Ornstein–Uhlenbeck family with declared constants.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField<T: Real> {
    pub name: String,
    pub dim: usize,
    pub a: Profile<T>,
    pub b: Profile<T>,
    /// Stored as an `n×1` profile.
    pub f: Profile<T>,
    pub period: Option<T>,
    /// Declared ellipticity constant: `σ_min(B(t)) ≥ mu0`.
    pub mu0: T,
    /// Declared `sup_t ‖B(t)‖`.
    pub norm_c: T,
}

impl<T: Real> CoefficientField<T> {
    /// Validates shapes, declared constants and the period.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        a: Profile<T>,
        b: Profile<T>,
        f: Profile<T>,
        period: Option<T>,
        mu0: T,
        norm_c: T,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Usage("dimension must be positive".into()));
        }
        a.validate(dim, dim, "A")?;
        b.validate(dim, dim, "B")?;
        f.validate(dim, 1, "f")?;
        if !(mu0 > T::zero()) || !(norm_c > T::zero()) || mu0 > norm_c {
            return Err(Error::Usage(
                "declared constants must satisfy 0 < mu0 <= normC".into(),
            ));
        }
        if let Some(p) = period {
            if !(p > T::zero()) || !is_finite(p) {
                return Err(Error::Usage("period must be positive and finite".into()));
            }
            for (prof, what) in [(&a, "A"), (&b, "B"), (&f, "f")] {
                if prof.is_aperiodic() {
                    return Err(Error::Usage(format!(
                        "{what} is aperiodic but a period was declared"
                    )));
                }
                if let Some(own) = prof.own_period() {
                    let ratio = to_f64(p) / to_f64(own);
                    if (ratio - ratio.round()).abs() > 1e-12 || ratio.round() < 1.0 {
                        return Err(Error::Usage(format!(
                            "{what} has Fourier period {} incompatible with declared period {}",
                            to_f64(own),
                            to_f64(p)
                        )));
                    }
                }
            }
        }
        Ok(Self {
            name: name.into(),
            dim,
            a,
            b,
            f,
            period,
            mu0,
            norm_c,
        })
    }

    /// `(A(t), B(t), f(t))`.
    pub fn eval(&self, t: T) -> Result<(DMatrix<T>, DMatrix<T>, DVector<T>)> {
        if !is_finite(t) {
            return Err(Error::Domain("time must be finite".into()));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: T) -> (DMatrix<T>, DMatrix<T>, DVector<T>) {
        let f = self.f.eval(t);
        (self.a.eval(t), self.b.eval(t), f.column(0).into_owned())
    }

    pub fn a_at(&self, t: T) -> DMatrix<T> {
        self.a.eval(t)
    }

    pub fn b_at(&self, t: T) -> DMatrix<T> {
        self.b.eval(t)
    }

    pub fn f_at(&self, t: T) -> DVector<T> {
        self.f.eval(t).column(0).into_owned()
    }

    /// True when `A`, `B` and `f` do not depend on time.
    pub fn is_constant(&self) -> bool {
        [&self.a, &self.b, &self.f]
            .iter()
            .all(|p| matches!(p, Profile::Constant(_)))
    }

    pub fn has_forcing(&self) -> bool {
        match &self.f {
            Profile::Constant(m) => m.iter().any(|v| *v != T::zero()),
            _ => true,
        }
    }

    pub fn require_period(&self) -> Result<T> {
        self.period
            .ok_or_else(|| Error::Usage(format!("field '{}' is not periodic", self.name)))
    }

    /// Default certification grid: 400 points on `[-2T, 2T]`, or on
    /// `[-10, 10]` for aperiodic fields.
    pub fn default_grid(&self) -> Vec<T> {
        let half = self.period.map(|p| p + p).unwrap_or_else(|| lit(10.0));
        uniform_grid(-half, half, 400)
    }

    pub fn certify(&self, grid: &[T]) -> Result<CertificateReport> {
        certify(self, grid)
    }
}

/// `count` equally spaced points on `[a, b]` (both ends included).
pub fn uniform_grid<T: Real>(a: T, b: T, count: usize) -> Vec<T> {
    if count == 1 {
        return vec![a];
    }
    let step = (b - a) / lit::<T>((count - 1) as f64);
    (0..count).map(|i| a + step * lit::<T>(i as f64)).collect()
}

/// Grid certification of the standing assumptions.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub grid_points: usize,
    pub min_sigma_b: f64,
    pub max_norm_b: f64,
    pub max_norm_a: f64,
    pub max_norm_f: f64,
    pub declared_mu0: f64,
    pub declared_norm_c: f64,
    /// `max |X(t+T) - X(t)|` over the grid and `X ∈ {A, B, f}`.
    pub periodicity_residual: Option<f64>,
    pub mu0_ok: bool,
    pub norm_c_ok: bool,
    pub periodicity_ok: bool,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.mu0_ok && self.norm_c_ok && self.periodicity_ok
    }
}

/// Periodicity residuals must be within this multiple of the coefficient scale.
pub const PERIODICITY_TOL: f64 = 1e-12;

pub fn certify<T: Real>(field: &CoefficientField<T>, grid: &[T]) -> Result<CertificateReport> {
    if grid.is_empty() {
        return Err(Error::Usage("certification grid is empty".into()));
    }
    let mut min_sigma = f64::INFINITY;
    let mut max_b: f64 = 0.0;
    let mut max_a: f64 = 0.0;
    let mut max_f: f64 = 0.0;
    let mut resid: f64 = 0.0;
    for &t in grid {
        let (a, b, f) = field.eval(t)?;
        min_sigma = min_sigma.min(to_f64(min_singular_value(&b)));
        max_b = max_b.max(to_f64(spectral_norm(&b)));
        max_a = max_a.max(to_f64(spectral_norm(&a)));
        max_f = max_f.max(to_f64(f.norm()));
        if let Some(p) = field.period {
            let (a2, b2, f2) = field.eval(t + p)?;
            resid = resid
                .max(to_f64((a2 - a).abs().max()))
                .max(to_f64((b2 - b).abs().max()))
                .max(to_f64((f2 - f).abs().max()));
        }
    }
    let rel = 1e-12;
    let scale = 1.0f64.max(max_a).max(max_b).max(max_f);
    let periodicity_residual = field.period.map(|_| resid);
    Ok(CertificateReport {
        grid_points: grid.len(),
        min_sigma_b: min_sigma,
        max_norm_b: max_b,
        max_norm_a: max_a,
        max_norm_f: max_f,
        declared_mu0: to_f64(field.mu0),
        declared_norm_c: to_f64(field.norm_c),
        periodicity_residual,
        mu0_ok: min_sigma >= to_f64(field.mu0) * (1.0 - rel),
        norm_c_ok: max_b <= to_f64(field.norm_c) * (1.0 + rel),
        periodicity_ok: periodicity_residual.is_none_or(|r| r <= PERIODICITY_TOL * scale),
    })
}

/// Built-in coefficient fields with analytic ground truth.
pub mod builtin {
    use super::*;

    /// Names accepted by [`by_name`].
    pub const NAMES: &[&str] = &[
        "coupled_periodic",
        "nonnormal_jordan",
        "rotation_decay",
        "scalar_aperiodic",
        "scalar_autonomous",
        "scalar_periodic",
    ];

    fn scaled_identity<T: Real>(n: usize, v: T) -> DMatrix<T> {
        DMatrix::<T>::identity(n, n) * v
    }

    /// `A = a·I`, `B = b·I`, `f = (f,…,f)`, declared period `period`.
    pub fn autonomous<T: Real>(
        a: f64,
        b: f64,
        f: f64,
        n: usize,
        period: f64,
    ) -> Result<CoefficientField<T>> {
        if b == 0.0 {
            return Err(Error::Usage("autonomous field needs b != 0".into()));
        }
        CoefficientField::new(
            format!("autonomous(a={a},b={b},f={f},n={n})"),
            n,
            Profile::Constant(scaled_identity(n, lit(a))),
            Profile::Constant(scaled_identity(n, lit(b))),
            Profile::Constant(DMatrix::from_element(n, 1, lit(f))),
            Some(lit(period)),
            lit(b.abs()),
            lit(b.abs()),
        )
    }

    /// Stationary scalar OU: `a = -1`, `b = √2`, `f = 0`, `T = 1`; `ν_t = N(0,1)`.
    pub fn scalar_autonomous<T: Real>() -> CoefficientField<T> {
        let mut f = autonomous(-1.0, 2f64.sqrt(), 0.0, 1, 1.0).expect("valid builtin");
        f.name = "scalar_autonomous".into();
        f
    }

    /// `a(t) = -1 + sin t`, constant `b` and `f`, `T = 2π`.
    pub fn scalar_periodic_with<T: Real>(b: f64, f: f64) -> Result<CoefficientField<T>> {
        let one = |v: f64| DMatrix::from_element(1, 1, lit::<T>(v));
        CoefficientField::new(
            "scalar_periodic",
            1,
            Profile::Fourier {
                period: lit(2.0 * PI),
                mean: one(-1.0),
                cos: vec![],
                sin: vec![one(1.0)],
            },
            Profile::Constant(one(b)),
            Profile::Constant(one(f)),
            Some(lit(2.0 * PI)),
            lit(b.abs()),
            lit(b.abs()),
        )
    }

    pub fn scalar_periodic<T: Real>() -> CoefficientField<T> {
        scalar_periodic_with(1.0, 0.0).expect("valid builtin")
    }

    /// `A = [[-1, ω], [-ω, -1]]`, `B = I`, `T = 1`.
    pub fn rotation_decay<T: Real>(omega: f64) -> CoefficientField<T> {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, omega, -omega, -1.0]).map(lit::<T>);
        let mut field = CoefficientField::new(
            "rotation_decay",
            2,
            Profile::Constant(a),
            Profile::Constant(DMatrix::identity(2, 2)),
            Profile::Constant(DMatrix::zeros(2, 1)),
            Some(T::one()),
            T::one(),
            T::one(),
        )
        .expect("valid builtin");
        if omega != 2.0 {
            field.name = format!("rotation_decay(omega={omega})");
        }
        field
    }

    /// `A = [[-1, 1], [0, -1]]`, `B = I`, `T = 1`: non-semisimple monodromy.
    pub fn nonnormal_jordan<T: Real>() -> CoefficientField<T> {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]).map(lit::<T>);
        CoefficientField::new(
            "nonnormal_jordan",
            2,
            Profile::Constant(a),
            Profile::Constant(DMatrix::identity(2, 2)),
            Profile::Constant(DMatrix::zeros(2, 1)),
            Some(T::one()),
            T::one(),
            T::one(),
        )
        .expect("valid builtin")
    }

    /// Two-dimensional field with time-dependent `A`, `B` and forcing `f`:
    /// `A = [[-1 + ½ sin t, 0.3], [-0.3, -1.5]]`,
    /// `B = [[1, 0.2 cos t], [0, 0.8]]`, `f = (cos t, ½ sin t)`, `T = 2π`.
    pub fn coupled_periodic<T: Real>() -> CoefficientField<T> {
        let m = |r: usize, c: usize, v: &[f64]| DMatrix::from_row_slice(r, c, v).map(lit::<T>);
        CoefficientField::new(
            "coupled_periodic",
            2,
            Profile::Fourier {
                period: lit(2.0 * PI),
                mean: m(2, 2, &[-1.0, 0.3, -0.3, -1.5]),
                cos: vec![],
                sin: vec![m(2, 2, &[0.5, 0.0, 0.0, 0.0])],
            },
            Profile::Fourier {
                period: lit(2.0 * PI),
                mean: m(2, 2, &[1.0, 0.0, 0.0, 0.8]),
                cos: vec![m(2, 2, &[0.0, 0.2, 0.0, 0.0])],
                sin: vec![],
            },
            Profile::Fourier {
                period: lit(2.0 * PI),
                mean: m(2, 1, &[0.0, 0.0]),
                cos: vec![m(2, 1, &[1.0, 0.0])],
                sin: vec![m(2, 1, &[0.0, 0.5])],
            },
            Some(lit(2.0 * PI)),
            lit(0.76),
            lit(1.047),
        )
        .expect("valid builtin")
    }

    /// `a(t) = -1 - 0.5/(1 + t²)`, `b = 1`, `f = 0`; no period.
    pub fn scalar_aperiodic<T: Real>() -> CoefficientField<T> {
        let one = |v: f64| DMatrix::from_element(1, 1, lit::<T>(v));
        CoefficientField::new(
            "scalar_aperiodic",
            1,
            Profile::Lorentzian {
                base: one(-1.0),
                bump: one(-0.5),
                center: T::zero(),
                width: T::one(),
            },
            Profile::Constant(one(1.0)),
            Profile::Constant(one(0.0)),
            None,
            T::one(),
            T::one(),
        )
        .expect("valid builtin")
    }

    /// Looks up a builtin with its default parameters.
    pub fn by_name<T: Real>(name: &str) -> Result<CoefficientField<T>> {
        match name {
            "scalar_autonomous" => Ok(scalar_autonomous()),
            "scalar_periodic" => Ok(scalar_periodic()),
            "rotation_decay" => Ok(rotation_decay(2.0)),
            "nonnormal_jordan" => Ok(nonnormal_jordan()),
            "coupled_periodic" => Ok(coupled_periodic()),
            "scalar_aperiodic" => Ok(scalar_aperiodic()),
            other => Err(Error::Usage(format!(
                "unknown field '{other}'; expected one of {}",
                NAMES.join(", ")
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::builtin::*;
    use super::*;

    #[test]
    fn autonomous_eval_is_constant() {
        let f = autonomous::<f64>(-1.0, 1.0, 0.0, 1, 1.0).unwrap();
        let (a, b, g) = f.eval(3.7).unwrap();
        assert_eq!(a[(0, 0)], -1.0);
        assert_eq!(b[(0, 0)], 1.0);
        assert_eq!(g[0], 0.0);
        assert_eq!(f.eval(3.7).unwrap(), f.eval(3.7).unwrap());
    }

    #[test]
    fn scalar_periodic_vanishes_at_half_pi() {
        let f = scalar_periodic::<f64>();
        let (a, _, _) = f.eval(PI / 2.0).unwrap();
        assert!(a[(0, 0)].abs() < 1e-15);
    }

    #[test]
    fn rotation_decay_is_constant_matrix() {
        let f = rotation_decay::<f64>(2.0);
        for t in [-4.0, 0.0, 1.3, 17.0] {
            let (a, _, _) = f.eval(t).unwrap();
            assert_eq!(a, DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, -2.0, -1.0]));
        }
    }

    #[test]
    fn non_finite_time_is_a_domain_error() {
        let f = scalar_periodic::<f64>();
        assert!(matches!(f.eval(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(f.eval(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn certificate_reports_diagonal_singular_values() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]);
        let f = CoefficientField::new(
            "diag",
            2,
            Profile::Constant(-DMatrix::identity(2, 2)),
            Profile::Constant(b),
            Profile::Constant(DMatrix::zeros(2, 1)),
            None,
            0.5,
            1.0,
        )
        .unwrap();
        let rep = f.certify(&uniform_grid(-1.0, 1.0, 11)).unwrap();
        assert!((rep.min_sigma_b - 0.5).abs() < 1e-15);
        assert!(rep.passed());
    }

    #[test]
    fn autonomous_certificate_passes_with_mu0_one() {
        let f = autonomous::<f64>(-1.0, 1.0, 0.0, 1, 1.0).unwrap();
        let rep = f.certify(&uniform_grid(-3.0, 3.0, 50)).unwrap();
        assert_eq!(rep.min_sigma_b, 1.0);
        assert!(rep.passed());
    }

    #[test]
    fn scalar_periodic_residual_is_tiny() {
        let f = scalar_periodic::<f64>();
        let rep = f.certify(&uniform_grid(-10.0, 10.0, 1000)).unwrap();
        assert!(rep.periodicity_residual.unwrap() <= 1e-12);
        assert!(rep.passed());
    }

    #[test]
    fn every_builtin_certifies_on_its_default_grid() {
        for name in NAMES {
            let f = by_name::<f64>(name).unwrap();
            let rep = f.certify(&f.default_grid()).unwrap();
            assert!(rep.passed(), "{name}: {rep:?}");
        }
    }

    #[test]
    fn overstated_mu0_is_flagged() {
        let mut f = coupled_periodic::<f64>();
        f.mu0 = 0.9;
        let rep = f.certify(&f.default_grid()).unwrap();
        assert!(!rep.mu0_ok);
    }

    #[test]
    fn fourier_eval_matches_finite_sum() {
        let f = coupled_periodic::<f64>();
        for t in [-2.1, 0.0, 0.7, 5.5] {
            let (a, b, g) = f.eval(t).unwrap();
            assert!((a[(0, 0)] - (-1.0 + 0.5 * f64::sin(t))).abs() < 1e-15);
            assert!((b[(0, 1)] - 0.2 * f64::cos(t)).abs() < 1e-15);
            assert!((g[1] - 0.5 * f64::sin(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_grid_and_bad_constants_are_rejected() {
        let f = scalar_periodic::<f64>();
        assert!(f.certify(&[]).is_err());
        assert!(CoefficientField::<f64>::new(
            "x",
            1,
            Profile::Constant(DMatrix::from_element(1, 1, -1.0)),
            Profile::Constant(DMatrix::from_element(1, 1, 1.0)),
            Profile::Constant(DMatrix::zeros(1, 1)),
            Some(1.0),
            -1.0,
            1.0
        )
        .is_err());
    }

    #[test]
    fn unknown_builtin_is_a_usage_error() {
        assert!(matches!(by_name::<f64>("nope"), Err(Error::Usage(_))));
    }
}
