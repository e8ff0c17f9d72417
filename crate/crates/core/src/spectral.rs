//! Spectral structure of the Poincaré operator `V(t) = P_{t-T,t}` of a
//! periodic field: degree-one eigenfunctions, a Galerkin matrix in the
//! orthonormal Hermite basis of `L²(ν_t)`, semisimplicity tests and the
//! eigenvalue lattices of `G_#`.

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    canonical_phase, cluster_eigenvalues, null_vectors, numerical_rank, sort_by_modulus_desc,
    spectral_norm, sym_sqrt, to_complex,
};
use crate::measures::{EvolutionSystem, GaussianMeasure, TransitionKernel};
use crate::polynomial::{multi_indices, MultiIndex, Polynomial, DEFAULT_MAX_DEGREE};
use crate::propagator::{
    analyze_monodromy, FloquetData, MULTIPLIER_CLUSTER_TOL, SEMISIMPLE_RANK_TOL,
};
use crate::scalar::{cabs, cln, creal, lit, to_f64, Real};

/// Complex number in serializable form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl ComplexValue {
    pub fn from<T: Real>(z: Complex<T>) -> Self {
        Self {
            re: to_f64(z.re),
            im: to_f64(z.im),
        }
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn to_complex(self) -> Complex<f64> {
        Complex::new(self.re, self.im)
    }
}

/// A complex polynomial held as its real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPolynomial<T: Real> {
    pub re: Polynomial<T>,
    pub im: Polynomial<T>,
}

impl<T: Real> ComplexPolynomial<T> {
    pub fn real(p: Polynomial<T>) -> Self {
        let n = p.dim();
        Self {
            re: p,
            im: Polynomial::zero(n),
        }
    }

    pub fn eval(&self, x: &DVector<T>) -> Complex<T> {
        Complex::new(self.re.eval(x), self.im.eval(x))
    }

    /// `z·self`.
    pub fn scale(&self, z: Complex<T>) -> Self {
        Self {
            re: self.re.scale(z.re).sub(&self.im.scale(z.im)),
            im: self.im.scale(z.re).add(&self.re.scale(z.im)),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            re: self.re.sub(&other.re),
            im: self.im.sub(&other.im),
        }
    }

    pub fn apply_kernel(&self, k: &TransitionKernel<T>) -> Self {
        Self {
            re: self.re.gaussian_transform(&k.u, &k.g, &k.q),
            im: self.im.gaussian_transform(&k.u, &k.g, &k.q),
        }
    }

    /// `‖φ‖_{L²(m)} = (∫|φ|² dm)^{1/2}`, exact.
    pub fn l2_norm(&self, m: &GaussianMeasure<T>) -> T {
        let sq = self.re.mul(&self.re).add(&self.im.mul(&self.im));
        sq.gaussian_mean(&m.mean, &m.cov).max(T::zero()).sqrt()
    }

    pub fn degree(&self) -> u32 {
        self.re.degree().max(self.im.degree())
    }
}

/// Degree-one eigenfunction `φ(x) = ⟨c, x⟩ + ⟨c, g⟩/(λ - 1)` of `V(t)`,
/// where `U(t,t-T)* c = λ c` and `⟨·,·⟩` is the bilinear pairing.
#[derive(Debug, Clone)]
pub struct LinearEigenpair<T: Real> {
    pub lambda: Complex<T>,
    pub c: DVector<Complex<T>>,
    pub constant: Complex<T>,
    pub phi: ComplexPolynomial<T>,
}

fn bilinear<T: Real>(c: &DVector<Complex<T>>, v: &DVector<T>) -> Complex<T> {
    c.iter()
        .zip(v.iter())
        .fold(creal(T::zero()), |a, (ci, vi)| a + *ci * creal(*vi))
}

/// The Poincaré kernel `(U(t,t-T), g(t,t-T), Q(t,t-T))`.
pub fn poincare_kernel<T: Real>(sys: &EvolutionSystem<T>, t: T) -> Result<TransitionKernel<T>> {
    let period = sys.propagator().field().require_period()?;
    sys.propagator().kernel(t - period, t)
}

/// Degree-one eigenpairs of `V(t)`, one per independent eigenvector of the
/// adjoint monodromy.
pub fn linear_eigenpairs<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
) -> Result<Vec<LinearEigenpair<T>>> {
    let period = sys.propagator().field().require_period()?;
    let k = poincare_kernel(sys, t)?;
    let fl = analyze_monodromy(&k.u, period)?;
    let n = k.dim();
    let mt = to_complex(&k.u.transpose());
    let tol = lit::<T>(SEMISIMPLE_RANK_TOL) * spectral_norm(&k.u);
    let mut out = vec![];
    for (lambda, _, _) in fl.distinct_multipliers() {
        let shifted = DMatrix::<Complex<T>>::identity(n, n) * lambda - &mt;
        for v in null_vectors(&shifted, tol) {
            let c = canonical_phase(&v);
            let constant = bilinear(&c, &k.g) / (lambda - creal(T::one()));
            let mut re = Polynomial::constant(n, constant.re);
            let mut im = Polynomial::constant(n, constant.im);
            for i in 0..n {
                let mut a = vec![0; n];
                a[i] = 1;
                re.add_term(a.clone(), c[i].re);
                im.add_term(a, c[i].im);
            }
            out.push(LinearEigenpair {
                lambda,
                c,
                constant,
                phi: ComplexPolynomial { re, im },
            });
        }
    }
    Ok(out)
}

/// `‖V(t)φ - λφ‖_{L²(ν_t)}` with exact polynomial kernel action.
pub fn eigen_residual<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
    lambda: Complex<T>,
    phi: &ComplexPolynomial<T>,
) -> Result<T> {
    let k = poincare_kernel(sys, t)?;
    let nu = sys.nu(t)?;
    Ok(residual_with(&k, &nu, lambda, phi))
}

fn residual_with<T: Real>(
    k: &TransitionKernel<T>,
    nu: &GaussianMeasure<T>,
    lambda: Complex<T>,
    phi: &ComplexPolynomial<T>,
) -> T {
    phi.apply_kernel(k).sub(&phi.scale(lambda)).l2_norm(nu)
}

/// `rank(λI - M) == rank((λI - M)²)` at thresholds `tol·‖M‖` and `tol·‖M‖²`.
pub fn semisimplicity<T: Real>(m: &DMatrix<T>, lambda: Complex<T>, tol: T) -> Result<bool> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Usage("matrix must be square".into()));
    }
    let scale = spectral_norm(m).max(cabs(lambda));
    let shifted = DMatrix::<Complex<T>>::identity(n, n) * lambda - to_complex(m);
    let smallest = shifted
        .clone()
        .singular_values()
        .iter()
        .fold(T::max_value().unwrap_or_else(|| lit(f64::MAX)), |a, &b| {
            a.min(b)
        });
    if smallest > tol * scale {
        return Err(Error::Usage(format!(
            "{}{:+}i is not an eigenvalue within tolerance",
            to_f64(lambda.re),
            to_f64(lambda.im)
        )));
    }
    let sq = &shifted * &shifted;
    Ok(numerical_rank(&shifted, tol * scale) == numerical_rank(&sq, tol * scale * scale))
}

/// Matrix of `V(t)` in the orthonormal basis `h_α(S⁻¹(x - m))`,
/// `|α| ≤ degree`, of `L²(ν_t)`, with `ν_t = N(m, S²)`.
#[derive(Debug, Clone)]
pub struct GalerkinMatrix<T: Real> {
    pub basis: Vec<MultiIndex>,
    pub matrix: DMatrix<T>,
}

/// Largest accepted condition number of the covariance of `ν_t`.
pub const MAX_COV_CONDITION: f64 = 1e12;

pub fn galerkin_matrix<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
    degree: u32,
) -> Result<GalerkinMatrix<T>> {
    if degree > DEFAULT_MAX_DEGREE {
        return Err(Error::IllConditioned(format!(
            "degree {degree} exceeds the supported maximum {DEFAULT_MAX_DEGREE}; use a lower degree"
        )));
    }
    let k = poincare_kernel(sys, t)?;
    let nu = sys.nu(t)?;
    let n = k.dim();
    let eig = nu.cov.clone().symmetric_eigenvalues();
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| {
        (l.min(to_f64(v)), h.max(to_f64(v)))
    });
    if !(lo > 0.0) || hi / lo > MAX_COV_CONDITION {
        return Err(Error::IllConditioned(format!(
            "covariance of ν_t has condition number {:.3e}; whitened basis is ill conditioned, lower the degree or rescale the field",
            hi / lo
        )));
    }
    let s = sym_sqrt(&nu.cov)?;
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("square root of the covariance".into()))?;
    let u_w = &s_inv * &k.u * &s;
    let g_w = &s_inv * (&k.u * &nu.mean + &k.g - &nu.mean);
    let mut q_w = &s_inv * &k.q * &s_inv;
    crate::linalg::symmetrize(&mut q_w);
    let whitened = TransitionKernel {
        s: k.s,
        t: k.t,
        u: u_w,
        g: g_w,
        q: q_w,
    };
    let basis = multi_indices(n, degree);
    let index: BTreeMap<MultiIndex, usize> = basis
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i))
        .collect();
    let dim = basis.len();
    let mut matrix = DMatrix::<T>::zeros(dim, dim);
    for (col, alpha) in basis.iter().enumerate() {
        let mut single = BTreeMap::new();
        single.insert(alpha.clone(), T::one());
        let h = Polynomial::from_hermite(n, &single);
        let image = h.gaussian_transform(&whitened.u, &whitened.g, &whitened.q);
        for (beta, c) in image.to_hermite() {
            match index.get(&beta) {
                Some(&row) => matrix[(row, col)] = c,
                None => {
                    return Err(Error::Internal(
                        "kernel action raised the polynomial degree".into(),
                    ))
                }
            }
        }
    }
    Ok(GalerkinMatrix { basis, matrix })
}

impl<T: Real> GalerkinMatrix<T> {
    /// Eigenvalues sorted by decreasing modulus, numerically split clusters
    /// replaced by their mean.
    pub fn eigenvalues(&self) -> Vec<Complex<T>> {
        let raw: Vec<Complex<T>> = self
            .matrix
            .clone()
            .complex_eigenvalues()
            .iter()
            .copied()
            .collect();
        let mut v = cluster_eigenvalues(&raw, lit(MULTIPLIER_CLUSTER_TOL));
        sort_by_modulus_desc(&mut v);
        v
    }

    /// Null vectors of `(λI - G)^power` (generalized eigenvectors for `power > 1`).
    pub fn eigenvectors(
        &self,
        lambda: Complex<T>,
        power: u32,
        left: bool,
    ) -> Vec<DVector<Complex<T>>> {
        let dim = self.matrix.nrows();
        let g = if left {
            to_complex(&self.matrix.transpose())
        } else {
            to_complex(&self.matrix)
        };
        let shifted = DMatrix::<Complex<T>>::identity(dim, dim) * lambda - g;
        let mut m = DMatrix::<Complex<T>>::identity(dim, dim);
        for _ in 0..power {
            m = &m * &shifted;
        }
        let scale = spectral_norm(&self.matrix).max(T::one());
        let tol = lit::<T>(1e-8) * scale.powi(power as i32);
        null_vectors(&m, tol)
    }

    /// Fraction of `‖v‖²` carried by basis functions of degree above `degree`.
    pub fn mass_above_degree(&self, v: &DVector<Complex<T>>, degree: u32) -> T {
        let total = v.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
        let high = v
            .iter()
            .zip(&self.basis)
            .filter(|(_, a)| a.iter().sum::<u32>() > degree)
            .fold(T::zero(), |a, (z, _)| a + z.norm_sqr());
        high / total
    }
}

/// Serializable summary of the spectral checks at one time.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub t: f64,
    pub degree: u32,
    pub r0: f64,
    pub analytic_eigs: Vec<ComplexValue>,
    pub galerkin_eigs: Vec<ComplexValue>,
    /// `‖V(t)φ - λφ‖_{L²(ν_t)}` for each analytic pair.
    pub residuals: Vec<f64>,
    pub max_modulus: f64,
    /// Largest modulus among eigenvalues other than the unit one.
    pub second_modulus: f64,
    /// Eigenvalues with `|λ - 1| ≤ unit_tol`.
    pub unit_count: usize,
    /// `|v_0|/‖v‖` of the right and left unit eigenvectors.
    pub unit_right_alignment: f64,
    pub unit_left_alignment: f64,
    /// Largest distance from an analytic eigenvalue to the Galerkin spectrum.
    pub analytic_match: f64,
    pub modulus_ok: bool,
    pub unit_simple: bool,
    pub second_ok: bool,
}

impl SpectralReport {
    pub fn passed(&self) -> bool {
        self.modulus_ok && self.unit_simple && self.second_ok
    }
}

/// Tolerances of the Galerkin invariants.
#[derive(Debug, Clone, Copy)]
pub struct SpectralTolerances {
    pub unit: f64,
    pub modulus: f64,
    pub second: f64,
}

impl Default for SpectralTolerances {
    fn default() -> Self {
        Self {
            unit: 1e-6,
            modulus: 1e-8,
            second: 1e-6,
        }
    }
}

pub fn galerkin_spectrum<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
    degree: u32,
) -> Result<SpectralReport> {
    galerkin_spectrum_with(sys, t, degree, SpectralTolerances::default())
}

pub fn galerkin_spectrum_with<T: Real>(
    sys: &EvolutionSystem<T>,
    t: T,
    degree: u32,
    tol: SpectralTolerances,
) -> Result<SpectralReport> {
    let gm = galerkin_matrix(sys, t, degree)?;
    let eigs = gm.eigenvalues();
    let k = poincare_kernel(sys, t)?;
    let period = sys.propagator().field().require_period()?;
    let fl = analyze_monodromy(&k.u, period)?;
    let r0 = to_f64(fl.r0);
    let pairs = linear_eigenpairs(sys, t)?;
    let nu = sys.nu(t)?;
    let residuals: Vec<f64> = pairs
        .iter()
        .map(|p| to_f64(residual_with(&k, &nu, p.lambda, &p.phi)))
        .collect();
    let one = creal(T::one());
    let unit: Vec<&Complex<T>> = eigs
        .iter()
        .filter(|z| to_f64(cabs(**z - one)) <= tol.unit)
        .collect();
    let unit_count = unit.len();
    let align = |left: bool| -> f64 {
        let v = gm.eigenvectors(one, 1, left);
        let v = &v[0];
        to_f64(cabs(v[0]) / v.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt())
    };
    let max_modulus = eigs.iter().map(|z| to_f64(cabs(*z))).fold(0.0, f64::max);
    let second_modulus = eigs
        .iter()
        .filter(|z| to_f64(cabs(**z - one)) > tol.unit)
        .map(|z| to_f64(cabs(*z)))
        .fold(0.0, f64::max);
    let analytic_match = pairs
        .iter()
        .map(|p| {
            eigs.iter()
                .map(|z| to_f64(cabs(*z - p.lambda)))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    Ok(SpectralReport {
        t: to_f64(t),
        degree,
        r0,
        analytic_eigs: pairs.iter().map(|p| ComplexValue::from(p.lambda)).collect(),
        galerkin_eigs: eigs.iter().map(|z| ComplexValue::from(*z)).collect(),
        residuals,
        max_modulus,
        second_modulus,
        unit_count,
        unit_right_alignment: align(false),
        unit_left_alignment: align(true),
        analytic_match,
        modulus_ok: max_modulus <= 1.0 + tol.modulus,
        unit_simple: unit_count == 1,
        second_ok: second_modulus <= r0 + tol.second,
    })
}

/// Kind of a lattice point of `G_#`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    /// `2πik/T`, from the constants.
    Imaginary,
    /// `(log μ)/T + 2πik/T` for a Floquet multiplier `μ`.
    Multiplier,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticePoint {
    pub lambda: ComplexValue,
    pub kind: LatticeKind,
    /// Whether `e^{λT}` is a semisimple eigenvalue.
    pub semisimple: bool,
}

/// Degree-one eigenvalue lattice of `G_#` with `|Im λ| ≤ im_cutoff`.
///
/// The representative of `log μ` is the principal branch (`Im ∈ (-π, π]`),
/// so a negative real multiplier gives imaginary part `π/T`; the remaining
/// points are its `2πi/T` shifts.
pub fn gsharp_lattice<T: Real>(fl: &FloquetData<T>, im_cutoff: f64) -> Result<Vec<LatticePoint>> {
    if !(im_cutoff >= 0.0) {
        return Err(Error::Usage("cutoff must be non-negative".into()));
    }
    let period = to_f64(fl.period);
    let spacing = 2.0 * std::f64::consts::PI / period;
    let slack = 1e-12 * (1.0 + im_cutoff);
    let mut out = vec![];
    let push_shifts = |base: Complex<f64>, kind, semisimple, out: &mut Vec<LatticePoint>| {
        let kmax = ((im_cutoff + base.im.abs()) / spacing).ceil() as i64 + 1;
        for k in -kmax..=kmax {
            let im = base.im + spacing * k as f64;
            if im.abs() <= im_cutoff + slack {
                out.push(LatticePoint {
                    lambda: ComplexValue { re: base.re, im },
                    kind,
                    semisimple,
                });
            }
        }
    };
    push_shifts(
        Complex::new(0.0, 0.0),
        LatticeKind::Imaginary,
        true,
        &mut out,
    );
    for (mu, _, semisimple) in fl.distinct_multipliers() {
        let l = cln(mu);
        let base = Complex::new(to_f64(l.re) / period, to_f64(l.im) / period);
        push_shifts(base, LatticeKind::Multiplier, semisimple, &mut out);
    }
    sort_points(&mut out);
    Ok(out)
}

fn sort_points(points: &mut [LatticePoint]) {
    points.sort_by(|a, b| {
        b.lambda
            .re
            .partial_cmp(&a.lambda.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(
                b.lambda
                    .im
                    .partial_cmp(&a.lambda.im)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
    });
}

/// Spectrum of `G_#` and the vertical lines of `σ(G)` for constant `A`.
#[derive(Debug, Clone, Serialize)]
pub struct AutonomousSpectrum {
    /// `2kπi/T + Σ n_j λ_j` for `|n| ≤ n_cutoff`, `|k| ≤ k_cutoff`.
    pub gsharp: Vec<ComplexValue>,
    /// Distinct real parts `Σ n_j Re λ_j`, decreasing.
    pub vertical_lines: Vec<f64>,
}

pub fn autonomous_spectrum<T: Real>(
    a: &DMatrix<T>,
    period: T,
    n_cutoff: u32,
    k_cutoff: u32,
) -> Result<AutonomousSpectrum> {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return Err(Error::Usage("A must be a non-empty square matrix".into()));
    }
    if !(period > T::zero()) {
        return Err(Error::Usage("period must be positive".into()));
    }
    let lambdas: Vec<Complex<f64>> = a
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex::new(to_f64(z.re), to_f64(z.im)))
        .collect();
    let spacing = 2.0 * std::f64::consts::PI / to_f64(period);
    let mut sums: Vec<Complex<f64>> = vec![];
    for alpha in multi_indices(n, n_cutoff) {
        let s = alpha
            .iter()
            .zip(&lambdas)
            .fold(Complex::new(0.0, 0.0), |acc, (&m, l)| acc + l * m as f64);
        sums.push(s);
    }
    let close = |a: Complex<f64>, b: Complex<f64>| (a - b).norm() <= 1e-10 * (1.0 + a.norm());
    let mut points: Vec<Complex<f64>> = vec![];
    for s in &sums {
        for k in -(k_cutoff as i64)..=(k_cutoff as i64) {
            let p = s + Complex::new(0.0, spacing * k as f64);
            if !points.iter().any(|q| close(*q, p)) {
                points.push(p);
            }
        }
    }
    points.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut lines: Vec<f64> = vec![];
    for s in &sums {
        if !lines
            .iter()
            .any(|l| (l - s.re).abs() <= 1e-10 * (1.0 + s.re.abs()))
        {
            lines.push(s.re);
        }
    }
    lines.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(AutonomousSpectrum {
        gsharp: points
            .into_iter()
            .map(|z| ComplexValue { re: z.re, im: z.im })
            .collect(),
        vertical_lines: lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::builtin;
    use crate::propagator::Propagator;

    fn system(field: crate::coefficients::CoefficientField<f64>) -> EvolutionSystem<f64> {
        EvolutionSystem::new(Propagator::new(field).unwrap())
    }

    #[test]
    fn scalar_linear_eigenpairs() {
        let sys = system(builtin::autonomous(-1.0, 1.0, 0.0, 1, 1.0).unwrap());
        let pairs = linear_eigenpairs(&sys, 0.0).unwrap();
        assert_eq!(pairs.len(), 1);
        assert!((pairs[0].lambda.re - (-1.0f64).exp()).abs() < 1e-10);
        assert!((pairs[0].phi.re.coefficient(&[1]) - 1.0).abs() < 1e-12);
        assert!(pairs[0].phi.re.coefficient(&[0]).abs() < 1e-14);

        let sys = system(builtin::autonomous(-1.0, 1.0, 1.0, 1, 1.0).unwrap());
        let pairs = linear_eigenpairs(&sys, 0.0).unwrap();
        assert!((pairs[0].phi.re.coefficient(&[0]) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn rotation_pairs_are_conjugate() {
        let sys = system(builtin::rotation_decay(2.0));
        let pairs = linear_eigenpairs(&sys, 0.0).unwrap();
        assert_eq!(pairs.len(), 2);
        let e = (-1.0f64).exp();
        for p in &pairs {
            assert!((p.lambda.re - e * 2f64.cos()).abs() < 1e-9);
            assert!((p.lambda.im.abs() - e * 2f64.sin()).abs() < 1e-9);
            assert!(eigen_residual(&sys, 0.0, p.lambda, &p.phi).unwrap() < 1e-8);
        }
        assert!((pairs[0].lambda.im + pairs[1].lambda.im).abs() < 1e-12);
    }

    #[test]
    fn residual_of_constants_and_wrong_lambda() {
        let sys = system(builtin::scalar_periodic());
        let one = ComplexPolynomial::real(Polynomial::constant(1, 1.0));
        assert_eq!(eigen_residual(&sys, 0.5, creal(1.0), &one).unwrap(), 0.0);
        let p = &linear_eigenpairs(&sys, 0.5).unwrap()[0];
        let nu = sys.nu(0.5).unwrap();
        let wrong = eigen_residual(&sys, 0.5, p.lambda + creal(0.1), &p.phi).unwrap();
        assert!(wrong >= 0.09 * to_f64(p.phi.l2_norm(&nu)));
    }

    #[test]
    fn semisimplicity_examples() {
        let e = (-1.0f64).exp();
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![e, e * e]));
        assert!(semisimplicity(&d, creal(e), 1e-7).unwrap());
        let j = DMatrix::from_row_slice(2, 2, &[e, e, 0.0, e]);
        assert!(!semisimplicity(&j, creal(e), 1e-7).unwrap());
        assert!(semisimplicity(&d, creal(0.5), 1e-7).is_err());
    }

    #[test]
    fn autonomous_galerkin_spectrum() {
        let sys = system(builtin::scalar_autonomous());
        let rep = galerkin_spectrum(&sys, 0.0, 3).unwrap();
        for (k, z) in rep.galerkin_eigs.iter().enumerate() {
            assert!((z.re - (-(k as f64)).exp()).abs() < 1e-6, "{k}: {z:?}");
            assert!(z.im.abs() < 1e-12);
        }
        assert!(rep.passed());
        assert!(rep.unit_right_alignment > 1.0 - 1e-9 && rep.unit_left_alignment > 1.0 - 1e-9);
    }

    #[test]
    fn gsharp_lattice_scalar_two_pi() {
        let fl = Propagator::new(builtin::scalar_periodic::<f64>())
            .unwrap()
            .floquet()
            .unwrap();
        let pts = gsharp_lattice(&fl, 2.0).unwrap();
        assert_eq!(pts.len(), 10);
        for k in -2..=2 {
            assert!(pts.iter().any(|p| p.kind == LatticeKind::Imaginary
                && p.lambda.re == 0.0
                && (p.lambda.im - k as f64).abs() < 1e-12));
            assert!(pts.iter().any(|p| p.kind == LatticeKind::Multiplier
                && (p.lambda.re + 1.0).abs() < 1e-9
                && (p.lambda.im - k as f64).abs() < 1e-9));
        }
    }

    #[test]
    fn autonomous_spectrum_examples() {
        let a = DMatrix::from_element(1, 1, -1.0);
        let s = autonomous_spectrum(&a, 2.0 * std::f64::consts::PI, 2, 1).unwrap();
        assert_eq!(s.gsharp.len(), 9);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        let s = autonomous_spectrum(&d, 1.0, 2, 0).unwrap();
        assert_eq!(s.vertical_lines, vec![0.0, -1.0, -2.0, -3.0, -4.0]);
        let s = autonomous_spectrum(&d, 1.0, 0, 2).unwrap();
        assert!(s.gsharp.iter().all(|z| z.re == 0.0));
        assert_eq!(s.gsharp.len(), 5);
    }
}
