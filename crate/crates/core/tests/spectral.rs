mod common;

use common::system;
use nalgebra::{Complex, DMatrix, DVector};
use ou_evolution::coefficients::builtin;
use ou_evolution::kernel::{apply_kernel, mean_functional, Observable};
use ou_evolution::measures::EvolutionSystem;
use ou_evolution::polynomial::Polynomial;
use ou_evolution::propagator::Propagator;
use ou_evolution::spectral::{
    autonomous_spectrum, eigen_residual, galerkin_matrix, galerkin_spectrum, gsharp_lattice,
    linear_eigenpairs, poincare_kernel, semisimplicity, ComplexPolynomial, LatticeKind,
};

fn sys_of(f: ou_evolution::coefficients::CoefficientField<f64>) -> EvolutionSystem<f64> {
    EvolutionSystem::new(Propagator::new(f).unwrap())
}

fn contains(set: &[Complex<f64>], z: Complex<f64>, tol: f64) -> bool {
    set.iter().any(|w| (w - z).norm() <= tol)
}

#[test]
fn ornstein_uhlenbeck_spectrum() {
    let sys = system("scalar_autonomous");
    for degree in [3u32, 5] {
        let rep = galerkin_spectrum(&sys, 0.4, degree).unwrap();
        assert!(rep.passed(), "{rep:?}");
        for (k, z) in rep.galerkin_eigs.iter().enumerate() {
            assert!(
                (z.re - (-(k as f64)).exp()).abs() <= 1e-6 && z.im.abs() <= 1e-6,
                "{k}: {z:?}"
            );
        }
        assert!(rep.unit_right_alignment > 1.0 - 1e-9 && rep.unit_left_alignment > 1.0 - 1e-9);
        assert!(rep.residuals.iter().all(|r| *r <= 1e-8));
    }
}

#[test]
fn galerkin_invariants_on_periodic_builtins() {
    for name in [
        "scalar_periodic",
        "rotation_decay",
        "nonnormal_jordan",
        "coupled_periodic",
    ] {
        let sys = system(name);
        for t in [0.0, 0.37] {
            let rep = galerkin_spectrum(&sys, t, 4).unwrap();
            assert!(rep.passed(), "{name}: {rep:?}");
            assert!(rep.analytic_match <= 1e-6, "{name}: {}", rep.analytic_match);
            assert!(
                rep.residuals.iter().all(|r| *r <= 1e-8),
                "{name}: {:?}",
                rep.residuals
            );
        }
    }
}

#[test]
fn eigenvectors_respect_the_degree_bound() {
    let sys = system("scalar_autonomous");
    let gm = galerkin_matrix(&sys, 0.0, 6).unwrap();
    for k in 0..=6u32 {
        let lambda = Complex::new((-(k as f64)).exp(), 0.0);
        let v = gm.eigenvectors(lambda, 1, false);
        assert_eq!(v.len(), 1, "k={k}");
        assert!(gm.mass_above_degree(&v[0], k) <= 1e-6);
    }
    let sys = system("nonnormal_jordan");
    let gm = galerkin_matrix(&sys, 0.0, 3).unwrap();
    let lambda = Complex::new((-1f64).exp(), 0.0);
    assert_eq!(gm.eigenvectors(lambda, 1, false).len(), 1);
    let generalized = gm.eigenvectors(lambda, 2, false);
    assert_eq!(generalized.len(), 2);
    for v in &generalized {
        assert!(gm.mass_above_degree(v, 1) <= 1e-6);
    }
}

#[test]
fn mean_value_is_the_unit_spectral_projection() {
    for name in ["scalar_periodic", "coupled_periodic"] {
        let sys = system(name);
        let t = 0.8;
        let k = poincare_kernel(&sys, t).unwrap();
        let nu = sys.nu(t).unwrap();
        let n = k.dim();
        let x = |i| Polynomial::<f64>::variable(n, i);
        let phi = x(0)
            .pow(3)
            .add(&x(n - 1).mul(&x(0)))
            .add(&Polynomial::constant(n, 0.7));
        let m = phi.gaussian_mean(&nu.mean, &nu.cov);
        let centred = phi.sub(&Polynomial::constant(n, m));
        let lhs = centred.gaussian_transform(&k.u, &k.g, &k.q);
        let rhs = phi
            .gaussian_transform(&k.u, &k.g, &k.q)
            .sub(&Polynomial::constant(n, m));
        assert!(lhs.max_coefficient_diff(&rhs) <= 1e-12);
        let image = apply_kernel(&k, &Observable::Polynomial(phi)).unwrap();
        let mv = mean_functional(&nu, &image, 0).unwrap().re;
        assert!((mv - m).abs() <= 1e-8, "{name}: {mv} vs {m}");
    }
}

#[test]
fn linear_eigenpair_examples() {
    let sys = sys_of(builtin::autonomous(-1.0, 1.0, 0.0, 1, 1.0).unwrap());
    let pairs = linear_eigenpairs(&sys, 0.0).unwrap();
    assert_eq!(pairs.len(), 1);
    assert!((pairs[0].lambda.re - (-1f64).exp()).abs() < 1e-10);
    let x = ComplexPolynomial::real(Polynomial::variable(1, 0));
    assert!(pairs[0].phi.sub(&x).l2_norm(&sys.nu(0.0).unwrap()) < 1e-10);

    let sys = sys_of(builtin::autonomous(-1.0, 1.0, 1.0, 1, 1.0).unwrap());
    let pairs = linear_eigenpairs(&sys, 0.0).unwrap();
    assert!((pairs[0].constant.re + 1.0).abs() < 1e-10 && pairs[0].constant.im.abs() < 1e-14);

    let sys = system("rotation_decay");
    let pairs = linear_eigenpairs(&sys, 0.0).unwrap();
    let lambdas: Vec<Complex<f64>> = pairs.iter().map(|p| p.lambda).collect();
    for sign in [1.0, -1.0] {
        let expect = Complex::new(-1.0, 2.0 * sign).exp();
        assert!(contains(&lambdas, expect, 1e-10), "{lambdas:?}");
    }
    for p in &pairs {
        assert!(eigen_residual(&sys, 0.0, p.lambda, &p.phi).unwrap() <= 1e-8);
        let norm = p.phi.l2_norm(&sys.nu(0.0).unwrap());
        let wrong = eigen_residual(&sys, 0.0, p.lambda + 0.1, &p.phi).unwrap();
        assert!(wrong >= 0.09 * norm);
    }
    let one = ComplexPolynomial::real(Polynomial::constant(2, 1.0));
    assert_eq!(
        eigen_residual(&sys, 0.0, Complex::new(1.0, 0.0), &one).unwrap(),
        0.0
    );
}

#[test]
fn semisimplicity_examples() {
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![(-1f64).exp(), (-2f64).exp()]));
    assert!(semisimplicity(&d, Complex::new((-1f64).exp(), 0.0), 1e-7).unwrap());
    let j = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]) * (-1f64).exp();
    assert!(!semisimplicity(&j, Complex::new((-1f64).exp(), 0.0), 1e-7).unwrap());
    let rot = Propagator::new(builtin::rotation_decay::<f64>(2.0))
        .unwrap()
        .monodromy_at(0.0)
        .unwrap();
    assert!(semisimplicity(&rot, Complex::new(-1.0, 2.0).exp(), 1e-7).unwrap());
    assert!(semisimplicity(&d, Complex::new(0.5, 0.0), 1e-7).is_err());
}

fn points(xs: &[(f64, f64)]) -> Vec<Complex<f64>> {
    xs.iter().map(|&(a, b)| Complex::new(a, b)).collect()
}

fn same_set(a: &[Complex<f64>], b: &[Complex<f64>], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|z| contains(b, *z, tol))
        && b.iter().all(|z| contains(a, *z, tol))
}

#[test]
fn lattice_examples() {
    let two_pi = 2.0 * std::f64::consts::PI;
    let p = Propagator::with_settings(
        builtin::autonomous::<f64>(-1.0, 1.0, 0.0, 1, two_pi).unwrap(),
        1e-13,
        None,
    )
    .unwrap();
    let lat = gsharp_lattice(&p.floquet().unwrap(), 2.0).unwrap();
    let got: Vec<Complex<f64>> = lat.iter().map(|l| l.lambda.to_complex()).collect();
    let expect = points(&[
        (0.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (0.0, 2.0),
        (0.0, -2.0),
        (-1.0, 0.0),
        (-1.0, 1.0),
        (-1.0, -1.0),
        (-1.0, 2.0),
        (-1.0, -2.0),
    ]);
    assert!(same_set(&got, &expect, 1e-10), "{got:?}");
    assert!(lat.iter().all(|l| l.semisimple));
    assert_eq!(
        lat.iter()
            .filter(|l| l.kind == LatticeKind::Imaginary)
            .count(),
        5
    );

    let spec = autonomous_spectrum(&DMatrix::from_element(1, 1, -1.0), two_pi, 2, 1).unwrap();
    let got: Vec<Complex<f64>> = spec.gsharp.iter().map(|z| z.to_complex()).collect();
    let expect = points(&[
        (0.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (-1.0, 0.0),
        (-1.0, 1.0),
        (-1.0, -1.0),
        (-2.0, 0.0),
        (-2.0, 1.0),
        (-2.0, -1.0),
    ]);
    assert!(same_set(&got, &expect, 1e-10), "{got:?}");

    let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
    let spec = autonomous_spectrum(&diag, 1.0, 2, 0).unwrap();
    assert_eq!(spec.vertical_lines.len(), 5);
    for (l, e) in spec
        .vertical_lines
        .iter()
        .zip([0.0, -1.0, -2.0, -3.0, -4.0])
    {
        assert!((l - e).abs() <= 1e-10);
    }

    let spec = autonomous_spectrum(&diag, 1.0, 0, 2).unwrap();
    let got: Vec<Complex<f64>> = spec.gsharp.iter().map(|z| z.to_complex()).collect();
    let expect: Vec<Complex<f64>> = (-2..=2)
        .map(|k| Complex::new(0.0, two_pi * k as f64))
        .collect();
    assert!(same_set(&got, &expect, 1e-10));

    let rot = Propagator::new(builtin::rotation_decay::<f64>(2.0)).unwrap();
    let lat = gsharp_lattice(&rot.floquet().unwrap(), 7.0).unwrap();
    let got: Vec<Complex<f64>> = lat
        .iter()
        .filter(|l| l.kind == LatticeKind::Multiplier)
        .map(|l| l.lambda.to_complex())
        .collect();
    for base in [2.0, -2.0] {
        for k in -2..=2 {
            let im = base + two_pi * k as f64;
            if im.abs() <= 7.0 {
                assert!(
                    contains(&got, Complex::new(-1.0, im), 1e-10),
                    "{im}: {got:?}"
                );
            }
        }
    }
}

#[test]
fn spectral_mapping_of_the_degree_one_lattice() {
    for name in ["rotation_decay", "coupled_periodic", "nonnormal_jordan"] {
        let sys = system(name);
        let p = sys.propagator();
        let period = p.field().period.unwrap();
        let lat = gsharp_lattice(&p.floquet().unwrap(), 10.0).unwrap();
        let eigs: Vec<Complex<f64>> = galerkin_matrix(&sys, 0.0, 3).unwrap().eigenvalues();
        for l in &lat {
            let mapped = (l.lambda.to_complex() * period).exp();
            assert!(contains(&eigs, mapped, 1e-6), "{name}: {mapped}");
        }
        if name == "nonnormal_jordan" {
            assert!(lat
                .iter()
                .filter(|l| l.kind == LatticeKind::Multiplier)
                .all(|l| !l.semisimple));
        }
    }
}

#[test]
fn aperiodic_fields_have_no_poincare_operator() {
    let sys = system("scalar_aperiodic");
    assert!(galerkin_spectrum(&sys, 0.0, 3).is_err());
    assert!(linear_eigenpairs(&sys, 0.0).is_err());
    assert!(galerkin_matrix(&system("scalar_periodic"), 0.0, 9).is_err());
}
