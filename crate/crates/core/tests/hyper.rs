mod common;

use common::system;
use nalgebra::DVector;
use ou_evolution::asymptotics::{compute_c0, default_c0_grid};
use ou_evolution::coefficients::uniform_grid;
use ou_evolution::hyper::{
    alpha_derivative, exponent_path, kappa, verify_hypercontractivity, verify_log_sobolev,
    verify_quadratic_form, ExponentChoice, HYPER_QUAD_ORDER,
};
use ou_evolution::kernel::{apply_kernel, lp_norm, Observable};
use ou_evolution::polynomial::Polynomial;
use proptest::prelude::*;

fn sample_times(name: &str) -> Vec<f64> {
    let sys = system(name);
    let period = sys.propagator().field().period.unwrap();
    (0..8).map(|i| i as f64 * period / 8.0).collect()
}

/// Four positive observables in `n` variables.
fn log_sobolev_family(n: usize) -> Vec<Observable<f64>> {
    let x = |i| Polynomial::<f64>::variable(n, i);
    let c = |v| Polynomial::constant(n, v);
    let lin = x(0).sub(&x(n - 1).scale(0.5));
    vec![
        Observable::Polynomial(x(0).pow(2).add(&c(2.0))),
        Observable::Polynomial(lin.pow(2).add(&lin).add(&c(1.0))),
        Observable::Polynomial(x(0).pow(4).add(&x(n - 1).pow(2)).add(&c(0.5))),
        Observable::real_exp(DVector::from_fn(n, |i, _| 0.5 - 0.2 * i as f64)).unwrap(),
    ]
}

fn quadratic_family(n: usize) -> Vec<Polynomial<f64>> {
    let x = |i| Polynomial::<f64>::variable(n, i);
    vec![
        Polynomial::constant(n, 1.0),
        x(0),
        x(0).pow(2),
        x(0).pow(3)
            .add(&x(n - 1).mul(&x(0)))
            .sub(&Polynomial::constant(n, 0.7)),
    ]
}

#[test]
fn quadratic_form_identity_on_periodic_fields() {
    for name in ["scalar_periodic", "coupled_periodic"] {
        let sys = system(name);
        let n = sys.propagator().field().dim;
        for t in sample_times(name) {
            for phi in quadratic_family(n) {
                let r = verify_quadratic_form(&sys, t, &phi, HYPER_QUAD_ORDER).unwrap();
                assert!(r.residual.abs() <= 1e-7, "{name} t={t}: {r:?}");
                assert!(r.residual_exact.abs() <= 1e-7, "{name} t={t}: {r:?}");
            }
        }
    }
}

#[test]
fn opposite_sign_on_the_density_term_fails_off_stationarity() {
    let sys = system("scalar_periodic");
    let x2 = Polynomial::<f64>::variable(1, 0).pow(2);
    let worst = sample_times("scalar_periodic")
        .into_iter()
        .map(|t| {
            verify_quadratic_form(&sys, t, &x2, HYPER_QUAD_ORDER)
                .unwrap()
                .opposite_sign_residual
                .abs()
        })
        .fold(0.0, f64::max);
    assert!(worst > 1e-3, "{worst}");
}

#[test]
fn log_sobolev_over_times_observables_and_exponents() {
    for name in ["scalar_periodic", "coupled_periodic"] {
        let sys = system(name);
        let n = sys.propagator().field().dim;
        for t in sample_times(name) {
            for (i, phi) in log_sobolev_family(n).iter().enumerate() {
                for p in [1.5, 2.0, 4.0] {
                    let r = verify_log_sobolev(&sys, t, p, phi, HYPER_QUAD_ORDER).unwrap();
                    assert!(r.margin >= -1e-6, "{name} t={t} φ{i} p={p}: {r:?}");
                }
            }
        }
    }
}

#[test]
fn sign_changing_observable_below_two_is_reported_as_unconverged() {
    let sys = system("scalar_periodic");
    let phi = Observable::Polynomial(
        Polynomial::<f64>::variable(1, 0).add(&Polynomial::constant(1, 0.3)),
    );
    let err = verify_log_sobolev(&sys, 0.0, 1.5, &phi, HYPER_QUAD_ORDER).unwrap_err();
    assert!(matches!(err, ou_evolution::Error::Quadrature(_)), "{err:?}");
}

#[test]
fn classical_gross_inequality_for_the_stationary_ou() {
    let sys = system("scalar_autonomous");
    let phi = Observable::Polynomial(
        Polynomial::<f64>::variable(1, 0)
            .pow(2)
            .add(&Polynomial::constant(1, 1.0)),
    );
    let r = verify_log_sobolev(&sys, 0.0, 2.0, &phi, HYPER_QUAD_ORDER).unwrap();
    assert!(
        (r.c - 1.0).abs() < 1e-10 && r.density_term.abs() < 1e-9 && r.margin >= 0.0,
        "{r:?}"
    );
    let zero = Observable::constant(1, 0.0);
    assert!(verify_log_sobolev(&sys, 0.0, 2.0, &zero, HYPER_QUAD_ORDER).is_err());
}

#[test]
fn exponent_routes_agree_and_respect_the_lower_bound() {
    for name in ["scalar_periodic", "coupled_periodic", "scalar_autonomous"] {
        let sys = system(name);
        let p = sys.propagator();
        let w = p.field().period.unwrap_or(5.0);
        let omega0 = p.floquet().unwrap().omega0;
        let c0 = compute_c0(
            p,
            &default_c0_grid(omega0, 32),
            &uniform_grid(-w, w, 9),
            &uniform_grid(0.0, 3.0 * w, 61),
        )
        .unwrap()
        .c0;
        let t = 1.0;
        let s_grid = uniform_grid(t - 3.0, t, 13);
        for q in [1.5, 2.0, 4.0] {
            let plan = exponent_path(&sys, t, q, &s_grid, Some(c0)).unwrap();
            assert!(
                plan.max_route_diff <= 1e-8,
                "{name} q={q}: {}",
                plan.max_route_diff
            );
            assert!(plan.lower_bound_holds(), "{name} q={q}: {plan:?}");
            assert_eq!(*plan.p_closed.last().unwrap(), q);
            for w in plan.p_closed.windows(2) {
                assert!(w[0] >= w[1], "{name}: exponent must decrease toward t");
            }
        }
    }
}

#[test]
fn exponent_of_the_stationary_ou_is_classical() {
    let sys = system("scalar_autonomous");
    let s_grid = uniform_grid(-2.0, 0.0, 9);
    let plan = exponent_path(&sys, 0.0, 3.0, &s_grid, None).unwrap();
    for (s, p) in s_grid.iter().zip(&plan.p_closed) {
        let expect = 1.0 + 2.0 * (-2.0 * s).exp();
        assert!((p - expect).abs() <= 1e-8 * expect, "{s}: {p} vs {expect}");
    }
    assert!(exponent_path(&sys, 0.0, 1.0, &s_grid, None).is_err());
    assert!(exponent_path(&sys, 0.0, 2.0, &[0.5], None).is_err());
}

#[test]
fn hypercontractivity_on_the_periodic_scalar_field() {
    let sys = system("scalar_periodic");
    let t = 0.5;
    let s_grid: Vec<f64> = (0..5).rev().map(|k| t - 0.1 * (k + 1) as f64).collect();
    let plan = exponent_path(&sys, t, 2.0, &s_grid, None).unwrap();
    let x2 = Polynomial::<f64>::variable(1, 0).pow(2);
    let family = vec![
        Observable::Polynomial(x2.add(&Polynomial::constant(1, 1.0))),
        Observable::Polynomial(Polynomial::variable(1, 0).sub(&Polynomial::constant(1, 0.4))),
        Observable::real_exp(DVector::from_element(1, 1.0)).unwrap(),
        Observable::real_exp(DVector::from_element(1, -0.6)).unwrap(),
        Observable::constant(1, 2.5),
    ];
    let rep = verify_hypercontractivity(&sys, &plan, &family, HYPER_QUAD_ORDER).unwrap();
    assert!(rep.min_closed_form_margin >= -1e-9, "{rep:?}");
    assert!(rep.min_quadrature_margin >= -1e-5, "{rep:?}");
    for row in rep.rows.iter().filter(|r| r.observable == 4) {
        assert!(row.margin.abs() <= 1e-12, "{row:?}");
    }
}

#[test]
fn hypercontractivity_on_the_coupled_field() {
    let sys = system("coupled_periodic");
    let s_grid = uniform_grid(-2.0, 0.0, 6);
    let plan = exponent_path(&sys, 0.0, 2.0, &s_grid, None).unwrap();
    let family = vec![
        Observable::real_exp(DVector::from_vec(vec![0.7, -0.4])).unwrap(),
        Observable::Polynomial(
            Polynomial::<f64>::variable(2, 0)
                .mul(&Polynomial::variable(2, 1))
                .add(&Polynomial::constant(2, 1.0)),
        ),
    ];
    let rep = verify_hypercontractivity(&sys, &plan, &family, HYPER_QUAD_ORDER).unwrap();
    assert!(rep.min_closed_form_margin >= -1e-9, "{rep:?}");
    assert!(rep.min_quadrature_margin >= -1e-5, "{rep:?}");
}

#[test]
fn complex_exponential_smoke_case() {
    let sys = system("scalar_periodic");
    let plan = exponent_path(&sys, 0.0, 2.0, &uniform_grid(-2.0, 0.0, 5), None).unwrap();
    let family = vec![Observable::complex_exp(DVector::from_element(1, 0.9)).unwrap()];
    let rep = verify_hypercontractivity(&sys, &plan, &family, HYPER_QUAD_ORDER).unwrap();
    assert!(rep.min_closed_form_margin >= -1e-9, "{rep:?}");
}

#[test]
fn alpha_derivative_of_the_stationary_ou() {
    let sys = system("scalar_autonomous");
    let phi = Observable::real_exp(DVector::from_element(1, 1.0)).unwrap();
    for s in [-2.0, -1.0, -0.5, -0.1] {
        let d = alpha_derivative(&sys, 0.0, s, &phi, ExponentChoice::Theorem { q: 2.0 }).unwrap();
        assert!(
            (d.analytic - d.finite_difference).abs()
                <= 1e-4 * d.finite_difference.abs() + 1e-9 * d.alpha,
            "{d:?}"
        );
        assert!(d.analytic >= -1e-9, "{d:?}");
        let c = alpha_derivative(&sys, 0.0, s, &phi, ExponentChoice::Constant { p: 3.0 }).unwrap();
        assert!(
            (c.analytic - c.finite_difference).abs()
                <= 1e-4 * c.finite_difference.abs() + 1e-9 * c.alpha,
            "{c:?}"
        );
    }
    let one = Observable::constant(1, 4.0);
    let d = alpha_derivative(&sys, 0.0, -1.0, &one, ExponentChoice::Theorem { q: 2.0 }).unwrap();
    assert!(
        d.analytic.abs() <= 1e-12 && d.entropy_term.abs() <= 1e-12,
        "{d:?}"
    );
}

#[test]
fn alpha_is_nondecreasing_toward_t() {
    for name in ["scalar_periodic", "coupled_periodic"] {
        let sys = system(name);
        let n = sys.propagator().field().dim;
        let t = 0.7;
        let s_grid = uniform_grid(t - 2.5, t, 11);
        let plan = exponent_path(&sys, t, 2.0, &s_grid, None).unwrap();
        let phi = Observable::real_exp(DVector::from_fn(n, |i, _| 0.8 - 0.5 * i as f64)).unwrap();
        let alphas: Vec<f64> = s_grid
            .iter()
            .zip(&plan.p_closed)
            .map(|(&s, &p)| {
                let k = sys.propagator().kernel(s, t).unwrap();
                lp_norm(
                    &sys.nu(s).unwrap(),
                    &apply_kernel(&k, &phi).unwrap(),
                    p,
                    HYPER_QUAD_ORDER,
                )
                .unwrap()
            })
            .collect();
        for w in alphas.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{name}: {alphas:?}");
        }
        for &s in &s_grid[..s_grid.len() - 1] {
            let d = alpha_derivative(&sys, t, s, &phi, ExponentChoice::Theorem { q: 2.0 }).unwrap();
            assert!(d.analytic >= -1e-9, "{name} s={s}: {d:?}");
        }
    }
}

#[test]
fn kappa_is_invariant_under_noise_scaling() {
    let base = system("scalar_autonomous");
    let k0 = kappa(&base, 0.0).unwrap();
    for beta in [0.25, 3.0] {
        let f =
            ou_evolution::coefficients::builtin::autonomous(-1.0, beta * 2f64.sqrt(), 0.0, 1, 1.0)
                .unwrap();
        let sys = ou_evolution::EvolutionSystem::new(ou_evolution::Propagator::new(f).unwrap());
        assert!((kappa(&sys, 0.0).unwrap() - k0).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn log_sobolev_margin_is_nonnegative(t in -3.0f64..3.0, p in 1.2f64..6.0, c in 1.0f64..3.0, k in -1.0f64..1.0) {
        let sys = system("scalar_periodic");
        let phi = Observable::Polynomial(
            Polynomial::<f64>::variable(1, 0).pow(2).add(&Polynomial::variable(1, 0).scale(k)).add(&Polynomial::constant(1, c)),
        );
        let r = verify_log_sobolev(&sys, t, p, &phi, HYPER_QUAD_ORDER).unwrap();
        prop_assert!(r.margin >= -1e-6, "{:?}", r);
    }

    #[test]
    fn closed_form_hypercontractivity(k in -1.5f64..1.5, lag in 0.05f64..3.0, q in 1.1f64..5.0) {
        let sys = system("scalar_periodic");
        let plan = exponent_path(&sys, 0.3, q, &[0.3 - lag], None).unwrap();
        let family = vec![Observable::real_exp(DVector::from_element(1, k)).unwrap()];
        let rep = verify_hypercontractivity(&sys, &plan, &family, HYPER_QUAD_ORDER).unwrap();
        prop_assert!(rep.min_closed_form_margin >= -1e-9, "{:?}", rep);
    }
}
