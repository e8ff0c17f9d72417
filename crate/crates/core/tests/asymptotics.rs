mod common;

use common::{system, test_family};
use nalgebra::DVector;
use ou_evolution::asymptotics::{
    compute_c0, decay_curve, decay_norm_complex, default_c0_grid, required_m_growth,
    space_time_decay, verify_decay_bound, verify_global_decay, verify_poincare, verify_sharpness,
    DecayProfile,
};
use ou_evolution::coefficients::uniform_grid;
use ou_evolution::kernel::Observable;
use ou_evolution::measures::EvolutionSystem;
use ou_evolution::polynomial::Polynomial;
use ou_evolution::spectral::linear_eigenpairs;

fn profile(sys: &EvolutionSystem<f64>) -> DecayProfile {
    let p = sys.propagator();
    let w = p.field().period.unwrap_or(5.0);
    let omega0 = match p.field().period {
        Some(_) => p.floquet().unwrap().omega0,
        None => p
            .estimate_growth_bound(20.0, &uniform_grid(-5.0, 5.0, 11))
            .unwrap(),
    };
    compute_c0(
        p,
        &default_c0_grid(omega0, 32),
        &uniform_grid(-w, w, 9),
        &uniform_grid(0.0, 3.0 * w, 61),
    )
    .unwrap()
}

fn real_family(n: usize) -> Vec<Observable<f64>> {
    test_family(n)
}

#[test]
fn global_decay_bound_holds_for_every_builtin() {
    for name in [
        "scalar_autonomous",
        "scalar_periodic",
        "rotation_decay",
        "nonnormal_jordan",
        "coupled_periodic",
        "scalar_aperiodic",
    ] {
        let sys = system(name);
        let prof = profile(&sys);
        assert!(
            prof.c0 < 0.0 && prof.c0 >= prof.omega0 - 1e-12,
            "{name}: {prof:?}"
        );
        let lags = uniform_grid(0.0, 20.0, 41);
        let rep = verify_global_decay(
            &sys,
            0.7,
            prof.c0,
            &real_family(sys.propagator().field().dim),
            &lags,
        )
        .unwrap();
        assert!(rep.passed(1e-9), "{name}: min margin {}", rep.min_margin);
    }
}

#[test]
fn scalar_normal_case_saturates() {
    let sys = system("scalar_autonomous");
    let prof = profile(&sys);
    assert!(
        (prof.c0 - prof.omega0).abs() <= 1e-8 * prof.omega0.abs(),
        "{prof:?}"
    );
    let lags = uniform_grid(0.0, 20.0, 41);
    let x = Observable::Polynomial(Polynomial::variable(1, 0));
    let rep = verify_global_decay(&sys, 0.0, prof.c0, &[x], &lags).unwrap();
    for r in &rep.rows {
        assert!(r.margin >= -1e-9 && r.margin <= 1e-8, "{r:?}");
    }
}

#[test]
fn decay_bound_with_the_profile_constants() {
    for name in ["rotation_decay", "nonnormal_jordan", "coupled_periodic"] {
        let sys = system(name);
        let prof = profile(&sys);
        let lags = uniform_grid(0.0, 15.0, 31);
        for m in prof.m_table.iter().step_by(8) {
            let rep =
                verify_decay_bound(&sys, 0.2, m.omega, m.value, &test_family(2), &lags).unwrap();
            assert!(rep.passed(1e-8), "{name} ω={}: {}", m.omega, rep.min_margin);
        }
    }
}

#[test]
fn sharpness_and_refutation_below_the_growth_bound() {
    let sys = system("rotation_decay");
    let rep = verify_sharpness(&sys, 0.0, 8).unwrap();
    assert!(rep.passed(1e-8) && rep.curves.len() == 2, "{rep:?}");
    for c in &rep.curves {
        for (k, r) in c.ratios.iter().enumerate() {
            let expect = (-((k + 1) as f64)).exp();
            assert!((r - expect).abs() <= 1e-8 * expect);
        }
    }
    for name in ["scalar_periodic", "coupled_periodic"] {
        let sys = system(name);
        let fl = sys.propagator().floquet().unwrap();
        let period = sys.propagator().field().period.unwrap();
        let pair = linear_eigenpairs(&sys, 0.0)
            .unwrap()
            .into_iter()
            .min_by(|a, b| {
                let da = (a.lambda.norm() - fl.r0).abs();
                let db = (b.lambda.norm() - fl.r0).abs();
                da.total_cmp(&db)
            })
            .unwrap();
        assert!(
            (pair.lambda.norm() - fl.r0).abs() <= 1e-9 * fl.r0,
            "{name}: {:?}",
            pair.lambda
        );
        let omega = fl.omega0 - 0.1;
        let norms: Vec<f64> = (0..=8)
            .map(|k| decay_norm_complex(&sys, -(k as f64) * period, 0.0, &pair.phi).unwrap())
            .collect();
        for (k, nk) in norms.iter().enumerate() {
            let expect = norms[0] * (fl.omega0 * k as f64 * period).exp();
            assert!(
                (nk - expect).abs() <= 1e-6 * expect,
                "{name} k={k}: {nk} vs {expect}"
            );
        }
        let (a, b) = (4.0 * period, 8.0 * period);
        let growth = (norms[8] * (-omega * b).exp()) / (norms[4] * (-omega * a).exp());
        assert!(
            growth >= ((fl.omega0 - omega) * (b - a)).exp() * (1.0 - 1e-6),
            "{name}: {growth}"
        );
        if pair.lambda.im == 0.0 {
            let phi = Observable::Polynomial(pair.phi.re.clone());
            let real_growth = required_m_growth(&sys, 0.0, &phi, omega, a, b).unwrap();
            assert!(
                (real_growth - growth).abs() <= 1e-6 * growth,
                "{name}: {real_growth} vs {growth}"
            );
            let lags: Vec<f64> = (0..8).map(|k| k as f64 * period).collect();
            let curve = decay_curve(&sys, 0.0, &phi, &lags).unwrap();
            assert!(
                (curve.fitted_rate.unwrap() - fl.omega0).abs() <= 1e-6,
                "{name}: {curve:?}"
            );
        }
    }
    let sys = system("nonnormal_jordan");
    let rep = verify_sharpness(&sys, 0.0, 20).unwrap();
    assert!(!rep.peripheral_semisimple && rep.jordan[0].increasing);
}

#[test]
fn eigenfunction_norms_do_not_increase() {
    let sys = system("coupled_periodic");
    let pairs = linear_eigenpairs(&sys, 0.0).unwrap();
    let phi = Observable::Polynomial(pairs[0].phi.re.clone());
    let c = decay_curve(&sys, 0.0, &phi, &uniform_grid(0.0, 20.0, 81)).unwrap();
    for w in c.norms.windows(2) {
        assert!(w[1] <= w[0] + 1e-9);
    }
}

#[test]
fn poincare_inequality_on_builtins() {
    for name in [
        "scalar_periodic",
        "rotation_decay",
        "nonnormal_jordan",
        "coupled_periodic",
        "scalar_aperiodic",
    ] {
        let sys = system(name);
        let prof = profile(&sys);
        let n = sys.propagator().field().dim;
        let x = |i| Polynomial::<f64>::variable(n, i);
        let family = vec![
            Observable::Polynomial(x(0)),
            Observable::Polynomial(x(n - 1).mul(&x(0)).add(&x(0).pow(2))),
            Observable::Polynomial(x(0).pow(3).sub(&x(n - 1))),
            Observable::real_exp(DVector::from_element(n, 0.3)).unwrap(),
            Observable::constant(n, 1.0),
        ];
        let m = &prof.m_table[prof.m_table.len() / 2];
        let rep =
            verify_poincare(&sys, &uniform_grid(-3.0, 3.0, 7), &family, m.omega, m.value).unwrap();
        assert!(rep.min_margin >= -1e-8, "{name}: {rep:?}");
    }
}

#[test]
fn space_time_bound_follows_from_the_slices() {
    let sys = system("scalar_periodic");
    let prof = profile(&sys);
    let phi =
        Observable::Polynomial(Polynomial::monomial(vec![2], 1.0).add(&Polynomial::variable(1, 0)));
    let bump = |t: f64| {
        if (0.0..=2.0).contains(&t) {
            (std::f64::consts::PI * t / 2.0).sin()
        } else {
            0.0
        }
    };
    let rows = space_time_decay(
        &sys,
        prof.c0,
        &phi,
        bump,
        &uniform_grid(-6.0, 2.0, 33),
        &[0.0, 1.0, 2.0, 4.0],
    )
    .unwrap();
    for r in rows {
        assert!(r.margin >= -1e-9, "{r:?}");
    }
}
