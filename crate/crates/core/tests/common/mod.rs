#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ou_evolution::coefficients::{builtin, CoefficientField};
use ou_evolution::kernel::Observable;
use ou_evolution::measures::EvolutionSystem;
use ou_evolution::polynomial::Polynomial;
use ou_evolution::propagator::Propagator;

pub fn field(name: &str) -> CoefficientField<f64> {
    builtin::by_name(name).unwrap()
}

pub fn prop(name: &str) -> Propagator<f64> {
    Propagator::new(field(name)).unwrap()
}

pub fn system(name: &str) -> EvolutionSystem<f64> {
    EvolutionSystem::new(prop(name))
}

/// Half-width of the test window: `2T` for periodic fields, 10 otherwise.
pub fn window(f: &CoefficientField<f64>) -> f64 {
    f.period.map(|p| 2.0 * p).unwrap_or(10.0)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

pub fn max_abs_v(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Polynomials of degree ≤ 4 and exponentials in `n` variables.
pub fn test_family(n: usize) -> Vec<Observable<f64>> {
    let x = |i| Polynomial::<f64>::variable(n, i);
    let mut fam = vec![
        Observable::constant(n, 1.0),
        Observable::Polynomial(x(0)),
        Observable::Polynomial(x(0).mul(&x(0)).add(&Polynomial::constant(n, 0.5))),
        Observable::Polynomial(x(0).pow(3).sub(&x(n - 1).scale(2.0))),
        Observable::Polynomial(x(0).pow(4).add(&x(0).mul(&x(n - 1)).scale(0.3))),
        Observable::real_exp(DVector::from_fn(n, |i, _| 0.4 - 0.3 * i as f64)).unwrap(),
        Observable::complex_exp(DVector::from_fn(n, |i, _| 0.7 + 0.2 * i as f64)).unwrap(),
    ];
    if n > 1 {
        fam.push(Observable::Polynomial(x(1).pow(2).mul(&x(0))));
    }
    fam
}
