use nalgebra::DVector;
use ou_evolution::coefficients::{builtin, uniform_grid};
use ou_evolution::hyper::{verify_log_sobolev, verify_quadratic_form};
use ou_evolution::kernel::Observable;
use ou_evolution::polynomial::Polynomial;

use super::{Check, Context, Curve, SuiteOutcome};
use crate::error::Result;

pub const QUADRATIC_FORM_TOL: f64 = 1e-7;
pub const MARGIN_SLACK: f64 = 1e-6;
pub const CLASSICAL_TOL: f64 = 1e-10;
pub const EXPONENTS: [f64; 3] = [1.5, 2.0, 4.0];

/// Eight times across one period, or across `[-3, 3]` if aperiodic.
fn sample_times(ctx: &Context) -> Vec<f64> {
    match ctx.field.period {
        Some(p) => (0..8).map(|i| i as f64 * p / 8.0).collect(),
        None => uniform_grid(-3.0, 3.0, 8),
    }
}

/// Four strictly positive observables; the entropy integrand `|φ|^p log|φ|`
/// is smooth for them at every `p > 1`.
fn positive_family(n: usize) -> Vec<Observable<f64>> {
    let x = |i| Polynomial::<f64>::variable(n, i);
    let c = |v| Polynomial::constant(n, v);
    let lin = x(0).sub(&x(n - 1).scale(0.5));
    vec![
        Observable::Polynomial(x(0).pow(2).add(&c(2.0))),
        Observable::Polynomial(lin.pow(2).add(&lin).add(&c(1.0))),
        Observable::Polynomial(x(0).pow(4).add(&x(n - 1).pow(2)).add(&c(0.5))),
        Observable::real_exp(DVector::from_fn(n, |i, _| 0.5 - 0.2 * i as f64)).expect("finite"),
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

pub fn run(ctx: &Context) -> Result<SuiteOutcome> {
    let sys = ctx.system()?;
    let n = ctx.dim();
    let q = ctx.settings.quad_order;
    let mut out = SuiteOutcome::default();
    let times = sample_times(ctx);

    let mut qf: f64 = 0.0;
    let mut opposite: f64 = 0.0;
    for &t in &times {
        for phi in quadratic_family(n) {
            let r = verify_quadratic_form(sys, t, &phi, q)?;
            qf = qf.max(r.residual.abs()).max(r.residual_exact.abs());
            opposite = opposite.max(r.opposite_sign_residual.abs());
        }
    }
    out.check(Check::at_most(
        "quadratic_form.max_residual",
        qf,
        QUADRATIC_FORM_TOL,
    ));
    out.number("quadratic_form.opposite_sign_residual", opposite);

    let mut min_margin = f64::INFINITY;
    let mut curve = Curve::new(
        "log_sobolev",
        &["t", "observable", "p", "c", "entropy", "rhs", "margin"],
    );
    for &t in &times {
        for (i, phi) in positive_family(n).iter().enumerate() {
            for p in EXPONENTS {
                let r = verify_log_sobolev(sys, t, p, phi, q)?;
                min_margin = min_margin.min(r.margin);
                curve.push(vec![t, i as f64, p, r.c, r.entropy, r.rhs, r.margin]);
            }
        }
    }
    out.check(Check::at_least(
        "log_sobolev.min_margin",
        min_margin,
        -MARGIN_SLACK,
    ));
    out.curves.push(curve);

    // Stationary OU with unit variance: Gross' inequality with constant 1.
    let reference = ctx.build_system(builtin::scalar_autonomous())?;
    let phi = Observable::Polynomial(
        Polynomial::variable(1, 0)
            .pow(2)
            .add(&Polynomial::constant(1, 1.0)),
    );
    let r = verify_log_sobolev(&reference, 0.0, 2.0, &phi, q)?;
    out.check(Check::at_most(
        "reference.classical_constant_error",
        (r.c - 1.0).abs(),
        CLASSICAL_TOL,
    ));
    out.check(Check::at_least("reference.classical_margin", r.margin, 0.0));
    Ok(out)
}
