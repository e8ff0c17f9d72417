use ou_evolution::coefficients::builtin;
use ou_evolution::kernel::{apply_kernel, Observable};
use ou_evolution::measures::quadrature_kernel;
use ou_evolution::polynomial::Polynomial;

use super::{Check, Context, Curve, SuiteOutcome};
use crate::error::Result;

pub const INTEGRAL_FORM_TOL: f64 = 1e-8;
pub const CLOSED_FORM_TOL: f64 = 1e-9;
/// Gauss–Legendre panels and order of the integral-form oracle.
pub const ORACLE_PANELS: usize = 40;
pub const ORACLE_ORDER: usize = 12;

pub fn run(ctx: &Context) -> Result<SuiteOutcome> {
    let p = ctx.propagator()?;
    let mut out = SuiteOutcome::default();
    let mut rel_g: f64 = 0.0;
    let mut rel_q: f64 = 0.0;
    let mut curve = Curve::new("integral_form", &["s", "t", "rel_error_g", "rel_error_q"]);
    for (s, t) in [(0.0, 0.5), (-1.0, 2.0), (0.3, 4.7)] {
        let ode = p.kernel(s, t)?;
        let quad = quadrature_kernel(p, s, t, ORACLE_PANELS, ORACLE_ORDER)?;
        // A vanishing forcing term gives g = 0 exactly on both routes.
        let dg = (&ode.g - &quad.g).norm();
        let eg = if dg == 0.0 { 0.0 } else { dg / quad.g.norm() };
        let eq = (&ode.q - &quad.q).norm() / quad.q.norm();
        rel_g = rel_g.max(eg);
        rel_q = rel_q.max(eq);
        curve.push(vec![s, t, eg, eq]);
    }
    out.check(Check::at_most(
        "integral_form.rel_error_g",
        rel_g,
        INTEGRAL_FORM_TOL,
    ));
    out.check(Check::at_most(
        "integral_form.rel_error_q",
        rel_q,
        INTEGRAL_FORM_TOL,
    ));
    out.curves.push(curve);

    let n = ctx.dim();
    let k = p.kernel(-0.7, 2.2)?;
    let preserved = match apply_kernel(&k, &Observable::constant(n, 1.0))? {
        Observable::Polynomial(q) => q == Polynomial::constant(n, 1.0),
        _ => false,
    };
    out.check(Check::holds("constants_preserved_exactly", preserved));

    // Reference: the stationary scalar OU (a = -1, b = √2) has
    // U = e^{-(t-s)}, g = 0, Q = 1 - e^{-2(t-s)}.
    let reference = ctx.build_system(builtin::scalar_autonomous())?;
    let mut err: f64 = 0.0;
    for (s, t) in [(0.0, 0.1), (-2.0, 1.0), (1.0, 6.0)] {
        let k = reference.propagator().kernel(s, t)?;
        let lag: f64 = t - s;
        err = err
            .max((k.u[(0, 0)] - (-lag).exp()).abs())
            .max((k.q[(0, 0)] - (1.0 - (-2.0 * lag).exp())).abs())
            .max(k.g[0].abs());
    }
    out.check(Check::at_most(
        "reference.scalar_closed_form_error",
        err,
        CLOSED_FORM_TOL,
    ));
    Ok(out)
}
