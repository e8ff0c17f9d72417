use nalgebra::DVector;
use ou_evolution::coefficients::{builtin, uniform_grid};
use ou_evolution::hyper::{
    alpha_derivative, exponent_path, verify_hypercontractivity, ExponentChoice,
};
use ou_evolution::kernel::Observable;
use ou_evolution::polynomial::Polynomial;

use super::{Check, Context, Curve, SuiteOutcome};
use crate::error::Result;

pub const ROUTE_TOL: f64 = 1e-8;
pub const CLOSED_FORM_SLACK: f64 = 1e-9;
pub const QUADRATURE_SLACK: f64 = 1e-5;
/// Relative agreement of the three-term `α'` with a central difference.
pub const ALPHA_REL_TOL: f64 = 1e-4;
pub const ALPHA_SLACK: f64 = 1e-9;
pub const TARGETS: [f64; 3] = [1.5, 2.0, 4.0];

fn family(n: usize) -> Vec<Observable<f64>> {
    let x = |i| Polynomial::<f64>::variable(n, i);
    let c = |v| Polynomial::constant(n, v);
    let dir = |s: f64| DVector::from_fn(n, |i, _| s * (1.0 - 0.5 * i as f64));
    vec![
        Observable::Polynomial(x(0).pow(2).add(&c(1.0))),
        Observable::Polynomial(x(0).sub(&c(0.4))),
        Observable::real_exp(dir(1.0)).expect("finite"),
        Observable::real_exp(dir(-0.6)).expect("finite"),
        Observable::constant(n, 2.5),
    ]
}

fn alpha_gap(d: &ou_evolution::hyper::AlphaDerivative) -> f64 {
    (d.analytic - d.finite_difference).abs()
        - ALPHA_REL_TOL * d.finite_difference.abs()
        - ALPHA_SLACK * d.alpha
}

pub fn run(ctx: &Context) -> Result<SuiteOutcome> {
    let sys = ctx.system()?;
    let n = ctx.dim();
    let quad = ctx.settings.quad_order;
    let mut out = SuiteOutcome::default();
    let c0 = ctx.decay_profile()?.c0;
    out.number("c0", c0);

    let t = 1.0;
    let s_grid = uniform_grid(t - 3.0, t, 13);
    let mut route: f64 = 0.0;
    let mut lower = true;
    let mut terminal = true;
    let mut curve = Curve::new("exponent", &["q", "s", "kappa", "p_closed", "p_ode"]);
    for q in TARGETS {
        let plan = exponent_path(sys, t, q, &s_grid, Some(c0))?;
        route = route.max(plan.max_route_diff);
        lower &= plan.lower_bound_holds();
        terminal &= plan.p_closed.last() == Some(&q);
        for i in 0..plan.s_grid.len() {
            curve.push(vec![
                q,
                plan.s_grid[i],
                plan.kappa[i],
                plan.p_closed[i],
                plan.p_ode[i],
            ]);
        }
    }
    out.curves.push(curve);
    out.check(Check::at_most("exponent.route_diff", route, ROUTE_TOL));
    out.check(Check::holds("exponent.lower_bound", lower));
    out.check(Check::holds("exponent.terminal_value", terminal));

    // Moderate lags keep p(s,t) in the range where quadrature of |φ|^p is
    // meaningful.
    let t = 0.5;
    let s_grid: Vec<f64> = (0..5).rev().map(|k| t - 0.1 * (k + 1) as f64).collect();
    let plan = exponent_path(sys, t, 2.0, &s_grid, None)?;
    let rep = verify_hypercontractivity(sys, &plan, &family(n), quad)?;
    out.check(Check::at_least(
        "hypercontractivity.closed_form_min_margin",
        rep.min_closed_form_margin,
        -CLOSED_FORM_SLACK,
    ));
    out.check(Check::at_least(
        "hypercontractivity.quadrature_min_margin",
        rep.min_quadrature_margin,
        -QUADRATURE_SLACK,
    ));
    let mut rows = Curve::new(
        "hypercontractivity",
        &["s", "p", "observable", "lhs", "rhs", "margin"],
    );
    for r in &rep.rows {
        rows.push(vec![r.s, r.p, r.observable as f64, r.lhs, r.rhs, r.margin]);
    }
    out.curves.push(rows);

    let t = 0.7;
    let phi = Observable::real_exp(DVector::from_fn(n, |i, _| 0.8 - 0.5 * i as f64))?;
    let mut min_alpha: f64 = f64::INFINITY;
    let mut worst_gap: f64 = f64::NEG_INFINITY;
    let mut alpha_curve = Curve::new(
        "alpha_derivative",
        &["s", "p", "alpha", "analytic", "finite_difference"],
    );
    for s in uniform_grid(t - 2.5, t - 0.25, 10) {
        let d = alpha_derivative(sys, t, s, &phi, ExponentChoice::Theorem { q: 2.0 })?;
        min_alpha = min_alpha.min(d.analytic);
        worst_gap = worst_gap.max(alpha_gap(&d));
        alpha_curve.push(vec![d.s, d.p, d.alpha, d.analytic, d.finite_difference]);
    }
    out.curves.push(alpha_curve);
    out.check(Check::at_least(
        "alpha_derivative.min",
        min_alpha,
        -ALPHA_SLACK,
    ));
    out.check(Check::at_most(
        "alpha_derivative.excess_over_tolerance",
        worst_gap,
        0.0,
    ));

    // Stationary OU reference, for both exponent choices.
    let reference = ctx.build_system(builtin::scalar_autonomous())?;
    let phi = Observable::real_exp(DVector::from_element(1, 1.0))?;
    let mut ref_gap: f64 = f64::NEG_INFINITY;
    for s in [-2.0, -1.0, -0.5, -0.1] {
        for choice in [
            ExponentChoice::Theorem { q: 2.0 },
            ExponentChoice::Constant { p: 3.0 },
        ] {
            ref_gap = ref_gap.max(alpha_gap(&alpha_derivative(
                &reference, 0.0, s, &phi, choice,
            )?));
        }
    }
    out.check(Check::at_most(
        "reference.alpha_derivative_excess_over_tolerance",
        ref_gap,
        0.0,
    ));
    Ok(out)
}
