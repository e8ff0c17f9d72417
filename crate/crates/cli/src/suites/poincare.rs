use nalgebra::DVector;
use ou_evolution::asymptotics::verify_poincare;
use ou_evolution::coefficients::uniform_grid;
use ou_evolution::kernel::Observable;
use ou_evolution::polynomial::Polynomial;

use super::{Check, Context, Curve, SuiteOutcome};
use crate::error::Result;

pub const MARGIN_SLACK: f64 = 1e-8;
pub const SATURATION_TOL: f64 = 1e-8;

fn family(n: usize) -> Vec<Observable<f64>> {
    let x = |i| Polynomial::<f64>::variable(n, i);
    vec![
        Observable::Polynomial(x(0)),
        Observable::Polynomial(x(n - 1).mul(&x(0)).add(&x(0).pow(2))),
        Observable::Polynomial(x(0).pow(3).sub(&x(n - 1))),
        Observable::real_exp(DVector::from_element(n, 0.3)).expect("finite"),
        Observable::constant(n, 1.0),
    ]
}

pub fn run(ctx: &Context) -> Result<SuiteOutcome> {
    let sys = ctx.system()?;
    let prof = ctx.decay_profile()?;
    let mut out = SuiteOutcome::default();
    let times = uniform_grid(-3.0, 3.0, 7);
    let m = &prof.m_table[prof.m_table.len() / 2];
    let rep = verify_poincare(sys, &times, &family(ctx.dim()), m.omega, m.value)?;
    out.number("omega", rep.omega);
    out.number("m_omega", rep.m_omega);
    out.number("constant", rep.constant);
    out.check(Check::at_least(
        "poincare.min_margin",
        rep.min_margin,
        -MARGIN_SLACK,
    ));
    let mut curve = Curve::new(
        "poincare",
        &["t", "observable", "variance", "gradient_energy", "margin"],
    );
    for r in &rep.rows {
        curve.push(vec![
            r.t,
            r.observable as f64,
            r.variance,
            r.gradient_energy,
            r.margin,
        ]);
    }
    out.curves.push(curve);

    // Scalar constant field: M = 1 at the exponent nearest ω₀ and the bound
    // is attained by φ = x.
    if ctx.dim() == 1 && ctx.field.is_constant() {
        let nearest = prof
            .m_table
            .iter()
            .min_by(|a, b| {
                (a.omega - prof.omega0)
                    .abs()
                    .total_cmp(&(b.omega - prof.omega0).abs())
            })
            .expect("non-empty table");
        let x = Observable::Polynomial(Polynomial::variable(1, 0));
        let sat = verify_poincare(sys, &times, &[x], nearest.omega, 1.0)?;
        let worst = sat.rows.iter().map(|r| r.margin.abs()).fold(0.0, f64::max);
        out.number("saturation.omega", nearest.omega);
        out.check(Check::at_most(
            "saturation.max_abs_margin",
            worst,
            SATURATION_TOL,
        ));
    }
    Ok(out)
}
