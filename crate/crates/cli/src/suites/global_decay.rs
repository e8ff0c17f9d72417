use ou_evolution::asymptotics::verify_global_decay;
use ou_evolution::coefficients::uniform_grid;
use ou_evolution::kernel::Observable;
use ou_evolution::polynomial::Polynomial;

use super::{real_family, Check, Context, Curve, SuiteOutcome};
use crate::error::Result;

pub const MARGIN_SLACK: f64 = 1e-9;
pub const SATURATION_TOL: f64 = 1e-8;
/// Time at which the bound is evaluated.
pub const EVAL_TIME: f64 = 0.7;

pub fn run(ctx: &Context) -> Result<SuiteOutcome> {
    let sys = ctx.system()?;
    let prof = ctx.decay_profile()?;
    let mut out = SuiteOutcome::default();
    out.number("omega0", prof.omega0);
    out.number("c0", prof.c0);
    out.number("argmin_omega", prof.argmin_omega);
    out.check(Check::at_least(
        "c0_not_below_omega0",
        prof.c0 - prof.omega0,
        -1e-12,
    ));

    let lags = uniform_grid(0.0, 20.0, 41);
    let rep = verify_global_decay(sys, EVAL_TIME, prof.c0, &real_family(ctx.dim()), &lags)?;
    out.check(Check::at_least(
        "global_decay.min_margin",
        rep.min_margin,
        -MARGIN_SLACK,
    ));
    let mut curve = Curve::new(
        "global_decay",
        &["observable", "lag", "norm", "bound", "margin"],
    );
    for r in &rep.rows {
        curve.push(vec![r.observable as f64, r.lag, r.norm, r.bound, r.margin]);
    }
    out.curves.push(curve);

    let mut m_curve = Curve::new("m_table", &["omega", "m"]);
    for m in &prof.m_table {
        m_curve.push(vec![m.omega, m.value]);
    }
    out.curves.push(m_curve);

    // A scalar constant field is normal: M(ω) = 1 near ω₀, so c₀ = ω₀ and
    // the bound is attained by φ = x.
    if ctx.dim() == 1 && ctx.field.is_constant() {
        let x = Observable::Polynomial(Polynomial::variable(1, 0));
        let sat = verify_global_decay(sys, 0.0, prof.c0, &[x], &lags)?;
        let worst = sat.rows.iter().map(|r| r.margin.abs()).fold(0.0, f64::max);
        out.check(Check::at_most(
            "saturation.max_abs_margin",
            worst,
            SATURATION_TOL,
        ));
        out.check(Check::at_most(
            "saturation.c0_rel_gap",
            (prof.c0 - prof.omega0).abs() / prof.omega0.abs(),
            SATURATION_TOL,
        ));
    }
    Ok(out)
}
