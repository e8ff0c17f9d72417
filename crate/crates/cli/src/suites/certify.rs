use super::{Check, Context, Curve, SuiteOutcome};
use crate::error::Result;

pub fn run(ctx: &Context) -> Result<SuiteOutcome> {
    let grid = ctx.field.default_grid();
    let rep = ctx.field.certify(&grid)?;
    let mut out = SuiteOutcome::default();
    out.check(Check::at_least(
        "ellipticity.min_sigma_b",
        rep.min_sigma_b,
        rep.declared_mu0 * (1.0 - 1e-12),
    ));
    out.check(Check::at_most(
        "boundedness.max_norm_b",
        rep.max_norm_b,
        rep.declared_norm_c * (1.0 + 1e-12),
    ));
    out.check(Check::holds("periodicity", rep.periodicity_ok));
    if let Some(r) = rep.periodicity_residual {
        out.number("periodicity_residual", r);
    }
    out.number("grid_points", rep.grid_points as f64);
    out.number("max_norm_a", rep.max_norm_a);
    out.number("max_norm_f", rep.max_norm_f);
    let mut curve = Curve::new(
        "coefficients",
        &["t", "norm_a", "sigma_min_b", "norm_b", "norm_f"],
    );
    for &t in &grid {
        let (a, b, f) = ctx.field.eval(t)?;
        let sv = b.singular_values();
        curve.push(vec![
            t,
            a.clone().singular_values().max(),
            sv.min(),
            sv.max(),
            f.norm(),
        ]);
    }
    out.curves.push(curve);
    Ok(out)
}
