use nalgebra::Complex;
use ou_evolution::coefficients::builtin;
use ou_evolution::propagator::SEMISIMPLE_RANK_TOL;
use ou_evolution::spectral::{galerkin_spectrum, semisimplicity};

use super::{Check, Context, Curve, SuiteOutcome};
use crate::error::Result;

/// Hermite degree of the Galerkin truncation on the configured field.
pub const DEGREE: u32 = 4;
/// Degree used for the Ornstein–Uhlenbeck reference spectrum `{e^{-k}}`.
pub const REFERENCE_DEGREE: u32 = 5;
pub const UNIT_TOL: f64 = 1e-8;
pub const SECOND_TOL: f64 = 1e-6;
pub const RESIDUAL_TOL: f64 = 1e-8;
pub const REFERENCE_TOL: f64 = 1e-6;

pub fn run(ctx: &Context) -> Result<SuiteOutcome> {
    if ctx.field.period.is_none() {
        return Ok(SuiteOutcome::skipped("aperiodic field: no Poincaré map"));
    }
    let sys = ctx.system()?;
    let mut out = SuiteOutcome::default();
    let rep = galerkin_spectrum(sys, 0.0, DEGREE)?;
    out.check(Check::at_most(
        "unit_eigenvalue_count",
        rep.unit_count as f64,
        1.0,
    ));
    out.check(Check::at_least(
        "unit_eigenvalue_present",
        rep.unit_count as f64,
        1.0,
    ));
    out.check(Check::at_most(
        "max_modulus",
        rep.max_modulus,
        1.0 + UNIT_TOL,
    ));
    out.check(Check::at_most(
        "second_modulus_minus_r0",
        rep.second_modulus - rep.r0,
        SECOND_TOL,
    ));
    out.check(Check::at_most(
        "eigenpair_residual.max",
        super::max_abs(&rep.residuals),
        RESIDUAL_TOL,
    ));
    out.number("r0", rep.r0);
    out.number("second_modulus", rep.second_modulus);
    out.number("analytic_match", rep.analytic_match);

    let fl = sys.propagator().floquet()?;
    let flagged = fl.peripheral_semisimple();
    out.flag("peripheral_semisimple", flagged);
    // Independent rank test on every peripheral multiplier.
    let mut rank_route = true;
    for (mu, _, _) in fl.distinct_multipliers() {
        if (mu.norm() - fl.r0).abs() <= 1e-9 * fl.r0 {
            rank_route &= semisimplicity(&fl.monodromy, mu, SEMISIMPLE_RANK_TOL)?;
        }
    }
    out.check(Check::holds(
        "semisimplicity_routes_agree",
        rank_route == flagged,
    ));

    let mut curve = Curve::new("galerkin_eigenvalues", &["re", "im", "modulus"]);
    for z in &rep.galerkin_eigs {
        curve.push(vec![z.re, z.im, z.modulus()]);
    }
    out.curves.push(curve);

    let reference = ctx.build_system(builtin::scalar_autonomous())?;
    let ou = galerkin_spectrum(&reference, 0.0, REFERENCE_DEGREE)?;
    let mut err: f64 = 0.0;
    for (k, z) in ou.galerkin_eigs.iter().enumerate() {
        let expect = Complex::new((-(k as f64)).exp(), 0.0);
        err = err.max((z.to_complex() - expect).norm());
    }
    let complete = ou.galerkin_eigs.len() == REFERENCE_DEGREE as usize + 1;
    out.check(Check::holds("reference.ornstein_uhlenbeck_count", complete));
    out.check(Check::at_most(
        "reference.ornstein_uhlenbeck_error",
        err,
        REFERENCE_TOL,
    ));
    Ok(out)
}
