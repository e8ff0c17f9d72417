use ou_evolution::asymptotics::{decay_curve, decay_norm_complex, ls_slope, verify_sharpness};
use ou_evolution::kernel::Observable;
use ou_evolution::spectral::linear_eigenpairs;

use super::{Check, Context, Curve, SuiteOutcome};
use crate::error::{CliError, Result};

/// Whole periods tracked by the per-period equality.
pub const PERIODS: u32 = 8;
/// Whole periods tracked for the linear growth of a Jordan block.
pub const JORDAN_PERIODS: u32 = 20;
pub const PER_PERIOD_TOL: f64 = 1e-8;
pub const RATE_TOL: f64 = 1e-6;
/// Distance below `ω₀` of the exponent that is refuted.
pub const REFUTATION_GAP: f64 = 0.1;
/// Nominal lags of the refutation; rounded to whole periods.
pub const REFUTATION_LAGS: (f64, f64) = (25.0, 50.0);
/// Relative slack on the refutation ratio, which is attained with equality
/// in the semisimple case.
pub const REFUTATION_SLACK: f64 = 1e-6;

pub fn run(ctx: &Context) -> Result<SuiteOutcome> {
    let Some(period) = ctx.field.period else {
        return Ok(SuiteOutcome::skipped(
            "aperiodic field: no Floquet exponent",
        ));
    };
    let sys = ctx.system()?;
    let fl = sys.propagator().floquet()?;
    let mut out = SuiteOutcome::default();
    out.number("omega0", fl.omega0);
    out.number("r0", fl.r0);

    let k_max = if fl.peripheral_semisimple() {
        PERIODS
    } else {
        JORDAN_PERIODS
    };
    let rep = verify_sharpness(sys, 0.0, k_max)?;
    out.flag("peripheral_semisimple", rep.peripheral_semisimple);
    out.check(Check::holds("sharpness", rep.passed(PER_PERIOD_TOL)));
    let per_period = rep
        .curves
        .iter()
        .map(|c| c.max_rel_error)
        .fold(0.0, f64::max);
    out.check(Check::at_most(
        "per_period.max_rel_error",
        per_period,
        PER_PERIOD_TOL,
    ));

    let pair = linear_eigenpairs(sys, 0.0)?
        .into_iter()
        .min_by(|a, b| {
            (a.lambda.norm() - fl.r0)
                .abs()
                .total_cmp(&(b.lambda.norm() - fl.r0).abs())
        })
        .ok_or_else(|| CliError::Usage("field has no linear eigenpairs".into()))?;
    out.number("peripheral_lambda.re", pair.lambda.re);
    out.number("peripheral_lambda.im", pair.lambda.im);

    let lags: Vec<f64> = (0..=PERIODS).map(|k| k as f64 * period).collect();
    let norms: Vec<f64> = lags
        .iter()
        .map(|&l| decay_norm_complex(sys, -l, 0.0, &pair.phi))
        .collect::<std::result::Result<_, _>>()?;
    let mut curve = Curve::new("peripheral_decay", &["lag", "norm"]);
    for (l, n) in lags.iter().zip(&norms) {
        curve.push(vec![*l, *n]);
    }
    out.curves.push(curve);

    if rep.peripheral_semisimple {
        let fitted = if pair.lambda.im == 0.0 {
            let phi = Observable::Polynomial(pair.phi.re.clone());
            decay_curve(sys, 0.0, &phi, &lags)?.fitted_rate
        } else {
            let logs: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
            ls_slope(&lags, &logs)
        };
        let fitted = fitted.unwrap_or(f64::NAN);
        out.number("fitted_rate", fitted);
        out.check(Check::at_most(
            "fitted_rate.error",
            (fitted - fl.omega0).abs(),
            RATE_TOL,
        ));
    } else {
        let jordan = rep.jordan.first();
        out.check(Check::holds(
            "jordan.increasing",
            jordan.is_some_and(|j| j.increasing),
        ));
        if let Some(j) = jordan {
            out.number("jordan.slope", j.slope);
            out.number("jordan.slope_bound", j.slope_bound);
            out.check(Check::at_least("jordan.slope", j.slope, j.slope_bound));
        }
    }

    let omega = fl.omega0 - REFUTATION_GAP;
    let a = period * (REFUTATION_LAGS.0 / period).round();
    let b = period * (REFUTATION_LAGS.1 / period).round();
    let na = decay_norm_complex(sys, -a, 0.0, &pair.phi)?;
    let nb = decay_norm_complex(sys, -b, 0.0, &pair.phi)?;
    let growth = (nb * (-omega * b).exp()) / (na * (-omega * a).exp());
    let needed = ((fl.omega0 - omega) * (b - a)).exp();
    out.number("refutation.omega", omega);
    out.number("refutation.lag_a", a);
    out.number("refutation.lag_b", b);
    out.check(Check::at_least(
        "refutation.growth",
        growth,
        needed * (1.0 - REFUTATION_SLACK),
    ));
    Ok(out)
}
