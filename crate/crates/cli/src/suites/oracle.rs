use nalgebra::DVector;
use ou_evolution::sde::{sample_exact, simulate};

use super::{Check, Context, Curve, Settings, SuiteOutcome};
use crate::error::Result;

/// Bands in units of the standard error.
pub const Z_BAND: f64 = 4.0;

pub fn run(ctx: &Context) -> Result<SuiteOutcome> {
    let p = ctx.propagator()?;
    let n = ctx.dim();
    let Settings { n_paths, dt, .. } = ctx.settings;
    let x0 = DVector::from_fn(n, |i, _| 0.5 - 0.8 * i as f64);
    let (s, t) = (0.2, 1.2);
    let k = p.kernel(s, t)?;
    let law = k.law_from(&x0);
    let em = simulate(&ctx.field, s, t, &x0, dt, n_paths, ctx.seed)?;
    let ex = sample_exact(&k, &x0, n_paths, ctx.seed.wrapping_add(1))?;

    let mut out = SuiteOutcome::default();
    let mut curve = Curve::new(
        "moments",
        &["i", "j", "analytic", "euler_maruyama", "stderr", "z"],
    );
    let mut z_mean: f64 = 0.0;
    for (i, m) in em.mean().iter().enumerate() {
        let z = m.z_score(law.mean[i]);
        z_mean = z_mean.max(z);
        curve.push(vec![i as f64, -1.0, law.mean[i], m.estimate, m.stderr, z]);
    }
    let cov = em.covariance();
    let mut z_cov: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let c = cov[(i, j)];
            let z = c.z_score(law.cov[(i, j)]);
            z_cov = z_cov.max(z);
            curve.push(vec![
                i as f64,
                j as f64,
                law.cov[(i, j)],
                c.estimate,
                c.stderr,
                z,
            ]);
        }
    }
    out.check(Check::at_most("euler_maruyama.mean.max_z", z_mean, Z_BAND));
    out.check(Check::at_most(
        "euler_maruyama.covariance.max_z",
        z_cov,
        Z_BAND,
    ));

    let mut z_pair: f64 = 0.0;
    for (a, b) in em.mean().iter().zip(ex.mean().iter()) {
        let z = (a.estimate - b.estimate).abs() / (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        z_pair = z_pair.max(z);
    }
    let (ce, cx) = (em.covariance(), ex.covariance());
    for i in 0..n {
        for j in 0..=i {
            let (a, b) = (ce[(i, j)], cx[(i, j)]);
            let z = (a.estimate - b.estimate).abs() / (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
            z_pair = z_pair.max(z);
        }
    }
    out.check(Check::at_most(
        "exact_vs_euler_maruyama.max_z",
        z_pair,
        Z_BAND,
    ));
    out.number("n_paths", n_paths as f64);
    out.number("dt", em.dt);
    out.curves.push(curve);
    Ok(out)
}
