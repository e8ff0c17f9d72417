use ou_evolution::kernel::{apply_kernel, mean_functional};
use ou_evolution::measures::{entrance_law, Route};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{test_family, Check, Context, Curve, SuiteOutcome};
use crate::error::Result;

pub const ROUTE_TOL: f64 = 1e-8;
pub const FLOW_TOL: f64 = 1e-8;
pub const INVARIANCE_TOL: f64 = 1e-7;
pub const FLOW_SAMPLES: usize = 40;

pub fn run(ctx: &Context) -> Result<SuiteOutcome> {
    let sys = ctx.system()?;
    let p = sys.propagator();
    let mut out = SuiteOutcome::default();

    if ctx.field.period.is_some() {
        let tol = ctx.settings.entrance_tol;
        let mut gap: f64 = 0.0;
        for t in [-0.8, 0.0, 1.7] {
            let stein = entrance_law(p, t, tol, Route::Stein)?;
            let trunc = entrance_law(p, t, tol, Route::Truncation)?;
            gap = gap
                .max((&stein.law.cov - &trunc.law.cov).amax())
                .max((&stein.law.mean - &trunc.law.mean).amax());
        }
        out.check(Check::at_most(
            "stein_vs_truncation.max_gap",
            gap,
            ROUTE_TOL,
        ));
    } else {
        out.text("stein_vs_truncation", "not applicable: aperiodic field");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 0x00f1_0e00);
    let w = ctx.window();
    let mut flow: f64 = 0.0;
    for _ in 0..FLOW_SAMPLES {
        let s = -w + 2.0 * w * rng.random::<f64>();
        let t = s + w * rng.random::<f64>();
        let pushed = p.kernel(s, t)?.push(&sys.nu(s)?);
        let direct = sys.nu(t)?;
        flow = flow
            .max((&pushed.cov - &direct.cov).amax())
            .max((&pushed.mean - &direct.mean).amax());
    }
    out.check(Check::at_most("flow_property.max_gap", flow, FLOW_TOL));

    let family = test_family(ctx.dim());
    let q = ctx.settings.quad_order;
    let mut inv: f64 = 0.0;
    for (s, t) in [(-0.5, 0.25), (0.0, 3.0), (-w, w)] {
        let k = p.kernel(s, t)?;
        let (nu_s, nu_t) = (sys.nu(s)?, sys.nu(t)?);
        for phi in &family {
            let lhs = mean_functional(&nu_s, &apply_kernel(&k, phi)?, q)?;
            let rhs = mean_functional(&nu_t, phi, q)?;
            inv = inv.max((lhs - rhs).norm());
        }
    }
    out.check(Check::at_most("invariance.max_gap", inv, INVARIANCE_TOL));

    let mut curve = Curve::new("entrance_law", &["t", "mean_0", "cov_00", "trace_cov"]);
    for i in 0..=40 {
        let t = -w + 2.0 * w * i as f64 / 40.0;
        let nu = sys.nu(t)?;
        curve.push(vec![t, nu.mean[0], nu.cov[(0, 0)], nu.cov.trace()]);
    }
    out.curves.push(curve);
    Ok(out)
}
