use nalgebra::DMatrix;
use ou_evolution::coefficients::{uniform_grid, Profile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Check, Context, Curve, SuiteOutcome};
use crate::error::Result;

/// Random triples for the cocycle law.
pub const TRIPLES: usize = 100;
pub const COCYCLE_TOL: f64 = 1e-9;
pub const EXPM_TOL: f64 = 1e-9;
pub const LIOUVILLE_TOL: f64 = 1e-8;

/// `∫_s^t tr X(r) dr` in closed form for every profile kind.
pub fn trace_integral(p: &Profile<f64>, s: f64, t: f64) -> f64 {
    match p {
        Profile::Constant(m) => m.trace() * (t - s),
        Profile::Fourier {
            period,
            mean,
            cos,
            sin,
        } => {
            let w = 2.0 * std::f64::consts::PI / period;
            let mut acc = mean.trace() * (t - s);
            for (k, c) in cos.iter().enumerate() {
                let kw = w * (k + 1) as f64;
                acc += c.trace() * ((kw * t).sin() - (kw * s).sin()) / kw;
            }
            for (k, m) in sin.iter().enumerate() {
                let kw = w * (k + 1) as f64;
                acc -= m.trace() * ((kw * t).cos() - (kw * s).cos()) / kw;
            }
            acc
        }
        Profile::Lorentzian {
            base,
            bump,
            center,
            width,
        } => {
            base.trace() * (t - s)
                + bump.trace()
                    * width
                    * (((t - center) / width).atan() - ((s - center) / width).atan())
        }
    }
}

fn max_entry(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Sorted random triple in `[-w, w]`.
pub fn random_triple(rng: &mut ChaCha8Rng, w: f64) -> [f64; 3] {
    let mut v = [0.0; 3].map(|_: f64| -w + 2.0 * w * rng.random::<f64>());
    v.sort_by(f64::total_cmp);
    v
}

pub fn run(ctx: &Context) -> Result<SuiteOutcome> {
    let p = ctx.propagator()?;
    let mut out = SuiteOutcome::default();
    let w = ctx.window();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..TRIPLES {
        let [s, r, t] = random_triple(&mut rng, w);
        let direct = p.propagate(s, t)?;
        let split = p.propagate(r, t)? * p.propagate(s, r)?;
        worst = worst.max(max_entry(&(direct - split)));
    }
    out.check(Check::at_most("cocycle.max_residual", worst, COCYCLE_TOL));

    if ctx.field.is_constant() {
        let a = ctx.field.a_at(0.0);
        let mut err: f64 = 0.0;
        for (s, t) in [(0.0, 0.3), (-1.0, 2.5), (0.5, 7.25), (-3.0, 3.0)] {
            let oracle = (&a * (t - s)).exp();
            err = err.max(max_entry(&(p.propagate(s, t)? - oracle)));
        }
        out.check(Check::at_most(
            "matrix_exponential.max_error",
            err,
            EXPM_TOL,
        ));
    }

    let mut rel: f64 = 0.0;
    for (s, t) in [(-2.0, -0.5), (0.0, 1.3), (0.7, 9.1), (-6.0, 6.0)] {
        let det = p.propagate(s, t)?.determinant();
        let expect = trace_integral(&ctx.field.a, s, t).exp();
        rel = rel.max((det - expect).abs() / expect);
    }
    out.check(Check::at_most(
        "liouville.max_rel_error",
        rel,
        LIOUVILLE_TOL,
    ));

    if ctx.field.period.is_some() {
        let fl = p.floquet()?;
        out.number("r0", fl.r0);
        out.number("omega0", fl.omega0);
        out.flag("peripheral_semisimple", fl.peripheral_semisimple());
        let mut curve = Curve::new("multipliers", &["re", "im", "modulus"]);
        for m in &fl.multipliers {
            curve.push(vec![m.re, m.im, m.norm()]);
        }
        out.curves.push(curve);
    }
    let mut curve = Curve::new("propagator_norm", &["lag", "norm"]);
    for lag in uniform_grid(0.0, 2.0 * w, 41) {
        let u = p.propagate(0.0, lag)?;
        curve.push(vec![lag, u.singular_values().max()]);
    }
    out.curves.push(curve);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ou_evolution::coefficients::builtin;

    #[test]
    fn trace_integrals_match_a_midpoint_rule() {
        for name in builtin::NAMES {
            let f = builtin::by_name::<f64>(name).unwrap();
            let (s, t) = (0.3, 1.9);
            let n = 4000;
            let h = (t - s) / n as f64;
            let mid: f64 = (0..n)
                .map(|i| f.a_at(s + (i as f64 + 0.5) * h).trace() * h)
                .sum();
            assert!((mid - trace_integral(&f.a, s, t)).abs() < 1e-6, "{name}");
        }
    }
}
