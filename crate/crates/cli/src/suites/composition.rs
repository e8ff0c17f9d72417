use ou_evolution::kernel::{apply_kernel, coefficient_distance, Observable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::propagate::{random_triple, TRIPLES};
use super::{test_family, Check, Context, SuiteOutcome};
use crate::error::Result;

pub const COMPOSITION_TOL: f64 = 1e-8;

pub fn run(ctx: &Context) -> Result<SuiteOutcome> {
    let p = ctx.propagator()?;
    let family = test_family(ctx.dim());
    // Distinct stream from the cocycle triples of the propagate suite.
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 0x5eed_c0de);
    let w = ctx.window();
    let mut kernel_gap: f64 = 0.0;
    let mut ck_gap: f64 = 0.0;
    let mut degree_violations = 0usize;
    for _ in 0..TRIPLES {
        let [s, r, t] = random_triple(&mut rng, w);
        let (k_sr, k_rt, k_st) = (p.kernel(s, r)?, p.kernel(r, t)?, p.kernel(s, t)?);
        let composed = k_rt.after(&k_sr);
        let gap = (&composed.u - &k_st.u)
            .amax()
            .max((&composed.g - &k_st.g).amax())
            .max((&composed.q - &k_st.q).amax());
        kernel_gap = kernel_gap.max(gap);
        for phi in &family {
            let two_step = apply_kernel(&k_sr, &apply_kernel(&k_rt, phi)?)?;
            let one_step = apply_kernel(&k_st, phi)?;
            ck_gap = ck_gap.max(coefficient_distance(&two_step, &one_step)?);
            if let (Observable::Polynomial(x), Observable::Polynomial(y)) = (phi, &one_step) {
                if y.degree() > x.degree() {
                    degree_violations += 1;
                }
            }
        }
    }
    let mut out = SuiteOutcome::default();
    out.check(Check::at_most(
        "kernel_composition.max_gap",
        kernel_gap,
        COMPOSITION_TOL,
    ));
    out.check(Check::at_most(
        "chapman_kolmogorov.max_coefficient_gap",
        ck_gap,
        COMPOSITION_TOL,
    ));
    out.check(Check::at_most(
        "degree_non_increase.violations",
        degree_violations as f64,
        0.0,
    ));
    out.number("triples", TRIPLES as f64);
    out.number("observables", family.len() as f64);
    Ok(out)
}
