use nalgebra::{Complex, DMatrix, DVector};
use ou_evolution::coefficients::builtin;
use ou_evolution::propagator::Propagator;
use ou_evolution::spectral::{autonomous_spectrum, galerkin_matrix, gsharp_lattice, LatticeKind};

use super::{Check, Context, Curve, SuiteOutcome};
use crate::error::Result;

pub const LATTICE_TOL: f64 = 1e-10;
/// Tolerance of the image `e^{λT}` against the Galerkin spectrum.
pub const MAPPING_TOL: f64 = 1e-6;
/// Integration tolerance of the reference propagators; the lattice points are
/// compared at 1e-10, so the monodromy must be resolved well below that.
pub const REFERENCE_ODE_TOL: f64 = 1e-13;

fn contains(set: &[Complex<f64>], z: Complex<f64>, tol: f64) -> bool {
    set.iter().any(|w| (w - z).norm() <= tol)
}

/// Largest distance between two point sets in either direction; infinite
/// when the sizes differ.
fn set_distance(got: &[Complex<f64>], expect: &[Complex<f64>]) -> f64 {
    if got.len() != expect.len() {
        return f64::INFINITY;
    }
    let one_way = |a: &[Complex<f64>], b: &[Complex<f64>]| {
        a.iter()
            .map(|z| {
                b.iter()
                    .map(|w| (z - w).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(got, expect).max(one_way(expect, got))
}

fn points(xs: &[(f64, f64)]) -> Vec<Complex<f64>> {
    xs.iter().map(|&(a, b)| Complex::new(a, b)).collect()
}

pub fn run(ctx: &Context) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::default();
    let two_pi = 2.0 * std::f64::consts::PI;
    let reference = |f| Propagator::with_settings(f, REFERENCE_ODE_TOL, None);

    // Scalar a = -1 with period 2π: spacing 1, cutoff 2.
    let p = reference(builtin::autonomous(-1.0, 1.0, 0.0, 1, two_pi)?)?;
    let got: Vec<_> = gsharp_lattice(&p.floquet()?, 2.0)?
        .iter()
        .map(|l| l.lambda.to_complex())
        .collect();
    let expect = points(&[
        (0.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (0.0, 2.0),
        (0.0, -2.0),
        (-1.0, 0.0),
        (-1.0, 1.0),
        (-1.0, -1.0),
        (-1.0, 2.0),
        (-1.0, -2.0),
    ]);
    out.check(Check::at_most(
        "scalar_period_2pi.set_distance",
        set_distance(&got, &expect),
        LATTICE_TOL,
    ));

    // Scalar a = -1 with period 1: spacing 2π exceeds the cutoff.
    let p = reference(builtin::autonomous(-1.0, 1.0, 0.0, 1, 1.0)?)?;
    let got: Vec<_> = gsharp_lattice(&p.floquet()?, 6.0)?
        .iter()
        .map(|l| l.lambda.to_complex())
        .collect();
    let expect = points(&[(0.0, 0.0), (-1.0, 0.0)]);
    out.check(Check::at_most(
        "scalar_period_1.set_distance",
        set_distance(&got, &expect),
        LATTICE_TOL,
    ));

    // Rotation with decay: -1 ± 2i and their 2πk/T shifts.
    let p = reference(builtin::rotation_decay(2.0))?;
    let fl = p.floquet()?;
    let cutoff = 7.0;
    let got: Vec<_> = gsharp_lattice(&fl, cutoff)?
        .iter()
        .filter(|l| l.kind == LatticeKind::Multiplier)
        .map(|l| l.lambda.to_complex())
        .collect();
    let spacing = two_pi / fl.period;
    let mut expect = vec![];
    for base in [2.0, -2.0] {
        for k in -3..=3 {
            let im = base + spacing * k as f64;
            if im.abs() <= cutoff {
                expect.push(Complex::new(-1.0, im));
            }
        }
    }
    let missing = expect
        .iter()
        .filter(|z| !contains(&got, **z, LATTICE_TOL))
        .count();
    out.check(Check::at_most(
        "rotation_decay.missing_points",
        missing as f64,
        0.0,
    ));
    let stray = got
        .iter()
        .filter(|z| !contains(&expect, **z, LATTICE_TOL))
        .count();
    out.check(Check::at_most(
        "rotation_decay.stray_points",
        stray as f64,
        0.0,
    ));

    // Constant-coefficient spectra: G_# and the vertical lines of σ(G).
    let spec = autonomous_spectrum(&DMatrix::from_element(1, 1, -1.0), two_pi, 2, 1)?;
    let got: Vec<_> = spec.gsharp.iter().map(|z| z.to_complex()).collect();
    let expect = points(&[
        (0.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (-1.0, 0.0),
        (-1.0, 1.0),
        (-1.0, -1.0),
        (-2.0, 0.0),
        (-2.0, 1.0),
        (-2.0, -1.0),
    ]);
    out.check(Check::at_most(
        "autonomous.gsharp.set_distance",
        set_distance(&got, &expect),
        LATTICE_TOL,
    ));
    let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
    let spec = autonomous_spectrum(&diag, 1.0, 2, 0)?;
    let lines_err = if spec.vertical_lines.len() == 5 {
        spec.vertical_lines
            .iter()
            .zip([0.0, -1.0, -2.0, -3.0, -4.0])
            .map(|(l, e)| (l - e).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    out.check(Check::at_most(
        "autonomous.vertical_lines.error",
        lines_err,
        LATTICE_TOL,
    ));

    if let Some(period) = ctx.field.period {
        let sys = ctx.system()?;
        let fl = sys.propagator().floquet()?;
        let lat = gsharp_lattice(&fl, 10.0)?;
        let eigs = galerkin_matrix(sys, 0.0, 3)?.eigenvalues();
        let mut gap: f64 = 0.0;
        let mut curve = Curve::new("lattice", &["re", "im", "multiplier", "semisimple"]);
        for l in &lat {
            let z = l.lambda.to_complex();
            let mapped = (z * period).exp();
            let d = eigs
                .iter()
                .map(|w| (w - mapped).norm())
                .fold(f64::INFINITY, f64::min);
            gap = gap.max(d);
            curve.push(vec![
                z.re,
                z.im,
                f64::from(u8::from(l.kind == LatticeKind::Multiplier)),
                f64::from(u8::from(l.semisimple)),
            ]);
        }
        out.check(Check::at_most("spectral_mapping.max_gap", gap, MAPPING_TOL));
        out.number("lattice_points", lat.len() as f64);
        out.curves.push(curve);
    }
    Ok(out)
}
