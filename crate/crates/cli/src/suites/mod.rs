//! Verification suites. Each suite evaluates one group of identities or
//! inequalities on the configured field and returns named checks with the
//! measured value, the threshold and the comparison used.

use std::sync::OnceLock;

use nalgebra::DVector;
use ou_evolution::asymptotics::{compute_c0, default_c0_grid, DecayProfile};
use ou_evolution::coefficients::{builtin, uniform_grid};
use ou_evolution::kernel::Observable;
use ou_evolution::measures::Route;
use ou_evolution::polynomial::Polynomial;
use ou_evolution::{CoefficientField, EvolutionSystem, Propagator};
use serde::Serialize;

use crate::error::Result;

pub mod certify;
pub mod composition;
pub mod decay;
pub mod global_decay;
pub mod hyper;
pub mod kernel;
pub mod lattice;
pub mod logsob;
pub mod measures;
pub mod oracle;
pub mod poincare;
pub mod propagate;
pub mod spectrum;

/// Numerical settings shared by all suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Settings {
    pub ode_tol: f64,
    pub quad_order: usize,
    pub entrance_tol: f64,
    pub n_paths: usize,
    pub dt: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            ode_tol: ou_evolution::propagator::DEFAULT_ODE_TOL,
            quad_order: ou_evolution::kernel::DEFAULT_QUAD_ORDER,
            entrance_tol: ou_evolution::measures::DEFAULT_LAW_TOL,
            n_paths: 100_000,
            dt: 1e-3,
        }
    }
}

/// Field, settings and seed of one run; the evolution system is built lazily
/// and shared by every suite of the run.
pub struct Context {
    pub field: CoefficientField,
    pub settings: Settings,
    pub seed: u64,
    system: OnceLock<EvolutionSystem>,
}

impl Context {
    pub fn new(field: CoefficientField, settings: Settings, seed: u64) -> Self {
        Self {
            field,
            settings,
            seed,
            system: OnceLock::new(),
        }
    }

    /// Context for a builtin with default settings.
    pub fn builtin(name: &str, seed: u64) -> Result<Self> {
        Ok(Self::new(
            builtin::by_name(name)?,
            Settings::default(),
            seed,
        ))
    }

    pub fn dim(&self) -> usize {
        self.field.dim
    }

    pub fn system(&self) -> Result<&EvolutionSystem> {
        if let Some(sys) = self.system.get() {
            return Ok(sys);
        }
        let sys = self.build_system(self.field.clone())?;
        Ok(self.system.get_or_init(|| sys))
    }

    pub fn propagator(&self) -> Result<&Propagator> {
        Ok(self.system()?.propagator())
    }

    /// An evolution system for another field with this run's settings.
    pub fn build_system(&self, field: CoefficientField) -> Result<EvolutionSystem> {
        let prop = Propagator::with_settings(field, self.settings.ode_tol, None)?;
        Ok(EvolutionSystem::with_settings(
            prop,
            self.settings.entrance_tol,
            Route::Auto,
        ))
    }

    /// Half-width of the sampling window: two periods, or 10 if aperiodic.
    pub fn window(&self) -> f64 {
        self.field.period.map_or(10.0, |p| 2.0 * p)
    }

    /// Growth bound: Floquet exponent for periodic fields, otherwise a
    /// sampled estimate.
    pub fn growth_bound(&self) -> Result<f64> {
        let p = self.propagator()?;
        Ok(match self.field.period {
            Some(_) => p.floquet()?.omega0,
            None => p.estimate_growth_bound(20.0, &uniform_grid(-5.0, 5.0, 11))?,
        })
    }

    /// `M(ω)` table and the constant `c₀` on 32 exponents above the growth
    /// bound, with `s` over one period (or `[-5, 5]`) and gaps up to three
    /// periods (or 15).
    pub fn decay_profile(&self) -> Result<DecayProfile> {
        let w = self.field.period.unwrap_or(5.0);
        let grid = default_c0_grid(self.growth_bound()?, 32);
        Ok(compute_c0(
            self.propagator()?,
            &grid,
            &uniform_grid(-w, w, 9),
            &uniform_grid(0.0, 3.0 * w, 61),
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
}

impl Check {
    /// `value <= threshold`; NaN fails.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
            relation: Relation::AtMost,
        }
    }

    /// `value >= threshold`; NaN fails.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= threshold,
            value,
            threshold,
            relation: Relation::AtLeast,
        }
    }

    /// A boolean condition, recorded as `1 >= 1` or `0 >= 1`.
    pub fn holds(name: impl Into<String>, condition: bool) -> Self {
        Self::at_least(name, if condition { 1.0 } else { 0.0 }, 1.0)
    }
}

/// An informational quantity recorded in the report.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Flag(bool),
    Text(String),
}

/// A table written to its own CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Result of one suite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteOutcome {
    pub checks: Vec<Check>,
    pub values: Vec<(String, Value)>,
    pub curves: Vec<Curve>,
    /// Set when the suite does not apply to the configured field.
    pub skipped: Option<String>,
}

impl SuiteOutcome {
    pub fn skipped(reason: impl Into<String>) -> Self {
        Self {
            skipped: Some(reason.into()),
            ..Self::default()
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn number(&mut self, key: &str, v: f64) {
        self.values.push((key.to_string(), Value::Number(v)));
    }

    pub fn flag(&mut self, key: &str, v: bool) {
        self.values.push((key.to_string(), Value::Flag(v)));
    }

    pub fn text(&mut self, key: &str, v: impl Into<String>) {
        self.values.push((key.to_string(), Value::Text(v.into())));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn value(&self, key: &str) -> Option<&Value> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Polynomials of degree ≤ 4 and real/complex exponentials in `n` variables.
pub fn test_family(n: usize) -> Vec<Observable<f64>> {
    let x = |i| Polynomial::<f64>::variable(n, i);
    let mut fam = vec![
        Observable::constant(n, 1.0),
        Observable::Polynomial(x(0)),
        Observable::Polynomial(x(0).mul(&x(0)).add(&Polynomial::constant(n, 0.5))),
        Observable::Polynomial(x(0).pow(3).sub(&x(n - 1).scale(2.0))),
        Observable::Polynomial(x(0).pow(4).add(&x(0).mul(&x(n - 1)).scale(0.3))),
        Observable::real_exp(DVector::from_fn(n, |i, _| 0.4 - 0.3 * i as f64)).expect("finite"),
        Observable::complex_exp(DVector::from_fn(n, |i, _| 0.7 + 0.2 * i as f64)).expect("finite"),
    ];
    if n > 1 {
        fam.push(Observable::Polynomial(x(1).pow(2).mul(&x(0))));
    }
    fam
}

/// Real members of [`test_family`].
pub fn real_family(n: usize) -> Vec<Observable<f64>> {
    test_family(n).into_iter().filter(|o| o.is_real()).collect()
}

pub fn max_abs<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    values.into_iter().fold(0.0, |a, v| a.max(v.abs()))
}
