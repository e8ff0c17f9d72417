//! Configuration, experiment registry and report emission for the
//! `ou-evolution` verification suites.
//!
//! A run resolves an [`ExperimentConfig`] into a coefficient field and
//! numerical settings, executes one registered suite (or all of them, in
//! registry order) and collects the named checks into a [`RunReport`].

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod registry;
pub mod report;
pub mod suites;

use std::time::Instant;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use report::RunReport;

use registry::Suite;
use report::SuiteRecord;
use suites::{Context, Settings};

/// Experiment name that selects every registered suite.
pub const ALL: &str = "all";

impl ExperimentConfig {
    /// Numerical settings of the run.
    pub fn settings(&self) -> Settings {
        Settings {
            ode_tol: self.tolerances.ode_tol,
            quad_order: self.tolerances.quad_order,
            entrance_tol: self.tolerances.entrance_tol,
            n_paths: self.monte_carlo.n_paths,
            dt: self.monte_carlo.dt,
        }
    }

    /// Multiplies the solver tolerances (`ode_tol`, `entrance_tol`) by
    /// `factor`; the thresholds of the checks are unaffected.
    pub fn scale_tolerances(&mut self, factor: f64) -> Result<()> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(CliError::Usage(
                "--tol-scale must be a positive number".into(),
            ));
        }
        self.tolerances.ode_tol *= factor;
        self.tolerances.entrance_tol *= factor;
        Ok(())
    }
}

/// Suites selected by an experiment name.
pub fn select(experiment: &str) -> Result<Vec<&'static Suite>> {
    if experiment == ALL {
        return Ok(registry::SUITES.iter().collect());
    }
    registry::find(experiment).map(|s| vec![s]).ok_or_else(|| {
        CliError::config(
            "experiment",
            format!("unknown experiment '{experiment}'; run `ouev list`"),
        )
    })
}

/// Runs one suite; numerical errors are recorded rather than propagated,
/// configuration errors abort.
pub fn run_suite(suite: &Suite, ctx: &Context) -> Result<SuiteRecord> {
    let start = Instant::now();
    let (outcome, error) = match (suite.run)(ctx) {
        Ok(o) => (o, None),
        Err(e) if e.exit_code() == 2 => return Err(e),
        Err(e) => (Default::default(), Some(e.to_string())),
    };
    Ok(SuiteRecord {
        name: suite.name.to_string(),
        anchor: suite.anchor.to_string(),
        outcome,
        error,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Validates `config` and executes the selected suites sequentially.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let experiment = config.experiment.clone().unwrap_or_else(|| ALL.to_string());
    let selected = select(&experiment)?;
    let spec = config.field.as_ref().ok_or_else(|| {
        CliError::config(
            "field",
            "no field given; pass --field or add a [field] section",
        )
    })?;
    let field = spec.build()?;
    let field_name = field.name.clone();
    let ctx = Context::new(field, config.settings(), config.seed);
    let suites = selected
        .into_iter()
        .map(|s| run_suite(s, &ctx))
        .collect::<Result<Vec<_>>>()?;
    let mut echo = config.clone();
    // The output location does not affect any computed number.
    echo.out_dir = None;
    Ok(RunReport {
        experiment,
        field: field_name,
        config: echo,
        suites,
    })
}
