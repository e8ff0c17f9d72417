//! Experiment configuration: a TOML (or JSON) document with one section per
//! concern. Unknown keys are rejected and every validation error names the
//! offending key.
//!
//! ```toml
//! experiment = "decay"
//! seed = 7
//! out_dir = "out"
//!
//! [field]
//! builtin = "scalar_periodic"
//! params = { b = 1.0, f = 0.5 }
//!
//! [tolerances]
//! ode_tol = 1e-10
//! quad_order = 40
//! entrance_tol = 1e-14
//!
//! [monte_carlo]
//! n_paths = 100000
//! dt = 1e-3
//! ```
//!
//! A custom field replaces `builtin` by `dim`, `period`, `mu0`, `norm_c` and
//! Fourier data `a`, `b` (matrices) and `f` (vectors), each with `mean` and
//! optional `cos`/`sin` harmonic lists.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use ou_evolution::coefficients::{builtin, Profile};
use ou_evolution::CoefficientField;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::registry;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub field: Option<FieldSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub monte_carlo: MonteCarlo,
}

fn default_seed() -> u64 {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: default_seed(),
            out_dir: None,
            field: None,
            tolerances: Tolerances::default(),
            monte_carlo: MonteCarlo::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_ode_tol")]
    pub ode_tol: f64,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    #[serde(default = "default_entrance_tol")]
    pub entrance_tol: f64,
}

fn default_ode_tol() -> f64 {
    ou_evolution::propagator::DEFAULT_ODE_TOL
}

fn default_quad_order() -> usize {
    ou_evolution::kernel::DEFAULT_QUAD_ORDER
}

fn default_entrance_tol() -> f64 {
    ou_evolution::measures::DEFAULT_LAW_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ode_tol: default_ode_tol(),
            quad_order: default_quad_order(),
            entrance_tol: default_entrance_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarlo {
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_paths() -> usize {
    100_000
}

fn default_dt() -> f64 {
    1e-3
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            n_paths: default_paths(),
            dt: default_dt(),
        }
    }
}

/// A builtin with optional parameters, or a custom Fourier field.
#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub builtin: Option<String>,
    pub params: Option<BuiltinParams>,
    pub name: Option<String>,
    pub dim: Option<usize>,
    pub period: Option<f64>,
    pub mu0: Option<f64>,
    pub norm_c: Option<f64>,
    pub a: Option<MatrixFourier>,
    pub b: Option<MatrixFourier>,
    pub f: Option<VectorFourier>,
}

/// Parameters of the parametrised builtins:
/// `autonomous` (`a`, `b`, `f`, `n`, `period`), `scalar_periodic` (`b`, `f`)
/// and `rotation_decay` (`omega`).
#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinParams {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub f: Option<f64>,
    pub n: Option<usize>,
    pub period: Option<f64>,
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFourier {
    pub mean: Vec<Vec<f64>>,
    #[serde(default)]
    pub cos: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub sin: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VectorFourier {
    pub mean: Vec<f64>,
    #[serde(default)]
    pub cos: Vec<Vec<f64>>,
    #[serde(default)]
    pub sin: Vec<Vec<f64>>,
}

/// Names accepted by `--field` and `field.builtin`.
pub fn field_names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = builtin::NAMES.to_vec();
    names.push("autonomous");
    names.sort_unstable();
    names
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl ExperimentConfig {
    /// Parses a `.json` file as JSON and anything else as TOML, then validates.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let cfg = if is_json {
            Self::from_json_str(&text, &path.display().to_string())?
        } else {
            Self::from_toml_str(&text, &path.display().to_string())?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
            CliError::Parse {
                path: origin.to_string(),
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn from_json_str(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        if !(t.ode_tol > 0.0 && t.ode_tol.is_finite()) {
            return Err(CliError::config(
                "tolerances.ode_tol",
                "must be a positive number",
            ));
        }
        if !(t.entrance_tol > 0.0 && t.entrance_tol.is_finite()) {
            return Err(CliError::config(
                "tolerances.entrance_tol",
                "must be a positive number",
            ));
        }
        if t.quad_order == 0 {
            return Err(CliError::config(
                "tolerances.quad_order",
                "must be at least 1",
            ));
        }
        let mc = &self.monte_carlo;
        if mc.n_paths < 2 {
            return Err(CliError::config(
                "monte_carlo.n_paths",
                "must be at least 2",
            ));
        }
        if !(mc.dt > 0.0 && mc.dt.is_finite()) {
            return Err(CliError::config(
                "monte_carlo.dt",
                "must be a positive number",
            ));
        }
        if let Some(name) = &self.experiment {
            if name != "all" && registry::find(name).is_none() {
                return Err(CliError::config(
                    "experiment",
                    format!("unknown experiment '{name}'; run `ouev list`"),
                ));
            }
        }
        if let Some(spec) = &self.field {
            spec.build()?;
        }
        Ok(())
    }
}

fn check_params(name: &str, params: &BuiltinParams, allowed: &[&str]) -> Result<()> {
    let present = [
        ("a", params.a.is_some()),
        ("b", params.b.is_some()),
        ("f", params.f.is_some()),
        ("n", params.n.is_some()),
        ("period", params.period.is_some()),
        ("omega", params.omega.is_some()),
    ];
    for (key, set) in present {
        if set && !allowed.contains(&key) {
            return Err(CliError::config(
                format!("field.params.{key}"),
                format!("not a parameter of builtin '{name}'"),
            ));
        }
    }
    Ok(())
}

fn matrix(rows: &[Vec<f64>], n: usize, key: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::config(key, format!("expected a {n}x{n} matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::config(key, "entries must be finite"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn column(v: &[f64], n: usize, key: &str) -> Result<DMatrix<f64>> {
    if v.len() != n {
        return Err(CliError::config(
            key,
            format!("expected a vector of length {n}"),
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::config(key, "entries must be finite"));
    }
    Ok(DMatrix::from_column_slice(n, 1, v))
}

fn profile(
    mean: DMatrix<f64>,
    cos: Vec<DMatrix<f64>>,
    sin: Vec<DMatrix<f64>>,
    period: Option<f64>,
    key: &str,
) -> Result<Profile<f64>> {
    if cos.is_empty() && sin.is_empty() {
        return Ok(Profile::Constant(mean));
    }
    let period = period.ok_or_else(|| {
        CliError::config(
            "field.period",
            format!("required by the harmonics of {key}"),
        )
    })?;
    Ok(Profile::Fourier {
        period,
        mean,
        cos,
        sin,
    })
}

impl FieldSpec {
    pub fn from_builtin(name: &str) -> Self {
        Self {
            builtin: Some(name.to_string()),
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<CoefficientField> {
        match &self.builtin {
            Some(name) => self.build_builtin(name),
            None => self.build_custom(),
        }
    }

    fn build_builtin(&self, name: &str) -> Result<CoefficientField> {
        let custom_keys = [
            ("name", self.name.is_some()),
            ("dim", self.dim.is_some()),
            ("period", self.period.is_some()),
            ("mu0", self.mu0.is_some()),
            ("norm_c", self.norm_c.is_some()),
            ("a", self.a.is_some()),
            ("b", self.b.is_some()),
            ("f", self.f.is_some()),
        ];
        if let Some((key, _)) = custom_keys.iter().find(|(_, set)| *set) {
            return Err(CliError::config(
                format!("field.{key}"),
                "custom field data cannot be combined with `builtin`",
            ));
        }
        let params = self.params.clone().unwrap_or_default();
        let core = |e: ou_evolution::Error| CliError::config("field.params", e.to_string());
        match name {
            "autonomous" => {
                check_params(name, &params, &["a", "b", "f", "n", "period"])?;
                builtin::autonomous(
                    params.a.unwrap_or(-1.0),
                    params.b.unwrap_or(2f64.sqrt()),
                    params.f.unwrap_or(0.0),
                    params.n.unwrap_or(1),
                    params.period.unwrap_or(1.0),
                )
                .map_err(core)
            }
            "scalar_periodic" => {
                check_params(name, &params, &["b", "f"])?;
                builtin::scalar_periodic_with(params.b.unwrap_or(1.0), params.f.unwrap_or(0.0))
                    .map_err(core)
            }
            "rotation_decay" => {
                check_params(name, &params, &["omega"])?;
                Ok(builtin::rotation_decay(params.omega.unwrap_or(2.0)))
            }
            other => {
                check_params(other, &params, &[])?;
                builtin::by_name(other)
                    .map_err(|e| CliError::config("field.builtin", e.to_string()))
            }
        }
    }

    fn build_custom(&self) -> Result<CoefficientField> {
        if self.params.is_some() {
            return Err(CliError::config(
                "field.params",
                "only valid together with `builtin`",
            ));
        }
        let n = self.dim.ok_or_else(|| {
            CliError::config(
                "field.dim",
                "required for a custom field (or set `builtin`)",
            )
        })?;
        if n == 0 || n > ou_evolution::kernel::MAX_QUAD_DIM {
            return Err(CliError::config(
                "field.dim",
                format!("must lie in 1..={}", ou_evolution::kernel::MAX_QUAD_DIM),
            ));
        }
        let a = self
            .a
            .as_ref()
            .ok_or_else(|| CliError::config("field.a", "required for a custom field"))?;
        let b = self
            .b
            .as_ref()
            .ok_or_else(|| CliError::config("field.b", "required for a custom field"))?;
        let mu0 = self
            .mu0
            .ok_or_else(|| CliError::config("field.mu0", "required for a custom field"))?;
        let norm_c = self
            .norm_c
            .ok_or_else(|| CliError::config("field.norm_c", "required for a custom field"))?;
        let mats = |m: &MatrixFourier, key: &str| -> Result<Profile<f64>> {
            let mean = matrix(&m.mean, n, &format!("field.{key}.mean"))?;
            let cos = m
                .cos
                .iter()
                .enumerate()
                .map(|(i, c)| matrix(c, n, &format!("field.{key}.cos[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            let sin = m
                .sin
                .iter()
                .enumerate()
                .map(|(i, s)| matrix(s, n, &format!("field.{key}.sin[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            profile(mean, cos, sin, self.period, &format!("field.{key}"))
        };
        let a = mats(a, "a")?;
        let b = mats(b, "b")?;
        let f = match &self.f {
            None => Profile::Constant(DMatrix::zeros(n, 1)),
            Some(v) => {
                let mean = column(&v.mean, n, "field.f.mean")?;
                let cos = v
                    .cos
                    .iter()
                    .enumerate()
                    .map(|(i, c)| column(c, n, &format!("field.f.cos[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let sin = v
                    .sin
                    .iter()
                    .enumerate()
                    .map(|(i, s)| column(s, n, &format!("field.f.sin[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                profile(mean, cos, sin, self.period, "field.f")?
            }
        };
        let name = self.name.clone().unwrap_or_else(|| "custom".to_string());
        CoefficientField::new(name, n, a, b, f, self.period, mu0, norm_c)
            .map_err(|e| CliError::config("field", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_builtin() {
        let cfg = ExperimentConfig::from_toml_str("[field]\nbuiltin = \"scalar_periodic\"\n", "t")
            .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.tolerances, Tolerances::default());
        assert_eq!(cfg.field.unwrap().build().unwrap().name, "scalar_periodic");
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = ExperimentConfig::from_toml_str(
            "seed = 3\n[tolerances]\node_tolerance = 1e-9\n",
            "cfg.toml",
        )
        .unwrap_err();
        match err {
            CliError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("ode_tolerance"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_names_the_key() {
        let cfg = ExperimentConfig::from_toml_str("[tolerances]\node_tol = -1e-9\n", "t").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("tolerances.ode_tol"), "{err}");
        assert_eq!(err.exit_code(), 2);
        let cfg = ExperimentConfig::from_toml_str(
            "[field]\nbuiltin = \"scalar_periodic\"\nparams = { omega = 1.0 }\n",
            "t",
        )
        .unwrap();
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("field.params.omega"));
    }

    #[test]
    fn custom_fourier_field() {
        let text = r#"
            [field]
            name = "my_field"
            dim = 1
            period = 6.283185307179586
            mu0 = 1.0
            norm_c = 1.0
            a = { mean = [[-1.0]], sin = [[[0.5]]] }
            b = { mean = [[1.0]] }
            f = { mean = [0.0], cos = [[1.0]] }
        "#;
        let cfg = ExperimentConfig::from_toml_str(text, "t").unwrap();
        let field = cfg.field.unwrap().build().unwrap();
        assert_eq!(field.name, "my_field");
        assert!((field.a_at(std::f64::consts::FRAC_PI_2)[(0, 0)] + 0.5).abs() < 1e-15);
        let missing = FieldSpec {
            dim: Some(1),
            ..FieldSpec::default()
        };
        assert!(missing.build().unwrap_err().to_string().contains("field.a"));
    }

    #[test]
    fn json_is_accepted() {
        let cfg = ExperimentConfig::from_json_str(
            r#"{"experiment": "kernel", "seed": 9, "field": {"builtin": "rotation_decay", "params": {"omega": 1.5}}}"#,
            "t",
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, 9);
        let err = ExperimentConfig::from_json_str(r#"{"sed": 1}"#, "t").unwrap_err();
        assert!(err.to_string().contains("sed"));
    }
}
