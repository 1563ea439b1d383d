//! Command-line flags, the optional JSON config file, and their merge into
//! one validated run configuration. Flags override file values.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use maslov_core::examples::{coupled_problem, example1_problem, example2_problem};
use maslov_core::linalg::SymMatrix;
use maslov_core::problem::load_tabulated_path;
use maslov_core::{IntegratorConfig, Method, Problem};
use serde::Deserialize;

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Fixed,
    Adaptive,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Fixed => Method::FixedRk4,
            MethodArg::Adaptive => Method::AdaptiveRk45,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Built-in problem: example1, example2, coupled or free.
    #[arg(long)]
    pub problem: Option<String>,
    /// Spectral parameter for a single computation.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// First λ of a sweep grid.
    #[arg(long = "lambda-from", allow_hyphen_values = true)]
    pub lambda_from: Option<f64>,
    /// Last λ of a sweep grid (inclusive).
    #[arg(long = "lambda-to", allow_hyphen_values = true)]
    pub lambda_to: Option<f64>,
    /// Spacing of the sweep grid.
    #[arg(long = "lambda-step")]
    pub lambda_step: Option<f64>,
    /// Coupling constant of example2 (default −1) or coupled (default 0.8).
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Tabulated potential with header x,v11,v12,...,vnn.
    #[arg(long = "potential-csv")]
    pub potential_csv: Option<PathBuf>,
    /// Integrate over [−L, L].
    #[arg(long = "domain-half-width")]
    pub domain_half_width: Option<f64>,
    /// Fixed step, or initial step for the adaptive method.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Local error tolerance of the adaptive method.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output file (JSON report for `run`, CSV otherwise). Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with any of the above settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    problem: Option<String>,
    lambda: Option<f64>,
    #[serde(alias = "lambda_from")]
    lambda_from: Option<f64>,
    #[serde(alias = "lambda_to")]
    lambda_to: Option<f64>,
    #[serde(alias = "lambda_step")]
    lambda_step: Option<f64>,
    c: Option<f64>,
    #[serde(alias = "potential_csv")]
    potential_csv: Option<PathBuf>,
    #[serde(alias = "domain_half_width")]
    domain_half_width: Option<f64>,
    step: Option<f64>,
    method: Option<MethodArg>,
    tol: Option<f64>,
    out: Option<PathBuf>,
}

fn read_file_config(path: &Path) -> Result<FileConfig, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg: FileConfig = serde_json::from_str(&text)
        .map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))?;
    // Paths in the file are relative to the file.
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    for p in [&mut cfg.potential_csv, &mut cfg.out].into_iter().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(cfg)
}

impl CommonArgs {
    /// Fills every unset flag from the config file, if one was given.
    pub fn merged(&self) -> Result<CommonArgs, UsageError> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let f = read_file_config(path)?;
        Ok(CommonArgs {
            problem: self.problem.clone().or(f.problem),
            lambda: self.lambda.or(f.lambda),
            lambda_from: self.lambda_from.or(f.lambda_from),
            lambda_to: self.lambda_to.or(f.lambda_to),
            lambda_step: self.lambda_step.or(f.lambda_step),
            c: self.c.or(f.c),
            potential_csv: self.potential_csv.clone().or(f.potential_csv),
            domain_half_width: self.domain_half_width.or(f.domain_half_width),
            step: self.step.or(f.step),
            method: self.method.or(f.method),
            tol: self.tol.or(f.tol),
            out: self.out.clone().or(f.out),
            config: None,
        })
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, UsageError> {
        let d = IntegratorConfig::default();
        let cfg = IntegratorConfig {
            method: self.method.map(Method::from).unwrap_or(d.method),
            step: self.step.unwrap_or(d.step),
            tol: self.tol.unwrap_or(d.tol),
            renorm_every: d.renorm_every,
            half_width: self.domain_half_width.unwrap_or(d.half_width),
        };
        cfg.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(cfg)
    }

    pub fn problem(&self) -> Result<Problem, UsageError> {
        match (&self.problem, &self.potential_csv) {
            (Some(_), Some(_)) => Err(UsageError(
                "give either --problem or --potential-csv, not both".into(),
            )),
            (None, None) => Err(UsageError(
                "no problem given; use --problem or --potential-csv".into(),
            )),
            (None, Some(path)) => {
                if self.c.is_some() {
                    return Err(UsageError("--c only applies to built-in problems".into()));
                }
                let table = load_tabulated_path(path)
                    .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
                let name = path.display().to_string();
                Problem::from_tabulated(name, table).map_err(|e| UsageError(e.to_string()))
            }
            (Some(name), None) => builtin(name, self.c),
        }
    }

    /// The single λ of `run`/`trace`.
    pub fn single_lambda(&self) -> Result<f64, UsageError> {
        self.lambda
            .ok_or_else(|| UsageError("--lambda is required".into()))
            .and_then(finite("--lambda"))
    }

    /// The λ grid of `sweep`: either `--lambda` alone or a full from/to/step range.
    pub fn lambda_grid(&self) -> Result<Vec<f64>, UsageError> {
        let range = (self.lambda_from, self.lambda_to, self.lambda_step);
        match (self.lambda, range) {
            (Some(l), (None, None, None)) => Ok(vec![finite("--lambda")(l)?]),
            (None, (Some(from), Some(to), Some(step))) => linear_grid(from, to, step),
            (None, (None, None, None)) => Err(UsageError(
                "sweep needs --lambda or --lambda-from/--lambda-to/--lambda-step".into(),
            )),
            (Some(_), _) => Err(UsageError(
                "give either --lambda or a --lambda-from/--lambda-to/--lambda-step range".into(),
            )),
            (None, _) => Err(UsageError(
                "--lambda-from, --lambda-to and --lambda-step must be given together".into(),
            )),
        }
    }
}

fn finite(flag: &'static str) -> impl Fn(f64) -> Result<f64, UsageError> {
    move |v| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(UsageError(format!("{flag} must be finite")))
        }
    }
}

/// `from, from + step, …` up to `to`, with `to` included when it lies on
/// the grid up to rounding.
pub fn linear_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, UsageError> {
    if !(from.is_finite() && to.is_finite()) {
        return Err(UsageError("λ range must be finite".into()));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(UsageError("--lambda-step must be positive".into()));
    }
    if to < from {
        return Err(UsageError(
            "--lambda-to must not be below --lambda-from".into(),
        ));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(UsageError(format!("λ grid has {count} points; refusing")));
    }
    Ok((0..count).map(|i| from + i as f64 * step).collect())
}

fn builtin(name: &str, c: Option<f64>) -> Result<Problem, UsageError> {
    let no_c = |p: Problem| {
        if c.is_some() {
            Err(UsageError(format!("--c does not apply to {name}")))
        } else {
            Ok(p)
        }
    };
    match name {
        "example1" => no_c(example1_problem()),
        "example2" => {
            let c = c.unwrap_or(-1.0);
            if !c.is_finite() {
                return Err(UsageError("--c must be finite".into()));
            }
            Ok(example2_problem(c))
        }
        "coupled" => Ok(coupled_problem(c.unwrap_or(0.8))),
        "free" => no_c(Problem::constant("free", SymMatrix::from_diag(&[-1.0]))),
        other => Err(UsageError(format!(
            "unknown problem {other:?}; expected example1, example2, coupled or free"
        ))),
    }
}
