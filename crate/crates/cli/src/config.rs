//! Flag and JSON-file configuration, merged into a validated [`RunConfig`].

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use semistable::analysis::DEFAULT_LADDER;
use semistable::{ModelKind, Nonlinearity, RiemannianModel};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Euclidean,
    Hyperbolic,
    Elliptic,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Euclidean => ModelKind::Euclidean,
            ModelArg::Hyperbolic => ModelKind::Hyperbolic,
            ModelArg::Elliptic => ModelKind::Elliptic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawArg {
    ExpModel,
    PowerModel,
    Gelfand,
    PowerClassic,
}

impl LawArg {
    /// Laws whose elliptic theory is stated only below the Hardy radius `R0`.
    fn needs_hardy_radius(self) -> bool {
        matches!(self, LawArg::ExpModel | LawArg::PowerModel)
    }
}

/// Options shared by every subcommand. Unset flags fall back to `--config`, then to defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CaseArgs {
    /// JSON file with any of the fields below; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Dimension of the model manifold.
    #[arg(long)]
    pub n: Option<usize>,
    /// Geodesic radius of the ball.
    #[arg(long = "R")]
    pub radius: Option<f64>,
    #[arg(long = "f", value_enum)]
    pub law: Option<LawArg>,
    /// Exponent of the power laws.
    #[arg(long)]
    pub m: Option<f64>,
    /// Interior mesh nodes.
    #[arg(long = "N")]
    pub cells: Option<usize>,
    /// Comma-separated, strictly increasing mesh sizes.
    #[arg(long, value_delimiter = ',')]
    pub ladder: Option<Vec<usize>>,
    #[arg(long)]
    pub newton_tol: Option<f64>,
    #[arg(long)]
    pub eig_tol: Option<f64>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random test functions for the Hardy check.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Worker threads for ladder runs.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<ModelArg>,
    n: Option<usize>,
    #[serde(rename = "R")]
    radius: Option<f64>,
    #[serde(rename = "f")]
    law: Option<LawArg>,
    m: Option<f64>,
    #[serde(rename = "N")]
    cells: Option<usize>,
    ladder: Option<Vec<usize>>,
    newton_tol: Option<f64>,
    eig_tol: Option<f64>,
    output: Option<PathBuf>,
    seed: Option<u64>,
    trials: Option<usize>,
    jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Option<ModelArg>,
    pub n: Option<usize>,
    pub radius: f64,
    pub law: LawArg,
    pub m: Option<f64>,
    pub cells: usize,
    pub ladder: Vec<usize>,
    pub newton_tol: f64,
    pub eig_tol: f64,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub trials: usize,
    pub jobs: Option<usize>,
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("bad config {}: {e}", path.display())))
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(format!(
            "--{name} must be positive (got {v})"
        )))
    }
}

impl CaseArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let cfg = RunConfig {
            model: self.model.or(file.model),
            n: self.n.or(file.n),
            radius: self.radius.or(file.radius).unwrap_or(1.0),
            law: self.law.or(file.law).unwrap_or(LawArg::ExpModel),
            m: self.m.or(file.m),
            cells: self.cells.or(file.cells).unwrap_or(1024),
            ladder: self
                .ladder
                .clone()
                .or(file.ladder)
                .unwrap_or_else(|| DEFAULT_LADDER.to_vec()),
            newton_tol: self.newton_tol.or(file.newton_tol).unwrap_or(1e-10),
            eig_tol: self.eig_tol.or(file.eig_tol).unwrap_or(1e-10),
            output: self.output.clone().or(file.output),
            seed: self.seed.or(file.seed).unwrap_or(0),
            trials: self.trials.or(file.trials).unwrap_or(200),
            jobs: self.jobs.or(file.jobs),
        };
        positive("R", cfg.radius)?;
        positive("newton-tol", cfg.newton_tol)?;
        positive("eig-tol", cfg.eig_tol)?;
        if let Some(m) = cfg.m {
            positive("m", m)?;
        }
        if cfg.n == Some(0) || cfg.cells == 0 || cfg.trials == 0 || cfg.jobs == Some(0) {
            return Err(CliError::config("integer options must be positive".into()));
        }
        if cfg.ladder.is_empty()
            || cfg.ladder.windows(2).any(|w| w[1] <= w[0])
            || cfg.ladder[0] == 0
        {
            return Err(CliError::config(format!(
                "--ladder must be strictly increasing (got {:?})",
                cfg.ladder
            )));
        }
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn dim(&self) -> Result<usize, CliError> {
        self.n
            .ok_or_else(|| CliError::config("--n is required".into()))
    }

    pub fn model(&self) -> Result<RiemannianModel, CliError> {
        let kind = self
            .model
            .ok_or_else(|| CliError::config("--model is required".into()))?;
        Ok(RiemannianModel::space_form(
            kind.into(),
            self.dim()?,
            self.radius,
        )?)
    }

    fn exponent(&self) -> Result<f64, CliError> {
        self.m
            .ok_or_else(|| CliError::config(format!("--m is required for --f {:?}", self.law)))
    }

    pub fn nonlinearity(&self, model: &RiemannianModel) -> Result<Nonlinearity, CliError> {
        Ok(match self.law {
            LawArg::ExpModel => Nonlinearity::exp_model(model)?,
            LawArg::PowerModel => Nonlinearity::power_model(model, self.exponent()?)?,
            LawArg::Gelfand => Nonlinearity::gelfand(),
            LawArg::PowerClassic => Nonlinearity::power_classic(self.exponent()?)?,
        })
    }

    /// Rejects elliptic balls at or beyond `R0` for the model laws.
    pub fn require_hardy_radius(&self, model: &RiemannianModel) -> Result<(), CliError> {
        if model.kind() == ModelKind::Elliptic && self.law.needs_hardy_radius() {
            let r0 = model.critical_radii()?.r0;
            if model.radius() >= r0 {
                return Err(CliError::config(format!(
                    "elliptic ball needs R < R0 = {r0:.9} (got R = {})",
                    model.radius()
                )));
            }
        }
        Ok(())
    }
}
