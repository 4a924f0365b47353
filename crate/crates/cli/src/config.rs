//! Run configuration: command-line flags layered over an optional JSON file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use hjm_american::oracles::{DEFAULT_CRR_STEPS, DEFAULT_SPOTS, MAX_ENUMERATION_STEPS};
use hjm_american::verify::VerifyConfig;
use hjm_american::MarketParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Additive,
    Multiplicative,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Additive => "additive",
            Model::Multiplicative => "multiplicative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub spot: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub strike: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rate: Option<f64>,
    #[arg(long = "div-yield", global = true, allow_negative_numbers = true)]
    pub div_yield: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub vol: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub maturity: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<Model>,
    /// Power-payoff exponent for the multiplicative model
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub exponent: Option<f64>,
    /// Forward-curve volatility
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long = "quad-tol", global = true)]
    pub quad_tol: Option<f64>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Binomial tree steps for `compare`
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Tree steps for the exact decomposition suite (at most 12)
    #[arg(long = "decomp-steps", global = true)]
    pub decomp_steps: Option<usize>,
    /// Comma-separated spot grid for `compare`
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub spots: Option<Vec<f64>>,
    /// Flat multiplicative forward curve level
    #[arg(long = "flat-forward", global = true, allow_negative_numbers = true)]
    pub flat_forward: Option<f64>,
    /// Multiplicative forward curve as CSV `u,forward_rate` on a uniform grid
    #[arg(long = "curve-file", global = true)]
    pub curve_file: Option<PathBuf>,
    /// Run the martingale suites with a doubled drift (expected to fail)
    #[arg(long = "negative-control", global = true)]
    pub negative_control: bool,
}

/// Config file layout; every key optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub spot: Option<f64>,
    pub strike: Option<f64>,
    pub rate: Option<f64>,
    pub div_yield: Option<f64>,
    pub vol: Option<f64>,
    pub maturity: Option<f64>,
    pub model: Option<Model>,
    pub exponent: Option<f64>,
    pub beta: Option<f64>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub quad_tol: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub steps: Option<usize>,
    pub decomp_steps: Option<usize>,
    pub spots: Option<Vec<f64>>,
    pub flat_forward: Option<f64>,
    pub curve_file: Option<PathBuf>,
    pub negative_control: Option<bool>,
}

/// Fully resolved and validated settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: MarketParams,
    pub model: Model,
    pub exponent: f64,
    pub beta: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub quad_tol: f64,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub crr_steps: usize,
    pub decomp_steps: usize,
    pub spots: Vec<f64>,
    pub flat_forward: f64,
    pub curve_file: Option<PathBuf>,
    pub negative_control: bool,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => load_file(path)?,
            None => FileConfig::default(),
        };
        let base = MarketParams::baseline();
        let verify = VerifyConfig::default();
        let params = MarketParams {
            r: args.rate.or(file.rate).unwrap_or(base.r),
            delta: args.div_yield.or(file.div_yield).unwrap_or(base.delta),
            b: args.vol.or(file.vol).unwrap_or(base.b),
            s0: args.spot.or(file.spot).unwrap_or(base.s0),
            k: args.strike.or(file.strike).unwrap_or(base.k),
            maturity: args.maturity.or(file.maturity).unwrap_or(base.maturity),
        };
        let cfg = Self {
            params,
            model: args.model.or(file.model).unwrap_or(Model::Additive),
            exponent: args.exponent.or(file.exponent).unwrap_or(verify.exponent),
            beta: args.beta.or(file.beta).unwrap_or(verify.beta),
            n_paths: args.paths.or(file.paths).unwrap_or(verify.n_paths),
            seed: args.seed.or(file.seed).unwrap_or(verify.seed),
            quad_tol: args.quad_tol.or(file.quad_tol).unwrap_or(verify.quad_tol),
            output: args.output.clone().or(file.output),
            format: args.format.or(file.format),
            threads: args.threads.or(file.threads),
            crr_steps: args.steps.or(file.steps).unwrap_or(DEFAULT_CRR_STEPS),
            decomp_steps: args
                .decomp_steps
                .or(file.decomp_steps)
                .unwrap_or(verify.decomposition_steps),
            spots: args
                .spots
                .clone()
                .or(file.spots)
                .unwrap_or_else(|| DEFAULT_SPOTS.to_vec()),
            flat_forward: args.flat_forward.or(file.flat_forward).unwrap_or(0.0),
            curve_file: args.curve_file.clone().or(file.curve_file),
            negative_control: args.negative_control || file.negative_control.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.params.validate()?;
        let invalid = |msg: String| Err(CliError::Invalid(msg));
        if !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return invalid(format!("exponent must be positive, got {}", self.exponent));
        }
        if !self.beta.is_finite() {
            return invalid(format!("beta must be finite, got {}", self.beta));
        }
        if self.n_paths < 100 {
            return invalid(format!("paths must be at least 100, got {}", self.n_paths));
        }
        if !(self.quad_tol > 0.0 && self.quad_tol.is_finite()) {
            return invalid(format!("quad-tol must be positive, got {}", self.quad_tol));
        }
        if self.threads == Some(0) {
            return invalid("threads must be at least 1".into());
        }
        if self.crr_steps == 0 {
            return invalid("steps must be at least 1".into());
        }
        if self.decomp_steps == 0 || self.decomp_steps > MAX_ENUMERATION_STEPS {
            return invalid(format!(
                "decomp-steps must be between 1 and {MAX_ENUMERATION_STEPS}, got {}",
                self.decomp_steps
            ));
        }
        if self.spots.is_empty() || self.spots.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return invalid("spots must be a non-empty list of positive numbers".into());
        }
        if !self.flat_forward.is_finite() {
            return invalid(format!(
                "flat-forward must be finite, got {}",
                self.flat_forward
            ));
        }
        Ok(())
    }

    pub fn verify_config(&self) -> VerifyConfig {
        VerifyConfig {
            params: self.params,
            exponent: self.exponent,
            beta: self.beta,
            n_paths: self.n_paths,
            seed: self.seed,
            quad_tol: self.quad_tol,
            decomposition_steps: self.decomp_steps,
            negative_control: self.negative_control,
        }
    }
}

fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("bad config {}: {e}", path.display())))
}
