//! Experiment configuration: TOML file, flag overrides, presets, and
//! validation into a fully resolved plan.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use tracebound::martingale::BoundParams;
use tracebound::space::MAX_TOTAL_DIM;

/// Which verification suite to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    GtCheck,
    LemmaCheck,
    SpaceVerify,
    NcVerify,
    McRun,
    Bounds,
    All,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::GtCheck => "gt-check",
            Self::LemmaCheck => "lemma-check",
            Self::SpaceVerify => "space-verify",
            Self::NcVerify => "nc-verify",
            Self::McRun => "mc-run",
            Self::Bounds => "bounds",
            Self::All => "all",
        }
    }

    /// Modes that draw random samples and therefore need a seed.
    pub fn randomized(self) -> bool {
        !matches!(self, Self::LemmaCheck | Self::Bounds)
    }

    /// Modes that evaluate the two-point bound family, which pins
    /// lambda to (alpha+beta)^2/8.
    pub fn uses_two_point_bounds(self) -> bool {
        matches!(self, Self::NcVerify | Self::McRun | Self::Bounds | Self::All)
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Envelope handed to the theorem-level bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeChoice {
    /// Two-point extremal envelope from (alpha, beta, gamma).
    Khan,
    /// The curvature ceiling e^{-gamma t + lambda t^2} itself.
    Saturated,
    /// The two-point envelope tabulated on the configured t-grid,
    /// exercising the interpolation path end to end.
    ExplicitGrid,
}

/// How operator chains realize the step distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepChoice {
    Diagonal,
    Conjugated,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

/// Raw TOML shape; every field optional so flags and presets can fill in.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<RunMode>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub horizon: Option<usize>,
    pub n_paths: Option<u64>,
    pub out: Option<PathBuf>,
    pub space: Option<Vec<usize>>,
    pub envelope: Option<EnvelopeChoice>,
    pub step_kind: Option<StepChoice>,
    pub gt_pairs: Option<usize>,
    pub axiom_samples: Option<usize>,
    pub params: Option<ParamsConfig>,
    pub t_grid: Option<GridSpec>,
}

/// Per-field overrides of the preset's bound parameters.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub m: Option<u32>,
}

/// Command-line overrides (a subset of the file fields).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<RunMode>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub horizon: Option<usize>,
    pub n_paths: Option<u64>,
    pub out: Option<PathBuf>,
    pub out_env: Option<PathBuf>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Everything the runner needs, validated.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub mode: RunMode,
    pub preset: String,
    pub seed: u64,
    pub horizon: usize,
    pub n_paths: u64,
    pub out: PathBuf,
    pub space: Vec<usize>,
    pub envelope: EnvelopeChoice,
    pub step_kind: StepChoice,
    pub gt_pairs: usize,
    pub axiom_samples: usize,
    pub params: BoundParams,
    pub t_grid: GridSpec,
}

fn preset_params(name: &str) -> Result<BoundParams, ConfigError> {
    match name {
        "hoeffding" => Ok(BoundParams::hoeffding()),
        "asymmetric" => Ok(BoundParams::asymmetric()),
        "khan-drift" => Ok(BoundParams::khan_drift()),
        other => Err(err(format!(
            "unknown preset '{other}'; expected hoeffding, asymmetric, or khan-drift"
        ))),
    }
}

pub fn resolve(file: FileConfig, over: Overrides) -> Result<ResolvedConfig, ConfigError> {
    let mode = over.mode.or(file.mode).unwrap_or(RunMode::All);
    let preset = over
        .preset
        .or(file.preset)
        .unwrap_or_else(|| "hoeffding".to_string());

    let mut params = preset_params(&preset)?;
    if let Some(p) = file.params {
        if let Some(v) = p.alpha {
            params.alpha = v;
        }
        if let Some(v) = p.beta {
            params.beta = v;
        }
        if let Some(v) = p.gamma {
            params.gamma = v;
        }
        if let Some(v) = p.a {
            params.a = v;
        }
        if let Some(v) = p.b {
            params.b = v;
        }
        if let Some(v) = p.c {
            params.c = v;
        }
        if let Some(v) = p.m {
            params.m = v;
        }
        // Unless pinned explicitly, lambda follows the difference bounds.
        params.lambda = p
            .lambda
            .unwrap_or((params.alpha + params.beta).powi(2) / 8.0);
    }
    params
        .validate()
        .map_err(|e| err(format!("invalid params: {e}")))?;
    if params.gamma >= params.alpha {
        return Err(err(format!(
            "gamma {} must stay below alpha {}",
            params.gamma, params.alpha
        )));
    }
    if mode.uses_two_point_bounds() {
        let pinned = (params.alpha + params.beta).powi(2) / 8.0;
        if (params.lambda - pinned).abs() > 1e-12 * (1.0 + pinned) {
            return Err(err(format!(
                "mode {mode} evaluates two-point bounds, which require lambda = \
                 (alpha+beta)^2/8 = {pinned}; got {}",
                params.lambda
            )));
        }
    }

    let seed = match over.seed.or(file.seed) {
        Some(s) => s,
        None if mode.randomized() => {
            return Err(err(format!("mode {mode} is randomized; a seed is required")))
        }
        None => 0,
    };

    let horizon = over.horizon.or(file.horizon).unwrap_or(8);
    if horizon == 0 {
        return Err(err("horizon must be at least 1"));
    }
    let n_paths = over.n_paths.or(file.n_paths).unwrap_or(100_000);
    if n_paths == 0 {
        return Err(err("n_paths must be at least 1"));
    }

    // Flag beats environment beats file.
    let out = over
        .out
        .or(over.out_env)
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from("reports"));

    let space = match file.space {
        Some(dims) => {
            if dims.is_empty() || dims.iter().any(|&d| d < 2) {
                return Err(err("space factor dims must all be at least 2"));
            }
            let mut product: usize = 1;
            for &d in &dims {
                product = product
                    .checked_mul(d)
                    .filter(|&p| p <= MAX_TOTAL_DIM)
                    .ok_or_else(|| {
                        err(format!("space dimension exceeds the cap {MAX_TOTAL_DIM}"))
                    })?;
            }
            dims
        }
        None => Vec::new(), // sized by the runner per suite
    };

    let t_grid = file.t_grid.unwrap_or(GridSpec {
        lo: 1e-3,
        hi: 10.0,
        points: 64,
    });
    if !(t_grid.lo > 0.0) || !(t_grid.hi > t_grid.lo) || t_grid.points < 2 || t_grid.points > 4096 {
        return Err(err(
            "t_grid needs 0 < lo < hi and between 2 and 4096 points",
        ));
    }

    Ok(ResolvedConfig {
        mode,
        preset,
        seed,
        horizon,
        n_paths,
        out,
        space,
        envelope: file.envelope.unwrap_or(EnvelopeChoice::Khan),
        step_kind: file.step_kind.unwrap_or(StepChoice::Conjugated),
        gt_pairs: file.gt_pairs.unwrap_or(1000),
        axiom_samples: file.axiom_samples.unwrap_or(100),
        params,
        t_grid,
    })
}

pub fn load_file(path: &std::path::Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| err(format!("cannot parse {}: {e}", path.display())))
}
