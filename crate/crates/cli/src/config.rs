use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

/// Experiment description read from `--config`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub version: u32,
    pub command: Option<String>,
    pub target: Option<String>,
    pub lengths: Option<String>,
    pub c_grid: Option<CGrid>,
    pub trials: Option<u64>,
    pub n_max: Option<u64>,
    pub seed: Option<u64>,
    pub seed0: Option<u64>,
    pub checkpoint_ratio: Option<f64>,
    pub first_checkpoint: Option<u64>,
    pub tail_checkpoints: Option<usize>,
    pub tail_start: Option<u64>,
    pub beta: Option<f64>,
    pub d: Option<f64>,
    pub n: Option<u64>,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub prefix: Option<String>,
}

/// A c grid given either as a string (`lo:hi:step` or `a,b,c`) or a JSON list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CGrid {
    Text(String),
    List(Vec<f64>),
}

impl CGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            CGrid::Text(s) => parse_c_grid(s),
            CGrid::List(v) => Ok(v.clone()),
        }
    }
}

/// The loaded file and the directory its relative paths resolve against.
#[derive(Debug, Default)]
pub struct Loaded {
    pub file: ExperimentFile,
    pub base: Option<PathBuf>,
}

impl Loaded {
    pub fn read(path: Option<&Path>, command: &str) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Loaded::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation("config", format!("{}: {e}", path.display())))?;
        let file: ExperimentFile = serde_json::from_str(&text)
            .map_err(|e| CliError::validation("config", format!("{}: {e}", path.display())))?;
        if file.version != CONFIG_VERSION {
            return Err(CliError::validation(
                "version",
                format!("{} is not supported (expected {CONFIG_VERSION})", file.version),
            ));
        }
        if let Some(c) = &file.command {
            if c != command {
                return Err(CliError::validation(
                    "command",
                    format!("config is for {c:?} but {command:?} was run"),
                ));
            }
        }
        let base = path.parent().map(Path::to_path_buf);
        Ok(Loaded { file, base })
    }

    /// Base directory for a file-valued field: the config's directory when the
    /// value came from the file, the working directory otherwise.
    pub fn base_for(&self, from_flag: bool) -> Option<&Path> {
        if from_flag {
            None
        } else {
            self.base.as_deref()
        }
    }
}

/// `lo:hi:step` (inclusive) or a comma-separated list.
pub fn parse_c_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: String| CliError::validation("c_grid", format!("{s:?}: {why}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| bad(format!("{t:?}: {e}")));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(step > 0.0) || !(hi >= lo) {
                return Err(bad("need lo <= hi and step > 0".into()));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            if count > 100_000 {
                return Err(bad(format!("{count} grid points")));
            }
            Ok((0..count)
                .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        [list] => list.split(',').map(num).collect(),
        _ => Err(bad("expected lo:hi:step or a comma list".into())),
    }
}

/// Picks the flag, then the file value, then the default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn require<T>(flag: Option<T>, file: Option<T>, field: &str) -> Result<T, CliError> {
    flag.or(file)
        .ok_or_else(|| CliError::validation(field, "required (flag or config field)"))
}

/// Everything echoed into output files: enough to replay a run.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub prng: &'static str,
    pub config: C,
}

impl<C: Serialize> Provenance<C> {
    pub fn new(config: C) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            prng: arccover::simulate::PRNG_ID,
            config,
        }
    }
}
