//! Analysis configuration: JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use causal_tradeoff::sensitivity::{ViolationKind, DEFAULT_MULTIPLIERS};
use causal_tradeoff::Roles;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Settings of a sensitivity run over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roles: Option<Roles>,
    #[serde(default = "default_multipliers")]
    pub multipliers: Vec<f64>,
    #[serde(default = "all_kinds")]
    pub kinds: Vec<ViolationKind>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_multipliers() -> Vec<f64> {
    DEFAULT_MULTIPLIERS.to_vec()
}

fn all_kinds() -> Vec<ViolationKind> {
    ViolationKind::ALL.to_vec()
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            input_path: None,
            roles: None,
            multipliers: default_multipliers(),
            kinds: all_kinds(),
            out: default_out(),
            seed: None,
        }
    }
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.multipliers.is_empty() {
            return Err(CliError::Config("at least one multiplier is required".into()));
        }
        if let Some(m) = self.multipliers.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(CliError::Config(format!("multiplier {m} must be positive")));
        }
        if self.kinds.is_empty() {
            return Err(CliError::Config("no violation kinds selected".into()));
        }
        Ok(())
    }
}

/// Parses `y=COL,x=COL,z=COL,w=COL1+COL2[,u=COL]`.
pub fn parse_roles(text: &str) -> CliResult<Roles> {
    let (mut y, mut x, mut z, mut w, mut u) = (None, None, None, None, None);
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Roles(format!("`{part}` is not KEY=COLUMN")))?;
        let value = value.trim();
        if value.is_empty() {
            return Err(CliError::Roles(format!("`{key}` has no column")));
        }
        let slot = match key.trim() {
            "y" => &mut y,
            "x" => &mut x,
            "z" => &mut z,
            "u" => &mut u,
            "w" => {
                let cols: Vec<String> = value.split('+').map(|c| c.trim().to_string()).collect();
                if cols.iter().any(String::is_empty) {
                    return Err(CliError::Roles(format!("empty covariate in `{value}`")));
                }
                w = Some(cols);
                continue;
            }
            other => return Err(CliError::Roles(format!("unknown role `{other}`"))),
        };
        *slot = Some(value.to_string());
    }
    let need = |v: Option<String>, k: &str| v.ok_or_else(|| CliError::Roles(format!("missing role `{k}`")));
    Ok(Roles {
        outcome: need(y, "y")?,
        exposure: need(x, "x")?,
        instrument: need(z, "z")?,
        covariates: w.unwrap_or_default(),
        confounder: u,
    })
}

/// Parses a comma separated list of positive numbers.
pub fn parse_multipliers(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad multiplier `{s}`")))
        })
        .collect()
}

pub fn parse_kinds(text: &str) -> CliResult<Vec<ViolationKind>> {
    text.split(',')
        .map(|s| s.trim().parse::<ViolationKind>().map_err(CliError::from))
        .collect()
}

/// Parses `LO:HI` into an inclusive range.
pub fn parse_range(text: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Config(format!("range `{text}` is not LO:HI"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let (lo, hi): (f64, f64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
    if !(lo <= hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}
