//! Partial-R² sensitivity analysis of 2SLS against confounder adjustment.
//!
//! For each violation kind the ratio of 2SLS to OLS inconsistency (IR)
//! factors into an observed part `phi`, a confounding part `gamma` and a
//! violation part `theta`. Unobserved pieces are benchmarked on measured
//! covariates (or, for simulated data, read off the exposed confounder),
//! scaled by analyst multipliers, and inverted to find the values at which
//! both estimators are equally inconsistent.

mod benchmark;
mod composite;
mod decompose;
mod prepared;
mod report;

use serde::{Deserialize, Serialize};

pub use benchmark::{benchmark, oracle_benchmark, BenchmarkEntry, BenchmarkMode, BenchmarkSet};
pub use composite::{composite_w, CompositeW};
pub use decompose::{
    decompose, implied_gamma, implied_theta, inconsistency_ratio, required_r2_z_u_bisect,
    HetBranch, SensitivityDecomposition,
};
pub use report::{sensitivity_curves, BranchCondition, Curve, CurvePoint, SensitivityReport};

use crate::data::{Dataset, Roles};
use crate::scenarios::ClosedFormResult;
use crate::error::Result;

/// Multipliers used when the analyst supplies none.
pub const DEFAULT_MULTIPLIERS: [f64; 3] = [0.5, 1.0, 1.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    ExclusionRestriction,
    Independence,
    Heterogeneity,
}

impl ViolationKind {
    pub const ALL: [ViolationKind; 3] = [
        ViolationKind::ExclusionRestriction,
        ViolationKind::Independence,
        ViolationKind::Heterogeneity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::ExclusionRestriction => "exclusion_restriction",
            ViolationKind::Independence => "independence",
            ViolationKind::Heterogeneity => "heterogeneity",
        }
    }
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ViolationKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exclusion_restriction" | "er" => Ok(ViolationKind::ExclusionRestriction),
            "independence" | "ind" => Ok(ViolationKind::Independence),
            "heterogeneity" | "het" => Ok(ViolationKind::Heterogeneity),
            other => Err(crate::Error::InvalidSpec(format!("unknown violation kind `{other}`"))),
        }
    }
}

/// Relative sign of the confounding path and the heterogeneity path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignCase {
    Same,
    Opposite,
}

impl SignCase {
    fn sign(self) -> f64 {
        match self {
            SignCase::Same => 1.0,
            SignCase::Opposite => -1.0,
        }
    }
}

/// λ-ratio estimated by the sensitivity IR of `kind`: 2SLS against OLS with
/// the instrument for the linear violations, against OLS without it for
/// heterogeneity.
pub fn true_ir(limits: &ClosedFormResult, kind: ViolationKind) -> Option<f64> {
    let base = match kind {
        ViolationKind::Heterogeneity => limits.lambda2,
        _ => limits.lambda3?,
    };
    (base > 0.0).then(|| limits.lambda4 / base)
}

/// Benchmarks, decomposes and sweeps multipliers for one violation kind.
///
/// Heterogeneity yields two reports (one per sign case) unless the sign is
/// known, which is only the case in oracle mode.
pub fn analyze(
    data: &Dataset,
    roles: &Roles,
    kind: ViolationKind,
    mode: BenchmarkMode,
    multipliers: &[f64],
) -> Result<Vec<SensitivityReport>> {
    let pre = prepared::Prepared::new(data, roles)?;
    let set = match mode {
        BenchmarkMode::Benchmark => benchmark::benchmark_prepared(&pre, kind)?,
        BenchmarkMode::Oracle => benchmark::oracle_prepared(&pre, kind)?,
    };
    let dec = decompose::decompose_prepared(&pre, &set)?;
    match (kind, dec.sign_case) {
        (ViolationKind::Heterogeneity, None) => [SignCase::Same, SignCase::Opposite]
            .into_iter()
            .map(|s| sensitivity_curves(&dec, &set, multipliers, Some(s)))
            .collect(),
        _ => Ok(vec![sensitivity_curves(&dec, &set, multipliers, dec.sign_case)?]),
    }
}
