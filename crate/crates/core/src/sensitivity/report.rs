use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::benchmark::{BenchmarkMode, BenchmarkSet};
use super::decompose::{
    branch_at, implied_gamma, implied_theta, inconsistency_ratio, ir_at, required_r2_z_u_bisect, HetBranch,
    SensitivityDecomposition,
};
use super::{SignCase, ViolationKind};
use crate::error::{Error, Result};

const CURVE_POINTS: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub ir: f64,
    pub gamma: f64,
}

/// Horizontal line at confounding `gamma = multiplier * gamma_b`, sampled
/// across the IR axis; `ir` is where it meets the IR curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub multiplier: f64,
    pub gamma: f64,
    pub ir: f64,
    pub points: Vec<CurvePoint>,
}

/// Benchmarked comparison deciding between the two opposite-sign branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchCondition {
    pub confounding_term: f64,
    pub heterogeneity_term: f64,
    pub confounding_dominant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub kind: ViolationKind,
    pub mode: BenchmarkMode,
    pub sign_case: Option<SignCase>,
    pub multipliers: Vec<f64>,
    pub ir_per_multiplier: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch_per_multiplier: Option<Vec<HetBranch>>,
    /// Benchmarked violation on the legend's R² scale.
    pub benchmarked_violation: f64,
    /// Violation needed for IR = 1 at each multiplier, same scale.
    pub required_violation_per_multiplier: Vec<Option<f64>>,
    /// Anchor: confounding factor at ambivalence.
    pub gamma_implied: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch_condition: Option<BranchCondition>,
    /// λ-ratio from closed forms, filled in for simulated scenarios.
    #[serde(default)]
    pub true_ir: Option<f64>,
    pub decomposition: SensitivityDecomposition,
    pub benchmarks: BenchmarkSet,
    /// IR as a function of gamma at the benchmarked violation.
    pub ir_curve: Vec<CurvePoint>,
    pub curves: Vec<Curve>,
}

impl SensitivityReport {
    /// Curve samples as CSV with columns multiplier, ir, gamma; rows of the
    /// IR curve leave the multiplier empty.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("multiplier,ir,gamma\n");
        for p in &self.ir_curve {
            let _ = writeln!(out, ",{},{}", p.ir, p.gamma);
        }
        for c in &self.curves {
            for p in &c.points {
                let _ = writeln!(out, "{},{},{}", c.multiplier, p.ir, p.gamma);
            }
        }
        out
    }

    /// File-name suffix distinguishing the heterogeneity sign reports.
    pub fn label(&self) -> String {
        match (self.kind, self.sign_case, &self.branch_condition) {
            (ViolationKind::Heterogeneity, Some(SignCase::Same), Some(_)) => format!("{}_same_sign", self.kind),
            (ViolationKind::Heterogeneity, Some(SignCase::Opposite), Some(_)) => format!("{}_opposite_sign", self.kind),
            _ => self.kind.to_string(),
        }
    }
}

/// Maps a violation factor to the R² quantity shown in legends.
pub(crate) fn violation_scale(dec: &SensitivityDecomposition, theta: f64) -> f64 {
    let t = theta * theta;
    match dec.kind {
        ViolationKind::Independence => {
            let r2_z_w = dec.projection_stats.get("r2_z_w").copied().unwrap_or(0.0);
            t * (1.0 - r2_z_w) / (1.0 + t)
        }
        _ => t,
    }
}

fn required(dec: &SensitivityDecomposition, m: f64, sign: Option<SignCase>) -> Option<f64> {
    let theta = implied_theta(dec, m, sign)?;
    let v = violation_scale(dec, theta);
    if v.is_finite() {
        return Some(v);
    }
    match dec.kind {
        ViolationKind::Independence => required_r2_z_u_bisect(
            dec.phi,
            m * dec.gamma_b,
            dec.projection_stats.get("r2_z_w").copied().unwrap_or(0.0),
        ),
        _ => None,
    }
}

/// Evaluates IR, required violations and plotting curves per multiplier.
pub fn sensitivity_curves(
    dec: &SensitivityDecomposition,
    benchmarks: &BenchmarkSet,
    multipliers: &[f64],
    sign: Option<SignCase>,
) -> Result<SensitivityReport> {
    if multipliers.is_empty() {
        return Err(Error::InvalidSpec("at least one multiplier is required".into()));
    }
    let het = dec.kind == ViolationKind::Heterogeneity;
    let sign = if het { sign.or(dec.sign_case) } else { None };
    if het && sign.is_none() {
        return Err(Error::InvalidSpec("heterogeneity report needs a sign case".into()));
    }
    let ir_per_multiplier = multipliers
        .iter()
        .map(|&m| inconsistency_ratio(dec, m, sign))
        .collect::<Result<Vec<_>>>()?;
    let required_violation_per_multiplier: Vec<Option<f64>> =
        multipliers.iter().map(|&m| required(dec, m, sign)).collect();
    let branch_per_multiplier = sign.map(|s| {
        multipliers
            .iter()
            .map(|&m| branch_at(dec, dec.theta_b, m, s))
            .collect()
    });
    let branch_condition = (het && dec.sign_case.is_none()).then(|| {
        let confounding_term = dec.gamma_b;
        let heterogeneity_term = dec.overlap.unwrap_or(1.0) * dec.phi2.unwrap_or(1.0) * dec.theta_b;
        BranchCondition {
            confounding_term,
            heterogeneity_term,
            confounding_dominant: confounding_term > heterogeneity_term,
        }
    });

    let gamma_implied = implied_gamma(dec, sign);
    let g_top = 2.0
        * multipliers
            .iter()
            .map(|m| m * dec.gamma_b)
            .chain(gamma_implied)
            .fold(0.0, f64::max);
    let g_top = if g_top > 0.0 { g_top } else { 1.0 };
    let mut probe = dec.clone();
    let ir_curve: Vec<CurvePoint> = (1..=CURVE_POINTS)
        .filter_map(|i| {
            let gamma = g_top * i as f64 / CURVE_POINTS as f64;
            probe.gamma_b = gamma;
            let ir = ir_at(&probe, dec.theta_b, 1.0, sign).ok()?;
            ir.is_finite().then_some(CurvePoint { ir, gamma })
        })
        .collect();
    let ir_top = ir_per_multiplier
        .iter()
        .copied()
        .chain([1.0])
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        * 1.5;
    let curves = multipliers
        .iter()
        .zip(&ir_per_multiplier)
        .map(|(&m, &ir)| {
            let gamma = m * dec.gamma_b;
            let points = (0..CURVE_POINTS)
                .map(|i| CurvePoint {
                    ir: ir_top * i as f64 / (CURVE_POINTS - 1) as f64,
                    gamma,
                })
                .collect();
            Curve {
                multiplier: m,
                gamma,
                ir,
                points,
            }
        })
        .collect();

    Ok(SensitivityReport {
        kind: dec.kind,
        mode: benchmarks.mode,
        sign_case: sign,
        multipliers: multipliers.to_vec(),
        ir_per_multiplier,
        branch_per_multiplier,
        benchmarked_violation: violation_scale(dec, dec.theta_b),
        required_violation_per_multiplier,
        gamma_implied,
        branch_condition,
        true_ir: None,
        decomposition: dec.clone(),
        benchmarks: benchmarks.clone(),
        ir_curve,
        curves,
    })
}
