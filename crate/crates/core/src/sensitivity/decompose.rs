use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::benchmark::BenchmarkSet;
use super::prepared::{inter, Prepared};
use super::{BenchmarkMode, SignCase, ViolationKind};
use crate::data::{Dataset, Roles};
use crate::error::{Error, Result};
use crate::regression::{fit_ols, partial_r2, r_squared};

/// Upper clamp applied to every R² plug-in.
pub const R2_CEILING: f64 = 1.0 - 1e-12;
/// Smallest admissible denominator factor.
pub const DENOM_TOL: f64 = 1e-10;

/// Factorization of the inconsistency ratio for one violation kind.
///
/// For the exclusion restriction and independence kinds
/// `IR = theta * phi / (M * gamma)`. For heterogeneity
/// `IR = phi * phi2 * theta / |M * gamma + s * overlap * phi2 * theta|`
/// with `phi` the first observed factor, `gamma = gamma1 * gamma2` and `s` the
/// relative sign of the confounding and heterogeneity paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityDecomposition {
    pub kind: ViolationKind,
    pub phi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi2: Option<f64>,
    pub gamma_b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_parts: Option<[f64; 2]>,
    pub theta_b: f64,
    /// Heterogeneity only: 1 when benchmarked, measured when the confounder is exposed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<f64>,
    /// Heterogeneity only, known in oracle mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign_case: Option<SignCase>,
    /// Confounding factor at which IR = 1 for M = 1.
    pub gamma_implied: Option<f64>,
    /// Violation factor at which IR = 1 for M = 1.
    pub theta_implied: Option<f64>,
    pub projection_stats: BTreeMap<String, f64>,
    pub clamped: Vec<String>,
}

/// Heterogeneity IR branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HetBranch {
    SameSign,
    /// Opposite signs, confounding term larger than the heterogeneity term.
    OppositeConfoundingDominant,
    /// Opposite signs, heterogeneity term at least as large.
    OppositeHeterogeneityDominant,
}

struct Clamp<'a>(&'a mut Vec<String>);

impl Clamp<'_> {
    fn r2(&mut self, name: &str, v: f64) -> f64 {
        if v > R2_CEILING {
            self.0.push(format!("{name} clamped from {v:e} to 1 - 1e-12"));
            R2_CEILING
        } else if v < 0.0 {
            self.0.push(format!("{name} clamped from {v:e} to 0"));
            0.0
        } else {
            v
        }
    }
}

fn guard(factor: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= DENOM_TOL {
        Ok(value)
    } else {
        Err(Error::DegenerateDenominator {
            factor: factor.to_string(),
            value,
        })
    }
}

/// Assembles the decomposition from observed data and a benchmark set.
pub fn decompose(
    data: &Dataset,
    roles: &Roles,
    kind: ViolationKind,
    benchmarks: &BenchmarkSet,
) -> Result<SensitivityDecomposition> {
    if benchmarks.kind != kind {
        return Err(Error::InvalidSpec(format!(
            "benchmarks were computed for {}, not {kind}",
            benchmarks.kind
        )));
    }
    decompose_prepared(&Prepared::new(data, roles)?, benchmarks)
}

pub(crate) fn decompose_prepared(pre: &Prepared, set: &BenchmarkSet) -> Result<SensitivityDecomposition> {
    let mut clamped = Vec::new();
    let mut c = Clamp(&mut clamped);
    let mut b = |key: &str| -> Result<f64> { Ok(c.r2(key, set.value(key)?)) };
    let (x, y, z, w) = (&pre.x, &pre.y, &pre.z, pre.w());
    let mut stats = BTreeMap::new();
    let mut dec = match set.kind {
        ViolationKind::ExclusionRestriction => {
            let r2_x_wz = r_squared(x, &[w, z])?;
            let r2_x_z = r_squared(x, &[z])?;
            let r2_y_z = partial_r2(y, &[z], &[x, w])?.value;
            let r2_z_xw = r_squared(z, &[x, w])?;
            let sd_z = (1.0 - r2_z_xw).sqrt();
            stats.insert("r2_x_w_z".into(), r2_x_wz);
            stats.insert("r2_x_z".into(), r2_x_z);
            stats.insert("sd_z_perp_x_w".into(), sd_z);
            stats.insert("sd_x_perp_z_w".into(), (1.0 - r2_x_wz).sqrt());
            let phi = (1.0 - r2_x_wz)
                / (guard("1 - R2(Y~Z|X,W)", 1.0 - r2_y_z)?.sqrt()
                    * guard("R2(X~Z)", r2_x_z)?.sqrt()
                    * guard("sd(Z perp X,W)", sd_z)?);
            let num = b("r2_x_u")?.sqrt() * b("r2_y_u_given_x_w_z")?.sqrt() * (1.0 - b("r2_z_u_given_x_w")?).sqrt();
            let den = guard("1 - R2(U~X|W,Z)", 1.0 - b("r2_u_x_given_w_z")?)?.sqrt()
                * guard("1 - R2(Y~U|X,W)", 1.0 - b("r2_y_u_given_x_w")?)?.sqrt();
            linear(set.kind, phi, num / den, b("r2_y_z_given_x_w_u")?.sqrt())
        }
        ViolationKind::Independence => {
            let r = partial_r2(x, &[z], &[w])?.value;
            stats.insert("r2_x_z_given_w".into(), r);
            stats.insert("r2_z_w".into(), r_squared(z, &[w])?);
            stats.insert("sd_x_perp_w".into(), pre.resvar(x, &[w])?.sqrt());
            stats.insert("sd_z_perp_w".into(), pre.resvar(z, &[w])?.sqrt());
            let phi = ((1.0 - r) / guard("R2(X~Z|W)", r)?).sqrt();
            let gamma = b("r2_x_u_given_z_w")?.sqrt();
            let p = b("r2_z_u_given_w")?;
            let theta = (p / guard("1 - R2(Z~U|W)", 1.0 - p)?).sqrt();
            linear(set.kind, phi, gamma, theta)
        }
        ViolationKind::Heterogeneity => {
            let xw = inter(x, w);
            let zw = inter(z, w);
            let d2 = pre.resvar(x, &[w, &xw])?;
            let inst = [w, z, &zw];
            let fx = fit_ols(x, &inst)?;
            let fxw = fit_ols(&xw, &inst)?;
            let hat = |v: &crate::Column, r: &[f64], name: &str| {
                crate::Column::new(name, v.values.iter().zip(r).map(|(a, e)| a - e).collect())
            };
            let x_hat = hat(x, &fx.residuals, "Xhat")?;
            let xw_hat = hat(&xw, &fxw.residuals, "XWhat")?;
            let proj = fit_ols(&x_hat, &[&xw_hat, w])?;
            let d4 = proj.ssr() / pre.denom();
            let a = fx.coefficients[1] - proj.coefficients[0] * fxw.coefficients[1];
            let r2_x_z = r_squared(x, &[z])?;
            stats.insert("var_x_perp_w_xw".into(), d2);
            stats.insert("var_xhat_perp_w_xwhat".into(), d4);
            stats.insert("first_stage_z_weight".into(), a);
            stats.insert("r2_x_z".into(), r2_x_z);
            let phi2 = 2.0 * guard("R2(X~Z)", r2_x_z)?.sqrt();
            let phi1 = d2 / guard("Var(Xhat perp W,XWhat)", d4)? * a.abs() / phi2;
            let g1 = b("r2_x_u")?.sqrt() * b("r2_y_u_given_a_xu")?.sqrt()
                / (guard("1 - R2(Y~U|A)", 1.0 - b("r2_y_u_given_a")?)?.sqrt()
                    * guard("1 - R2(U~A)", 1.0 - b("r2_u_given_a")?)?.sqrt());
            let var_xu = set.value("var_xu_given_a")?;
            let g2 = (1.0 - b("r2_y_xu_given_a")?).sqrt() * var_xu.max(0.0).sqrt()
                / guard("R2(Y~XU|A,U)", b("r2_y_xu_given_a_u")?)?.sqrt();
            let theta = b("r2_x_zu")?.sqrt();
            let overlap = match (set.mode, set.interaction_covariance) {
                (BenchmarkMode::Oracle, Some(rho)) if phi2 * theta > 1e-12 => rho.abs() / (phi2 * theta),
                _ => 1.0,
            };
            SensitivityDecomposition {
                kind: set.kind,
                phi: phi1,
                phi2: Some(phi2),
                gamma_b: g1 * g2,
                gamma_parts: Some([g1, g2]),
                theta_b: theta,
                overlap: Some(overlap),
                sign_case: set.sign_case,
                gamma_implied: None,
                theta_implied: None,
                projection_stats: BTreeMap::new(),
                clamped: Vec::new(),
            }
        }
    };
    dec.projection_stats = stats;
    dec.clamped = clamped;
    if dec.kind != ViolationKind::Heterogeneity || dec.sign_case.is_some() {
        dec.gamma_implied = implied_gamma(&dec, dec.sign_case);
        dec.theta_implied = implied_theta(&dec, 1.0, dec.sign_case);
    }
    Ok(dec)
}

fn linear(kind: ViolationKind, phi: f64, gamma: f64, theta: f64) -> SensitivityDecomposition {
    SensitivityDecomposition {
        kind,
        phi,
        phi2: None,
        gamma_b: gamma,
        gamma_parts: None,
        theta_b: theta,
        overlap: None,
        sign_case: None,
        gamma_implied: None,
        theta_implied: None,
        projection_stats: BTreeMap::new(),
        clamped: Vec::new(),
    }
}

fn het_sign(dec: &SensitivityDecomposition, sign: Option<SignCase>) -> Result<SignCase> {
    sign.or(dec.sign_case)
        .ok_or_else(|| Error::InvalidSpec("heterogeneity IR needs a sign case".into()))
}

/// IR at violation factor `theta` and scaled confounding `m * gamma_b`.
pub(crate) fn ir_at(dec: &SensitivityDecomposition, theta: f64, multiplier: f64, sign: Option<SignCase>) -> Result<f64> {
    if !(multiplier > 0.0) {
        return Err(Error::InvalidSpec(format!("multiplier {multiplier} must be positive")));
    }
    let g = multiplier * dec.gamma_b;
    match dec.kind {
        ViolationKind::Heterogeneity => {
            let s = het_sign(dec, sign)?.sign();
            let phi2 = dec.phi2.unwrap_or(1.0);
            let q = dec.overlap.unwrap_or(1.0);
            let den = (g + s * q * phi2 * theta).abs();
            let num = dec.phi * phi2 * theta;
            if num == 0.0 {
                return Ok(0.0);
            }
            Ok(num / guard("|M gamma +/- overlap phi2 theta|", den)?)
        }
        _ => Ok(theta * dec.phi / guard("M gamma", g)?),
    }
}

/// IR at the benchmarked violation for multiplier `m`.
pub fn inconsistency_ratio(dec: &SensitivityDecomposition, multiplier: f64, sign: Option<SignCase>) -> Result<f64> {
    ir_at(dec, dec.theta_b, multiplier, sign)
}

/// Branch of the heterogeneity IR at violation `theta` and multiplier `m`.
pub(crate) fn branch_at(dec: &SensitivityDecomposition, theta: f64, multiplier: f64, sign: SignCase) -> HetBranch {
    let g = multiplier * dec.gamma_b;
    let h = dec.overlap.unwrap_or(1.0) * dec.phi2.unwrap_or(1.0) * theta;
    match sign {
        SignCase::Same => HetBranch::SameSign,
        SignCase::Opposite if g > h => HetBranch::OppositeConfoundingDominant,
        SignCase::Opposite => HetBranch::OppositeHeterogeneityDominant,
    }
}

/// Confounding factor that makes IR = 1 at the benchmarked violation, M = 1.
///
/// Heterogeneity solutions stay on the branch of the benchmarked point;
/// `None` when that branch never reaches ambivalence.
pub fn implied_gamma(dec: &SensitivityDecomposition, sign: Option<SignCase>) -> Option<f64> {
    match dec.kind {
        ViolationKind::Heterogeneity => {
            let sign = sign.or(dec.sign_case)?;
            let phi2 = dec.phi2?;
            let q = dec.overlap?;
            let unit = phi2 * dec.theta_b;
            let r = match branch_at(dec, dec.theta_b, 1.0, sign) {
                HetBranch::SameSign => dec.phi - q,
                HetBranch::OppositeConfoundingDominant => dec.phi + q,
                HetBranch::OppositeHeterogeneityDominant => q - dec.phi,
            };
            (r > 0.0).then_some(r * unit)
        }
        _ => Some(dec.theta_b * dec.phi),
    }
}

/// Violation factor that makes IR = 1 given confounding `m * gamma_b`.
pub fn implied_theta(dec: &SensitivityDecomposition, multiplier: f64, sign: Option<SignCase>) -> Option<f64> {
    let g = multiplier * dec.gamma_b;
    match dec.kind {
        ViolationKind::Heterogeneity => {
            let sign = sign.or(dec.sign_case)?;
            let phi2 = dec.phi2?;
            let q = dec.overlap?;
            let r = match branch_at(dec, dec.theta_b, multiplier, sign) {
                HetBranch::SameSign => dec.phi - q,
                HetBranch::OppositeConfoundingDominant => dec.phi + q,
                HetBranch::OppositeHeterogeneityDominant => q - dec.phi,
            };
            (r > 0.0).then(|| g / (r * phi2))
        }
        _ => (dec.phi > 0.0).then(|| g / dec.phi),
    }
}

/// Solves the independence ambivalence identity for R²(Z~U) by bisection.
///
/// Finds `r` in `[0, 1 - r2_z_w)` with
/// `phi * theta(r) / gamma = 1`, `theta(r)² = p / (1 - p)`, `p = r / (1 - r2_z_w)`.
pub fn required_r2_z_u_bisect(phi: f64, gamma: f64, r2_z_w: f64) -> Option<f64> {
    let top = 1.0 - r2_z_w;
    let f = |r: f64| {
        let p = r / top;
        phi * (p / (1.0 - p)).sqrt() / gamma - 1.0
    };
    if !(top > 0.0) || f(0.0) > 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, top);
    while hi - lo > 1e-10 * top.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
