use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::prepared::{inter, Prepared};
use super::{SignCase, ViolationKind};
use crate::data::{Column, Dataset, Roles};
use crate::error::{Error, Result};
use crate::regression::{dot, fit_ols, partial_r2, r_squared, residualize};

/// Where the unobserved quantities come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkMode {
    /// Maximum over measured covariates.
    Benchmark,
    /// Exposed confounder of simulated data.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkEntry {
    pub value: f64,
    /// Covariate attaining the maximum; `None` for oracle or observed rows.
    pub maximizer: Option<String>,
    pub per_covariate: Vec<(String, f64)>,
}

/// Stand-ins for the unobserved quantities of one violation kind.
///
/// Keys name the unobserved quantity with `u` for the confounder, e.g.
/// `r2_y_u_given_x_w_z` stands for the partial R² of U in the regression of Y
/// on X, W, Z. Entries prefixed `var_` are residual variances rather than R².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSet {
    pub kind: ViolationKind,
    pub mode: BenchmarkMode,
    pub entries: BTreeMap<String, BenchmarkEntry>,
    /// Set when conditioning on the remaining covariates was impossible (J = 1).
    pub insufficient_covariates: bool,
    /// Covariance of the exposure residual with the exposure-confounder
    /// interaction (heterogeneity oracle only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction_covariance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign_case: Option<SignCase>,
}

impl BenchmarkSet {
    pub fn value(&self, key: &str) -> Result<f64> {
        self.entries
            .get(key)
            .map(|e| e.value)
            .ok_or_else(|| Error::InvalidSpec(format!("benchmark set lacks `{key}`")))
    }
}

fn chain<'a>(head: &[&'a Column], tail: &[&'a Column]) -> Vec<&'a Column> {
    head.iter().chain(tail).copied().collect()
}

/// Rows of the kind's table with proxy `p` for the confounder and `others`
/// for the measured covariates conditioned on alongside it.
fn rows(pre: &Prepared, kind: ViolationKind, p: &Column, others: &[&Column]) -> Result<Vec<(&'static str, f64)>> {
    let (y, x, z) = (&pre.y, &pre.x, &pre.z);
    let pr = |t: &Column, a: &[&Column], g: &[&Column]| partial_r2(t, a, g).map(|r| r.value);
    Ok(match kind {
        ViolationKind::ExclusionRestriction => {
            let x_o = chain(&[x], others);
            let x_o_z = chain(&x_o, &[z]);
            let o_z = chain(others, &[z]);
            vec![
                ("r2_x_u", r_squared(x, &[p])?),
                ("r2_y_u_given_x_w_z", pr(y, &[p], &x_o_z)?),
                ("r2_z_u_given_x_w", pr(z, &[p], &x_o)?),
                ("r2_u_x_given_w_z", pr(p, &[x], &o_z)?),
                ("r2_y_u_given_x_w", pr(y, &[p], &x_o)?),
            ]
        }
        ViolationKind::Independence => {
            let o_z = chain(others, &[z]);
            vec![
                ("r2_x_u_given_z_w", pr(x, &[p], &o_z)?),
                ("r2_z_u_given_w", pr(z, &[p], others)?),
                ("r2_z_u", r_squared(z, &[p])?),
            ]
        }
        ViolationKind::Heterogeneity => {
            let xo: Vec<Column> = others.iter().map(|o| inter(x, o)).collect();
            let xo_refs: Vec<&Column> = xo.iter().collect();
            let a = chain(&chain(&[x], others), &xo_refs);
            let xp = inter(x, p);
            let zp = inter(z, p);
            vec![
                ("r2_x_u", r_squared(x, &[p])?),
                ("r2_y_u_given_a_xu", pr(y, &[p], &chain(&a, &[&xp]))?),
                ("r2_y_u_given_a", pr(y, &[p], &a)?),
                ("r2_u_given_a", if a.is_empty() { 0.0 } else { r_squared(p, &a)? }),
                ("r2_y_xu_given_a", pr(y, &[&xp], &a)?),
                ("var_xu_given_a", pre.resvar(&xp, &a)?),
                ("r2_y_xu_given_a_u", pr(y, &[&xp], &chain(&a, &[p]))?),
                ("r2_x_zu", r_squared(x, &[&zp])?),
            ]
        }
    })
}

/// Violation row of the exclusion restriction, observed or oracle.
const ER_THETA: &str = "r2_y_z_given_x_w_u";

/// Benchmarks each row by its maximum over measured covariates.
pub fn benchmark(data: &Dataset, roles: &Roles, kind: ViolationKind) -> Result<BenchmarkSet> {
    benchmark_prepared(&Prepared::new(data, roles)?, kind)
}

/// Evaluates each row at the exposed confounder (`roles.confounder`).
pub fn oracle_benchmark(data: &Dataset, roles: &Roles, kind: ViolationKind) -> Result<BenchmarkSet> {
    oracle_prepared(&Prepared::new(data, roles)?, kind)
}

pub(crate) fn benchmark_prepared(pre: &Prepared, kind: ViolationKind) -> Result<BenchmarkSet> {
    let j = pre.ws.len();
    let mut per: BTreeMap<&'static str, Vec<(String, f64)>> = BTreeMap::new();
    for (idx, wj) in pre.ws.iter().enumerate() {
        let others: Vec<&Column> = pre.ws.iter().enumerate().filter(|(k, _)| *k != idx).map(|(_, c)| c).collect();
        for (key, value) in rows(pre, kind, wj, &others)? {
            per.entry(key).or_default().push((wj.name.clone(), value));
        }
    }
    let mut entries: BTreeMap<String, BenchmarkEntry> = per
        .into_iter()
        .map(|(key, vals)| {
            let mut best = 0;
            for (i, (_, v)) in vals.iter().enumerate() {
                if *v > vals[best].1 {
                    best = i;
                }
            }
            let entry = BenchmarkEntry {
                value: vals[best].1,
                maximizer: Some(vals[best].0.clone()),
                per_covariate: vals,
            };
            (key.to_string(), entry)
        })
        .collect();
    if kind == ViolationKind::ExclusionRestriction {
        let value = partial_r2(&pre.y, &[&pre.z], &[&pre.x, pre.w()])?.value;
        entries.insert(ER_THETA.into(), observed(value));
    }
    Ok(BenchmarkSet {
        kind,
        mode: BenchmarkMode::Benchmark,
        entries,
        insufficient_covariates: j < 2,
        interaction_covariance: None,
        sign_case: None,
    })
}

fn observed(value: f64) -> BenchmarkEntry {
    BenchmarkEntry {
        value,
        maximizer: None,
        per_covariate: Vec::new(),
    }
}

pub(crate) fn oracle_prepared(pre: &Prepared, kind: ViolationKind) -> Result<BenchmarkSet> {
    let u = pre
        .u
        .as_ref()
        .ok_or_else(|| Error::MissingColumn("confounder role (oracle mode)".into()))?;
    let w = pre.w();
    let mut entries: BTreeMap<String, BenchmarkEntry> = rows(pre, kind, u, &[w])?
        .into_iter()
        .map(|(k, v)| (k.to_string(), observed(v)))
        .collect();
    let (mut interaction_covariance, mut sign_case) = (None, None);
    match kind {
        ViolationKind::ExclusionRestriction => {
            let value = partial_r2(&pre.y, &[&pre.z], &[&pre.x, w, u])?.value;
            entries.insert(ER_THETA.into(), observed(value));
        }
        ViolationKind::Heterogeneity => {
            let (x, y, z) = (&pre.x, &pre.y, &pre.z);
            let xw = inter(x, w);
            let xu = inter(x, u);
            let x_perp = residualize(x, &[w, &xw])?;
            let rho = dot(&x_perp.values, &xu.values) / pre.denom();
            let zu = inter(z, u);
            let zw = inter(z, w);
            let a2 = fit_ols(x, &[z, u, &zu, w, &zw])?.coefficients[1];
            let b = fit_ols(y, &[x, u, &xu, w, &xw])?.coefficients;
            let s = (a2 * b[1]).signum() * (b[2] * rho).signum();
            interaction_covariance = Some(rho);
            sign_case = Some(if s >= 0.0 { SignCase::Same } else { SignCase::Opposite });
        }
        ViolationKind::Independence => {}
    }
    Ok(BenchmarkSet {
        kind,
        mode: BenchmarkMode::Oracle,
        entries,
        insufficient_covariates: false,
        interaction_covariance,
        sign_case,
    })
}
