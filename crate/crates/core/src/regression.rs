//! Least-squares primitives on centered columns.
//!
//! Every fit is intercept-free: callers standardize or center first and the
//! fitting routines reject columns whose mean is not numerically zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Column, MIN_LEN};
use crate::error::{Error, Result};

/// Largest accepted condition number of the cross-product matrix.
pub const MAX_CONDITION: f64 = 1e10;
/// Reported value of an unbounded first-stage F statistic.
pub const F_CAP: f64 = 1e15;
/// First-stage F below this attaches a weak-instrument warning.
pub const WEAK_F: f64 = 10.0;
const MIN_VARIANCE: f64 = 1e-12;
const CENTER_TOL: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
    pub n: usize,
    pub regressor_names: Vec<String>,
}

impl RegressionFit {
    pub fn ssr(&self) -> f64 {
        dot(&self.residuals, &self.residuals)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.regressor_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coefficients[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TslsFit {
    /// Endogenous coefficients first, then exogenous ones.
    pub coefficients: Vec<f64>,
    pub regressor_names: Vec<String>,
    /// One statistic per endogenous regressor.
    pub first_stage_f: Vec<f64>,
    /// cov(y, z) / cov(x, z); only with one instrument and no exogenous columns.
    pub wald_ratio: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialR2 {
    pub value: f64,
    pub target: String,
    pub added_regressors: Vec<String>,
    pub conditioning_set: Vec<String>,
}

/// Rescales to mean 0 and sample variance 1 (divisor n - 1).
pub fn standardize(col: &Column) -> Result<Column> {
    let col = Column::new(col.name.clone(), col.values.clone())?;
    let var = col.variance();
    if !(var >= MIN_VARIANCE) {
        return Err(Error::ZeroVariance { column: col.name });
    }
    let (m, sd) = (col.mean(), var.sqrt());
    let values = col.values.iter().map(|v| (v - m) / sd).collect();
    Ok(Column::from_parts(col.name, values))
}

/// Subtracts the sample mean.
pub fn center(col: &Column) -> Column {
    let m = col.mean();
    Column::from_parts(col.name.clone(), col.values.iter().map(|v| v - m).collect())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_input(col: &Column, n: usize) -> Result<()> {
    if col.len() != n {
        return Err(Error::LengthMismatch {
            column: col.name.clone(),
            expected: n,
            found: col.len(),
        });
    }
    if n < MIN_LEN {
        return Err(Error::TooShort {
            column: col.name.clone(),
            len: n,
            min: MIN_LEN,
        });
    }
    let mean = col.mean();
    let rms = (dot(&col.values, &col.values) / n as f64).sqrt();
    if !mean.is_finite() || mean.abs() > CENTER_TOL * rms.max(f64::MIN_POSITIVE) {
        return Err(Error::NotCentered {
            column: col.name.clone(),
            mean,
        });
    }
    Ok(())
}

/// Least squares by Householder QR; returns (coefficients, residuals).
fn solve(y: &Column, xs: &[&Column]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    check_input(y, n)?;
    for x in xs {
        check_input(x, n)?;
    }
    if xs.is_empty() {
        return Ok((Vec::new(), y.values.clone()));
    }
    let p = xs.len();
    let design = DMatrix::from_iterator(n, p, xs.iter().flat_map(|c| c.values.iter().copied()));
    let qr = design.clone().qr();
    let r = qr.r();
    let sv = r.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { (smax / smin).powi(2) } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Collinear { condition });
    }
    let yv = DVector::from_column_slice(&y.values);
    let mut qty = yv.clone();
    qr.q_tr_mul(&mut qty);
    let beta = r
        .solve_upper_triangular(&qty.rows(0, p).into_owned())
        .ok_or(Error::Collinear { condition })?;
    let resid = yv - design * &beta;
    Ok((beta.as_slice().to_vec(), resid.as_slice().to_vec()))
}

/// Intercept-free OLS of `y` on `xs`.
pub fn fit_ols(y: &Column, xs: &[&Column]) -> Result<RegressionFit> {
    let (coefficients, residuals) = solve(y, xs)?;
    let sst = dot(&y.values, &y.values);
    if !(sst > 0.0) {
        return Err(Error::ZeroVariance {
            column: y.name.clone(),
        });
    }
    let r_squared = (1.0 - dot(&residuals, &residuals) / sst).clamp(0.0, 1.0);
    Ok(RegressionFit {
        coefficients,
        residuals,
        r_squared,
        n: y.len(),
        regressor_names: xs.iter().map(|c| c.name.clone()).collect(),
    })
}

/// R² of `y` on `xs`.
pub fn r_squared(y: &Column, xs: &[&Column]) -> Result<f64> {
    Ok(fit_ols(y, xs)?.r_squared)
}

/// Residual of `target` after projection on `zs`.
pub fn residualize(target: &Column, zs: &[&Column]) -> Result<Column> {
    let (_, resid) = solve(target, zs)?;
    Ok(Column::from_parts(target.name.clone(), resid))
}

/// Share of the variance of `y` left by `given` that `added` explains.
///
/// Computed on residuals (FWL), which equals
/// (R²_full − R²_reduced)/(1 − R²_reduced). Added columns already spanned by
/// `given` contribute nothing.
pub fn partial_r2(y: &Column, added: &[&Column], given: &[&Column]) -> Result<PartialR2> {
    let y_res = residualize(y, given)?;
    let mut kept = Vec::with_capacity(added.len());
    for a in added {
        let a_res = residualize(a, given)?;
        let scale = dot(&a.values, &a.values);
        if dot(&a_res.values, &a_res.values) > 1e-12 * scale {
            kept.push(a_res);
        }
    }
    let ssr_red = dot(&y_res.values, &y_res.values);
    let sst = dot(&y.values, &y.values);
    let value = if kept.is_empty() || ssr_red <= 1e-24 * sst {
        0.0
    } else {
        let refs: Vec<&Column> = kept.iter().collect();
        let (_, resid) = solve(&y_res, &refs)?;
        (1.0 - dot(&resid, &resid) / ssr_red).clamp(0.0, 1.0)
    };
    Ok(PartialR2 {
        value,
        target: y.name.clone(),
        added_regressors: added.iter().map(|c| c.name.clone()).collect(),
        conditioning_set: given.iter().map(|c| c.name.clone()).collect(),
    })
}

/// F statistic for joint significance of `instruments` in the first stage.
///
/// Degrees of freedom count the mean removed by centering, matching an
/// intercept-bearing regression on the raw data.
pub fn first_stage_f(endogenous: &Column, instruments: &[&Column], exogenous: &[&Column]) -> Result<f64> {
    let (_, r_red) = solve(endogenous, exogenous)?;
    let full: Vec<&Column> = instruments.iter().chain(exogenous).copied().collect();
    let (_, r_full) = solve(endogenous, &full)?;
    let (ssr_r, ssr_u) = (dot(&r_red, &r_red), dot(&r_full, &r_full));
    let q = instruments.len() as f64;
    let df = endogenous.len() as f64 - full.len() as f64 - 1.0;
    if q == 0.0 || df <= 0.0 {
        return Err(Error::RankDeficient {
            instruments: instruments.len(),
            endogenous: 1,
        });
    }
    if ssr_u <= 1e-30 * ssr_r.max(f64::MIN_POSITIVE) {
        return Ok(F_CAP);
    }
    let f = ((ssr_r - ssr_u) / q) / (ssr_u / df);
    Ok(f.clamp(0.0, F_CAP))
}

/// Two-stage least squares.
pub fn fit_2sls(
    y: &Column,
    endogenous: &[&Column],
    instruments: &[&Column],
    exogenous: &[&Column],
) -> Result<TslsFit> {
    if instruments.len() < endogenous.len() || endogenous.is_empty() {
        return Err(Error::RankDeficient {
            instruments: instruments.len(),
            endogenous: endogenous.len(),
        });
    }
    let n = y.len() as f64;
    let first: Vec<&Column> = instruments.iter().chain(exogenous).copied().collect();
    let mut fitted = Vec::with_capacity(endogenous.len());
    let mut first_stage = Vec::with_capacity(endogenous.len());
    let mut warnings = Vec::new();
    for e in endogenous {
        let (_, resid) = solve(e, &first)?;
        let hat: Vec<f64> = e.values.iter().zip(&resid).map(|(v, r)| v - r).collect();
        let hat = Column::from_parts(e.name.clone(), hat);
        let (_, hat_perp) = solve(&hat, exogenous)?;
        let pivot = (dot(&hat_perp, &hat_perp) / n).sqrt();
        if pivot < PIVOT_TOL {
            return Err(Error::WeakDenominator { pivot });
        }
        let f = first_stage_f(e, instruments, exogenous)?;
        if f < WEAK_F {
            warnings.push(format!("weak instrument for `{}`: first-stage F = {f:.3}", e.name));
        }
        first_stage.push(f);
        fitted.push(hat);
    }
    let second: Vec<&Column> = fitted.iter().chain(exogenous.iter().copied()).collect();
    let (coefficients, _) = solve(y, &second).map_err(|e| match e {
        Error::Collinear { condition } => Error::WeakDenominator { pivot: 1.0 / condition },
        other => other,
    })?;
    let wald_ratio = (instruments.len() == 1 && endogenous.len() == 1 && exogenous.is_empty())
        .then(|| {
            let z = &instruments[0].values;
            dot(&y.values, z) / dot(&endogenous[0].values, z)
        });
    Ok(TslsFit {
        coefficients,
        regressor_names: endogenous
            .iter()
            .chain(exogenous)
            .map(|c| c.name.clone())
            .collect(),
        first_stage_f: first_stage,
        wald_ratio,
        warnings,
    })
}
