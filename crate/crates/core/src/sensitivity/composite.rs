use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::Column;
use crate::error::{Error, Result};
use crate::regression::{dot, standardize};

/// First principal component of the measured covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeW {
    #[serde(skip)]
    pub column: Column,
    pub loadings: Vec<f64>,
    pub eigenvalue: f64,
    pub component_list: Vec<String>,
}

/// Summarizes standardized covariates by their leading principal component.
///
/// Loadings come from the sample correlation matrix, have unit norm and are
/// signed so that the largest-magnitude loading is positive. The resulting
/// score is restandardized and named `W`. A single covariate is returned as is.
pub fn composite_w(covariates: &[&Column]) -> Result<CompositeW> {
    let Some(first) = covariates.first() else {
        return Err(Error::NoCovariates);
    };
    for c in covariates {
        if !(c.variance() >= 1e-12) {
            return Err(Error::ZeroVariance { column: c.name.clone() });
        }
    }
    let names = covariates.iter().map(|c| c.name.clone()).collect();
    if covariates.len() == 1 {
        return Ok(CompositeW {
            column: (*first).clone(),
            loadings: vec![1.0],
            eigenvalue: 1.0,
            component_list: names,
        });
    }
    let j = covariates.len();
    let std: Vec<Column> = covariates.iter().map(|c| standardize(c)).collect::<Result<_>>()?;
    let denom = first.len() as f64 - 1.0;
    let corr = DMatrix::from_fn(j, j, |a, b| dot(&std[a].values, &std[b].values) / denom);
    let eig = SymmetricEigen::new(corr);
    let lead = eig.eigenvalues.imax();
    let mut loadings: Vec<f64> = eig.eigenvectors.column(lead).iter().copied().collect();
    let norm = loadings.iter().map(|l| l * l).sum::<f64>().sqrt();
    let mut big = 0;
    for (i, l) in loadings.iter().enumerate() {
        if l.abs() > loadings[big].abs() + 1e-12 {
            big = i;
        }
    }
    let sign = if loadings[big] < 0.0 { -1.0 } else { 1.0 };
    for l in &mut loadings {
        *l *= sign / norm;
    }
    let scores = (0..first.len())
        .map(|r| loadings.iter().zip(&std).map(|(l, c)| l * c.values[r]).sum())
        .collect();
    let column = standardize(&Column::new("W", scores)?)?;
    Ok(CompositeW {
        column,
        loadings,
        eigenvalue: eig.eigenvalues[lead],
        component_list: names,
    })
}
