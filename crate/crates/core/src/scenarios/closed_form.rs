use serde::{Deserialize, Serialize};

use super::feasibility::feasible_error_variances;
use super::spec::{ScenarioKind, ScenarioSpec};
use crate::error::{Error, Result};

/// Probability limits of the three estimators and their distance to the ACE.
///
/// `a2`: OLS without the instrument, `a3`: OLS adjusting for it, `a4`: 2SLS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormResult {
    pub a1: f64,
    pub a2: f64,
    /// Absent for heterogeneity with covariates.
    pub a3: Option<f64>,
    pub a4: f64,
    pub lambda2: f64,
    pub lambda3: Option<f64>,
    pub lambda4: f64,
}

impl ClosedFormResult {
    fn from_limits(a1: f64, a2: f64, a3: Option<f64>, a4: f64) -> Self {
        Self {
            a1,
            a2,
            a3,
            a4,
            lambda2: (a2 - a1).abs(),
            lambda3: a3.map(|a| (a - a1).abs()),
            lambda4: (a4 - a1).abs(),
        }
    }

    pub fn require_a3(&self) -> Result<f64> {
        self.a3
            .ok_or_else(|| Error::NotDerived("OLS adjusting for the instrument under heterogeneity with covariates".into()))
    }
}

fn nonzero(factor: &str, value: f64) -> Result<f64> {
    if value.abs() < 1e-12 {
        Err(Error::DegenerateDenominator {
            factor: factor.to_string(),
            value,
        })
    } else {
        Ok(value)
    }
}

/// Exact probability limits for a feasible scenario.
pub fn closed_form(spec: &ScenarioSpec) -> Result<ClosedFormResult> {
    feasible_error_variances(spec)?;
    if spec.kind == ScenarioKind::Heterogeneity {
        return heterogeneity(spec);
    }
    let c = spec.linear()?;
    let (c0, c1, c2, c3, c5, c7) = (c.c0, c.c1, c.c2, c.c3, c.c5, c.c7);
    let res = match spec.kind {
        ScenarioKind::PerfectIv | ScenarioKind::ExclusionRestriction => {
            let a2 = c0 + (c1 * c2 + c3 * c.c_er) / (1.0 - c5 * c5);
            let a3 = c0 + c1 * c2 / (1.0 - c3 * c3 - c5 * c5);
            let a4 = c0 + c.c_er / nonzero("c3", c3)?;
            ClosedFormResult::from_limits(c0, a2, Some(a3), a4)
        }
        ScenarioKind::Independence => {
            let ci = c.c_i;
            let w_x = c5 + c3 * c7;
            let keep = 1.0 - c7 * c7;
            let a2 = c0 + (c1 * c2 + c2 * c3 * ci) / (1.0 - w_x * w_x);
            let slope = c3 + c1 * ci / keep;
            let a3 = c0
                + (c1 * c2 * (1.0 - c7 * c7 - ci * ci) / keep)
                    / (1.0 - w_x * w_x - keep * slope * slope);
            let a4 = c0 + c2 * ci / nonzero("c3(1 - c7^2) + c1 c_i", c3 * keep + c1 * ci)?;
            ClosedFormResult::from_limits(c0, a2, Some(a3), a4)
        }
        ScenarioKind::Heterogeneity => unreachable!(),
    };
    Ok(res)
}

fn heterogeneity(spec: &ScenarioSpec) -> Result<ClosedFormResult> {
    let h = spec.heterogeneity()?;
    let [a1, a2, a3, a4, a5] = h.alpha;
    let [b1, b2, b3, ..] = h.beta;
    if !spec.with_covariates {
        let lim2 = b1 + a2 * b2 + 2.0 * a1 * a3 * b3;
        let lim3 = b1 + (a2 * b2 + a1 * a3 * b3) / (1.0 - a1 * a1);
        let lim4 = b1 + a3 * b3 / nonzero("alpha1", a1)?;
        return Ok(ClosedFormResult::from_limits(b1, lim2, Some(lim3), lim4));
    }
    // Projection weight of W on the centered XW interaction.
    let k = 2.0 * a1 * a5 / (1.0 + a4 * a4 + 2.0 * a5 * a5);
    let lim2 = b1
        + (a2 * b2 + b3 * (2.0 * a1 * a3 - k * (a2 * a4 + 2.0 * a3 * a5)))
            / (1.0 - a4 * a4 - 2.0 * a1 * a5 * k);
    let s = nonzero("alpha1^2 + alpha5^2", a1 * a1 + a5 * a5)?;
    let num = a1 * a3 * b3 - 2.0 * a1 * a3 * a5 * a5 * b3 / s;
    let den = nonzero("first-stage variance", s - 4.0 * a1 * a1 * a5 * a5 / s)?;
    Ok(ClosedFormResult::from_limits(b1, lim2, None, b1 + num / den))
}
