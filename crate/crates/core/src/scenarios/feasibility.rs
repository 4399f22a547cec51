use std::collections::BTreeMap;

use super::spec::{ScenarioKind, ScenarioSpec};
use crate::error::{Error, Result};

/// Smallest error variance accepted for any structural equation.
pub const FEASIBILITY_MARGIN: f64 = 1e-6;

/// Error variances that give every structural variable unit variance.
///
/// Keys are `sigma2_x`, `sigma2_y` and, for the independence scenario,
/// `sigma2_z`. Fails with [`Error::Infeasible`] naming the first variance
/// below [`FEASIBILITY_MARGIN`].
pub fn feasible_error_variances(spec: &ScenarioSpec) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    match spec.kind {
        ScenarioKind::Heterogeneity => {
            let h = spec.heterogeneity()?;
            let [a1, a2, a3, a4, a5] = h.alpha;
            let [b1, b2, b3, b4, b5] = h.beta;
            out.insert("sigma2_x".into(), 1.0 - h.alpha.iter().map(|a| a * a).sum::<f64>());
            let explained = b1 * b1
                + 2.0 * b1 * (a2 * b2 + a4 * b4 + 2.0 * a1 * a3 * b3 + 2.0 * a1 * a5 * b5)
                + b2 * b2
                + b4 * b4
                + b3 * b3 * (1.0 + a2 * a2 + 2.0 * a3 * a3)
                + b5 * b5 * (1.0 + a4 * a4 + 2.0 * a5 * a5)
                + 2.0 * b3 * b5 * (a2 * a4 + 2.0 * a3 * a5);
            out.insert("sigma2_y".into(), 1.0 - explained);
        }
        ScenarioKind::Independence => {
            let c = spec.linear()?;
            out.insert("sigma2_z".into(), 1.0 - c.c_i * c.c_i - c.c7 * c.c7);
            let var_x = c.c1 * c.c1
                + c.c3 * c.c3
                + c.c5 * c.c5
                + 2.0 * c.c1 * c.c3 * c.c_i
                + 2.0 * c.c3 * c.c5 * c.c7;
            out.insert("sigma2_x".into(), 1.0 - var_x);
            let var_y = c.c0 * c.c0
                + c.c2 * c.c2
                + c.c6 * c.c6
                + 2.0 * c.c0 * c.c2 * (c.c1 + c.c3 * c.c_i)
                + 2.0 * c.c0 * c.c6 * (c.c5 + c.c3 * c.c7);
            out.insert("sigma2_y".into(), 1.0 - var_y);
        }
        ScenarioKind::PerfectIv | ScenarioKind::ExclusionRestriction => {
            let c = spec.linear()?;
            out.insert("sigma2_x".into(), 1.0 - c.c1 * c.c1 - c.c3 * c.c3 - c.c5 * c.c5);
            let var_y = c.c0 * c.c0
                + c.c2 * c.c2
                + c.c_er * c.c_er
                + c.c6 * c.c6
                + 2.0 * c.c0 * c.c1 * c.c2
                + 2.0 * c.c0 * c.c3 * c.c_er
                + 2.0 * c.c0 * c.c5 * c.c6;
            out.insert("sigma2_y".into(), 1.0 - var_y);
        }
    }
    for key in ["sigma2_z", "sigma2_x", "sigma2_y"] {
        if let Some(&value) = out.get(key) {
            if !(value >= FEASIBILITY_MARGIN) {
                return Err(Error::Infeasible {
                    constraint: key.to_string(),
                    value,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perfect(c1: f64, c3: f64) -> ScenarioSpec {
        ScenarioSpec::new(ScenarioKind::PerfectIv, false, [("c0", 0.3), ("c1", c1), ("c2", 0.5), ("c3", c3)])
    }

    #[test]
    fn perfect_iv_exposure_variance() {
        let v = feasible_error_variances(&perfect(0.5, 0.5)).unwrap();
        assert!((v["sigma2_x"] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn perfect_iv_infeasible() {
        match feasible_error_variances(&perfect(0.8, 0.8)) {
            Err(Error::Infeasible { constraint, value }) => {
                assert_eq!(constraint, "sigma2_x");
                assert!((value + 0.28).abs() < 1e-12);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn independence_exposure_variance() {
        let s = ScenarioSpec::new(
            ScenarioKind::Independence,
            false,
            [("c0", 0.3), ("c1", 0.5), ("c2", 0.5), ("c3", 0.5), ("c_i", 0.25)],
        );
        let v = feasible_error_variances(&s).unwrap();
        assert!((v["sigma2_x"] - 0.375).abs() < 1e-15);
        assert!((v["sigma2_z"] - 0.9375).abs() < 1e-15);
    }
}
