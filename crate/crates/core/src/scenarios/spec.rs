use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default for the heterogeneity covariate effects on the outcome when unset.
pub const DEFAULT_BETA_W: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    PerfectIv,
    ExclusionRestriction,
    Independence,
    Heterogeneity,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::PerfectIv,
        ScenarioKind::ExclusionRestriction,
        ScenarioKind::Independence,
        ScenarioKind::Heterogeneity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::PerfectIv => "perfect_iv",
            ScenarioKind::ExclusionRestriction => "exclusion_restriction",
            ScenarioKind::Independence => "independence",
            ScenarioKind::Heterogeneity => "heterogeneity",
        }
    }

    /// Required and optional weight names.
    pub fn weight_names(self, with_covariates: bool) -> (Vec<&'static str>, Vec<&'static str>) {
        let mut req: Vec<&str>;
        let mut opt = Vec::new();
        match self {
            ScenarioKind::Heterogeneity => {
                req = vec!["alpha1", "alpha2", "alpha3", "beta1", "beta2", "beta3"];
                if with_covariates {
                    req.extend(["alpha4", "alpha5"]);
                    opt.extend(["beta4", "beta5"]);
                }
            }
            _ => {
                req = vec!["c0", "c1", "c2", "c3"];
                if with_covariates {
                    req.extend(["c5", "c6"]);
                }
                match self {
                    ScenarioKind::ExclusionRestriction => req.push("c_er"),
                    ScenarioKind::Independence => {
                        req.push("c_i");
                        if with_covariates {
                            req.push("c7");
                        }
                    }
                    _ => {}
                }
            }
        }
        (req, opt)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perfect_iv" | "perfect" => Ok(ScenarioKind::PerfectIv),
            "exclusion_restriction" | "er" => Ok(ScenarioKind::ExclusionRestriction),
            "independence" | "ind" => Ok(ScenarioKind::Independence),
            "heterogeneity" | "het" => Ok(ScenarioKind::Heterogeneity),
            other => Err(Error::InvalidSpec(format!("unknown scenario kind `{other}`"))),
        }
    }
}

/// A structural scenario: kind, covariate flag and named edge weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    #[serde(default)]
    pub with_covariates: bool,
    pub weights: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Edge weights of the linear scenarios; absent edges are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearWeights {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c_er: f64,
    pub c_i: f64,
}

/// Coefficients of the heterogeneity scenario; index 0 holds alpha1 / beta1.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeterogeneityWeights {
    pub alpha: [f64; 5],
    pub beta: [f64; 5],
}

impl ScenarioSpec {
    pub fn new<'a>(
        kind: ScenarioKind,
        with_covariates: bool,
        weights: impl IntoIterator<Item = (&'a str, f64)>,
    ) -> Self {
        Self {
            kind,
            with_covariates,
            weights: weights.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            n: None,
            seed: None,
        }
    }

    /// Returns a copy with one weight replaced.
    pub fn with_weight(&self, name: &str, value: f64) -> Self {
        let mut s = self.clone();
        s.weights.insert(name.to_string(), value);
        s
    }

    /// Checks weight names and ranges (not feasibility).
    pub fn validate(&self) -> Result<()> {
        let (req, opt) = self.kind.weight_names(self.with_covariates);
        for name in &req {
            if !self.weights.contains_key(*name) {
                return Err(Error::InvalidSpec(format!(
                    "{} scenario requires weight `{name}`",
                    self.kind
                )));
            }
        }
        for (name, value) in &self.weights {
            if !req.contains(&name.as_str()) && !opt.contains(&name.as_str()) {
                return Err(Error::InvalidSpec(format!(
                    "weight `{name}` does not apply to the {} scenario{}",
                    self.kind,
                    if self.with_covariates { " with covariates" } else { "" }
                )));
            }
            if !(value.abs() < 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "weight `{name}` = {value} must lie in (-1, 1)"
                )));
            }
        }
        Ok(())
    }

    fn w(&self, name: &str) -> f64 {
        self.weights.get(name).copied().unwrap_or(0.0)
    }

    pub fn linear(&self) -> Result<LinearWeights> {
        self.validate()?;
        if self.kind == ScenarioKind::Heterogeneity {
            return Err(Error::InvalidSpec("heterogeneity scenario has no linear weights".into()));
        }
        Ok(LinearWeights {
            c0: self.w("c0"),
            c1: self.w("c1"),
            c2: self.w("c2"),
            c3: self.w("c3"),
            c5: self.w("c5"),
            c6: self.w("c6"),
            c7: self.w("c7"),
            c_er: self.w("c_er"),
            c_i: self.w("c_i"),
        })
    }

    pub fn heterogeneity(&self) -> Result<HeterogeneityWeights> {
        self.validate()?;
        if self.kind != ScenarioKind::Heterogeneity {
            return Err(Error::InvalidSpec(format!("{} scenario has no heterogeneity weights", self.kind)));
        }
        let mut h = HeterogeneityWeights::default();
        for i in 0..5 {
            h.alpha[i] = self.w(&format!("alpha{}", i + 1));
            h.beta[i] = self.w(&format!("beta{}", i + 1));
        }
        if self.with_covariates {
            for i in [3, 4] {
                if !self.weights.contains_key(&format!("beta{}", i + 1)) {
                    h.beta[i] = DEFAULT_BETA_W;
                }
            }
        }
        Ok(h)
    }

    /// The average causal effect of X on Y.
    pub fn ace(&self) -> f64 {
        match self.kind {
            ScenarioKind::Heterogeneity => self.w("beta1"),
            _ => self.w("c0"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let s = ScenarioSpec::new(
            ScenarioKind::ExclusionRestriction,
            false,
            [("c0", 0.3), ("c1", 0.5), ("c2", 0.5), ("c3", 0.5), ("c_er", 0.25)],
        );
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"exclusion_restriction\""));
        assert_eq!(serde_json::from_str::<ScenarioSpec>(&text).unwrap(), s);
    }

    #[test]
    fn rejects_foreign_and_missing_weights() {
        let s = ScenarioSpec::new(ScenarioKind::PerfectIv, false, [("c0", 0.3), ("c1", 0.5), ("c2", 0.5)]);
        assert!(matches!(s.validate(), Err(Error::InvalidSpec(_))));
        let s = s.with_weight("c3", 0.5).with_weight("c_i", 0.1);
        assert!(matches!(s.validate(), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn rejects_out_of_range_weight() {
        let s = ScenarioSpec::new(ScenarioKind::PerfectIv, false, [("c0", 1.0), ("c1", 0.5), ("c2", 0.5), ("c3", 0.1)]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn heterogeneity_covariate_effects_default() {
        let s = ScenarioSpec::new(
            ScenarioKind::Heterogeneity,
            true,
            [("alpha1", 0.45), ("alpha2", 0.15), ("alpha3", 0.1), ("alpha4", 0.1), ("alpha5", 0.1),
             ("beta1", 0.1), ("beta2", 0.2), ("beta3", 0.1)],
        );
        let h = s.heterogeneity().unwrap();
        assert_eq!(h.beta[3], DEFAULT_BETA_W);
        assert_eq!(h.beta[4], DEFAULT_BETA_W);
        assert_eq!(s.with_weight("beta4", -0.3).heterogeneity().unwrap().beta[3], -0.3);
    }
}
