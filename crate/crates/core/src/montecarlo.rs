//! Replication harness comparing simulated estimator limits with closed forms.

use std::fmt::{self, Write as _};
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset};
use crate::error::{Error, Result};
use crate::regression::{center, fit_2sls, fit_ols};
use crate::scenarios::{closed_form, generate, replication_seed, ScenarioKind, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    OlsWithoutZ,
    OlsWithZ,
    TslsWithZ,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::OlsWithoutZ, Estimator::OlsWithZ, Estimator::TslsWithZ];

    pub fn label(self) -> &'static str {
        match self {
            Estimator::OlsWithoutZ => "OLS without Z",
            Estimator::OlsWithZ => "OLS with Z",
            Estimator::TslsWithZ => "2SLS with Z",
        }
    }
}

fn all_estimators() -> Vec<Estimator> {
    Estimator::ALL.to_vec()
}

/// How replications are scheduled. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Serial,
    /// Rayon work stealing; falls back to serial without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Serial
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub spec: ScenarioSpec,
    pub n_per_rep: usize,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "all_estimators")]
    pub estimators: Vec<Estimator>,
}

impl ExperimentPlan {
    pub fn new(spec: ScenarioSpec, n_per_rep: usize, replications: usize, seed: u64) -> Self {
        Self {
            spec,
            n_per_rep,
            replications,
            seed,
            estimators: all_estimators(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::InvalidPlan("at least 2 replications are required".into()));
        }
        if self.n_per_rep < 50 {
            return Err(Error::InvalidPlan("n_per_rep must be at least 50".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidPlan("no estimators requested".into()));
        }
        self.spec.validate()
    }

    /// Replications allowed to fail numerically before the run is aborted.
    pub fn failure_cap(&self) -> usize {
        self.replications / 100
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    pub mean_estimate: f64,
    /// Absolute value of the mean signed deviation from the ACE.
    pub mean_inconsistency: f64,
    pub mc_std_err: f64,
    pub closed_form_target: Option<f64>,
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub kind: ScenarioKind,
    pub with_covariates: bool,
    pub n_per_rep: usize,
    pub replications: usize,
    pub seed: u64,
    /// Replications redrawn after a numerical failure.
    pub resampled: usize,
    pub estimators: Vec<EstimatorSummary>,
    pub runtime_seconds: f64,
}

impl SimulationSummary {
    pub fn get(&self, estimator: Estimator) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|e| e.estimator == estimator)
    }
}

/// Point estimates of the requested estimators on one sample.
pub fn estimate(spec: &ScenarioSpec, data: &Dataset, estimators: &[Estimator]) -> Result<Vec<f64>> {
    let c = |name: &str| -> Result<Column> { Ok(center(data.get(name)?)) };
    let (y, x, z) = (c("Y")?, c("X")?, c("Z")?);
    let mut controls = Vec::new();
    let mut extra_endog = Vec::new();
    let mut extra_instr = Vec::new();
    if spec.with_covariates {
        let w = c("W")?;
        if spec.kind == ScenarioKind::Heterogeneity {
            extra_endog.push(center(&x.product(&w)));
            extra_instr.push(center(&z.product(&w)));
        }
        controls.push(w);
    }
    estimators
        .iter()
        .map(|e| match e {
            Estimator::OlsWithoutZ => {
                let xs: Vec<&Column> = [&x].into_iter().chain(&controls).chain(&extra_endog).collect();
                Ok(fit_ols(&y, &xs)?.coefficients[0])
            }
            Estimator::OlsWithZ => {
                let xs: Vec<&Column> =
                    [&x, &z].into_iter().chain(&controls).chain(&extra_endog).collect();
                Ok(fit_ols(&y, &xs)?.coefficients[0])
            }
            Estimator::TslsWithZ => {
                let endog: Vec<&Column> = [&x].into_iter().chain(&extra_endog).collect();
                let instr: Vec<&Column> = [&z].into_iter().chain(&extra_instr).collect();
                let exog: Vec<&Column> = controls.iter().collect();
                Ok(fit_2sls(&y, &endog, &instr, &exog)?.coefficients[0])
            }
        })
        .collect()
}

fn is_numerical(e: &Error) -> bool {
    matches!(
        e,
        Error::Collinear { .. } | Error::WeakDenominator { .. } | Error::ZeroVariance { .. }
    )
}

/// Signed deviations of one replication and the number of redraws it took.
fn replicate(plan: &ExperimentPlan, ace: f64, index: usize) -> Result<(Vec<f64>, usize)> {
    let base = replication_seed(plan.seed, index);
    let mut attempt = 0usize;
    loop {
        let seed = base.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let sample = generate(&plan.spec, plan.n_per_rep, seed)?;
        match estimate(&plan.spec, &sample.data, &plan.estimators) {
            Ok(est) => return Ok((est.into_iter().map(|e| e - ace).collect(), attempt)),
            Err(e) if is_numerical(&e) && attempt < plan.failure_cap() => attempt += 1,
            Err(e) if is_numerical(&e) => {
                return Err(Error::TooManyFailures {
                    failures: attempt + 1,
                    cap: plan.failure_cap(),
                })
            }
            Err(e) => return Err(e),
        }
    }
}

/// Runs the plan with the default execution mode.
pub fn run(plan: &ExperimentPlan) -> Result<SimulationSummary> {
    run_with(plan, Execution::default())
}

/// Runs the plan; the summary is bit-identical for both execution modes.
pub fn run_with(plan: &ExperimentPlan, execution: Execution) -> Result<SimulationSummary> {
    plan.validate()?;
    let start = Instant::now();
    let targets = closed_form(&plan.spec)?;
    let ace = targets.a1;
    let job = |i: usize| replicate(plan, ace, i);
    let results: Vec<Result<(Vec<f64>, usize)>> = match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..plan.replications).into_par_iter().map(job).collect(),
        _ => (0..plan.replications).map(job).collect(),
    };

    let k = plan.estimators.len();
    let mut deviations = vec![Vec::with_capacity(plan.replications); k];
    let mut resampled = 0;
    for r in results {
        let (dev, redraws) = r?;
        resampled += redraws;
        for (slot, d) in deviations.iter_mut().zip(dev) {
            slot.push(d);
        }
    }
    if resampled > plan.failure_cap() {
        return Err(Error::TooManyFailures {
            failures: resampled,
            cap: plan.failure_cap(),
        });
    }

    let reps = plan.replications as f64;
    let estimators = plan
        .estimators
        .iter()
        .zip(&deviations)
        .map(|(&estimator, devs)| {
            let mean = devs.iter().sum::<f64>() / reps;
            let var = devs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (reps - 1.0);
            let mc_std_err = (var / reps).sqrt();
            let target = match estimator {
                Estimator::OlsWithoutZ => Some(targets.lambda2),
                Estimator::OlsWithZ => targets.lambda3,
                Estimator::TslsWithZ => Some(targets.lambda4),
            };
            let mean_inconsistency = mean.abs();
            EstimatorSummary {
                estimator,
                mean_estimate: ace + mean,
                mean_inconsistency,
                mc_std_err,
                closed_form_target: target,
                z_score: target.map(|t| (mean_inconsistency - t) / mc_std_err),
            }
        })
        .collect();

    Ok(SimulationSummary {
        kind: plan.spec.kind,
        with_covariates: plan.spec.with_covariates,
        n_per_rep: plan.n_per_rep,
        replications: plan.replications,
        seed: plan.seed,
        resampled,
        estimators,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// One summary per sample size, all with the same base seed.
pub fn convergence_scan(
    spec: &ScenarioSpec,
    n_grid: &[usize],
    replications: usize,
    seed: u64,
) -> Result<Vec<SimulationSummary>> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidPlan("sample sizes must be strictly increasing".into()));
    }
    n_grid
        .iter()
        .map(|&n| run(&ExperimentPlan::new(spec.clone(), n, replications, seed)))
        .collect()
}

impl fmt::Display for SimulationSummary {
    /// Aligned table with closed-form and simulated rows.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cov = if self.with_covariates { "with covariates" } else { "no covariates" };
        writeln!(
            f,
            "{}, {cov} ({} replications of n = {})",
            self.kind, self.replications, self.n_per_rep
        )?;
        let mut rows: [String; 4] = [
            format!("{:<20}", ""),
            format!("{:<20}", "Closed Form Result"),
            format!("{:<20}", "Simulated Result"),
            format!("{:<20}", "MC std. error"),
        ];
        for e in &self.estimators {
            let target = e.closed_form_target.map_or("n/a".to_string(), |t| format!("{t:.3}"));
            let _ = write!(rows[0], "{:>15}", e.estimator.label());
            let _ = write!(rows[1], "{target:>15}");
            let _ = write!(rows[2], "{:>15.3}", e.mean_inconsistency);
            let _ = write!(rows[3], "{:>15.4}", e.mc_std_err);
        }
        for r in rows {
            writeln!(f, "{}", r.trim_end())?;
        }
        if self.resampled > 0 {
            writeln!(f, "{} replication(s) redrawn after numerical failure", self.resampled)?;
        }
        Ok(())
    }
}
