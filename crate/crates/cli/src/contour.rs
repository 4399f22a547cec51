//! Strength-by-violation grids of the three probability-limit distances.

use causal_tradeoff::montecarlo::Estimator;
use causal_tradeoff::{closed_form, ClosedFormResult, Error, Result, ScenarioKind, ScenarioSpec};
use serde::{Deserialize, Serialize};

use crate::plot::{winner_color, Axis, GridCell, LegendEntry, PlotData, PlotKind};

pub const DEFAULT_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourRequest {
    pub spec: ScenarioSpec,
    pub strength_range: (f64, f64),
    pub violation_range: (f64, f64),
    pub step: f64,
}

/// Weight names on the strength and violation axes.
pub fn axis_weights(kind: ScenarioKind) -> Result<(&'static str, &'static str)> {
    match kind {
        ScenarioKind::ExclusionRestriction => Ok(("c3", "c_er")),
        ScenarioKind::Independence => Ok(("c3", "c_i")),
        ScenarioKind::Heterogeneity => Ok(("alpha1", "beta3")),
        ScenarioKind::PerfectIv => Err(Error::InvalidSpec("a perfect instrument has no violation axis".into())),
    }
}

/// Inclusive grid `lo, lo + step, ...` up to `hi`.
pub fn axis_values(range: (f64, f64), step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidSpec(format!("grid step {step} must be positive")));
    }
    let count = ((range.1 - range.0) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| range.0 + i as f64 * step).collect())
}

/// Estimator with the smallest distance; ties go to the later entry of
/// `Estimator::ALL`, so 2SLS wins exact ties.
pub fn winner(r: &ClosedFormResult) -> Estimator {
    let candidates = [
        (Estimator::OlsWithoutZ, Some(r.lambda2)),
        (Estimator::OlsWithZ, r.lambda3),
        (Estimator::TslsWithZ, Some(r.lambda4)),
    ];
    let mut best = (Estimator::OlsWithoutZ, r.lambda2);
    for (e, v) in candidates.into_iter().skip(1) {
        if let Some(v) = v {
            if v <= best.1 {
                best = (e, v);
            }
        }
    }
    best.0
}

fn estimator_key(e: Estimator) -> &'static str {
    match e {
        Estimator::OlsWithoutZ => "ols_without_z",
        Estimator::OlsWithZ => "ols_with_z",
        Estimator::TslsWithZ => "tsls_with_z",
    }
}

/// Evaluates the grid; infeasible and degenerate cells are masked.
pub fn contour(req: &ContourRequest) -> Result<PlotData> {
    let (sk, vk) = axis_weights(req.spec.kind)?;
    let base = req.spec.with_weight(sk, 0.0).with_weight(vk, 0.0);
    base.validate()?;
    let xs = axis_values(req.strength_range, req.step)?;
    let ys = axis_values(req.violation_range, req.step)?;
    let mut grid = Vec::new();
    let mut masked = Vec::new();
    for &y in &ys {
        for &x in &xs {
            let spec = base.with_weight(sk, x).with_weight(vk, y);
            match spec.validate().and_then(|_| closed_form(&spec)) {
                Ok(r) => grid.push(GridCell {
                    strength: x,
                    violation: y,
                    lambda2: r.lambda2,
                    lambda3: r.lambda3,
                    lambda4: r.lambda4,
                    winner: estimator_key(winner(&r)).to_string(),
                }),
                Err(Error::Infeasible { .. } | Error::DegenerateDenominator { .. } | Error::InvalidSpec(_)) => {
                    masked.push([x, y])
                }
                Err(e) => return Err(e),
            }
        }
    }
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut legend: Vec<LegendEntry> = Estimator::ALL
        .iter()
        .map(|&e| {
            let key = estimator_key(e);
            LegendEntry {
                key: format!("cells.{key}"),
                label: format!("{} smallest ({})", e.label(), winner_color(key)),
                value: Some(grid.iter().filter(|c| c.winner == key).count() as f64),
                decimals: 0,
            }
        })
        .collect();
    legend.push(LegendEntry {
        key: "cells.masked".into(),
        label: format!("Infeasible or degenerate ({})", winner_color("masked")),
        value: Some(masked.len() as f64),
        decimals: 0,
    });
    Ok(PlotData {
        kind: PlotKind::Contour3d,
        title: format!("Smallest inconsistency: {}", req.spec.kind.as_str()),
        x_axis: Axis {
            label: format!("Instrument strength ({sk})"),
            range: [xs[0] - req.step / 2.0, xs[xs.len() - 1] + req.step / 2.0],
        },
        y_axis: Axis {
            label: format!("Violation ({vk})"),
            range: [ys[0] - req.step / 2.0, ys[ys.len() - 1] + req.step / 2.0],
        },
        series: Vec::new(),
        markers: Vec::new(),
        grid,
        masked,
        legend,
    })
}
