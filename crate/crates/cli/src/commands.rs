//! Subcommand implementations. Each returns the text printed to stdout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use causal_tradeoff::montecarlo::{run_with, Execution, ExperimentPlan, SimulationSummary};
use causal_tradeoff::sensitivity::{analyze, true_ir, BenchmarkMode, SensitivityReport, ViolationKind};
use causal_tradeoff::{closed_form, generate, ClosedFormResult, Dataset, Error, Roles, ScenarioKind, ScenarioSpec};
use serde::{Deserialize, Serialize};

use crate::args::{ClosedFormArgs, ContourArgs, SensitivityArgs, SimulateArgs};
use crate::config::{parse_kinds, parse_multipliers, parse_range, parse_roles, AnalysisConfig};
use crate::contour::{contour, ContourRequest};
use crate::error::{CliError, CliResult};
use crate::ingest::{bind_roles, read_csv, to_csv};
use crate::output::{to_json, write_atomic, write_json};
use crate::plot::{format_value, format_with, render_svg, sensitivity_plot};

/// Rows generated for a sensitivity run when neither the flag nor the spec says.
pub const DEFAULT_SENSITIVITY_ROWS: usize = 100_000;
/// Sign-case reports closer than this share one plot.
pub const SIGN_AGREEMENT: f64 = 1e-6;

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn load_spec(path: &Path) -> CliResult<ScenarioSpec> {
    let spec: ScenarioSpec = read_json(path)?;
    spec.validate()?;
    Ok(spec)
}

pub fn closed_form_text(spec: &ScenarioSpec, r: &ClosedFormResult) -> String {
    let mut s = format!(
        "{} scenario{}\n",
        spec.kind.as_str(),
        if spec.with_covariates { " with covariates" } else { "" }
    );
    let _ = writeln!(s, "{:<16}{:>10}{:>10}", "", "limit", "lambda");
    let _ = writeln!(s, "{:<16}{:>10.4}{:>10}", "ACE", r.a1, "");
    let _ = writeln!(s, "{:<16}{:>10.4}{:>10.4}", "OLS without Z", r.a2, r.lambda2);
    match (r.a3, r.lambda3) {
        (Some(a3), Some(l3)) => {
            let _ = writeln!(s, "{:<16}{:>10.4}{:>10.4}", "OLS with Z", a3, l3);
        }
        _ => {
            let _ = writeln!(s, "{:<16}{:>10}{:>10}", "OLS with Z", "n/a", "n/a");
        }
    }
    let _ = writeln!(s, "{:<16}{:>10.4}{:>10.4}", "2SLS with Z", r.a4, r.lambda4);
    s
}

pub fn cmd_closed_form(args: &ClosedFormArgs) -> CliResult<String> {
    let spec = load_spec(&args.spec)?;
    let result = closed_form(&spec)?;
    let json = to_json(&result);
    if let Some(out) = &args.out {
        write_atomic(&out.join("report.json"), json.as_bytes())?;
        write_atomic(&out.join("summary.txt"), closed_form_text(&spec, &result).as_bytes())?;
    }
    Ok(json)
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<String> {
    let mut plan = match (&args.plan, &args.spec) {
        (Some(p), _) => read_json::<ExperimentPlan>(p)?,
        (None, Some(s)) => {
            let spec = load_spec(s)?;
            let seed = spec.seed.unwrap_or(0);
            let n = spec.n.unwrap_or(args.n);
            ExperimentPlan::new(spec, n, args.reps, seed)
        }
        (None, None) => return Err(CliError::Config("simulate needs --plan or --spec".into())),
    };
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    let execution = if args.serial { Execution::Serial } else { Execution::default() };
    let summary = run_with(&plan, execution)?;
    let text = simulation_text(&summary);
    write_json(&args.out.join("report.json"), &summary)?;
    write_atomic(&args.out.join("summary.txt"), text.as_bytes())?;
    Ok(text)
}

pub fn simulation_text(summary: &SimulationSummary) -> String {
    format!(
        "{}\n{} replications of n = {}, seed {}, {} resampled, {:.2} s\n",
        summary, summary.replications, summary.n_per_rep, summary.seed, summary.resampled, summary.runtime_seconds
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DataSource {
    Csv { file: String },
    Generated { spec: ScenarioSpec, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityOutput {
    pub source: DataSource,
    pub n_rows: usize,
    pub mode: BenchmarkMode,
    pub roles: Roles,
    pub multipliers: Vec<f64>,
    pub reports: Vec<SensitivityReport>,
    /// Plot files written under `plots/`, without extension.
    pub plots: Vec<String>,
}

fn violation_of(kind: ScenarioKind) -> Option<ViolationKind> {
    match kind {
        ScenarioKind::ExclusionRestriction => Some(ViolationKind::ExclusionRestriction),
        ScenarioKind::Independence => Some(ViolationKind::Independence),
        ScenarioKind::Heterogeneity => Some(ViolationKind::Heterogeneity),
        ScenarioKind::PerfectIv => None,
    }
}

pub fn cmd_sensitivity(args: &SensitivityArgs, require_data: bool) -> CliResult<String> {
    let mut config = match &args.config {
        Some(p) => AnalysisConfig::load(p)?,
        None => AnalysisConfig::default(),
    };
    let explicit_kinds = args.kinds.is_some() || args.config.is_some();
    if let Some(d) = &args.data {
        config.input_path = Some(d.clone());
    }
    if let Some(r) = &args.roles {
        config.roles = Some(parse_roles(r)?);
    }
    if let Some(m) = &args.multipliers {
        config.multipliers = parse_multipliers(m)?;
    }
    if let Some(k) = &args.kinds {
        config.kinds = parse_kinds(k)?;
    }
    if let Some(o) = &args.out {
        config.out = o.clone();
    }
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    config.validate()?;
    let mode = if args.expose_u { BenchmarkMode::Oracle } else { BenchmarkMode::Benchmark };

    let (data, roles, source, limits) = match (&config.input_path, &args.spec) {
        (Some(path), _) => {
            let mut roles = config
                .roles
                .clone()
                .ok_or_else(|| CliError::Roles("--roles is required with --data".into()))?;
            if !args.expose_u {
                roles.confounder = None;
            } else if roles.confounder.is_none() {
                return Err(CliError::Roles("--expose-u needs a u=COLUMN role".into()));
            }
            let data = bind_roles(&read_csv(path)?, &roles)?;
            let file = path.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned());
            (data, roles, DataSource::Csv { file }, None)
        }
        (None, Some(spec_path)) if !require_data => {
            let spec = load_spec(spec_path)?;
            if !spec.with_covariates {
                return Err(Error::NoCovariates.into());
            }
            let seed = config.seed.or(spec.seed).unwrap_or(0);
            let n = args.n.or(spec.n).unwrap_or(DEFAULT_SENSITIVITY_ROWS);
            let generated = generate(&spec, n, seed)?;
            if args.export_data {
                write_atomic(&config.out.join("data.csv"), to_csv(&generated.data).as_bytes())?;
            }
            if !explicit_kinds {
                if let Some(k) = violation_of(spec.kind) {
                    config.kinds = vec![k];
                }
            }
            let roles = Roles::simulated(args.expose_u);
            let data = bind_roles(&generated.data, &roles)?;
            let limits = Some((spec.kind, closed_form(&spec)?));
            (data, roles, DataSource::Generated { spec, seed }, limits)
        }
        _ => return Err(CliError::Config("a dataset (--data) is required".into())),
    };

    let mut reports = Vec::new();
    for &kind in &config.kinds {
        for mut r in analyze(&data, &roles, kind, mode, &config.multipliers)? {
            if let Some((scenario, cf)) = &limits {
                if violation_of(*scenario) == Some(kind) {
                    r.true_ir = true_ir(cf, kind);
                }
            }
            reports.push(r);
        }
    }
    let plots = write_sensitivity_plots(&config.out, &reports)?;
    let output = SensitivityOutput {
        source,
        n_rows: data.n_rows(),
        mode,
        roles,
        multipliers: config.multipliers.clone(),
        reports,
        plots,
    };
    let text = sensitivity_text(&output);
    write_json(&config.out.join("report.json"), &output)?;
    write_atomic(&config.out.join("summary.txt"), text.as_bytes())?;
    Ok(text)
}

/// Reports that get their own plot: heterogeneity sign cases collapse to one
/// when they agree.
pub fn plotted(reports: &[SensitivityReport]) -> Vec<(String, &SensitivityReport)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < reports.len() {
        let r = &reports[i];
        if let Some(next) = reports.get(i + 1) {
            if r.kind == ViolationKind::Heterogeneity && next.kind == r.kind && r.branch_condition.is_some() {
                let agree = r
                    .ir_per_multiplier
                    .iter()
                    .zip(&next.ir_per_multiplier)
                    .all(|(a, b)| (a - b).abs() <= SIGN_AGREEMENT);
                if agree {
                    out.push((r.kind.to_string(), r));
                } else {
                    out.push((r.label(), r));
                    out.push((next.label(), next));
                }
                i += 2;
                continue;
            }
        }
        out.push((r.label(), r));
        i += 1;
    }
    out
}

fn write_sensitivity_plots(out: &Path, reports: &[SensitivityReport]) -> CliResult<Vec<String>> {
    let dir: PathBuf = out.join("plots");
    let mut names = Vec::new();
    for (name, report) in plotted(reports) {
        let plot = sensitivity_plot(report);
        write_json(&dir.join(format!("{name}.json")), &plot)?;
        write_atomic(&dir.join(format!("{name}.svg")), render_svg(&plot).as_bytes())?;
        names.push(name);
    }
    Ok(names)
}

pub fn sensitivity_text(o: &SensitivityOutput) -> String {
    let mut s = format!("{} rows, {:?} mode\n", o.n_rows, o.mode);
    for r in &o.reports {
        let _ = writeln!(s, "\n[{}]", r.label());
        let _ = writeln!(s, "  benchmarked violation  {}", format_value(Some(r.benchmarked_violation)));
        if let Some(t) = r.true_ir {
            let _ = writeln!(s, "  true IR                {}", format_value(Some(t)));
        }
        let _ = writeln!(s, "  implied confounding    {}", format_value(r.gamma_implied));
        for (i, m) in r.multipliers.iter().enumerate() {
            let _ = writeln!(
                s,
                "  M = {:<5} IR {}  required violation {}",
                m,
                format_value(Some(r.ir_per_multiplier[i])),
                format_value(r.required_violation_per_multiplier[i])
            );
        }
        if let Some(c) = &r.branch_condition {
            let _ = writeln!(
                s,
                "  opposite-sign branch: confounding term {} vs heterogeneity term {}",
                format_value(Some(c.confounding_term)),
                format_value(Some(c.heterogeneity_term))
            );
        }
        for note in &r.decomposition.clamped {
            let _ = writeln!(s, "  note: {note}");
        }
        if r.benchmarks.insufficient_covariates {
            let _ = writeln!(s, "  note: one covariate only, benchmarks are unconditional");
        }
    }
    s
}

pub fn cmd_contour(args: &ContourArgs) -> CliResult<String> {
    let req = ContourRequest {
        spec: read_json(&args.spec)?,
        strength_range: parse_range(&args.strength_range)?,
        violation_range: parse_range(&args.violation_range)?,
        step: args.step,
    };
    let plot = contour(&req)?;
    let name = format!("contour_{}", req.spec.kind.as_str());
    write_json(&args.out.join("report.json"), &plot)?;
    write_json(&args.out.join("plots").join(format!("{name}.json")), &plot)?;
    write_atomic(&args.out.join("plots").join(format!("{name}.svg")), render_svg(&plot).as_bytes())?;
    let mut text = format!("{}: {} feasible cells, {} masked\n", plot.title, plot.grid.len(), plot.masked.len());
    for e in &plot.legend {
        let _ = writeln!(text, "  {}: {}", e.label, format_with(e.value, e.decimals));
    }
    write_atomic(&args.out.join("summary.txt"), text.as_bytes())?;
    Ok(text)
}

/// Loads a CSV and binds roles, for callers that want the dataset itself.
pub fn load_dataset(path: &Path, roles: &Roles) -> CliResult<Dataset> {
    bind_roles(&read_csv(path)?, roles)
}
