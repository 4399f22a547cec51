//! Plot data and standalone SVG rendering.

use std::fmt::Write as _;

use causal_tradeoff::sensitivity::{SensitivityReport, SignCase};
use serde::{Deserialize, Serialize};

/// Decimal places of every number printed in a legend.
pub const LEGEND_DECIMALS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Contour3d,
    SensitivityLines,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub label: String,
    pub range: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineStyle {
    Solid,
    Dashed,
    Dotted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub style: LineStyle,
    /// Disconnected polylines.
    pub segments: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub label: String,
    pub point: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendEntry {
    /// Stable identifier, also written to the SVG as `data-key`.
    pub key: String,
    pub label: String,
    pub value: Option<f64>,
    /// Decimal places printed in the SVG.
    #[serde(default = "default_decimals")]
    pub decimals: usize,
}

fn default_decimals() -> usize {
    LEGEND_DECIMALS
}

/// One feasible cell of a contour grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub strength: f64,
    pub violation: f64,
    pub lambda2: f64,
    pub lambda3: Option<f64>,
    pub lambda4: f64,
    pub winner: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub kind: PlotKind,
    pub title: String,
    pub x_axis: Axis,
    pub y_axis: Axis,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Series>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<GridCell>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub markers: Vec<Marker>,
    /// Grid coordinates left out as infeasible or degenerate.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub masked: Vec<[f64; 2]>,
    pub legend: Vec<LegendEntry>,
}

pub fn format_value(v: Option<f64>) -> String {
    format_with(v, LEGEND_DECIMALS)
}

pub fn format_with(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{v:.decimals$}"),
        Some(v) => v.to_string(),
        None => "unattainable".to_string(),
    }
}

pub(crate) fn entry(key: impl Into<String>, label: impl Into<String>, value: Option<f64>) -> LegendEntry {
    LegendEntry {
        key: key.into(),
        label: label.into(),
        value,
        decimals: LEGEND_DECIMALS,
    }
}

/// Splits `points` where the curve leaves the frame to the right or crosses
/// the pole at `gamma = pole`. Each piece keeps one point past the frame edge
/// so clipping draws it to the border.
fn split_curve(points: &[[f64; 2]], x_top: f64, pole: Option<f64>) -> Vec<Vec<[f64; 2]>> {
    let mut out: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut cur: Vec<[f64; 2]> = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        let crosses = i > 0 && pole.is_some_and(|g| (points[i - 1][1] - g) * (p[1] - g) < 0.0);
        let prev_out = i > 0 && points[i - 1][0] > x_top;
        if crosses || (prev_out && p[0] > x_top) {
            if cur.len() > 1 {
                out.push(std::mem::take(&mut cur));
            }
            cur.clear();
        }
        cur.push(p);
    }
    if cur.len() > 1 {
        out.push(cur);
    }
    out
}

/// IR against confounding, with one horizontal line per multiplier and the
/// ambivalence anchor.
pub fn sensitivity_plot(report: &SensitivityReport) -> PlotData {
    let x_top = report
        .curves
        .first()
        .and_then(|c| c.points.last())
        .map(|p| p.ir)
        .filter(|v| *v > 0.0)
        .unwrap_or(2.0);
    let raw: Vec<[f64; 2]> = report.ir_curve.iter().map(|p| [p.ir, p.gamma]).collect();
    let dec = &report.decomposition;
    let pole = (report.sign_case == Some(SignCase::Opposite))
        .then(|| dec.overlap.unwrap_or(1.0) * dec.phi2.unwrap_or(1.0) * dec.theta_b);
    let curve = split_curve(&raw, x_top, pole);
    let y_top = report
        .ir_curve
        .iter()
        .map(|p| p.gamma)
        .chain(report.curves.iter().map(|c| c.gamma))
        .chain(report.gamma_implied)
        .fold(0.0, f64::max)
        .max(1e-12);

    let mut series = vec![Series {
        name: "IR at benchmarked violation".into(),
        style: LineStyle::Solid,
        segments: curve,
    }];
    for c in &report.curves {
        series.push(Series {
            name: format!("M = {}", c.multiplier),
            style: LineStyle::Dashed,
            segments: vec![c.points.iter().map(|p| [p.ir, p.gamma]).collect()],
        });
    }
    series.push(Series {
        name: "IR = 1".into(),
        style: LineStyle::Dotted,
        segments: vec![vec![[1.0, 0.0], [1.0, y_top]]],
    });
    if let Some(g) = report.gamma_implied {
        series.push(Series {
            name: "Ambivalence anchor".into(),
            style: LineStyle::Dotted,
            segments: vec![vec![[0.0, g], [x_top, g]]],
        });
    }

    let mut legend = vec![entry("benchmarked_violation", "Benchmarked violation", Some(report.benchmarked_violation))];
    for (i, m) in report.multipliers.iter().enumerate() {
        legend.push(entry(format!("ir_per_multiplier.{i}"), format!("IR (M = {m})"), Some(report.ir_per_multiplier[i])));
        legend.push(entry(
            format!("required_violation_per_multiplier.{i}"),
            format!("Required violation (M = {m})"),
            report.required_violation_per_multiplier[i],
        ));
    }
    legend.push(entry("gamma_implied", "Implied confounding at ambivalence", report.gamma_implied));
    if let Some(t) = report.true_ir {
        legend.push(entry("true_ir", "True IR", Some(t)));
    }

    let mut title = format!("Sensitivity: {}", report.kind);
    if let Some(s) = report.sign_case {
        let _ = write!(title, " ({s:?} sign)");
    }
    PlotData {
        kind: PlotKind::SensitivityLines,
        title,
        x_axis: Axis {
            label: "Inconsistency ratio (IR)".into(),
            range: [0.0, x_top],
        },
        y_axis: Axis {
            label: "Confounding factor".into(),
            range: [0.0, y_top * 1.05],
        },
        series,
        markers: report
            .curves
            .iter()
            .filter(|c| c.ir.is_finite() && c.ir <= x_top)
            .map(|c| Marker {
                label: format!("M = {}: IR {}", c.multiplier, format_value(Some(c.ir))),
                point: [c.ir, c.gamma],
            })
            .collect(),
        grid: Vec::new(),
        masked: Vec::new(),
        legend,
    }
}

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;
const PLOT_W: f64 = 440.0;
const PLOT_H: f64 = 380.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x: [f64; 2],
    y: [f64; 2],
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = (self.x[1] - self.x[0]).max(1e-300);
        LEFT + (x - self.x[0]) / span * PLOT_W
    }

    fn py(&self, y: f64) -> f64 {
        let span = (self.y[1] - self.y[0]).max(1e-300);
        TOP + PLOT_H - (y - self.y[0]) / span * PLOT_H
    }
}

pub fn winner_color(winner: &str) -> &'static str {
    match winner {
        "ols_without_z" => "#9ecae1",
        "ols_with_z" => "#fdae6b",
        "tsls_with_z" => "#74c476",
        _ => "#cccccc",
    }
}

/// Renders a plot as a standalone SVG document.
pub fn render_svg(plot: &PlotData) -> String {
    let f = Frame {
        x: plot.x_axis.range,
        y: plot.y_axis.range,
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#,
        LEFT + PLOT_W / 2.0,
        escape(&plot.title)
    );

    if !plot.grid.is_empty() || !plot.masked.is_empty() {
        grid_cells(&mut s, plot, &f);
    }

    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="#333"/>"##
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = f.x[0] + t * (f.x[1] - f.x[0]);
        let yv = f.y[0] + t * (f.y[1] - f.y[0]);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            f.px(xv),
            TOP + PLOT_H + 16.0,
            trim(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            f.py(yv) + 4.0,
            trim(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + PLOT_W / 2.0,
        TOP + PLOT_H + 34.0,
        escape(&plot.x_axis.label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18,{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + PLOT_H / 2.0,
        escape(&plot.y_axis.label)
    );

    let _ = writeln!(
        s,
        r#"<clipPath id="frame"><rect x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}"/></clipPath>"#
    );
    for (i, series) in plot.series.iter().enumerate() {
        let mut d = String::new();
        for seg in series.segments.iter().filter(|s| s.len() > 1) {
            for (j, p) in seg.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2} ", if j == 0 { "M" } else { "L" }, f.px(p[0]), f.py(p[1]));
            }
        }
        if d.is_empty() {
            continue;
        }
        let dash = match series.style {
            LineStyle::Solid => "",
            LineStyle::Dashed => r#" stroke-dasharray="6 4""#,
            LineStyle::Dotted => r#" stroke-dasharray="2 3""#,
        };
        let _ = writeln!(
            s,
            r#"<path clip-path="url(#frame)" fill="none" stroke="{}" stroke-width="1.8"{dash} d="{}"><title>{}</title></path>"#,
            PALETTE[i % PALETTE.len()],
            d.trim_end(),
            escape(&series.name)
        );
    }

    for m in &plot.markers {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#333"><title>{}</title></circle>"##,
            f.px(m.point[0]),
            f.py(m.point[1]),
            escape(&m.label)
        );
    }

    let lx = LEFT + PLOT_W + 20.0;
    let mut ly = TOP + 6.0;
    for (i, series) in plot.series.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 18.0,
            PALETTE[i % PALETTE.len()],
            lx + 24.0,
            ly + 4.0,
            escape(&series.name)
        );
        ly += 16.0;
    }
    ly += 8.0;
    for e in &plot.legend {
        let _ = writeln!(
            s,
            r#"<text class="legend" data-key="{}" x="{lx}" y="{ly}">{}: {}</text>"#,
            escape(&e.key),
            escape(&e.label),
            format_with(e.value, e.decimals)
        );
        ly += 16.0;
    }
    s.push_str("</svg>\n");
    s
}

fn grid_cells(s: &mut String, plot: &PlotData, f: &Frame) {
    let xs: Vec<f64> = plot.grid.iter().map(|c| c.strength).chain(plot.masked.iter().map(|m| m[0])).collect();
    let ys: Vec<f64> = plot.grid.iter().map(|c| c.violation).chain(plot.masked.iter().map(|m| m[1])).collect();
    let step = |v: &[f64], span: [f64; 2]| {
        let mut u: Vec<f64> = v.to_vec();
        u.sort_by(f64::total_cmp);
        u.dedup();
        u.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min).min(span[1] - span[0]).max(1e-9)
    };
    let (dx, dy) = (step(&xs, f.x), step(&ys, f.y));
    let cell = |s: &mut String, x: f64, y: f64, fill: &str, tip: &str| {
        let (x0, x1) = (f.px(x - dx / 2.0), f.px(x + dx / 2.0));
        let (y0, y1) = (f.py(y + dy / 2.0), f.py(y - dy / 2.0));
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}"><title>{}</title></rect>"#,
            x1 - x0,
            y1 - y0,
            escape(tip)
        );
    };
    for c in &plot.grid {
        let tip = format!(
            "strength {}, violation {}: lambda2 {}, lambda3 {}, lambda4 {}, winner {}",
            trim(c.strength),
            trim(c.violation),
            format_value(Some(c.lambda2)),
            c.lambda3.map_or("n/a".into(), |v| format_value(Some(v))),
            format_value(Some(c.lambda4)),
            c.winner
        );
        cell(s, c.strength, c.violation, winner_color(&c.winner), &tip);
    }
    for m in &plot.masked {
        cell(s, m[0], m[1], winner_color("masked"), "masked");
    }
}

fn trim(v: f64) -> String {
    let t = format!("{v:.3}");
    let t = t.trim_end_matches('0').trim_end_matches('.');
    if t.is_empty() || t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

/// Pulls `(data-key, printed value)` pairs out of a rendered legend.
pub fn legend_values(svg: &str) -> Vec<(String, String)> {
    svg.lines()
        .filter(|l| l.contains(r#"class="legend""#))
        .filter_map(|l| {
            let key = l.split(r#"data-key=""#).nth(1)?.split('"').next()?;
            let text = l.rsplit_once("</text>")?.0.rsplit_once(": ")?.1;
            Some((key.to_string(), text.to_string()))
        })
        .collect()
}
